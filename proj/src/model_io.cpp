// Diffusion model container.
//
// Layout (little-endian):
//   "FDDM" | u32 version | str header-json | f64[] betas | transform |
//   params | f64[] loss log | u64 FNV-1a checksum of everything before it
// where str = u64 length + bytes, f64[] = u64 count + raw doubles.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fairdiff/diffusion.hpp"
#include "fairdiff/errors.hpp"

namespace fairdiff {
namespace {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

constexpr char kMagic[4] = {'F', 'D', 'D', 'M'};

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    buf_.append(s);
  }
  void doubles(const double* d, std::size_t n) {
    pod<std::uint64_t>(n);
    buf_.append(reinterpret_cast<const char*>(d), n * sizeof(double));
  }
  void doubles(const std::vector<double>& v) { doubles(v.data(), v.size()); }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t n) : data_(data), n_(n) {}

  template <typename T>
  T pod() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto len = pod<std::uint64_t>();
    need(len);
    std::string s(data_ + pos_, len);
    pos_ += len;
    return s;
  }
  std::vector<double> doubles() {
    const auto count = pod<std::uint64_t>();
    if (count > (n_ - pos_) / sizeof(double)) throw CorruptFileError("model file truncated");
    std::vector<double> v(count);
    std::memcpy(v.data(), data_ + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
    return v;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t k) const {
    if (k > n_ - pos_) throw CorruptFileError("model file truncated");
  }
  const char* data_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

nlohmann::json layout_to_json(const EncodedLayout& layout) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : layout.groups) groups.push_back({g.column, g.offset, g.size});
  return {{"numerical", layout.numerical_columns}, {"groups", groups}, {"width", layout.width}};
}

EncodedLayout layout_from_json(const nlohmann::json& j) {
  EncodedLayout layout;
  layout.numerical_columns = j.at("numerical").get<std::vector<std::size_t>>();
  for (const auto& g : j.at("groups")) {
    layout.groups.push_back({g.at(0).get<std::size_t>(), g.at(1).get<std::size_t>(), g.at(2).get<std::size_t>()});
  }
  layout.width = j.at("width").get<std::size_t>();
  return layout;
}

}  // namespace

void save_model(const DiffusionModel& model, const std::filesystem::path& path) {
  Writer w;
  w.buffer().append(kMagic, sizeof(kMagic));
  w.pod<std::uint32_t>(kModelFormatVersion);
  const nlohmann::json header{{"config", model.config.to_json()},
                              {"schema", model.transform.schema().to_json()},
                              {"layout", layout_to_json(model.layout)}};
  w.str(header.dump());
  w.doubles(model.schedule.betas());

  const auto& cols = model.transform.columns();
  w.pod<std::uint64_t>(cols.size());
  for (const auto& c : cols) {
    w.pod<std::uint8_t>(c.constant ? 1 : 0);
    w.doubles(c.knots);
    w.doubles(c.scores);
  }

  const auto& params = model.denoiser.parameters();
  const auto& names = model.denoiser.parameter_names();
  w.pod<std::uint64_t>(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    w.str(names[i]);
    w.pod<std::uint64_t>(static_cast<std::uint64_t>(params[i].rows()));
    w.pod<std::uint64_t>(static_cast<std::uint64_t>(params[i].cols()));
    w.doubles(params[i].data(), static_cast<std::size_t>(params[i].size()));
  }
  w.doubles(model.loss_log);
  const std::uint64_t checksum = fnv1a(w.buffer().data(), w.buffer().size());
  w.pod(checksum);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write model file " + path.string());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw ParseError("write failed for " + path.string());
}

DiffusionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw CorruptFileError(path.string() + " is not a diffusion model file");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
  if (version != kModelFormatVersion)
    throw VersionError(path.string() + ": model format version " + std::to_string(version) +
                       ", this build reads version " + std::to_string(kModelFormatVersion));
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t))
    throw CorruptFileError("model file truncated");
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != fnv1a(bytes.data(), body)) throw CorruptFileError(path.string() + ": checksum mismatch");

  Reader r(bytes.data(), body);
  r.pod<std::uint32_t>();  // magic
  r.pod<std::uint32_t>();  // version
  DiffusionModel model;
  try {
    const auto header = nlohmann::json::parse(r.str());
    model.config = DiffusionConfig::from_json(header.at("config"));
    auto schema = std::make_shared<const TableSchema>(TableSchema::from_json(header.at("schema")));
    model.layout = layout_from_json(header.at("layout"));
    if (!(model.layout == EncodedLayout::for_schema(*schema)))
      throw CorruptFileError("layout does not match stored schema");

    model.schedule = NoiseSchedule(r.doubles());
    const auto n_cols = r.pod<std::uint64_t>();
    std::vector<QuantileTransform::Column> cols(n_cols);
    for (auto& c : cols) {
      c.constant = r.pod<std::uint8_t>() != 0;
      c.knots = r.doubles();
      c.scores = r.doubles();
    }
    model.transform = QuantileTransform(schema, std::move(cols));

    model.denoiser = DenoiserMLP(DenoiserShape{model.layout.width, model.config.hidden,
                                               model.config.embedding_dim, model.schedule.timesteps()});
    auto& params = model.denoiser.parameters();
    const auto& names = model.denoiser.parameter_names();
    if (r.pod<std::uint64_t>() != params.size()) throw CorruptFileError("parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (r.str() != names[i]) throw CorruptFileError("unexpected parameter name");
      const auto rows = r.pod<std::uint64_t>();
      const auto cols_ = r.pod<std::uint64_t>();
      if (rows != static_cast<std::uint64_t>(params[i].rows()) ||
          cols_ != static_cast<std::uint64_t>(params[i].cols()))
        throw CorruptFileError("parameter '" + names[i] + "' has the wrong shape");
      const auto values = r.doubles();
      if (values.size() != static_cast<std::size_t>(params[i].size()))
        throw CorruptFileError("parameter '" + names[i] + "' has the wrong size");
      std::memcpy(params[i].data(), values.data(), values.size() * sizeof(double));
    }
    model.loss_log = r.doubles();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError(std::string("model header: ") + e.what());
  } catch (const SchemaError& e) {
    throw CorruptFileError(std::string("model schema: ") + e.what());
  } catch (const PreconditionError& e) {
    throw CorruptFileError(std::string("model contents: ") + e.what());
  } catch (const ParseError& e) {
    throw CorruptFileError(std::string("model config: ") + e.what());
  }
  if (r.position() != body) throw CorruptFileError("trailing bytes in model file");
  return model;
}

}  // namespace fairdiff
