#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "fairdiff/dataset.hpp"
#include "fairdiff/errors.hpp"

namespace fairdiff {
namespace {

constexpr std::string_view kMissingCategory = "?";

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// Splits one CSV record. Double-quoted fields may contain commas; "" is an
// escaped quote.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.emplace_back(trim(cur));
  return cells;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

DataTable read_csv(const std::filesystem::path& path, SchemaPtr schema,
                   std::string_view missing_token) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  const TableSchema& s = *schema;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_record(line);
      break;
    }
  }
  if (header.empty()) throw ParseError(path.string() + ": missing header row");
  if (header.size() != s.column_count())
    throw SchemaError(path.string() + ": header has " + std::to_string(header.size()) +
                      " columns, schema has " + std::to_string(s.column_count()));
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != s.column(i).name)
      throw SchemaError(path.string() + ": header column " + std::to_string(i + 1) + " is '" +
                        header[i] + "', schema expects '" + s.column(i).name + "'");
  }

  DataTable table(schema);
  std::vector<double> num(s.numerical_count());
  std::vector<int> cat(s.categorical_count());
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_record(line);
    if (cells.size() != s.column_count())
      throw ParseError(path.string() + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(s.column_count()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const ColumnSpec& spec = s.column(c);
      const bool missing = cells[c] == missing_token;
      if (spec.kind == ColumnKind::kNumerical) {
        double v = std::numeric_limits<double>::quiet_NaN();
        if (!missing && !parse_double(cells[c], v))
          throw ParseError(path.string() + ": row " + std::to_string(line_no) + ", column '" +
                           spec.name + "': cannot parse '" + cells[c] + "' as a number");
        num[s.slot(c)] = v;
      } else {
        const std::string_view value = missing ? kMissingCategory : std::string_view(cells[c]);
        const int code = s.category_code(c, value);
        if (code < 0)
          throw SchemaError(path.string() + ": row " + std::to_string(line_no) + ": value '" +
                            std::string(value) + "' is not a category of column '" + spec.name + "'");
        cat[s.slot(c)] = code;
      }
    }
    table.add_row(num, cat);
  }
  if (table.empty()) throw EmptyTableError(path.string() + ": no data rows");
  return table;
}

}  // namespace

DataTable load_csv_raw(const std::filesystem::path& path, SchemaPtr schema,
                       std::string_view missing_token) {
  return read_csv(path, std::move(schema), missing_token);
}

DataTable load_csv(const std::filesystem::path& path, SchemaPtr schema,
                   std::string_view missing_token) {
  DataTable table = read_csv(path, std::move(schema), missing_token);
  impute_numerical(table, numerical_medians(table));
  return table;
}

void write_csv(const DataTable& table, const std::filesystem::path& path, bool with_weights) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  const TableSchema& s = table.schema();
  for (std::size_t c = 0; c < s.column_count(); ++c) {
    if (c) out << ',';
    out << quote_if_needed(s.column(c).name);
  }
  if (with_weights) out << ",weight";
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < s.column_count(); ++c) {
      if (c) out << ',';
      const ColumnSpec& spec = s.column(c);
      if (spec.kind == ColumnKind::kNumerical) {
        out << format_double(table.numerical(r, s.slot(c)));
      } else {
        out << quote_if_needed(spec.categories[table.categorical(r, s.slot(c))]);
      }
    }
    if (with_weights) out << ',' << format_double(table.weight(r));
    out << '\n';
  }
  if (!out) throw ParseError("write failed for " + path.string());
}

}  // namespace fairdiff
