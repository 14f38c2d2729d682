#include <cmath>

#include "fairdiff/diffusion.hpp"
#include "fairdiff/errors.hpp"

namespace fairdiff {

DenoiserMLP::DenoiserMLP(DenoiserShape shape) : shape_(std::move(shape)) {
  if (shape_.width == 0 || shape_.hidden.empty() || shape_.embedding_dim == 0 || shape_.timesteps < 1)
    throw PreconditionError("invalid denoiser shape");
  const auto idx = [](std::size_t v) { return static_cast<Eigen::Index>(v); };

  params_.push_back(Eigen::MatrixXd::Zero(shape_.timesteps, idx(shape_.embedding_dim)));
  names_.push_back("time.embedding");
  params_.push_back(Eigen::MatrixXd::Zero(idx(shape_.embedding_dim), idx(shape_.hidden.front())));
  names_.push_back("time.projection");

  std::size_t in = shape_.width;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const bool last = l + 1 == layer_count();
    const std::size_t out = last ? shape_.width : shape_.hidden[l];
    const std::string prefix = last ? "output" : "hidden" + std::to_string(l);
    params_.push_back(Eigen::MatrixXd::Zero(idx(in), idx(out)));
    names_.push_back(prefix + ".weight");
    params_.push_back(Eigen::MatrixXd::Zero(1, idx(out)));
    names_.push_back(prefix + ".bias");
    in = out;
  }
}

void DenoiserMLP::initialize(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](Eigen::MatrixXd& m, double scale) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * normal(rng);
  };
  fill(params_[0], 1.0);
  fill(params_[1], std::sqrt(2.0 / static_cast<double>(shape_.embedding_dim + shape_.width)));
  for (std::size_t l = 0; l < layer_count(); ++l) {
    Eigen::MatrixXd& w = params_[2 + 2 * l];
    const bool last = l + 1 == layer_count();
    // He for rectified layers, Glorot-style for the linear head.
    const double fan_in = static_cast<double>(w.rows());
    fill(w, last ? std::sqrt(1.0 / fan_in) : std::sqrt(2.0 / fan_in));
    params_[3 + 2 * l].setZero();
  }
}

DenoiserMLP::Parameters DenoiserMLP::zeros_like() const {
  Parameters z;
  z.reserve(params_.size());
  for (const auto& p : params_) z.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
  return z;
}

bool DenoiserMLP::all_finite() const {
  for (const auto& p : params_) {
    if (!p.allFinite()) return false;
  }
  return true;
}

Eigen::MatrixXd DenoiserMLP::forward(const Eigen::MatrixXd& x, std::span<const int> t,
                                     Cache* cache) const {
  if (static_cast<std::size_t>(x.cols()) != shape_.width)
    throw PreconditionError("denoiser input width mismatch");
  if (static_cast<std::size_t>(x.rows()) != t.size())
    throw PreconditionError("one timestep per row required");

  const Eigen::Index batch = x.rows();
  Eigen::MatrixXd embedded(batch, params_[0].cols());
  for (Eigen::Index r = 0; r < batch; ++r) {
    const int step = t[static_cast<std::size_t>(r)];
    if (step < 1 || step > shape_.timesteps) throw PreconditionError("timestep out of range");
    embedded.row(r) = params_[0].row(step - 1);
  }

  Eigen::MatrixXd h;
  const Eigen::MatrixXd* current = &x;
  if (cache) {
    cache->input = x;
    cache->embedded = embedded;
    cache->t.assign(t.begin(), t.end());
    cache->pre.clear();
    cache->post.clear();
  }
  for (std::size_t l = 0; l + 1 < layer_count(); ++l) {
    Eigen::MatrixXd z = (*current) * weight(l);
    z.rowwise() += bias(l).row(0);
    if (l == 0) z.noalias() += embedded * params_[1];
    h = z.cwiseMax(0.0);
    if (cache) {
      cache->pre.push_back(std::move(z));
      cache->post.push_back(h);
      current = &cache->post.back();
    } else {
      current = &h;
    }
  }
  Eigen::MatrixXd out = (*current) * weight(layer_count() - 1);
  out.rowwise() += bias(layer_count() - 1).row(0);
  return out;
}

void DenoiserMLP::backward(const Cache& cache, const Eigen::MatrixXd& grad_output,
                           Parameters& grad) const {
  const std::size_t last = layer_count() - 1;
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t l = last + 1; l-- > 0;) {
    const Eigen::MatrixXd& input = l == 0 ? cache.input : cache.post[l - 1];
    if (l != last) delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    grad[2 + 2 * l].noalias() += input.transpose() * delta;
    grad[3 + 2 * l] += delta.colwise().sum();
    if (l == 0) {
      grad[1].noalias() += cache.embedded.transpose() * delta;
      const Eigen::MatrixXd d_embedded = delta * params_[1].transpose();
      for (Eigen::Index r = 0; r < d_embedded.rows(); ++r) {
        grad[0].row(cache.t[static_cast<std::size_t>(r)] - 1) += d_embedded.row(r);
      }
    } else {
      delta = delta * weight(l).transpose();
    }
  }
}

TrainingLoss denoiser_loss(const DenoiserMLP& net, const EncodedLayout& layout,
                           const CorruptedBatch& batch, DenoiserMLP::Parameters* grad) {
  const Eigen::Index rows = batch.x_t.rows();
  if (rows == 0) throw PreconditionError("empty batch");
  const auto n_num = static_cast<Eigen::Index>(layout.numerical_width());
  const std::size_t n_groups = layout.groups.size();

  DenoiserMLP::Cache cache;
  const Eigen::MatrixXd out = net.forward(batch.x_t, batch.t, grad ? &cache : nullptr);
  Eigen::MatrixXd d_out;
  if (grad) d_out = Eigen::MatrixXd::Zero(out.rows(), out.cols());

  TrainingLoss loss;
  if (n_num > 0) {
    const Eigen::MatrixXd diff = out.leftCols(n_num) - batch.noise;
    const double count = static_cast<double>(rows * n_num);
    loss.l_num = diff.squaredNorm() / count;
    if (grad) d_out.leftCols(n_num) = (2.0 / count) * diff;
  }
  if (n_groups > 0) {
    const double scale = 1.0 / static_cast<double>(rows * static_cast<Eigen::Index>(n_groups));
    double ce = 0.0;
    for (std::size_t g = 0; g < n_groups; ++g) {
      const auto off = static_cast<Eigen::Index>(layout.groups[g].offset);
      const auto k = static_cast<Eigen::Index>(layout.groups[g].size);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto logits = out.row(r).segment(off, k);
        const double m = logits.maxCoeff();
        const Eigen::RowVectorXd e = (logits.array() - m).exp().matrix();
        const double z = e.sum();
        const int target = batch.x0_codes[static_cast<std::size_t>(r) * n_groups + g];
        ce += std::log(z) - (logits(target) - m);
        if (grad) {
          Eigen::RowVectorXd d = e / z;
          d(target) -= 1.0;
          d_out.row(r).segment(off, k) = scale * d;
        }
      }
    }
    loss.l_cat = ce * scale;
  }
  loss.total = loss.l_num + loss.l_cat;
  if (grad) net.backward(cache, d_out, *grad);
  return loss;
}

}  // namespace fairdiff
