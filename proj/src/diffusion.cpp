#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fairdiff/diffusion.hpp"
#include "fairdiff/errors.hpp"

namespace fairdiff {
namespace {

constexpr Eigen::Index kSampleBlock = 1024;

// Inverse-CDF draw from an unnormalized nonnegative weight vector.
template <typename Vec>
int draw_category(const Vec& weights, Rng& rng) {
  const double total = weights.sum();
  double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  const Eigen::Index k = weights.size();
  for (Eigen::Index i = 0; i < k; ++i) {
    u -= weights(i);
    if (u < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(k - 1);
}

}  // namespace

CorruptedBatch corrupt_batch(const NoiseSchedule& schedule, const EncodedLayout& layout,
                             const Eigen::MatrixXd& x0, Rng& rng) {
  const Eigen::Index rows = x0.rows();
  const auto n_num = static_cast<Eigen::Index>(layout.numerical_width());
  const std::size_t n_groups = layout.groups.size();

  CorruptedBatch b;
  b.x_t = Eigen::MatrixXd::Zero(rows, x0.cols());
  b.t.resize(static_cast<std::size_t>(rows));
  b.noise.resize(rows, n_num);
  b.x0_codes.resize(static_cast<std::size_t>(rows) * n_groups);

  std::uniform_int_distribution<int> step(1, schedule.timesteps());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int t = step(rng);
    b.t[static_cast<std::size_t>(r)] = t;
    if (n_num > 0) {
      Eigen::VectorXd eps(n_num);
      for (Eigen::Index j = 0; j < n_num; ++j) eps(j) = normal(rng);
      b.noise.row(r) = eps.transpose();
      b.x_t.row(r).head(n_num) =
          gaussian_forward(schedule, x0.row(r).head(n_num).transpose(), t, eps).transpose();
    }
    for (std::size_t g = 0; g < n_groups; ++g) {
      const auto off = static_cast<Eigen::Index>(layout.groups[g].offset);
      const auto k = static_cast<Eigen::Index>(layout.groups[g].size);
      Eigen::Index code = 0;
      x0.row(r).segment(off, k).maxCoeff(&code);
      b.x0_codes[static_cast<std::size_t>(r) * n_groups + g] = static_cast<int>(code);
      const Eigen::VectorXd probs =
          multinomial_forward(schedule, x0.row(r).segment(off, k).transpose(), t);
      b.x_t(r, off + draw_category(probs, rng)) = 1.0;
    }
  }
  return b;
}

DiffusionModel make_model(const QuantileTransform& qt, const DiffusionConfig& config,
                          std::uint64_t seed) {
  DiffusionModel model;
  model.config = config;
  model.schedule = config.schedule();
  model.layout = EncodedLayout::for_schema(qt.schema());
  model.transform = qt;
  model.denoiser = DenoiserMLP(DenoiserShape{model.layout.width, config.hidden, config.embedding_dim,
                                             model.schedule.timesteps()});
  Rng rng(derive_seed(seed, 0x1417));
  model.denoiser.initialize(rng);
  return model;
}

Optimizer::Optimizer(const DenoiserMLP& net, const DiffusionConfig& config)
    : kind_(config.optimizer),
      learning_rate_(config.learning_rate),
      momentum_(config.momentum),
      first_(net.zeros_like()),
      second_(kind_ == OptimizerKind::kAdam ? net.zeros_like() : DenoiserMLP::Parameters{}) {}

void Optimizer::step(DenoiserMLP& net, const DenoiserMLP::Parameters& grad) {
  auto& params = net.parameters();
  ++steps_;
  if (kind_ == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      first_[i] = momentum_ * first_[i] + grad[i];
      params[i] -= learning_rate_ * first_[i];
    }
    return;
  }
  constexpr double kDecay2 = 0.999, kEpsilon = 1e-8;
  const double c1 = 1.0 - std::pow(momentum_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(kDecay2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    first_[i] = momentum_ * first_[i] + (1.0 - momentum_) * grad[i];
    second_[i] = kDecay2 * second_[i] + (1.0 - kDecay2) * grad[i].cwiseAbs2();
    params[i].array() -= learning_rate_ * (first_[i].array() / c1) /
                         ((second_[i].array() / c2).sqrt() + kEpsilon);
  }
}

TrainingLoss training_step(DiffusionModel& model, Optimizer& optimizer,
                           const Eigen::MatrixXd& batch, Rng& rng) {
  if (batch.rows() == 0) throw PreconditionError("training batch is empty");
  if (static_cast<std::size_t>(batch.cols()) != model.layout.width)
    throw PreconditionError("batch width does not match the model layout");

  const CorruptedBatch corrupted = corrupt_batch(model.schedule, model.layout, batch, rng);
  auto grad = model.denoiser.zeros_like();
  const TrainingLoss loss = denoiser_loss(model.denoiser, model.layout, corrupted, &grad);
  if (!std::isfinite(loss.total)) {
    std::ostringstream msg;
    msg << "non-finite training loss (l_num=" << loss.l_num << ", l_cat=" << loss.l_cat
        << "); lower the learning rate (currently " << model.config.learning_rate << ")";
    throw NumericalFault(msg.str());
  }
  optimizer.step(model.denoiser, grad);
  return loss;
}

DiffusionModel train(const EncodedMatrix& train_encoded, const QuantileTransform& qt,
                     const DiffusionConfig& config, std::uint64_t seed) {
  const Eigen::Index n = train_encoded.values.rows();
  if (n < 100) throw PreconditionError("diffusion training needs at least 100 rows, got " + std::to_string(n));
  if (!(train_encoded.layout == EncodedLayout::for_schema(qt.schema())))
    throw PreconditionError("encoded layout does not match the transform's schema");

  DiffusionModel model = make_model(qt, config, seed);
  Optimizer optimizer(model.denoiser, config);
  Rng rng(derive_seed(seed, 0x7a1));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch_size = static_cast<Eigen::Index>(config.batch_size);
  Eigen::MatrixXd batch;
  double initial = 0.0;
  DenoiserMLP::Parameters average = model.denoiser.parameters();
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch_size) {
      const Eigen::Index len = std::min(batch_size, n - start);
      batch.resize(len, train_encoded.values.cols());
      for (Eigen::Index i = 0; i < len; ++i) {
        batch.row(i) = train_encoded.values.row(order[static_cast<std::size_t>(start + i)]);
      }
      sum += training_step(model, optimizer, batch, rng).total * static_cast<double>(len);
      if (config.ema_decay > 0.0) {
        const double k = static_cast<double>(step++);
        const double d = std::min(config.ema_decay, (1.0 + k) / (10.0 + k));
        const auto& params = model.denoiser.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) average[i] = d * average[i] + (1.0 - d) * params[i];
      }
    }
    const double mean = sum / static_cast<double>(n);
    model.loss_log.push_back(mean);
    if (epoch == 0) initial = mean;
    if (mean > 1e3 * initial) {
      throw NumericalFault("training diverged at epoch " + std::to_string(epoch + 1) +
                           ": loss " + std::to_string(mean) + " vs initial " + std::to_string(initial));
    }
  }
  if (config.ema_decay > 0.0) model.denoiser.parameters() = std::move(average);
  if (!model.denoiser.all_finite()) throw NumericalFault("non-finite denoiser parameters after training");
  return model;
}

Eigen::MatrixXd sample_encoded(const DiffusionModel& model, std::size_t n, std::uint64_t seed) {
  const EncodedLayout& layout = model.layout;
  const NoiseSchedule& sched = model.schedule;
  const auto width = static_cast<Eigen::Index>(layout.width);
  const auto n_num = static_cast<Eigen::Index>(layout.numerical_width());
  Eigen::MatrixXd result(static_cast<Eigen::Index>(n), width);

  std::vector<int> steps;
  Eigen::MatrixXd x;
  const auto total = static_cast<Eigen::Index>(n);
  for (Eigen::Index start = 0, block = 0; start < total; start += kSampleBlock, ++block) {
    const Eigen::Index rows = std::min(kSampleBlock, total - start);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(block)));
    std::normal_distribution<double> normal(0.0, 1.0);

    x = Eigen::MatrixXd::Zero(rows, width);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index j = 0; j < n_num; ++j) x(r, j) = normal(rng);
      for (const CategoricalGroup& g : layout.groups) {
        std::uniform_int_distribution<int> uniform(0, static_cast<int>(g.size) - 1);
        x(r, static_cast<Eigen::Index>(g.offset) + uniform(rng)) = 1.0;
      }
    }

    for (int t = sched.timesteps(); t >= 1; --t) {
      steps.assign(static_cast<std::size_t>(rows), t);
      const Eigen::MatrixXd out = model.denoiser.forward(x, steps);
      const double alpha = sched.alpha(t);
      const double beta = sched.beta(t);
      const double ab = sched.alpha_bar(t);
      const double ab_prev = sched.alpha_bar(t - 1);

      // Gaussian branch: epsilon-parameterized posterior mean, variance beta_t.
      if (n_num > 0) {
        const double coef = beta / std::sqrt(1.0 - ab);
        Eigen::MatrixXd mean = (x.leftCols(n_num) - coef * out.leftCols(n_num)) / std::sqrt(alpha);
        if (t > 1) {
          const double sd = std::sqrt(beta);
          for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index j = 0; j < n_num; ++j) mean(r, j) += sd * normal(rng);
        }
        x.leftCols(n_num) = mean;
      }

      // Categorical branch: sum_j p0_j q(x_{t-1} | x_t, x0 = j), where p0 is
      // the predicted distribution of x0 given x_t.
      for (const CategoricalGroup& g : layout.groups) {
        const auto off = static_cast<Eigen::Index>(g.offset);
        const auto k = static_cast<Eigen::Index>(g.size);
        const double inv_k = 1.0 / static_cast<double>(k);
        const double keep = ab_prev, spread = (1.0 - ab_prev) * inv_k;
        for (Eigen::Index r = 0; r < rows; ++r) {
          const auto logits = out.row(r).segment(off, k);
          Eigen::RowVectorXd p0 = (logits.array() - logits.maxCoeff()).exp().matrix();
          p0 /= p0.sum();
          const Eigen::RowVectorXd from_t = (alpha * x.row(r).segment(off, k).array() + beta * inv_k).matrix();
          // For x0 = j the unnormalized posterior is from_t * (spread + keep * e_j).
          const double base = from_t.sum() * spread;
          Eigen::RowVectorXd post = Eigen::RowVectorXd::Zero(k);
          for (Eigen::Index j = 0; j < k; ++j) {
            const double z = base + keep * from_t(j);
            post += (p0(j) / z) * (spread * from_t);
            post(j) += p0(j) / z * keep * from_t(j);
          }
          const int c = draw_category(post, rng);
          x.row(r).segment(off, k).setZero();
          x(r, off + c) = 1.0;
        }
      }
    }
    if (!x.allFinite()) throw NumericalFault("reverse chain produced non-finite values");
    result.middleRows(start, rows) = x;
  }
  return result;
}

DataTable sample(const DiffusionModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) return DataTable(model.transform.schema_ptr());
  EncodedMatrix m{sample_encoded(model, n, seed), model.layout};
  return decode(m, model.transform);
}

}  // namespace fairdiff
