#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fairdiff/dataset.hpp"
#include "fairdiff/encoding.hpp"
#include "fairdiff/random.hpp"

namespace fairdiff {

/// beta_t, alpha_t = 1 - beta_t and alpha_bar_t = prod_{s<=t} alpha_s for
/// t = 1..T. alpha_bar(0) is 1 by convention.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(std::vector<double> betas);

  // Linear betas from beta_start to beta_end, both scaled by 1000 / T and
  // capped at 0.999 so that short chains still mix.
  static NoiseSchedule linear(int timesteps, double beta_start = 1e-4, double beta_end = 0.02);

  int timesteps() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(index(t)); }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars_.at(index(t)); }
  const std::vector<double>& betas() const { return betas_; }

 private:
  std::size_t index(int t) const;

  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

// Closed-form q(x_t | x_0) for the Gaussian branch:
// sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * noise.
Eigen::VectorXd gaussian_forward(const NoiseSchedule& schedule, const Eigen::VectorXd& x0, int t,
                                 const Eigen::VectorXd& noise);

// Closed-form q(x_t | x_0) for the uniform-mixing categorical branch:
// alpha_bar_t * x0 + (1 - alpha_bar_t) / K. x0 must be an exact indicator.
Eigen::VectorXd multinomial_forward(const NoiseSchedule& schedule, const Eigen::VectorXd& x0, int t);

struct DenoiserShape {
  std::size_t width = 0;             // encoded width, both input and output
  std::vector<std::size_t> hidden;   // hidden layer sizes, at least one
  std::size_t embedding_dim = 64;
  int timesteps = 100;

  bool operator==(const DenoiserShape&) const = default;
};

/// ReLU MLP mapping (x_t, t) to an output of the same width as x_t.
///
/// A learned per-timestep embedding is projected to the first hidden width
/// and added to its pre-activation. Parameters are kept as a flat list of
/// named matrices: time.embedding (T x E), time.projection (E x h1), then
/// weight (in x out) and bias (1 x out) for each dense layer.
class DenoiserMLP {
 public:
  using Parameters = std::vector<Eigen::MatrixXd>;

  struct Cache {
    Eigen::MatrixXd input;
    Eigen::MatrixXd embedded;                 // B x E rows of the embedding table
    std::vector<Eigen::MatrixXd> pre;         // hidden pre-activations
    std::vector<Eigen::MatrixXd> post;        // hidden activations
    std::vector<int> t;
  };

  DenoiserMLP() = default;
  explicit DenoiserMLP(DenoiserShape shape);  // all parameters zero

  void initialize(Rng& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, std::span<const int> t,
                          Cache* cache = nullptr) const;
  // Accumulates into `grad` (same shapes as parameters()).
  void backward(const Cache& cache, const Eigen::MatrixXd& grad_output, Parameters& grad) const;

  const DenoiserShape& shape() const { return shape_; }
  Parameters& parameters() { return params_; }
  const Parameters& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  Parameters zeros_like() const;
  bool all_finite() const;

 private:
  std::size_t layer_count() const { return shape_.hidden.size() + 1; }
  const Eigen::MatrixXd& weight(std::size_t l) const { return params_[2 + 2 * l]; }
  const Eigen::MatrixXd& bias(std::size_t l) const { return params_[3 + 2 * l]; }

  DenoiserShape shape_;
  Parameters params_;
  std::vector<std::string> names_;
};

enum class OptimizerKind { kSgd, kAdam };

struct DiffusionConfig {
  int timesteps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::vector<double> betas;  // explicit schedule; overrides the linear one when set
  std::vector<std::size_t> hidden{256, 256};
  std::size_t embedding_dim = 64;
  int epochs = 300;
  std::size_t batch_size = 256;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double momentum = 0.9;  // SGD momentum, or Adam's first-moment decay
  // Sampling uses an exponential moving average of the weights with this
  // decay (warmed up as min(decay, (1 + k) / (10 + k)) at step k); 0 keeps
  // the last iterate.
  double ema_decay = 0.999;

  NoiseSchedule schedule() const;
  static DiffusionConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct TrainingLoss {
  double l_num = 0.0;  // MSE between predicted and true Gaussian noise
  double l_cat = 0.0;  // cross-entropy to x0, averaged over categorical columns
  double total = 0.0;
};

/// One corrupted minibatch: inputs to the denoiser and the regression /
/// classification targets.
struct CorruptedBatch {
  Eigen::MatrixXd x_t;         // B x width
  std::vector<int> t;          // per row, 1..T
  Eigen::MatrixXd noise;       // B x numerical width
  std::vector<int> x0_codes;   // B x groups, row-major
};

CorruptedBatch corrupt_batch(const NoiseSchedule& schedule, const EncodedLayout& layout,
                             const Eigen::MatrixXd& x0, Rng& rng);

// Loss of `net` on a corrupted batch; when `grad` is given, the exact
// gradient of `total` with respect to every parameter is accumulated into it.
TrainingLoss denoiser_loss(const DenoiserMLP& net, const EncodedLayout& layout,
                           const CorruptedBatch& batch, DenoiserMLP::Parameters* grad = nullptr);

struct DiffusionModel {
  DiffusionConfig config;
  NoiseSchedule schedule;
  DenoiserMLP denoiser;
  EncodedLayout layout;
  QuantileTransform transform;
  std::vector<double> loss_log;  // mean total loss per epoch
};

// Freshly initialized, untrained model for the transform's schema.
DiffusionModel make_model(const QuantileTransform& qt, const DiffusionConfig& config,
                          std::uint64_t seed);

// SGD with momentum (v = mu v + g; p -= lr v) or Adam (second-moment decay
// 0.999, epsilon 1e-8).
class Optimizer {
 public:
  Optimizer(const DenoiserMLP& net, const DiffusionConfig& config);
  void step(DenoiserMLP& net, const DenoiserMLP::Parameters& grad);

 private:
  OptimizerKind kind_;
  double learning_rate_;
  double momentum_;
  long steps_ = 0;
  DenoiserMLP::Parameters first_;
  DenoiserMLP::Parameters second_;
};

// Samples timesteps and corruption, updates parameters once and returns the
// loss measured before the update. Throws NumericalFault on a non-finite loss.
TrainingLoss training_step(DiffusionModel& model, Optimizer& optimizer,
                           const Eigen::MatrixXd& batch, Rng& rng);

// Trains on the encoded training split. Deterministic for a fixed seed.
DiffusionModel train(const EncodedMatrix& train_encoded, const QuantileTransform& qt,
                     const DiffusionConfig& config, std::uint64_t seed);

// Reverse chain in encoded space: n rows, numerical block in score space
// and exact one-hot categorical groups.
Eigen::MatrixXd sample_encoded(const DiffusionModel& model, std::size_t n, std::uint64_t seed);

// Generates n synthetic rows (including the label column).
DataTable sample(const DiffusionModel& model, std::size_t n, std::uint64_t seed);

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const DiffusionModel& model, const std::filesystem::path& path);
DiffusionModel load_model(const std::filesystem::path& path);

}  // namespace fairdiff
