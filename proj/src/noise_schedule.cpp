#include <algorithm>
#include <cmath>

#include "fairdiff/diffusion.hpp"
#include "fairdiff/errors.hpp"

namespace fairdiff {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw PreconditionError("noise schedule needs at least one step");
  alpha_bars_.reserve(betas_.size());
  double prod = 1.0;
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) throw PreconditionError("every beta must lie strictly in (0, 1)");
    prod *= 1.0 - b;
    alpha_bars_.push_back(prod);
  }
}

NoiseSchedule NoiseSchedule::linear(int timesteps, double beta_start, double beta_end) {
  if (timesteps < 1) throw PreconditionError("timesteps must be >= 1");
  const double scale = 1000.0 / timesteps;
  const double lo = scale * beta_start;
  const double hi = scale * beta_end;
  std::vector<double> betas(static_cast<std::size_t>(timesteps));
  for (int i = 0; i < timesteps; ++i) {
    const double f = timesteps == 1 ? 0.0 : static_cast<double>(i) / (timesteps - 1);
    betas[static_cast<std::size_t>(i)] = std::min(lo + f * (hi - lo), 0.999);
  }
  return NoiseSchedule(std::move(betas));
}

std::size_t NoiseSchedule::index(int t) const {
  if (t < 1 || t > timesteps())
    throw PreconditionError("timestep " + std::to_string(t) + " outside 1.." + std::to_string(timesteps()));
  return static_cast<std::size_t>(t - 1);
}

Eigen::VectorXd gaussian_forward(const NoiseSchedule& schedule, const Eigen::VectorXd& x0, int t,
                                 const Eigen::VectorXd& noise) {
  if (x0.size() != noise.size()) throw PreconditionError("x0 and noise widths differ");
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
}

Eigen::VectorXd multinomial_forward(const NoiseSchedule& schedule, const Eigen::VectorXd& x0, int t) {
  const auto k = x0.size();
  if (k < 2) throw PreconditionError("multinomial diffusion needs K >= 2");
  const double ab = schedule.alpha_bar(t);
  return (ab * x0.array() + (1.0 - ab) / static_cast<double>(k)).matrix();
}

NoiseSchedule DiffusionConfig::schedule() const {
  if (!betas.empty()) return NoiseSchedule(betas);
  return NoiseSchedule::linear(timesteps, beta_start, beta_end);
}

DiffusionConfig DiffusionConfig::from_json(const nlohmann::json& j) {
  DiffusionConfig c;
  try {
    c.timesteps = j.value("timesteps", c.timesteps);
    c.beta_start = j.value("beta_start", c.beta_start);
    c.beta_end = j.value("beta_end", c.beta_end);
    c.betas = j.value("betas", c.betas);
    c.hidden = j.value("hidden", c.hidden);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.momentum = j.value("momentum", c.momentum);
    c.ema_decay = j.value("ema_decay", c.ema_decay);
    if (j.contains("optimizer")) {
      const auto name = j.at("optimizer").get<std::string>();
      if (name == "sgd") c.optimizer = OptimizerKind::kSgd;
      else if (name == "adam") c.optimizer = OptimizerKind::kAdam;
      else throw ParseError("diffusion config: unknown optimizer '" + name + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("diffusion config: ") + e.what());
  }
  if (!c.betas.empty()) c.timesteps = static_cast<int>(c.betas.size());
  if (c.timesteps < 1 || c.epochs < 0 || c.batch_size == 0 || c.hidden.empty() ||
      c.embedding_dim == 0 || !(c.learning_rate > 0.0) || c.momentum < 0.0 || c.momentum >= 1.0 ||
      c.ema_decay < 0.0 || c.ema_decay >= 1.0)
    throw ParseError("diffusion config: invalid hyperparameter value");
  for (std::size_t h : c.hidden) {
    if (h == 0) throw ParseError("diffusion config: hidden layer of width 0");
  }
  return c;
}

nlohmann::json DiffusionConfig::to_json() const {
  nlohmann::json j{{"timesteps", timesteps},         {"beta_start", beta_start},
                   {"beta_end", beta_end},           {"hidden", hidden},
                   {"embedding_dim", embedding_dim}, {"epochs", epochs},
                   {"batch_size", batch_size},       {"learning_rate", learning_rate},
                   {"momentum", momentum},
                   {"ema_decay", ema_decay},
                   {"optimizer", optimizer == OptimizerKind::kAdam ? "adam" : "sgd"}};
  if (!betas.empty()) j["betas"] = betas;
  return j;
}

}  // namespace fairdiff
