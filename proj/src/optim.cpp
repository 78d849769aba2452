#include "specband/optim.hpp"

#include <cmath>

namespace specband {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

AdamCosine::AdamCosine(std::vector<Tensor> params, const AdamConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.total_steps == 0) throw invalid_input("AdamCosine: total_steps must be positive");
  if (cfg_.learning_rate <= 0.0) throw invalid_input("AdamCosine: learning rate must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

double AdamCosine::learning_rate_at(std::size_t t) const {
  const double frac = static_cast<double>(t) / static_cast<double>(cfg_.total_steps);
  return cfg_.learning_rate * 0.5 * (1.0 + std::cos(kPi * frac));
}

void AdamCosine::step() {
  ++t_;
  const double lr = learning_rate_at(t_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad[j] + cfg_.weight_decay * p.value[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.value[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace specband
