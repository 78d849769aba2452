#pragma once

#include <cstddef>
#include <vector>

#include "specband/autodiff.hpp"

namespace specband {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::size_t total_steps = 1;  // cosine horizon T
};

// Adam with bias correction and a cosine-annealed learning rate:
// lr(t) = lr0 * 0.5 * (1 + cos(pi * t / T)), t = 1..T, so the final step
// runs at rate zero.
class AdamCosine {
 public:
  AdamCosine(std::vector<Tensor> params, const AdamConfig& cfg);

  // Consumes the gradients currently stored on the parameters.
  void step();

  std::size_t step_index() const { return t_; }
  double learning_rate_at(std::size_t t) const;

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
};

}  // namespace specband
