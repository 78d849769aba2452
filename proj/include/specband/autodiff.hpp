#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

#include "specband/common.hpp"

namespace specband {

// Value/gradient pair. Parameters are long-lived leaves owned by a model;
// everything else is created by tape ops and dropped with the tape.
struct TensorData {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = true;

  explicit TensorData(std::vector<std::size_t> s)
      : shape(std::move(s)),
        value(std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                              std::multiplies<>()),
              0.0),
        grad(value.size(), 0.0) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

using Tensor = std::shared_ptr<TensorData>;

inline Tensor make_tensor(std::vector<std::size_t> shape) {
  return std::make_shared<TensorData>(std::move(shape));
}

inline Tensor make_tensor(std::vector<std::size_t> shape, std::vector<double> values) {
  auto t = std::make_shared<TensorData>(std::move(shape));
  if (values.size() != t->size()) throw invalid_input("make_tensor: value count mismatch");
  t->value = std::move(values);
  return t;
}

// Reverse-mode tape. Ops compute values eagerly and record a closure that
// pushes gradients from the output back to the inputs. backward() runs the
// closures newest-first; running it twice on one recording throws, since the
// second pass would double-accumulate into the leaves.
class Tape {
 public:
  // 3x3 convolution, stride 1, zero padding 1. input (C,H,W),
  // weight (Co,C,3,3), bias (Co) -> (Co,H,W)
  Tensor conv3x3(const Tensor& input, const Tensor& weight, const Tensor& bias);
  Tensor relu(const Tensor& x);
  // 2x2 mean pool, stride 2; odd trailing row/column is dropped.
  Tensor avg_pool2(const Tensor& x);
  // (C,H,W) -> (C), per-channel mean.
  Tensor global_avg_pool(const Tensor& x);
  // weight (O,I), bias (O), x (I) -> (O)
  Tensor linear(const Tensor& weight, const Tensor& bias, const Tensor& x);
  Tensor concat(const Tensor& a, const Tensor& b);
  // -log softmax(logits)[label], max-stabilized. Scalar output.
  Tensor cross_entropy(const Tensor& logits, std::size_t label);
  // 1 - cos(a, b) with the norm product clamped at 1e-8. Scalar output.
  Tensor cosine_consistency(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& x, double s);
  Tensor sum_squares(const Tensor& x);

  void backward(const Tensor& loss);
  void reset();
  std::size_t num_ops() const { return ops_.size(); }

 private:
  Tensor output(std::vector<std::size_t> shape, bool requires_grad = true);

  std::vector<std::function<void()>> ops_;
  bool backward_run_ = false;
};

}  // namespace specband
