#include "specband/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace specband {

Tensor Tape::output(std::vector<std::size_t> shape, bool requires_grad) {
  auto t = make_tensor(std::move(shape));
  t->requires_grad = requires_grad;
  return t;
}

Tensor Tape::conv3x3(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input->shape.size() != 3) throw invalid_input("conv3x3: input must be (C,H,W)");
  const std::size_t ci = input->shape[0], h = input->shape[1], w = input->shape[2];
  if (weight->shape.size() != 4 || weight->shape[1] != ci || weight->shape[2] != 3 ||
      weight->shape[3] != 3)
    throw invalid_input("conv3x3: weight must be (Co,Ci,3,3)");
  const std::size_t co = weight->shape[0];
  if (bias->shape != std::vector<std::size_t>{co}) throw invalid_input("conv3x3: bias shape");

  Tensor out = output({co, h, w});
  const double* in = input->value.data();
  const double* wv = weight->value.data();
  double* ov = out->value.data();

  for (std::size_t oc = 0; oc < co; ++oc) {
    double* oplane = ov + oc * h * w;
    std::fill(oplane, oplane + h * w, bias->value[oc]);
    for (std::size_t ic = 0; ic < ci; ++ic) {
      const double* wk = wv + (oc * ci + ic) * 9;
      const double* iplane = in + ic * h * w;
      for (std::size_t y = 0; y < h; ++y) {
        double* orow = oplane + y * w;
        for (std::size_t dy = 0; dy < 3; ++dy) {
          if (y + dy < 1 || y + dy > h) continue;  // iy = y + dy - 1 in range
          const double* irow = iplane + (y + dy - 1) * w;
          const double w0 = wk[dy * 3 + 0], w1 = wk[dy * 3 + 1], w2 = wk[dy * 3 + 2];
          orow[0] += w1 * irow[0] + (w > 1 ? w2 * irow[1] : 0.0);
          for (std::size_t x = 1; x + 1 < w; ++x)
            orow[x] += w0 * irow[x - 1] + w1 * irow[x] + w2 * irow[x + 1];
          if (w > 1) orow[w - 1] += w0 * irow[w - 2] + w1 * irow[w - 1];
        }
      }
    }
  }

  ops_.push_back([input, weight, bias, out, ci, co, h, w]() {
    const double* g = out->grad.data();
    const double* in = input->value.data();
    const double* wv = weight->value.data();
    double* gw = weight->grad.data();
    double* gb = bias->grad.data();
    double* gi = input->grad.data();
    const bool need_gi = input->requires_grad;

    for (std::size_t oc = 0; oc < co; ++oc) {
      const double* gplane = g + oc * h * w;
      double bacc = 0.0;
      for (std::size_t i = 0; i < h * w; ++i) bacc += gplane[i];
      gb[oc] += bacc;

      for (std::size_t ic = 0; ic < ci; ++ic) {
        const double* wk = wv + (oc * ci + ic) * 9;
        double* gwk = gw + (oc * ci + ic) * 9;
        const double* iplane = in + ic * h * w;
        double* giplane = gi + ic * h * w;
        for (std::size_t y = 0; y < h; ++y) {
          const double* grow = gplane + y * w;
          for (std::size_t dy = 0; dy < 3; ++dy) {
            if (y + dy < 1 || y + dy > h) continue;
            const std::size_t iy = y + dy - 1;
            const double* irow = iplane + iy * w;
            double* girow = giplane + iy * w;
            for (std::size_t dx = 0; dx < 3; ++dx) {
              // ix = x + dx - 1 must stay in [0, w)
              const std::size_t xlo = dx == 0 ? 1 : 0;
              const std::size_t xhi = dx == 2 ? w - 1 : w;
              const double wval = wk[dy * 3 + dx];
              double acc = 0.0;
              if (need_gi) {
                for (std::size_t x = xlo; x < xhi; ++x) {
                  acc += grow[x] * irow[x + dx - 1];
                  girow[x + dx - 1] += wval * grow[x];
                }
              } else {
                for (std::size_t x = xlo; x < xhi; ++x) acc += grow[x] * irow[x + dx - 1];
              }
              gwk[dy * 3 + dx] += acc;
            }
          }
        }
      }
    }
  });
  return out;
}

Tensor Tape::relu(const Tensor& x) {
  Tensor out = output(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) out->value[i] = std::max(0.0, x->value[i]);
  ops_.push_back([x, out]() {
    if (!x->requires_grad) return;
    for (std::size_t i = 0; i < x->size(); ++i)
      if (x->value[i] > 0.0) x->grad[i] += out->grad[i];
  });
  return out;
}

Tensor Tape::avg_pool2(const Tensor& x) {
  if (x->shape.size() != 3) throw invalid_input("avg_pool2: input must be (C,H,W)");
  const std::size_t c = x->shape[0], h = x->shape[1], w = x->shape[2];
  const std::size_t oh = h / 2, ow = w / 2;
  if (oh == 0 || ow == 0) throw invalid_input("avg_pool2: spatial size too small");
  Tensor out = output({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const double* p = x->value.data() + (ch * h + 2 * y) * w + 2 * xx;
        out->value[(ch * oh + y) * ow + xx] = 0.25 * (p[0] + p[1] + p[w] + p[w + 1]);
      }
  ops_.push_back([x, out, c, h, w, oh, ow]() {
    if (!x->requires_grad) return;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const double g = 0.25 * out->grad[(ch * oh + y) * ow + xx];
          double* p = x->grad.data() + (ch * h + 2 * y) * w + 2 * xx;
          p[0] += g;
          p[1] += g;
          p[w] += g;
          p[w + 1] += g;
        }
  });
  return out;
}

Tensor Tape::global_avg_pool(const Tensor& x) {
  if (x->shape.size() != 3) throw invalid_input("global_avg_pool: input must be (C,H,W)");
  const std::size_t c = x->shape[0], plane = x->shape[1] * x->shape[2];
  Tensor out = output({c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    const double* p = x->value.data() + ch * plane;
    for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    out->value[ch] = acc / static_cast<double>(plane);
  }
  ops_.push_back([x, out, c, plane]() {
    if (!x->requires_grad) return;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double g = out->grad[ch] / static_cast<double>(plane);
      double* p = x->grad.data() + ch * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] += g;
    }
  });
  return out;
}

Tensor Tape::linear(const Tensor& weight, const Tensor& bias, const Tensor& x) {
  if (weight->shape.size() != 2) throw invalid_input("linear: weight must be (O,I)");
  const std::size_t o = weight->shape[0], in = weight->shape[1];
  if (x->shape != std::vector<std::size_t>{in})
    throw invalid_input("linear: input dimension mismatch");
  if (bias->shape != std::vector<std::size_t>{o}) throw invalid_input("linear: bias shape");
  Tensor out = output({o});
  for (std::size_t r = 0; r < o; ++r) {
    double acc = bias->value[r];
    const double* wr = weight->value.data() + r * in;
    for (std::size_t i = 0; i < in; ++i) acc += wr[i] * x->value[i];
    out->value[r] = acc;
  }
  ops_.push_back([weight, bias, x, out, o, in]() {
    for (std::size_t r = 0; r < o; ++r) {
      const double g = out->grad[r];
      bias->grad[r] += g;
      double* gwr = weight->grad.data() + r * in;
      for (std::size_t i = 0; i < in; ++i) gwr[i] += g * x->value[i];
    }
    if (x->requires_grad) {
      for (std::size_t r = 0; r < o; ++r) {
        const double g = out->grad[r];
        const double* wr = weight->value.data() + r * in;
        for (std::size_t i = 0; i < in; ++i) x->grad[i] += g * wr[i];
      }
    }
  });
  return out;
}

Tensor Tape::concat(const Tensor& a, const Tensor& b) {
  if (a->shape.size() != 1 || b->shape.size() != 1)
    throw invalid_input("concat: expects vectors");
  const std::size_t n = a->size(), m = b->size();
  Tensor out = output({n + m});
  std::copy(a->value.begin(), a->value.end(), out->value.begin());
  std::copy(b->value.begin(), b->value.end(), out->value.begin() + n);
  ops_.push_back([a, b, out, n, m]() {
    if (a->requires_grad)
      for (std::size_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < m; ++i) b->grad[i] += out->grad[n + i];
  });
  return out;
}

Tensor Tape::cross_entropy(const Tensor& logits, std::size_t label) {
  const std::size_t n = logits->size();
  if (label >= n) throw invalid_input("cross_entropy: label out of range");
  double mx = logits->value[0];
  for (double v : logits->value) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits->value) z += std::exp(v - mx);
  // Probabilities are saved for the backward pass.
  auto probs = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) (*probs)[i] = std::exp(logits->value[i] - mx) / z;
  Tensor out = output({1});
  out->value[0] = -(logits->value[label] - mx - std::log(z));
  ops_.push_back([logits, out, probs, label, n]() {
    if (!logits->requires_grad) return;
    const double g = out->grad[0];
    for (std::size_t i = 0; i < n; ++i)
      logits->grad[i] += g * ((*probs)[i] - (i == label ? 1.0 : 0.0));
  });
  return out;
}

Tensor Tape::cosine_consistency(const Tensor& a, const Tensor& b) {
  if (a->shape != b->shape || a->shape.size() != 1)
    throw invalid_input("cosine_consistency: expects equal-length vectors");
  const std::size_t n = a->size();
  constexpr double kEps = 1e-8;
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += a->value[i] * b->value[i];
    na2 += a->value[i] * a->value[i];
    nb2 += b->value[i] * b->value[i];
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const bool clamped = na * nb < kEps;
  const double denom = clamped ? kEps : na * nb;
  const double cosv = dot / denom;
  Tensor out = output({1});
  out->value[0] = 1.0 - cosv;
  ops_.push_back([a, b, out, n, dot, na, nb, denom, clamped, cosv]() {
    const double g = -out->grad[0];  // d(loss)/d(cos) = -1
    if (clamped) {
      // Denominator is the constant eps in this regime.
      if (a->requires_grad)
        for (std::size_t i = 0; i < n; ++i) a->grad[i] += g * b->value[i] / denom;
      if (b->requires_grad)
        for (std::size_t i = 0; i < n; ++i) b->grad[i] += g * a->value[i] / denom;
      return;
    }
    (void)dot;
    if (a->requires_grad)
      for (std::size_t i = 0; i < n; ++i)
        a->grad[i] += g * (b->value[i] / denom - cosv * a->value[i] / (na * na));
    if (b->requires_grad)
      for (std::size_t i = 0; i < n; ++i)
        b->grad[i] += g * (a->value[i] / denom - cosv * b->value[i] / (nb * nb));
  });
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  if (a->shape != b->shape) throw invalid_input("add: shape mismatch");
  Tensor out = output(a->shape);
  for (std::size_t i = 0; i < a->size(); ++i) out->value[i] = a->value[i] + b->value[i];
  ops_.push_back([a, b, out]() {
    if (a->requires_grad)
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i];
    if (b->requires_grad)
      for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i];
  });
  return out;
}

Tensor Tape::scale(const Tensor& x, double s) {
  Tensor out = output(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) out->value[i] = s * x->value[i];
  ops_.push_back([x, out, s]() {
    if (!x->requires_grad) return;
    for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += s * out->grad[i];
  });
  return out;
}

Tensor Tape::sum_squares(const Tensor& x) {
  Tensor out = output({1});
  double acc = 0.0;
  for (double v : x->value) acc += v * v;
  out->value[0] = acc;
  ops_.push_back([x, out]() {
    if (!x->requires_grad) return;
    const double g = out->grad[0];
    for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += 2.0 * g * x->value[i];
  });
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (loss->size() != 1) throw invalid_input("backward: loss must be scalar");
  if (backward_run_)
    throw std::logic_error("backward: called twice on one recording; reset the tape first");
  backward_run_ = true;
  loss->grad[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

void Tape::reset() {
  ops_.clear();
  backward_run_ = false;
}

}  // namespace specband
