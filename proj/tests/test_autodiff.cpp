#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "specband/autodiff.hpp"
#include "specband/losses.hpp"
#include "specband/rng.hpp"

using namespace specband;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo = -1.0,
                     double hi = 1.0) {
  auto t = make_tensor(std::move(shape));
  Rng rng(seed);
  for (double& v : t->value) v = rng.uniform(lo, hi);
  return t;
}

// Central finite differences of `loss_fn` (which must rebuild the graph from
// the leaves' current values) against the analytic gradient of `leaf`.
void check_gradient(const std::function<double()>& loss_fn, const Tensor& leaf,
                    const std::function<void()>& run_backward, double step = 1e-6,
                    double tol = 1e-6) {
  run_backward();
  std::vector<double> analytic = leaf->grad;
  for (std::size_t i = 0; i < leaf->size(); ++i) {
    const double keep = leaf->value[i];
    leaf->value[i] = keep + step;
    const double up = loss_fn();
    leaf->value[i] = keep - step;
    const double down = loss_fn();
    leaf->value[i] = keep;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
    REQUIRE(std::abs(analytic[i] - fd) / denom < tol);
  }
}

}  // namespace

TEST_CASE("sum of squares gradient is 2p") {
  auto p = random_tensor({5}, 1);
  Tape tape;
  auto loss = tape.sum_squares(p);
  tape.backward(loss);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(p->grad[i] == doctest::Approx(2.0 * p->value[i]).epsilon(1e-12));
}

TEST_CASE("backward twice without reset throws") {
  auto p = random_tensor({3}, 2);
  Tape tape;
  auto loss = tape.sum_squares(p);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), std::logic_error);
  tape.reset();
  auto loss2 = tape.sum_squares(p);
  CHECK_NOTHROW(tape.backward(loss2));
}

TEST_CASE("cross entropy values") {
  Tape tape;
  auto logits = make_tensor({7});
  auto uniform = tape.cross_entropy(logits, 3);
  CHECK(uniform->value[0] == doctest::Approx(std::log(7.0)).epsilon(1e-12));

  auto hot = make_tensor({7});
  hot->value[2] = 1000.0;
  auto saturated = tape.cross_entropy(hot, 2);
  CHECK(saturated->value[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("cross entropy gradient is softmax minus one-hot") {
  auto logits = random_tensor({7}, 3, -2.0, 2.0);
  const std::size_t label = 4;
  auto loss_value = [&]() {
    Tape t;
    return t.cross_entropy(logits, label)->value[0];
  };
  check_gradient(loss_value, logits, [&]() {
    Tape t;
    auto loss = t.cross_entropy(logits, label);
    logits->zero_grad();
    t.backward(loss);
  });
  // Softmax normalization: gradients recover probabilities summing to 1.
  Tape t;
  auto loss = t.cross_entropy(logits, label);
  logits->zero_grad();
  t.backward(loss);
  double sum = 0.0;
  for (std::size_t i = 0; i < 7; ++i) sum += logits->grad[i] + (i == label ? 1.0 : 0.0);
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("cosine consistency endpoint values") {
  Tape tape;
  auto a = make_tensor({3}, {1.0, 2.0, -1.0});
  CHECK(tape.cosine_consistency(a, a)->value[0] == doctest::Approx(0.0).epsilon(1e-12));

  auto e1 = make_tensor({2}, {1.0, 0.0});
  auto e2 = make_tensor({2}, {0.0, 1.0});
  CHECK(tape.cosine_consistency(e1, e2)->value[0] == doctest::Approx(1.0).epsilon(1e-12));

  auto neg = make_tensor({3}, {-1.0, -2.0, 1.0});
  CHECK(tape.cosine_consistency(a, neg)->value[0] == doctest::Approx(2.0).epsilon(1e-12));

  auto zero = make_tensor({3});
  CHECK_NOTHROW(tape.cosine_consistency(a, zero));
}

TEST_CASE("cosine consistency gradients match finite differences") {
  auto a = random_tensor({6}, 4, 0.2, 1.5);
  auto b = random_tensor({6}, 5, 0.2, 1.5);
  auto loss_value = [&]() {
    Tape t;
    return t.cosine_consistency(a, b)->value[0];
  };
  for (const Tensor& leaf : {a, b}) {
    check_gradient(loss_value, leaf, [&]() {
      Tape t;
      auto loss = t.cosine_consistency(a, b);
      a->zero_grad();
      b->zero_grad();
      t.backward(loss);
    });
  }
}

TEST_CASE("conv3x3 + relu + pools gradients match finite differences") {
  auto input = random_tensor({2, 6, 6}, 6, 0.1, 1.0);
  auto weight = random_tensor({3, 2, 3, 3}, 7, -0.5, 0.5);
  auto bias = random_tensor({3}, 8, -0.2, 0.2);
  auto build = [&](Tape& t) {
    auto y = t.conv3x3(input, weight, bias);
    y = t.relu(y);
    y = t.avg_pool2(y);
    auto g = t.global_avg_pool(y);
    return t.sum_squares(g);
  };
  auto loss_value = [&]() {
    Tape t;
    return build(t)->value[0];
  };
  for (const Tensor& leaf : {input, weight, bias}) {
    check_gradient(loss_value, leaf, [&]() {
      Tape t;
      auto loss = build(t);
      input->zero_grad();
      weight->zero_grad();
      bias->zero_grad();
      t.backward(loss);
    });
  }
}

TEST_CASE("linear and concat gradients match finite differences") {
  auto w = random_tensor({4, 6}, 9);
  auto b = random_tensor({4}, 10);
  auto x1 = random_tensor({2}, 11);
  auto x2 = random_tensor({4}, 12);
  auto build = [&](Tape& t) {
    auto x = t.concat(x1, x2);
    auto y = t.linear(w, b, x);
    return t.cross_entropy(y, 1);
  };
  auto loss_value = [&]() {
    Tape t;
    return build(t)->value[0];
  };
  for (const Tensor& leaf : {w, b, x1, x2}) {
    check_gradient(loss_value, leaf, [&]() {
      Tape t;
      auto loss = build(t);
      for (auto& p : {w, b, x1, x2}) p->zero_grad();
      t.backward(loss);
    });
  }
}

TEST_CASE("constant leaves do not accumulate gradient") {
  auto x = random_tensor({4}, 13);
  x->requires_grad = false;
  auto w = random_tensor({2, 4}, 14);
  auto b = random_tensor({2}, 15);
  Tape t;
  auto loss = t.cross_entropy(t.linear(w, b, x), 0);
  t.backward(loss);
  for (double g : x->grad) CHECK(g == 0.0);
  double wsum = 0.0;
  for (double g : w->grad) wsum += std::abs(g);
  CHECK(wsum > 0.0);
}

TEST_CASE("total_loss arithmetic and breakdown") {
  Tape tape;
  auto cls = make_tensor({1}, {2.0});
  auto cons = make_tensor({1}, {0.5});
  auto res = total_loss(tape, {{cls, cons}}, 5.0);
  CHECK(res.node->value[0] == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(res.breakdown.per_band.size() == 1);
  CHECK(res.breakdown.per_band[0].band_index == 1);
  CHECK(res.breakdown.recompute_total() == doctest::Approx(res.breakdown.total));

  Tape tape2;
  auto a = make_tensor({1}, {1.25});
  auto b = make_tensor({1}, {0.75});
  auto c1 = make_tensor({1}, {9.0});
  auto c2 = make_tensor({1}, {3.0});
  auto no_cons = total_loss(tape2, {{a, c1}, {b, c2}}, 0.0);
  CHECK(no_cons.node->value[0] == doctest::Approx(2.0).epsilon(1e-12));

  Tape tape3;
  auto z = make_tensor({1});
  auto zero = total_loss(tape3, {{z, z}}, 5.0);
  CHECK(zero.node->value[0] == 0.0);

  CHECK_THROWS_AS(total_loss(tape3, {}, 1.0), invalid_input);
  CHECK_THROWS_AS(total_loss(tape3, {{z, z}}, -1.0), invalid_input);
}

TEST_CASE("shape violations throw") {
  Tape t;
  auto img = random_tensor({2, 4, 4}, 20);
  auto w = random_tensor({3, 1, 3, 3}, 21);
  auto b = random_tensor({3}, 22);
  CHECK_THROWS_AS(t.conv3x3(img, w, b), invalid_input);
  auto v1 = random_tensor({3}, 23);
  auto v2 = random_tensor({4}, 24);
  CHECK_THROWS_AS(t.cosine_consistency(v1, v2), invalid_input);
  CHECK_THROWS_AS(t.add(v1, v2), invalid_input);
  CHECK_THROWS_AS(t.cross_entropy(v1, 3), invalid_input);
  CHECK_THROWS_AS(t.backward(v1), invalid_input);
}
