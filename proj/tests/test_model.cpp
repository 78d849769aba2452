#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "specband/model.hpp"
#include "specband/optim.hpp"
#include "specband/rng.hpp"

using namespace specband;

namespace {

ImageTensor random_image(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  ImageTensor img(c, h, w);
  Rng rng(seed);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

std::vector<double> feature_values(const BranchEncoder& enc, const ImageTensor& img) {
  Tape tape;
  return enc.encode(tape, img)->value;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("zero image with zero biases encodes to zero") {
  BranchEncoder enc(EncoderConfig{}, 42);
  ImageTensor zero(3, 16, 16);
  for (double v : feature_values(enc, zero)) CHECK(v == 0.0);
}

TEST_CASE("encoding is deterministic and finite") {
  BranchEncoder a(EncoderConfig{}, 5), b(EncoderConfig{}, 5);
  auto img = random_image(3, 12, 12, 9);
  auto fa = feature_values(a, img);
  auto fb = feature_values(b, img);
  REQUIRE(fa.size() == 64);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i] == fb[i]);  // bit-identical
    CHECK(std::isfinite(fa[i]));
  }
}

TEST_CASE("inputs below the receptive minimum are rejected") {
  BranchEncoder enc(EncoderConfig{}, 1);
  CHECK(enc.receptive_min() == 8);
  Tape tape;
  CHECK_THROWS_AS(enc.encode(tape, ImageTensor(3, 7, 16)), invalid_input);
  CHECK_THROWS_AS(enc.encode(tape, ImageTensor(1, 16, 16)), invalid_input);
  CHECK_NOTHROW(enc.encode(tape, ImageTensor(3, 8, 8)));
}

TEST_CASE("head is linear in the concatenated features") {
  ClassifierHead head(7, 128, 3);
  for (double& v : head.parameters()[0]->value) v = 0.0;
  auto bias = head.parameters()[1];
  bias->value[3] = 2.5;
  Tape tape;
  auto z = make_tensor({128});
  auto logits = head.logits(tape, z);
  REQUIRE(logits->size() == 7);
  for (std::size_t i = 0; i < 7; ++i)
    CHECK(logits->value[i] == (i == 3 ? 2.5 : 0.0));
}

TEST_CASE("swapping branch features changes logits") {
  Model m = Model::make_dual(EncoderConfig{}, 7, 11);
  auto a = random_image(3, 16, 16, 1);
  auto b = random_image(3, 16, 16, 2);
  Tape t1, t2;
  auto l1 = m.forward_pair(t1, a, b);
  auto l2 = m.forward_pair(t2, b, a);
  bool differs = false;
  for (std::size_t i = 0; i < 7; ++i)
    if (l1->value[i] != l2->value[i]) differs = true;
  CHECK(differs);
}

TEST_CASE("dual branches are disjoint parameter objects; shared model aliases") {
  Model dual = Model::make_dual(EncoderConfig{}, 7, 13);
  auto pass = dual.pass_encoder().parameters();
  auto stop = dual.stop_encoder().parameters();
  for (std::size_t i = 0; i < pass.size(); ++i) CHECK(pass[i].get() != stop[i].get());

  Model shared = Model::make_dual(EncoderConfig{}, 7, 13, true);
  auto sp = shared.pass_encoder().parameters();
  auto ss = shared.stop_encoder().parameters();
  for (std::size_t i = 0; i < sp.size(); ++i) CHECK(sp[i].get() == ss[i].get());
  CHECK(shared.parameters().size() == sp.size() + 2);  // one branch + head
}

TEST_CASE("branches initialize independently") {
  Model dual = Model::make_dual(EncoderConfig{}, 7, 13);
  const auto& pw = dual.pass_encoder().parameters()[0]->value;
  const auto& sw = dual.stop_encoder().parameters()[0]->value;
  bool differs = false;
  for (std::size_t i = 0; i < pw.size(); ++i)
    if (pw[i] != sw[i]) differs = true;
  CHECK(differs);
}

TEST_CASE("perturbing a pass parameter never changes stop features") {
  Model dual = Model::make_dual(EncoderConfig{}, 7, 17);
  auto img = random_image(3, 16, 16, 3);
  Tape t1;
  auto before = dual.encode_stop(t1, img)->value;
  dual.pass_encoder().parameters()[0]->value[0] += 1.0;
  Tape t2;
  auto after = dual.encode_stop(t2, img)->value;
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("with alpha 0 the stop encoder still receives gradient through the head") {
  Model dual = Model::make_dual(EncoderConfig{}, 7, 19);
  auto img = random_image(3, 16, 16, 4);
  Tape tape;
  auto loss = tape.cross_entropy(dual.forward_pair(tape, img, img), 2);
  dual.zero_grad();
  tape.backward(loss);
  double total = 0.0;
  for (const auto& p : dual.stop_encoder().parameters())
    for (double g : p->grad) total += std::abs(g);
  CHECK(total > 0.0);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  auto p = make_tensor({3}, {1.0, -2.0, 3.0});
  AdamConfig cfg;
  cfg.total_steps = 10;
  AdamCosine opt({p}, cfg);
  opt.step();
  CHECK(p->value == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam: the final cosine step has zero learning rate") {
  auto p = make_tensor({1}, {1.0});
  AdamConfig cfg;
  cfg.total_steps = 4;
  AdamCosine opt({p}, cfg);
  for (int t = 0; t < 3; ++t) {
    p->grad[0] = 1.0;
    opt.step();
  }
  const double before = p->value[0];
  p->grad[0] = 1.0;
  opt.step();  // t = T
  CHECK(opt.learning_rate_at(cfg.total_steps) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p->value[0] == before);
}

TEST_CASE("adam matches a hand-computed scalar trace") {
  const double g = 0.3, lr0 = 0.1;
  const std::size_t T = 5;
  auto p = make_tensor({1}, {1.0});
  AdamConfig cfg;
  cfg.learning_rate = lr0;
  cfg.total_steps = T;
  AdamCosine opt({p}, cfg);

  double ref = 1.0, m = 0.0, v = 0.0;
  const double pi = 3.141592653589793238462643383279502884;
  for (std::size_t t = 1; t <= T; ++t) {
    p->grad[0] = g;
    opt.step();
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, double(t)));
    const double vhat = v / (1.0 - std::pow(0.999, double(t)));
    const double lr = lr0 * 0.5 * (1.0 + std::cos(pi * double(t) / double(T)));
    ref -= lr * mhat / (std::sqrt(vhat) + 1e-8);
    REQUIRE(p->value[0] == doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("checkpoints round trip bit-exactly") {
  EncoderConfig cfg;
  cfg.conv_channels = {8, 12};
  cfg.feature_dim = 16;
  Model m = Model::make_dual(cfg, 7, 23);
  const auto path = temp_file("specband_ckpt_test.sbnd");
  m.save(path, 6);

  auto loaded = Model::load(path);
  CHECK(loaded.bank_k == 6);
  CHECK(loaded.model.kind() == ModelKind::dual);
  CHECK(loaded.model.encoder_config() == cfg);
  auto orig = m.parameters();
  auto back = loaded.model.parameters();
  REQUIRE(orig.size() == back.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    REQUIRE(orig[i]->size() == back[i]->size());
    for (std::size_t j = 0; j < orig[i]->size(); ++j)
      REQUIRE(orig[i]->value[j] == back[i]->value[j]);
  }

  // Save the loaded model again: files must be byte-identical.
  const auto path2 = temp_file("specband_ckpt_test2.sbnd");
  loaded.model.save(path2, 6);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(b1.substr(0, 4) == "SBND");
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("single-kind checkpoints restore the single kind") {
  Model m = Model::make_single(EncoderConfig{}, 7, 29);
  const auto path = temp_file("specband_ckpt_single.sbnd");
  m.save(path, 1);
  auto loaded = Model::load(path);
  CHECK(loaded.model.kind() == ModelKind::single);
  CHECK(loaded.model.head().in_dim() == 64);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto path = temp_file("specband_ckpt_bad.sbnd");
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE";
  }
  CHECK_THROWS_AS(Model::load(path), io_error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Model::load(temp_file("specband_missing.sbnd")), io_error);
}
