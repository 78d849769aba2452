#include "specband/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "specband/rng.hpp"

namespace specband {
namespace {

// Kaiming-uniform over fan-in: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
void kaiming_fill(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : t->value) v = rng.uniform(-limit, limit);
}

Tensor image_leaf(const ImageTensor& image) {
  auto t = make_tensor({image.channels, image.height, image.width});
  t->value = image.data;
  t->requires_grad = false;
  return t;
}

void write_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw io_error("checkpoint: truncated header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ofstream& f, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  f.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::ifstream& f) {
  unsigned char b[8];
  f.read(reinterpret_cast<char*>(b), 8);
  if (!f) throw io_error("checkpoint: truncated parameter block");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

constexpr char kMagic[4] = {'S', 'B', 'N', 'D'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

BranchEncoder::BranchEncoder(const EncoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.conv_channels.empty()) throw invalid_input("encoder: needs at least one conv block");
  std::size_t in = cfg.in_channels;
  for (std::size_t b = 0; b < cfg.conv_channels.size(); ++b) {
    const std::size_t out = cfg.conv_channels[b];
    Tensor w = make_tensor({out, in, 3, 3});
    Tensor bias = make_tensor({out});
    Rng rng(derive_seed(seed, "conv_w", b));
    kaiming_fill(w, in * 9, rng);
    conv_w_.push_back(w);
    conv_b_.push_back(bias);
    in = out;
  }
  proj_w_ = make_tensor({cfg.feature_dim, in});
  proj_b_ = make_tensor({cfg.feature_dim});
  Rng rng(derive_seed(seed, "proj_w"));
  kaiming_fill(proj_w_, in, rng);
}

Tensor BranchEncoder::encode(Tape& tape, const ImageTensor& image) const {
  if (image.channels != cfg_.in_channels)
    throw invalid_input("encode: channel count does not match encoder");
  if (image.height < receptive_min() || image.width < receptive_min())
    throw invalid_input("encode: image below the receptive minimum");
  Tensor x = image_leaf(image);
  for (std::size_t b = 0; b < conv_w_.size(); ++b) {
    x = tape.conv3x3(x, conv_w_[b], conv_b_[b]);
    x = tape.relu(x);
    x = tape.avg_pool2(x);
  }
  x = tape.global_avg_pool(x);
  return tape.linear(proj_w_, proj_b_, x);
}

std::vector<Tensor> BranchEncoder::parameters() const {
  std::vector<Tensor> out;
  for (std::size_t b = 0; b < conv_w_.size(); ++b) {
    out.push_back(conv_w_[b]);
    out.push_back(conv_b_[b]);
  }
  out.push_back(proj_w_);
  out.push_back(proj_b_);
  return out;
}

ClassifierHead::ClassifierHead(std::size_t num_classes, std::size_t in_dim, std::uint64_t seed) {
  if (num_classes == 0 || in_dim == 0) throw invalid_input("head: zero-sized layer");
  w_ = make_tensor({num_classes, in_dim});
  b_ = make_tensor({num_classes});
  Rng rng(derive_seed(seed, "head_w"));
  kaiming_fill(w_, in_dim, rng);
}

Tensor ClassifierHead::logits(Tape& tape, const Tensor& features) const {
  return tape.linear(w_, b_, features);
}

Model Model::make_dual(const EncoderConfig& cfg, std::size_t num_classes, std::uint64_t seed,
                       bool shared_branches) {
  Model m;
  m.kind_ = shared_branches ? ModelKind::dual_shared : ModelKind::dual;
  m.pass_enc_ = std::make_shared<BranchEncoder>(cfg, derive_seed(seed, "pass"));
  m.stop_enc_ = shared_branches
                    ? m.pass_enc_
                    : std::make_shared<BranchEncoder>(cfg, derive_seed(seed, "stop"));
  m.head_ = std::make_shared<ClassifierHead>(num_classes, 2 * cfg.feature_dim,
                                             derive_seed(seed, "head"));
  return m;
}

Model Model::make_single(const EncoderConfig& cfg, std::size_t num_classes, std::uint64_t seed) {
  Model m;
  m.kind_ = ModelKind::single;
  m.pass_enc_ = std::make_shared<BranchEncoder>(cfg, derive_seed(seed, "pass"));
  m.stop_enc_ = m.pass_enc_;
  m.head_ = std::make_shared<ClassifierHead>(num_classes, cfg.feature_dim,
                                             derive_seed(seed, "head"));
  return m;
}

Tensor Model::forward_pair(Tape& tape, const ImageTensor& pass_img,
                           const ImageTensor& stop_img) const {
  if (kind_ == ModelKind::single)
    throw invalid_input("forward_pair: single-branch model");
  Tensor zp = pass_enc_->encode(tape, pass_img);
  Tensor zs = stop_enc_->encode(tape, stop_img);
  return head_->logits(tape, tape.concat(zp, zs));
}

Tensor Model::forward_single(Tape& tape, const ImageTensor& image) const {
  if (kind_ != ModelKind::single)
    throw invalid_input("forward_single: dual-branch model");
  return head_->logits(tape, pass_enc_->encode(tape, image));
}

Tensor Model::encode_pass(Tape& tape, const ImageTensor& image) const {
  return pass_enc_->encode(tape, image);
}

Tensor Model::encode_stop(Tape& tape, const ImageTensor& image) const {
  return stop_enc_->encode(tape, image);
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out = pass_enc_->parameters();
  if (stop_enc_ != pass_enc_) {
    auto stop = stop_enc_->parameters();
    out.insert(out.end(), stop.begin(), stop.end());
  }
  auto head = head_->parameters();
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

void Model::zero_grad() const {
  for (auto& p : parameters()) p->zero_grad();
}

void Model::save(const std::filesystem::path& path, std::uint32_t bank_k) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("checkpoint: cannot open " + path.string() + " for writing");
  f.write(kMagic, 4);
  write_u32(f, kVersion);
  write_u32(f, static_cast<std::uint32_t>(kind_));
  write_u32(f, bank_k);
  const EncoderConfig& cfg = pass_enc_->config();
  write_u32(f, static_cast<std::uint32_t>(cfg.feature_dim));
  write_u32(f, static_cast<std::uint32_t>(num_classes()));
  write_u32(f, static_cast<std::uint32_t>(cfg.in_channels));
  write_u32(f, static_cast<std::uint32_t>(cfg.conv_channels.size()));
  for (std::size_t c : cfg.conv_channels) write_u32(f, static_cast<std::uint32_t>(c));
  for (const auto& p : parameters())
    for (double v : p->value) write_f64(f, v);
  if (!f) throw io_error("checkpoint: write failed for " + path.string());
}

LoadedModel Model::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("checkpoint: cannot open " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw io_error("checkpoint: bad magic in " + path.string());
  if (read_u32(f) != kVersion) throw io_error("checkpoint: unsupported version");
  const auto kind = static_cast<ModelKind>(read_u32(f));
  const std::uint32_t bank_k = read_u32(f);
  EncoderConfig cfg;
  cfg.feature_dim = read_u32(f);
  const std::uint32_t num_classes = read_u32(f);
  cfg.in_channels = read_u32(f);
  const std::uint32_t blocks = read_u32(f);
  cfg.conv_channels.clear();
  for (std::uint32_t i = 0; i < blocks; ++i) cfg.conv_channels.push_back(read_u32(f));

  Model m = kind == ModelKind::single
                ? make_single(cfg, num_classes, 0)
                : make_dual(cfg, num_classes, 0, kind == ModelKind::dual_shared);
  for (auto& p : m.parameters())
    for (double& v : p->value) v = read_f64(f);
  return {std::move(m), bank_k};
}

}  // namespace specband
