#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "specband/autodiff.hpp"
#include "specband/image.hpp"

namespace specband {

// Conv stack layout of one branch. Each entry of conv_channels is a
// (3x3 conv + bias, ReLU, 2x2 mean pool) block; a global mean pool and a
// linear projection to feature_dim follow.
struct EncoderConfig {
  std::size_t in_channels = 3;
  std::vector<std::size_t> conv_channels = {16, 32};
  std::size_t feature_dim = 64;

  bool operator==(const EncoderConfig&) const = default;
};

class BranchEncoder {
 public:
  BranchEncoder(const EncoderConfig& cfg, std::uint64_t seed);

  // Feature vector of shape (feature_dim). Throws when the input is smaller
  // than the receptive minimum.
  Tensor encode(Tape& tape, const ImageTensor& image) const;

  std::size_t receptive_min() const { return std::size_t{2} << cfg_.conv_channels.size(); }
  const EncoderConfig& config() const { return cfg_; }
  std::vector<Tensor> parameters() const;

 private:
  friend class Model;
  EncoderConfig cfg_;
  std::vector<Tensor> conv_w_, conv_b_;
  Tensor proj_w_, proj_b_;
};

class ClassifierHead {
 public:
  ClassifierHead(std::size_t num_classes, std::size_t in_dim, std::uint64_t seed);

  Tensor logits(Tape& tape, const Tensor& features) const;
  std::size_t num_classes() const { return w_->shape[0]; }
  std::size_t in_dim() const { return w_->shape[1]; }
  std::vector<Tensor> parameters() const { return {w_, b_}; }

 private:
  friend class Model;
  Tensor w_, b_;
};

enum class ModelKind : std::uint32_t {
  dual = 0,         // two independently initialized branches
  single = 1,       // one branch, head width feature_dim (ERM baseline)
  dual_shared = 2,  // two branches sharing one parameter set
};

struct LoadedModel;

// The trainable classifier. In the dual kinds the head consumes the
// concatenation (pass features, stop features); in the single kind it
// consumes one branch's features directly.
class Model {
 public:
  static Model make_dual(const EncoderConfig& cfg, std::size_t num_classes, std::uint64_t seed,
                         bool shared_branches = false);
  static Model make_single(const EncoderConfig& cfg, std::size_t num_classes, std::uint64_t seed);

  ModelKind kind() const { return kind_; }
  std::size_t num_classes() const { return head_->num_classes(); }
  const EncoderConfig& encoder_config() const { return pass_enc_->config(); }
  std::size_t receptive_min() const { return pass_enc_->receptive_min(); }

  const BranchEncoder& pass_encoder() const { return *pass_enc_; }
  const BranchEncoder& stop_encoder() const { return *stop_enc_; }
  const ClassifierHead& head() const { return *head_; }

  // Logits for one (pass input, stop input) pair. Dual kinds only.
  Tensor forward_pair(Tape& tape, const ImageTensor& pass_img,
                      const ImageTensor& stop_img) const;
  // Logits for the single kind.
  Tensor forward_single(Tape& tape, const ImageTensor& image) const;
  // Branch features without the head, for the consistency loss.
  Tensor encode_pass(Tape& tape, const ImageTensor& image) const;
  Tensor encode_stop(Tape& tape, const ImageTensor& image) const;

  // Unique parameter tensors in declaration order (shared branches are
  // listed once).
  std::vector<Tensor> parameters() const;
  void zero_grad() const;

  // Checkpoint: "SBND" magic, little-endian header and raw f64 parameters
  // in declaration order. Round trips bit-exactly. `bank_k` records the
  // band count the model was trained with.
  void save(const std::filesystem::path& path, std::uint32_t bank_k) const;
  static LoadedModel load(const std::filesystem::path& path);

 private:
  Model() = default;
  ModelKind kind_ = ModelKind::dual;
  std::shared_ptr<BranchEncoder> pass_enc_;
  std::shared_ptr<BranchEncoder> stop_enc_;  // aliases pass_enc_ when shared
  std::shared_ptr<ClassifierHead> head_;
};

struct LoadedModel {
  Model model;
  std::uint32_t bank_k = 0;
};

}  // namespace specband
