#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "specband/data.hpp"
#include "specband/filters.hpp"
#include "specband/losses.hpp"
#include "specband/model.hpp"
#include "specband/optim.hpp"

namespace specband {

// What the unfiltered original-image pair contributes to the summed loss.
enum class OriginalPairLoss { both, cls_only, none };

enum class TrainVariant {
  full,             // dual branches, consistency weighted by alpha
  no_cons,          // dual branches, alpha forced to 0
  shared_branches,  // dual branches sharing one parameter set
  pass_only,        // single branch trained on pass slices
  stop_only,        // single branch trained on stop slices
  erm,              // single branch trained on unfiltered images
};

const char* variant_name(TrainVariant v);

struct TrainConfig {
  double alpha = 5.0;
  double learning_rate = 1e-4;
  int epochs = 40;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  OriginalPairLoss original_pair_loss = OriginalPairLoss::both;
  EncoderConfig encoder;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Precomputed (pass, stop) slices for every (sample, band). Slices are
// training-time constants, so they are cached up front whenever the whole
// table fits the memory budget; otherwise they are recomputed on demand.
class SliceCache {
 public:
  SliceCache(const Dataset& dataset, const FilterBank& bank,
             std::size_t budget_bytes = std::size_t{512} << 20);

  bool cached() const { return cached_; }
  ImageTensor pass(std::size_t sample, std::size_t band) const;
  ImageTensor stop(std::size_t sample, std::size_t band) const;

 private:
  const Dataset& dataset_;
  const FilterBank& bank_;
  bool cached_ = false;
  std::vector<ImageTensor> pass_, stop_;  // [sample * k + band]
};

// One optimizer update over one batch: Eq.-style summed loss over the K
// band pairs plus the optional original pair, one backward pass, one Adam
// step. Exposed for the step-level tests; training loops call it through
// train_variant.
LossBreakdown dual_train_step(const Model& model, const FilterBank& bank, const Dataset& data,
                              const std::vector<std::size_t>& batch, const TrainConfig& cfg,
                              AdamCosine& opt, const SliceCache* cache,
                              TrainVariant variant = TrainVariant::full);

// Filter-free test-phase prediction: the image goes to both branches as-is.
// Ties resolve to the lowest class index.
int predict(const Model& model, const ImageTensor& image);

// Mean predict == label. Throws on an empty dataset.
double evaluate(const Model& model, const Dataset& dataset);

struct EpochStat {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
};

struct RunRecord {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<EpochStat> epochs;
  std::map<std::string, double> eval;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  Model model;
  RunRecord record;
};

// Full training loop for any variant; eval_sets are scored once at the end.
// Identical (dataset, bank, config, variant) runs produce identical models
// and records.
TrainResult train_variant(const Dataset& train, const FilterBank& bank, const TrainConfig& cfg,
                          TrainVariant variant,
                          const std::map<std::string, const Dataset*>& eval_sets = {});

// Applies one response to every image; labels and domains carry over.
Dataset slice_dataset(const Dataset& dataset, const Response& response);

}  // namespace specband
