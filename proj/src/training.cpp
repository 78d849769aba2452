#include "specband/training.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include "specband/rng.hpp"
#include "specband/spectrum.hpp"

namespace specband {

const char* variant_name(TrainVariant v) {
  switch (v) {
    case TrainVariant::full: return "full";
    case TrainVariant::no_cons: return "no_cons";
    case TrainVariant::shared_branches: return "shared_branches";
    case TrainVariant::pass_only: return "pass_only";
    case TrainVariant::stop_only: return "stop_only";
    case TrainVariant::erm: return "erm";
  }
  return "?";
}

nlohmann::json TrainConfig::to_json() const {
  const char* opl = original_pair_loss == OriginalPairLoss::both
                        ? "both"
                        : original_pair_loss == OriginalPairLoss::cls_only ? "cls_only" : "none";
  return {
      {"alpha", alpha},
      {"learning_rate", learning_rate},
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"seed", seed},
      {"beta1", beta1},
      {"beta2", beta2},
      {"adam_eps", adam_eps},
      {"weight_decay", weight_decay},
      {"original_pair_loss", opl},
      {"encoder",
       {{"in_channels", encoder.in_channels},
        {"conv_channels", encoder.conv_channels},
        {"feature_dim", encoder.feature_dim}}},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  if (j.contains("original_pair_loss")) {
    const std::string s = j["original_pair_loss"];
    if (s == "both")
      c.original_pair_loss = OriginalPairLoss::both;
    else if (s == "cls_only")
      c.original_pair_loss = OriginalPairLoss::cls_only;
    else if (s == "none")
      c.original_pair_loss = OriginalPairLoss::none;
    else
      throw invalid_input("config: bad original_pair_loss '" + s + "'");
  }
  if (j.contains("encoder")) {
    const auto& e = j["encoder"];
    c.encoder.in_channels = e.value("in_channels", c.encoder.in_channels);
    if (e.contains("conv_channels"))
      c.encoder.conv_channels = e["conv_channels"].get<std::vector<std::size_t>>();
    c.encoder.feature_dim = e.value("feature_dim", c.encoder.feature_dim);
  }
  return c;
}

SliceCache::SliceCache(const Dataset& dataset, const FilterBank& bank, std::size_t budget_bytes)
    : dataset_(dataset), bank_(bank) {
  const std::size_t n = dataset.samples.size();
  const std::size_t k = bank.k();
  if (n == 0) return;
  const std::size_t per_image = dataset.samples[0].image.size() * sizeof(double);
  const std::size_t need = n * k * 2 * per_image;
  if (need > budget_bytes) return;
  pass_.reserve(n * k);
  stop_.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < k; ++b) {
      pass_.push_back(band_slice(dataset.samples[i].image, bank.pass[b]));
      stop_.push_back(band_slice(dataset.samples[i].image, stop_response(bank, b)));
    }
  }
  cached_ = true;
}

ImageTensor SliceCache::pass(std::size_t sample, std::size_t band) const {
  if (cached_) return pass_[sample * bank_.k() + band];
  return band_slice(dataset_.samples[sample].image, bank_.pass[band]);
}

ImageTensor SliceCache::stop(std::size_t sample, std::size_t band) const {
  if (cached_) return stop_[sample * bank_.k() + band];
  return band_slice(dataset_.samples[sample].image, stop_response(bank_, band));
}

namespace {

bool is_dual(TrainVariant v) {
  return v == TrainVariant::full || v == TrainVariant::no_cons ||
         v == TrainVariant::shared_branches;
}

double effective_alpha(const TrainConfig& cfg, TrainVariant v) {
  return v == TrainVariant::no_cons ? 0.0 : cfg.alpha;
}

}  // namespace

LossBreakdown dual_train_step(const Model& model, const FilterBank& bank, const Dataset& data,
                              const std::vector<std::size_t>& batch, const TrainConfig& cfg,
                              AdamCosine& opt, const SliceCache* cache, TrainVariant variant) {
  if (batch.empty()) throw invalid_input("train_step: empty batch");
  if (!data.samples.empty() && (data.samples[0].image.height != bank.height ||
                                data.samples[0].image.width != bank.width))
    throw invalid_input("train_step: bank grid does not match image size");
  const std::size_t k = bank.k();
  if (is_dual(variant) && k < 2)
    throw invalid_input("train_step: dual training needs at least two bands");

  if (variant != TrainVariant::erm && cache == nullptr)
    throw invalid_input("train_step: slice cache required for filtered variants");

  const double alpha = effective_alpha(cfg, variant);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const bool with_original = cfg.original_pair_loss != OriginalPairLoss::none;
  const bool original_cons = cfg.original_pair_loss == OriginalPairLoss::both;

  LossBreakdown breakdown;
  breakdown.alpha = alpha;
  if (is_dual(variant)) {
    if (with_original) breakdown.original_pair = BandLossTerms{0, 0.0, 0.0};
    for (std::size_t b = 0; b < k; ++b)
      breakdown.per_band.push_back({static_cast<int>(b) + 1, 0.0, 0.0});
  } else if (variant == TrainVariant::erm) {
    breakdown.per_band.push_back({0, 0.0, 0.0});
  } else {
    if (with_original) breakdown.original_pair = BandLossTerms{0, 0.0, 0.0};
    for (std::size_t b = 0; b < k; ++b)
      breakdown.per_band.push_back({static_cast<int>(b) + 1, 0.0, 0.0});
  }

  double total_acc = 0.0;
  // One tape per sample keeps the live graph small; gradients accumulate on
  // the shared parameters across samples, then a single Adam step runs.
  for (std::size_t idx : batch) {
    const Sample& sample = data.samples[idx];
    const auto label = static_cast<std::size_t>(sample.label);
    Tape tape;
    Tensor sample_total;
    auto accumulate = [&](const Tensor& term) {
      sample_total = sample_total ? tape.add(sample_total, term) : term;
    };

    if (is_dual(variant)) {
      if (with_original) {
        Tensor zp = model.encode_pass(tape, sample.image);
        Tensor zs = model.encode_stop(tape, sample.image);
        Tensor cls = tape.cross_entropy(model.head().logits(tape, tape.concat(zp, zs)), label);
        accumulate(cls);
        breakdown.original_pair->cls += cls->value[0] * inv_b;
        if (original_cons) {
          Tensor cons = tape.cosine_consistency(zp, zs);
          if (alpha != 0.0) accumulate(tape.scale(cons, alpha));
          breakdown.original_pair->cons += cons->value[0] * inv_b;
        }
      }
      for (std::size_t b = 0; b < k; ++b) {
        Tensor zp = model.encode_pass(tape, cache->pass(idx, b));
        Tensor zs = model.encode_stop(tape, cache->stop(idx, b));
        Tensor cls = tape.cross_entropy(model.head().logits(tape, tape.concat(zp, zs)), label);
        Tensor cons = tape.cosine_consistency(zp, zs);
        accumulate(cls);
        if (alpha != 0.0) accumulate(tape.scale(cons, alpha));
        breakdown.per_band[b].cls += cls->value[0] * inv_b;
        breakdown.per_band[b].cons += cons->value[0] * inv_b;
      }
    } else if (variant == TrainVariant::erm) {
      Tensor cls = tape.cross_entropy(model.forward_single(tape, sample.image), label);
      accumulate(cls);
      breakdown.per_band[0].cls += cls->value[0] * inv_b;
    } else {
      // pass_only / stop_only: single branch over this branch's slices.
      const bool use_pass = variant == TrainVariant::pass_only;
      if (with_original) {
        Tensor cls = tape.cross_entropy(model.forward_single(tape, sample.image), label);
        accumulate(cls);
        breakdown.original_pair->cls += cls->value[0] * inv_b;
      }
      for (std::size_t b = 0; b < k; ++b) {
        ImageTensor slice = use_pass ? cache->pass(idx, b) : cache->stop(idx, b);
        Tensor cls = tape.cross_entropy(model.forward_single(tape, slice), label);
        accumulate(cls);
        breakdown.per_band[b].cls += cls->value[0] * inv_b;
      }
    }

    Tensor scaled = tape.scale(sample_total, inv_b);
    total_acc += scaled->value[0];
    tape.backward(scaled);
  }

  opt.step();
  breakdown.total = total_acc;
  return breakdown;
}

int predict(const Model& model, const ImageTensor& image) {
  Tape tape;
  Tensor logits = model.kind() == ModelKind::single ? model.forward_single(tape, image)
                                                    : model.forward_pair(tape, image, image);
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits->size(); ++i)
    if (logits->value[i] > logits->value[best]) best = i;
  return static_cast<int>(best);
}

double evaluate(const Model& model, const Dataset& dataset) {
  if (dataset.samples.empty()) throw invalid_input("evaluate: empty dataset");
  std::size_t hits = 0;
  for (const auto& s : dataset.samples)
    if (predict(model, s.image) == s.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(dataset.samples.size());
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json je = nlohmann::json::array();
  for (const auto& e : epochs)
    je.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"train_acc", e.train_acc}});
  return {{"config", config},
          {"seed", seed},
          {"epochs", je},
          {"eval", eval},
          {"wall_seconds", wall_seconds}};
}

TrainResult train_variant(const Dataset& train, const FilterBank& bank, const TrainConfig& cfg,
                          TrainVariant variant,
                          const std::map<std::string, const Dataset*>& eval_sets) {
  if (train.samples.empty()) throw invalid_input("train: empty dataset");
  if (cfg.epochs <= 0 || cfg.batch_size <= 0)
    throw invalid_input("train: epochs and batch_size must be positive");
  if (cfg.alpha < 0.0) throw invalid_input("train: alpha must be non-negative");
  if (cfg.learning_rate <= 0.0) throw invalid_input("train: learning rate must be positive");

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = train.samples.size();
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;

  Model model = [&] {
    switch (variant) {
      case TrainVariant::full:
      case TrainVariant::no_cons:
        return Model::make_dual(cfg.encoder, train.num_classes, cfg.seed);
      case TrainVariant::shared_branches:
        return Model::make_dual(cfg.encoder, train.num_classes, cfg.seed, true);
      default:
        return Model::make_single(cfg.encoder, train.num_classes, cfg.seed);
    }
  }();

  AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  adam.beta1 = cfg.beta1;
  adam.beta2 = cfg.beta2;
  adam.eps = cfg.adam_eps;
  adam.weight_decay = cfg.weight_decay;
  adam.total_steps = static_cast<std::size_t>(cfg.epochs) * batches;
  AdamCosine opt(model.parameters(), adam);

  // ERM never touches the bank; skip the slicing work entirely.
  std::optional<SliceCache> cache;
  if (variant != TrainVariant::erm) cache.emplace(train, bank);

  RunRecord record;
  record.seed = cfg.seed;
  record.config = cfg.to_json();
  record.config["variant"] = variant_name(variant);
  record.config["bank_k"] = bank.k();

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t sample_count = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(n, lo + cfg.batch_size);
      std::vector<std::size_t> batch(order.begin() + lo, order.begin() + hi);
      model.zero_grad();
      LossBreakdown lb = dual_train_step(model, bank, train, batch, cfg, opt,
                                         cache ? &*cache : nullptr, variant);
      loss_sum += lb.total * static_cast<double>(batch.size());
      sample_count += batch.size();
    }
    EpochStat stat;
    stat.epoch = epoch;
    stat.loss = loss_sum / static_cast<double>(sample_count);
    stat.train_acc = evaluate(model, train);
    record.epochs.push_back(stat);
  }

  for (const auto& [name, ds] : eval_sets) record.eval[name] = evaluate(model, *ds);
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(model), std::move(record)};
}

Dataset slice_dataset(const Dataset& dataset, const Response& response) {
  Dataset out;
  out.num_classes = dataset.num_classes;
  out.samples.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples)
    out.samples.push_back({band_slice(s.image, response), s.label, s.domain});
  return out;
}

}  // namespace specband
