#include "specband/experiments.hpp"

#include <atomic>
#include <cstdio>
#include <functional>
#include <mutex>
#include <thread>

#include "specband/rng.hpp"

namespace specband {
namespace {

nlohmann::json bands_to_json(const std::vector<BandSpec>& bands) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : bands) j.push_back({b.center, b.bandwidth});
  return j;
}

std::vector<BandSpec> bands_from_json(const nlohmann::json& j) {
  std::vector<BandSpec> out;
  for (const auto& e : j) out.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return out;
}

// Runs jobs 0..n-1 on up to `threads` workers. Each job owns its output
// slot, so assembly order is fixed regardless of scheduling.
void parallel_runs(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct SeedContext {
  std::uint64_t run_seed = 0;
  Dataset train;
  Dataset eval;
};

SynthConfig synth_for(const ExperimentConfig& cfg, std::uint64_t run_seed,
                      const std::string& split, int samples_per_class) {
  SynthConfig s = cfg.synth;
  s.seed = derive_seed(run_seed, "data");
  s.split = split;
  s.samples_per_class = samples_per_class;
  return s;
}

SeedContext make_context(const ExperimentConfig& cfg, std::size_t seed_idx,
                         const std::string& domain) {
  SeedContext ctx;
  ctx.run_seed = cfg.base_seed + seed_idx;
  ctx.train = generate_synth(synth_for(cfg, ctx.run_seed, "train", cfg.synth.samples_per_class),
                             domain);
  ctx.eval = generate_synth(synth_for(cfg, ctx.run_seed, "eval", cfg.eval_samples_per_class),
                            domain);
  return ctx;
}

TrainConfig train_for(const ExperimentConfig& cfg, std::uint64_t run_seed,
                      const std::string& tag) {
  TrainConfig t = cfg.train;
  t.seed = derive_seed(run_seed, tag);
  return t;
}

std::vector<std::uint64_t> seed_list(const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cfg.num_seeds; ++i) seeds.push_back(cfg.base_seed + i);
  return seeds;
}

std::vector<std::string> band_labels(std::size_t k) {
  std::vector<std::string> labels;
  for (std::size_t i = 1; i <= k; ++i) labels.push_back("F" + std::to_string(i));
  return labels;
}

ExperimentReport base_report(const ExperimentConfig& cfg, const std::string& kind) {
  ExperimentReport rep;
  rep.kind = kind;
  rep.seeds = seed_list(cfg);
  nlohmann::json hashed = cfg.to_json();
  hashed["kind"] = kind;
  rep.config_hash = config_hash_hex(hashed);
  return rep;
}

}  // namespace

std::vector<BandSpec> analysis_bands(std::size_t k, double reference_size, double width_factor) {
  std::vector<BandSpec> specs = uniform_bands(k, reference_size);
  for (auto& s : specs) s.bandwidth *= width_factor;
  return specs;
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.synth = default_synth_config();
  cfg.analysis_bands = analysis_bands(6, cfg.synth.reference_size, cfg.band_width_factor);
  // Desk-scale budget: small encoder, short schedule, equal for every
  // method in a comparison.
  cfg.train.encoder.conv_channels = {12, 24};
  cfg.train.encoder.feature_dim = 48;
  cfg.train.epochs = 24;
  cfg.train.batch_size = 16;
  cfg.train.learning_rate = 1e-3;
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json synth_j = {
      {"num_classes", synth.num_classes},
      {"image_size", synth.image_size},
      {"reference_size", synth.reference_size},
      {"bands", bands_to_json(synth.bands)},
      {"domain_profiles", synth.domain_profiles},
      {"signal_band_per_class", synth.signal_band_per_class},
      {"noise_sigma", synth.noise_sigma},
      {"signal_amplitude", synth.signal_amplitude},
      {"distractor_amplitude", synth.distractor_amplitude},
      {"amplitude_jitter", synth.amplitude_jitter},
      {"samples_per_class", synth.samples_per_class},
  };
  return {{"synth", synth_j},
          {"train", train.to_json()},
          {"analysis_bands", bands_to_json(analysis_bands)},
          {"band_width_factor", band_width_factor},
          {"source_domain", source_domain},
          {"domains", domains},
          {"eval_samples_per_class", eval_samples_per_class},
          {"alpha_values", alpha_values},
          {"k_values", k_values},
          {"num_seeds", num_seeds},
          {"base_seed", base_seed},
          {"threads", threads}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg = default_experiment_config();
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    cfg.synth.num_classes = s.value("num_classes", cfg.synth.num_classes);
    cfg.synth.image_size = s.value("image_size", cfg.synth.image_size);
    cfg.synth.reference_size = s.value("reference_size", cfg.synth.reference_size);
    if (s.contains("bands")) cfg.synth.bands = bands_from_json(s["bands"]);
    if (s.contains("domain_profiles"))
      cfg.synth.domain_profiles =
          s["domain_profiles"].get<std::map<std::string, std::vector<double>>>();
    if (s.contains("signal_band_per_class"))
      cfg.synth.signal_band_per_class = s["signal_band_per_class"].get<std::vector<int>>();
    cfg.synth.noise_sigma = s.value("noise_sigma", cfg.synth.noise_sigma);
    cfg.synth.signal_amplitude = s.value("signal_amplitude", cfg.synth.signal_amplitude);
    cfg.synth.distractor_amplitude =
        s.value("distractor_amplitude", cfg.synth.distractor_amplitude);
    cfg.synth.amplitude_jitter = s.value("amplitude_jitter", cfg.synth.amplitude_jitter);
    cfg.synth.samples_per_class = s.value("samples_per_class", cfg.synth.samples_per_class);
  }
  if (j.contains("train")) cfg.train = TrainConfig::from_json(j["train"]);
  if (j.contains("band_width_factor"))
    cfg.band_width_factor = j["band_width_factor"].get<double>();
  if (j.contains("analysis_bands"))
    cfg.analysis_bands = bands_from_json(j["analysis_bands"]);
  else if (j.contains("band_width_factor") || j.contains("synth"))
    cfg.analysis_bands =
        specband::analysis_bands(6, cfg.synth.reference_size, cfg.band_width_factor);
  cfg.source_domain = j.value("source_domain", cfg.source_domain);
  if (j.contains("domains")) cfg.domains = j["domains"].get<std::vector<std::string>>();
  cfg.eval_samples_per_class = j.value("eval_samples_per_class", cfg.eval_samples_per_class);
  if (j.contains("alpha_values")) cfg.alpha_values = j["alpha_values"].get<std::vector<double>>();
  if (j.contains("k_values")) cfg.k_values = j["k_values"].get<std::vector<std::size_t>>();
  cfg.num_seeds = j.value("num_seeds", cfg.num_seeds);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  cfg.threads = j.value("threads", cfg.threads);
  return cfg;
}

FilterBank ExperimentConfig::build_analysis_bank() const {
  return build_bank(analysis_bands, synth.image_size, synth.image_size, synth.reference_size);
}

FilterBank ExperimentConfig::build_analysis_bank(std::size_t k) const {
  return build_bank(specband::analysis_bands(k, synth.reference_size, band_width_factor),
                    synth.image_size, synth.image_size, synth.reference_size);
}

ExperimentReport cmd_bandacc(const ExperimentConfig& cfg) {
  const FilterBank bank = cfg.build_analysis_bank();
  const std::size_t k = bank.k();

  std::vector<std::vector<std::vector<double>>> runs(cfg.num_seeds);
  std::vector<double> erm_original(cfg.num_seeds, 0.0);

  parallel_runs(cfg.num_seeds, cfg.threads, [&](std::size_t si) {
    SeedContext ctx = make_context(cfg, si, cfg.source_domain);

    std::vector<Dataset> eval_slices, train_slices;
    for (std::size_t b = 0; b < k; ++b) {
      eval_slices.push_back(slice_dataset(ctx.eval, bank.pass[b]));
      train_slices.push_back(slice_dataset(ctx.train, bank.pass[b]));
    }

    std::vector<std::vector<double>> rows(3, std::vector<double>(k, 0.0));

    auto erm = train_variant(ctx.train, bank, train_for(cfg, ctx.run_seed, "erm"),
                             TrainVariant::erm);
    erm_original[si] = evaluate(erm.model, ctx.eval);
    for (std::size_t b = 0; b < k; ++b) rows[0][b] = evaluate(erm.model, eval_slices[b]);

    for (std::size_t b = 0; b < k; ++b) {
      auto m = train_variant(train_slices[b], bank,
                             train_for(cfg, ctx.run_seed, "band-" + std::to_string(b)),
                             TrainVariant::erm);
      rows[1][b] = evaluate(m.model, eval_slices[b]);
    }

    auto ours = train_variant(ctx.train, bank, train_for(cfg, ctx.run_seed, "ours"),
                              TrainVariant::full);
    for (std::size_t b = 0; b < k; ++b) rows[2][b] = evaluate(ours.model, eval_slices[b]);

    runs[si] = std::move(rows);
  });

  ExperimentReport rep = base_report(cfg, "bandacc");
  rep.row_labels = {"erm_original", "per_band", "ours"};
  rep.col_labels = band_labels(k);
  rep.matrices["accuracy"] = ReportMatrix::from_runs(runs);
  double mean_ref = 0.0;
  for (double v : erm_original) mean_ref += v;
  rep.extra["erm_on_original_images"] = {{"per_seed", erm_original},
                                         {"mean", mean_ref / static_cast<double>(cfg.num_seeds)}};
  rep.extra["source_domain"] = cfg.source_domain;
  return rep;
}

ExperimentReport cmd_xband(const ExperimentConfig& cfg) {
  const FilterBank bank = cfg.build_analysis_bank();
  const std::size_t k = bank.k();

  std::vector<std::vector<std::vector<double>>> runs(cfg.num_seeds);
  parallel_runs(cfg.num_seeds, cfg.threads, [&](std::size_t si) {
    SeedContext ctx = make_context(cfg, si, cfg.source_domain);
    std::vector<Dataset> eval_slices, train_slices;
    for (std::size_t b = 0; b < k; ++b) {
      eval_slices.push_back(slice_dataset(ctx.eval, bank.pass[b]));
      train_slices.push_back(slice_dataset(ctx.train, bank.pass[b]));
    }
    std::vector<std::vector<double>> matrix(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
      auto m = train_variant(train_slices[i], bank,
                             train_for(cfg, ctx.run_seed, "xband-" + std::to_string(i)),
                             TrainVariant::erm);
      for (std::size_t j = 0; j < k; ++j) matrix[i][j] = evaluate(m.model, eval_slices[j]);
    }
    runs[si] = std::move(matrix);
  });

  ExperimentReport rep = base_report(cfg, "xband");
  rep.row_labels = band_labels(k);
  rep.col_labels = band_labels(k);
  rep.matrices["accuracy"] = ReportMatrix::from_runs(runs);
  rep.extra["source_domain"] = cfg.source_domain;
  return rep;
}

ExperimentReport cmd_sdg(const ExperimentConfig& cfg) {
  if (cfg.domains.size() < 2) throw invalid_input("sdg: needs at least two domains");
  const FilterBank bank = cfg.build_analysis_bank();
  const std::size_t d = cfg.domains.size();

  std::vector<std::vector<std::vector<double>>> ours_runs(
      cfg.num_seeds, std::vector<std::vector<double>>(d, std::vector<double>(d, 0.0)));
  auto erm_runs = ours_runs;

  // One job per (seed, source domain).
  parallel_runs(cfg.num_seeds * d, cfg.threads, [&](std::size_t job) {
    const std::size_t si = job / d;
    const std::size_t src = job % d;
    const std::uint64_t run_seed = cfg.base_seed + si;

    Dataset train = generate_synth(
        synth_for(cfg, run_seed, "train", cfg.synth.samples_per_class), cfg.domains[src]);
    std::vector<Dataset> evals;
    for (const auto& domain : cfg.domains)
      evals.push_back(generate_synth(synth_for(cfg, run_seed, "eval", cfg.eval_samples_per_class),
                                     domain));

    auto ours = train_variant(train, bank,
                              train_for(cfg, run_seed, "sdg-ours-" + cfg.domains[src]),
                              TrainVariant::full);
    auto erm = train_variant(train, bank, train_for(cfg, run_seed, "sdg-erm-" + cfg.domains[src]),
                             TrainVariant::erm);
    for (std::size_t t = 0; t < d; ++t) {
      ours_runs[si][src][t] = evaluate(ours.model, evals[t]);
      erm_runs[si][src][t] = evaluate(erm.model, evals[t]);
    }
  });

  ExperimentReport rep = base_report(cfg, "sdg");
  rep.row_labels = cfg.domains;
  rep.col_labels = cfg.domains;
  rep.matrices["ours"] = ReportMatrix::from_runs(ours_runs);
  rep.matrices["erm"] = ReportMatrix::from_runs(erm_runs);

  // Mean accuracy over every (source, target != source) cell.
  auto target_mean = [&](const std::vector<std::vector<std::vector<double>>>& runs) {
    double acc = 0.0;
    std::size_t cells = 0;
    for (const auto& run : runs)
      for (std::size_t s = 0; s < d; ++s)
        for (std::size_t t = 0; t < d; ++t)
          if (s != t) {
            acc += run[s][t];
            ++cells;
          }
    return acc / static_cast<double>(cells);
  };
  rep.extra["ours_target_mean"] = target_mean(ours_runs);
  rep.extra["erm_target_mean"] = target_mean(erm_runs);
  return rep;
}

ExperimentReport cmd_ablation(const ExperimentConfig& cfg) {
  const FilterBank bank = cfg.build_analysis_bank();
  const std::vector<TrainVariant> variants = {TrainVariant::pass_only, TrainVariant::stop_only,
                                              TrainVariant::shared_branches,
                                              TrainVariant::no_cons, TrainVariant::full};
  std::vector<std::string> targets;
  for (const auto& domain : cfg.domains)
    if (domain != cfg.source_domain) targets.push_back(domain);
  if (targets.empty()) throw invalid_input("ablation: no target domains");

  std::vector<std::vector<std::vector<double>>> runs(
      cfg.num_seeds,
      std::vector<std::vector<double>>(variants.size(), std::vector<double>(targets.size())));

  parallel_runs(cfg.num_seeds, cfg.threads, [&](std::size_t si) {
    const std::uint64_t run_seed = cfg.base_seed + si;
    Dataset train = generate_synth(
        synth_for(cfg, run_seed, "train", cfg.synth.samples_per_class), cfg.source_domain);
    std::vector<Dataset> evals;
    for (const auto& t : targets)
      evals.push_back(
          generate_synth(synth_for(cfg, run_seed, "eval", cfg.eval_samples_per_class), t));
    for (std::size_t v = 0; v < variants.size(); ++v) {
      auto res = train_variant(
          train, bank,
          train_for(cfg, run_seed, std::string("ablation-") + variant_name(variants[v])),
          variants[v]);
      for (std::size_t t = 0; t < targets.size(); ++t)
        runs[si][v][t] = evaluate(res.model, evals[t]);
    }
  });

  ExperimentReport rep = base_report(cfg, "ablation");
  for (auto v : variants) rep.row_labels.push_back(variant_name(v));
  rep.col_labels = targets;
  rep.matrices["accuracy"] = ReportMatrix::from_runs(runs);
  rep.extra["source_domain"] = cfg.source_domain;
  return rep;
}

ExperimentReport cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis) {
  std::vector<std::string> targets;
  for (const auto& domain : cfg.domains)
    if (domain != cfg.source_domain) targets.push_back(domain);
  if (targets.empty()) throw invalid_input("sweep: no target domains");

  const bool alpha_axis = axis == SweepAxis::alpha;
  const std::size_t nvals = alpha_axis ? cfg.alpha_values.size() : cfg.k_values.size();
  if (nvals == 0) throw invalid_input("sweep: empty axis value list");

  std::vector<std::vector<std::vector<double>>> runs(
      cfg.num_seeds, std::vector<std::vector<double>>(nvals, std::vector<double>(targets.size())));

  parallel_runs(cfg.num_seeds * nvals, cfg.threads, [&](std::size_t job) {
    const std::size_t si = job / nvals;
    const std::size_t vi = job % nvals;
    const std::uint64_t run_seed = cfg.base_seed + si;

    FilterBank bank = alpha_axis ? cfg.build_analysis_bank()
                                 : cfg.build_analysis_bank(cfg.k_values[vi]);
    TrainConfig tc = train_for(cfg, run_seed, "sweep-" + std::to_string(vi));
    if (alpha_axis) tc.alpha = cfg.alpha_values[vi];

    Dataset train = generate_synth(
        synth_for(cfg, run_seed, "train", cfg.synth.samples_per_class), cfg.source_domain);
    auto res = train_variant(train, bank, tc, TrainVariant::full);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      Dataset eval = generate_synth(
          synth_for(cfg, run_seed, "eval", cfg.eval_samples_per_class), targets[t]);
      runs[si][vi][t] = evaluate(res.model, eval);
    }
  });

  ExperimentReport rep = base_report(cfg, "sweep");
  if (alpha_axis) {
    for (double a : cfg.alpha_values) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "alpha=%g", a);
      rep.row_labels.push_back(buf);
    }
  } else {
    for (std::size_t k : cfg.k_values) rep.row_labels.push_back("K=" + std::to_string(k));
  }
  rep.col_labels = targets;
  rep.matrices["accuracy"] = ReportMatrix::from_runs(runs);
  rep.extra["axis"] = alpha_axis ? "alpha" : "k";
  rep.extra["source_domain"] = cfg.source_domain;
  return rep;
}

}  // namespace specband
