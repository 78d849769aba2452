#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "specband/data.hpp"
#include "specband/reports.hpp"
#include "specband/training.hpp"

namespace specband {

// Shared setup for every experiment family: generator config, training
// config, the analysis/training filter bank, the domain roster and the
// multi-seed protocol. JSON round-trips so a config file can overlay any
// field.
struct ExperimentConfig {
  SynthConfig synth;
  TrainConfig train;
  // Bank used for slicing and training. Centers follow the uniform split;
  // widths are stretched by band_width_factor so neighboring slices share
  // energy the way the reference bands do.
  std::vector<BandSpec> analysis_bands;
  double band_width_factor = 1.3;
  std::string source_domain = "flat";
  std::vector<std::string> domains = {"flat", "lowheavy", "midheavy", "highheavy"};
  int eval_samples_per_class = 20;
  std::vector<double> alpha_values = {1.0, 2.0, 5.0, 10.0};
  std::vector<std::size_t> k_values = {2, 4, 6, 8};
  std::size_t num_seeds = 5;
  std::uint64_t base_seed = 0;
  int threads = 1;

  nlohmann::json to_json() const;
  // Overlays `j` onto the defaults.
  static ExperimentConfig from_json(const nlohmann::json& j);

  FilterBank build_analysis_bank() const;
  FilterBank build_analysis_bank(std::size_t k) const;  // for the K sweep
};

ExperimentConfig default_experiment_config();

// Widened uniform split used as the analysis bank.
std::vector<BandSpec> analysis_bands(std::size_t k, double reference_size, double width_factor);

// Fig.-3-style band diagnostic: rows {erm_original, per_band, ours},
// columns F1..FK, all tested on band slices of the source eval split.
ExperimentReport cmd_bandacc(const ExperimentConfig& cfg);

// K x K cross-band matrix: train on band i slices, test on band j slices.
ExperimentReport cmd_xband(const ExperimentConfig& cfg);

// Leave-one-out over domains for ours and the ERM baseline. Matrix cell
// (source, target) holds target-domain accuracy; the diagonal holds the
// in-domain eval accuracy.
ExperimentReport cmd_sdg(const ExperimentConfig& cfg);

// The five ablation rows: pass_only, stop_only, shared_branches, no_cons,
// full; columns are the non-source target domains.
ExperimentReport cmd_ablation(const ExperimentConfig& cfg);

enum class SweepAxis { alpha, k };

// Accuracy-vs-value curves over alpha or K; columns are target domains.
ExperimentReport cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis);

}  // namespace specband
