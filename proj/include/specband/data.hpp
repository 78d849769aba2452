#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "specband/filters.hpp"
#include "specband/image.hpp"

namespace specband {

struct Sample {
  ImageTensor image;  // 3 x S x S, values in [0, 1]
  int label = 0;
  std::string domain;
};

struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;

  std::size_t size() const { return samples.size(); }
};

// Band-coded synthetic data: every class owns one placement band carrying a
// deterministic angular texture; the remaining bands carry per-sample
// distractor energy; domains differ by per-band gain profiles.
struct SynthConfig {
  int num_classes = 7;
  std::size_t image_size = 32;
  double reference_size = 227.0;
  // Placement bands. Narrow by default so nearly all of a texture's energy
  // stays inside its own normalized response.
  std::vector<BandSpec> bands;
  std::map<std::string, std::vector<double>> domain_profiles;
  std::vector<int> signal_band_per_class;  // class -> band index
  double noise_sigma = 0.02;
  double signal_amplitude = 0.08;
  double distractor_amplitude = 0.04;
  double amplitude_jitter = 0.15;  // per-sample signal gain in [1-j, 1+j]
  int samples_per_class = 16;
  std::uint64_t seed = 0;
  // Distinguishes otherwise identical draws, e.g. "train" vs "eval" splits
  // of the same domain.
  std::string split = "train";
};

// Defaults matching the experiment harness: 6 uniform placement bands and
// four gain profiles (flat / lowheavy / midheavy / highheavy).
SynthConfig default_synth_config();

Dataset generate_synth(const SynthConfig& config, const std::string& domain);

// --- image codec (binary PPM/PGM, maxval 255) ---
void write_ppm(const std::filesystem::path& path, const ImageTensor& image);
ImageTensor read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Response& response);

// --- manifest I/O ---
// CSV `path,label,domain` with paths relative to the manifest location.
Dataset load_manifest(const std::filesystem::path& manifest, int num_classes);
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Writes per-sample per-band pass slices, affine-mapped to 8-bit with the
// offset/scale recorded in slices.json so the slices stay recombinable.
void save_slices(const Dataset& dataset, const FilterBank& bank,
                 const std::filesystem::path& out_dir);

}  // namespace specband
