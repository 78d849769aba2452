#include "specband/data.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "specband/rng.hpp"
#include "specband/spectrum.hpp"

namespace specband {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

int clamp_byte(double v) {
  const int b = static_cast<int>(std::lround(v));
  return std::min(255, std::max(0, b));
}

// Canonical conjugate-pair bins of an H x W grid: every bin strictly below
// its conjugate partner in lexicographic order. Self-conjugate bins (DC and
// Nyquist corners) are excluded; synthesized textures never use them.
struct BinList {
  std::vector<std::pair<std::size_t, std::size_t>> bins;
};

BinList annulus_bins(std::size_t h, std::size_t w, const BandSpec& band, double reference) {
  BinList out;
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      const std::size_t cu = (h - u) % h, cv = (w - v) % w;
      if (std::make_pair(u, v) >= std::make_pair(cu, cv)) continue;  // keep one of each pair
      const double r = radial_distance(u, v, h, w, reference);
      if (std::abs(r - band.center) <= band.bandwidth / 2.0) out.bins.push_back({u, v});
    }
  }
  return out;
}

// Inverse transform of a conjugate-symmetrized single-channel coefficient
// set, normalized to unit RMS. Coefficient phases come from `phase_of`.
template <typename PhaseFn>
ImageTensor render_band_pattern(std::size_t size, const BandSpec& band, double reference,
                                const BinList& bins, PhaseFn&& phase_of) {
  SpectrumTensor spec(1, size, size);
  for (const auto& [u, v] : bins.bins) {
    const double r = radial_distance(u, v, size, size, reference);
    const double mag = gaussian_profile(r, band);  // taper toward band edges
    const double ph = phase_of(u, v);
    const std::complex<double> c = std::polar(mag, ph);
    spec.at(0, u, v) = c;
    spec.at(0, (size - u) % size, (size - v) % size) = std::conj(c);
  }
  ImageTensor img = idft2(spec).image;
  double rms = 0.0;
  for (double x : img.data) rms += x * x;
  rms = std::sqrt(rms / static_cast<double>(img.data.size()));
  if (rms > 0.0)
    for (double& x : img.data) x /= rms;
  return img;
}

double signed_angle(std::size_t u, std::size_t v, std::size_t h, std::size_t w) {
  const double su = u <= h / 2 ? static_cast<double>(u)
                               : static_cast<double>(u) - static_cast<double>(h);
  const double sv = v <= w / 2 ? static_cast<double>(v)
                               : static_cast<double>(v) - static_cast<double>(w);
  return std::atan2(sv, su);
}

void validate(const SynthConfig& cfg, const std::string& domain) {
  if (cfg.num_classes <= 0) throw invalid_input("synth: num_classes must be positive");
  if (cfg.image_size < 2) throw invalid_input("synth: image_size too small");
  if (cfg.bands.empty()) throw invalid_input("synth: no placement bands");
  if (cfg.samples_per_class <= 0) throw invalid_input("synth: samples_per_class must be positive");
  if (cfg.noise_sigma < 0.0) throw invalid_input("synth: noise_sigma must be non-negative");
  if (static_cast<int>(cfg.signal_band_per_class.size()) != cfg.num_classes)
    throw invalid_input("synth: signal_band_per_class must list every class");
  for (int b : cfg.signal_band_per_class)
    if (b < 0 || b >= static_cast<int>(cfg.bands.size()))
      throw invalid_input("synth: class mapped to invalid band index");
  auto it = cfg.domain_profiles.find(domain);
  if (it == cfg.domain_profiles.end())
    throw invalid_input("synth: unknown domain '" + domain + "'");
  if (it->second.size() != cfg.bands.size())
    throw invalid_input("synth: gain profile length does not match band count");
  for (double g : it->second)
    if (!(g >= 0.0)) throw invalid_input("synth: gains must be non-negative");
}

}  // namespace

SynthConfig default_synth_config() {
  SynthConfig cfg;
  // Six uniform centers; placement widths are half the center spacing so a
  // texture's energy cannot bleed into the neighboring band.
  const auto uniform = uniform_bands(6, cfg.reference_size);
  for (const auto& b : uniform) cfg.bands.push_back({b.center, b.bandwidth / 2.0});
  cfg.domain_profiles = {
      {"flat", {1.0, 1.0, 1.0, 1.0, 1.0, 1.0}},
      {"lowheavy", {1.8, 1.4, 1.0, 0.6, 0.35, 0.2}},
      {"midheavy", {0.35, 0.8, 1.6, 1.6, 0.8, 0.35}},
      {"highheavy", {0.2, 0.35, 0.6, 1.0, 1.4, 1.8}},
  };
  cfg.signal_band_per_class = {0, 1, 2, 3, 4, 5, 0};
  return cfg;
}

Dataset generate_synth(const SynthConfig& cfg, const std::string& domain) {
  validate(cfg, domain);
  const std::size_t s = cfg.image_size;
  const std::size_t k = cfg.bands.size();
  const auto& gains = cfg.domain_profiles.at(domain);

  std::vector<BinList> bins(k);
  for (std::size_t b = 0; b < k; ++b)
    bins[b] = annulus_bins(s, s, cfg.bands[b], cfg.reference_size);
  for (std::size_t b = 0; b < k; ++b)
    if (bins[b].bins.empty())
      throw invalid_input("synth: placement band " + std::to_string(b) +
                          " covers no frequency bins at this image size");

  // Class textures are keyed by (seed, class) only, so every domain and
  // split of one run shares them.
  std::vector<std::vector<ImageTensor>> class_pattern(cfg.num_classes);  // per channel
  for (int c = 0; c < cfg.num_classes; ++c) {
    const int band = cfg.signal_band_per_class[c];
    Rng rng(derive_seed(cfg.seed, "class-pattern", static_cast<std::uint64_t>(c)));
    const double harmonic = static_cast<double>(c + 1);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double phase0 = rng.uniform(0.0, 2.0 * kPi);
      class_pattern[c].push_back(render_band_pattern(
          s, cfg.bands[band], cfg.reference_size, bins[band],
          [&](std::size_t u, std::size_t v) {
            return harmonic * signed_angle(u, v, s, s) + phase0;
          }));
    }
  }

  Dataset ds;
  ds.num_classes = cfg.num_classes;
  ds.samples.reserve(static_cast<std::size_t>(cfg.num_classes) * cfg.samples_per_class);

  const std::string stream_tag = "sample:" + domain + ":" + cfg.split;
  for (int idx = 0; idx < cfg.samples_per_class; ++idx) {
    for (int c = 0; c < cfg.num_classes; ++c) {
      const std::uint64_t key =
          static_cast<std::uint64_t>(idx) * static_cast<std::uint64_t>(cfg.num_classes) +
          static_cast<std::uint64_t>(c);
      Rng rng(derive_seed(cfg.seed, stream_tag, key));
      const int sig_band = cfg.signal_band_per_class[c];

      Sample sample;
      sample.label = c;
      sample.domain = domain;
      sample.image = ImageTensor(3, s, s);
      for (double& v : sample.image.data) v = 0.5;

      // Signal texture with per-sample amplitude jitter.
      const double jit = rng.uniform(1.0 - cfg.amplitude_jitter, 1.0 + cfg.amplitude_jitter);
      const double sig_gain = gains[sig_band] * cfg.signal_amplitude * jit;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const auto& pat = class_pattern[c][ch];
        double* dst = sample.image.data.data() + ch * s * s;
        for (std::size_t i = 0; i < s * s; ++i) dst[i] += sig_gain * pat.data[i];
      }

      // Class-independent distractor energy in every other band.
      for (std::size_t b = 0; b < k; ++b) {
        if (static_cast<int>(b) == sig_band) continue;
        const double band_jit = rng.uniform(0.7, 1.3);
        // Phases are drawn up front, in bin order, to keep the stream stable.
        std::vector<double> phases(bins[b].bins.size());
        for (double& p : phases) p = rng.uniform(0.0, 2.0 * kPi);
        std::size_t cursor = 0;
        ImageTensor pat = render_band_pattern(
            s, cfg.bands[b], cfg.reference_size, bins[b],
            [&](std::size_t, std::size_t) { return phases[cursor++]; });
        const double dis_gain = gains[b] * cfg.distractor_amplitude * band_jit;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          double* dst = sample.image.data.data() + ch * s * s;
          for (std::size_t i = 0; i < s * s; ++i) dst[i] += dis_gain * pat.data[i];
        }
      }

      if (cfg.noise_sigma > 0.0)
        for (double& v : sample.image.data) v += cfg.noise_sigma * rng.normal();

      for (double& v : sample.image.data) v = std::clamp(v, 0.0, 1.0);
      ds.samples.push_back(std::move(sample));
    }
  }
  return ds;
}

void write_ppm(const std::filesystem::path& path, const ImageTensor& image) {
  if (image.channels != 3) throw invalid_input("write_ppm: expects a 3-channel image");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("write_ppm: cannot open " + path.string());
  f << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> row(image.width * 3);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        row[x * 3 + c] = static_cast<unsigned char>(clamp_byte(image.at(c, y, x) * 255.0));
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw io_error("write_ppm: write failed for " + path.string());
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& f) {
  std::string tok;
  int ch = f.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = f.get();
    } else if (!std::isspace(ch)) {
      break;
    } else {
      ch = f.get();
    }
  }
  while (ch != EOF && !std::isspace(ch)) {
    tok.push_back(static_cast<char>(ch));
    ch = f.get();
  }
  return tok;
}

}  // namespace

ImageTensor read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("read_ppm: cannot open " + path.string());
  if (next_token(f) != "P6")
    throw io_error("read_ppm: " + path.string() + ": unsupported format (want binary P6)");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(next_token(f));
    h = std::stoul(next_token(f));
    maxval = std::stoul(next_token(f));
  } catch (const std::exception&) {
    throw io_error("read_ppm: " + path.string() + ": malformed header");
  }
  if (maxval != 255)
    throw io_error("read_ppm: " + path.string() + ": only maxval 255 is supported");
  if (w == 0 || h == 0) throw io_error("read_ppm: " + path.string() + ": empty image");

  ImageTensor img(3, h, w);
  std::vector<unsigned char> row(w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!f) throw io_error("read_ppm: " + path.string() + ": truncated pixel data");
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = row[x * 3 + c] / 255.0;
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Response& response) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("write_pgm: cannot open " + path.string());
  f << "P5\n" << response.width << " " << response.height << "\n255\n";
  std::vector<unsigned char> row(response.width);
  for (std::size_t y = 0; y < response.height; ++y) {
    for (std::size_t x = 0; x < response.width; ++x)
      row[x] = static_cast<unsigned char>(clamp_byte(response.at(y, x) * 255.0));
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw io_error("write_pgm: write failed for " + path.string());
}

Dataset load_manifest(const std::filesystem::path& manifest, int num_classes) {
  std::ifstream f(manifest);
  if (!f) throw io_error("load_manifest: cannot open " + manifest.string());
  const auto base = manifest.parent_path();

  Dataset ds;
  ds.num_classes = num_classes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "path,label,domain")
        throw io_error(manifest.string() + ":1: expected header 'path,label,domain'");
      continue;
    }
    std::stringstream ss(line);
    std::string rel, label_str, domain;
    if (!std::getline(ss, rel, ',') || !std::getline(ss, label_str, ',') ||
        !std::getline(ss, domain))
      throw io_error(manifest.string() + ":" + std::to_string(lineno) + ": malformed row");
    int label = 0;
    try {
      label = std::stoi(label_str);
    } catch (const std::exception&) {
      throw io_error(manifest.string() + ":" + std::to_string(lineno) + ": bad label '" +
                     label_str + "'");
    }
    if (label < 0 || label >= num_classes)
      throw io_error(manifest.string() + ":" + std::to_string(lineno) + ": label " +
                     std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
    Sample s;
    s.label = label;
    s.domain = domain;
    s.image = read_ppm(base / rel);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::ofstream manifest(dir / "manifest.csv");
  if (!manifest) throw io_error("save_dataset: cannot open manifest in " + dir.string());
  manifest << "path,label,domain\n";
  char name[64];
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    std::snprintf(name, sizeof(name), "images/%06zu.ppm", i);
    write_ppm(dir / name, dataset.samples[i].image);
    manifest << name << "," << dataset.samples[i].label << "," << dataset.samples[i].domain
             << "\n";
  }
  if (!manifest) throw io_error("save_dataset: manifest write failed");
}

void save_slices(const Dataset& dataset, const FilterBank& bank,
                 const std::filesystem::path& out_dir) {
  if (!dataset.samples.empty() &&
      (dataset.samples.front().image.height != bank.height ||
       dataset.samples.front().image.width != bank.width))
    throw invalid_input("save_slices: bank grid does not match images");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error("save_slices: cannot create " + out_dir.string());

  nlohmann::json sidecar = nlohmann::json::object();
  char name[64];
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    for (std::size_t b = 0; b < bank.k(); ++b) {
      ImageTensor slice = band_slice(dataset.samples[i].image, bank.pass[b]);
      double lo = slice.data[0], hi = slice.data[0];
      for (double v : slice.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      // Degenerate (constant / zero-signal) slices render mid-gray and
      // reconstruct through the offset alone.
      const bool flat = hi - lo < 1e-12;
      const double scale = flat ? 0.0 : (hi - lo) / 255.0;
      ImageTensor mapped(3, slice.height, slice.width);
      for (std::size_t j = 0; j < slice.data.size(); ++j)
        mapped.data[j] = flat ? 0.5 : (slice.data[j] - lo) / (hi - lo);
      std::snprintf(name, sizeof(name), "sample_%04zu_band_%zu.ppm", i, b + 1);
      write_ppm(out_dir / name, mapped);
      sidecar[name] = {{"offset", lo}, {"scale", scale}};
    }
  }
  std::ofstream f(out_dir / "slices.json");
  if (!f) throw io_error("save_slices: cannot write sidecar");
  f << sidecar.dump(2) << "\n";
}

}  // namespace specband
