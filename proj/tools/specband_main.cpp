#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "specband/experiments.hpp"
#include "specband/rng.hpp"
#include "specband/spectrum.hpp"

namespace fs = std::filesystem;
using specband::ExperimentConfig;
using specband::ExperimentReport;

namespace {

struct GlobalFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t seeds = 0;  // 0 = keep config value
  std::string out = "out";
  int threads = 0;  // 0 = keep config value
  bool csv = false;
};

ExperimentConfig load_config(const GlobalFlags& g) {
  ExperimentConfig cfg = specband::default_experiment_config();
  if (!g.config_path.empty()) {
    std::ifstream f(g.config_path);
    if (!f) throw specband::io_error("cannot open config " + g.config_path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw specband::invalid_input("config parse error: " + std::string(e.what()));
    }
    cfg = ExperimentConfig::from_json(j);
  }
  if (g.seed_set) cfg.base_seed = g.seed;
  if (g.seeds > 0) cfg.num_seeds = g.seeds;
  if (g.threads > 0) cfg.threads = g.threads;
  return cfg;
}

void add_global_flags(CLI::App* app, GlobalFlags& g) {
  app->add_option("--config", g.config_path, "JSON config file overlaying the defaults");
  app->add_option("--seed", g.seed, "base seed")->each([&](const std::string&) {
    g.seed_set = true;
  });
  app->add_option("--seeds", g.seeds, "number of seeds for multi-seed protocols");
  app->add_option("--out", g.out, "output directory");
  app->add_option("--threads", g.threads, "worker threads for independent runs");
  app->add_flag("--csv", g.csv, "also write CSV mirrors of report matrices");
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream f(path);
  if (!f) throw specband::io_error("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

specband::Dataset dataset_from_flags(const ExperimentConfig& cfg, const std::string& manifest,
                                     const std::string& domain, const std::string& split,
                                     int samples_per_class) {
  if (!manifest.empty()) return specband::load_manifest(manifest, cfg.synth.num_classes);
  specband::SynthConfig s = cfg.synth;
  s.seed = specband::derive_seed(cfg.base_seed, "data");
  s.split = split;
  if (samples_per_class > 0) s.samples_per_class = samples_per_class;
  return specband::generate_synth(s, domain);
}

int run_bank(const GlobalFlags& g, const std::string& bands_kind, std::size_t height,
             std::size_t width) {
  ExperimentConfig cfg = load_config(g);
  std::vector<specband::BandSpec> specs;
  if (bands_kind == "reference")
    specs = specband::default_bands();
  else if (bands_kind == "analysis")
    specs = cfg.analysis_bands;
  else
    throw specband::invalid_input("bank: --bands must be 'reference' or 'analysis'");
  auto bank = specband::build_bank(specs, height, width, cfg.synth.reference_size);

  fs::create_directories(g.out);
  nlohmann::json summary;
  summary["k"] = bank.k();
  summary["height"] = height;
  summary["width"] = width;
  summary["reference_size"] = bank.reference_size;
  nlohmann::json bands = nlohmann::json::array();
  for (std::size_t b = 0; b < bank.k(); ++b) {
    const std::string name = "band_" + std::to_string(b + 1) + ".pgm";
    specband::write_pgm(fs::path(g.out) / name, bank.pass[b]);
    double mass = 0.0;
    for (double v : bank.pass[b].data) mass += v;
    mass /= static_cast<double>(height * width);
    bands.push_back({{"file", name},
                     {"center", bank.specs[b].center},
                     {"bandwidth", bank.specs[b].bandwidth},
                     {"energy_mass", mass}});
  }
  summary["bands"] = bands;
  write_json_file(fs::path(g.out) / "bank.json", summary);
  std::cout << "wrote " << bank.k() << " responses to " << g.out << "\n";
  return 0;
}

int run_synth(const GlobalFlags& g, const std::string& domain, const std::string& split,
              int samples_per_class) {
  ExperimentConfig cfg = load_config(g);
  auto ds = dataset_from_flags(cfg, "", domain, split, samples_per_class);
  specband::save_dataset(ds, g.out);
  std::cout << "wrote " << ds.size() << " samples to " << g.out << "\n";
  return 0;
}

int run_slice(const GlobalFlags& g, const std::string& manifest, const std::string& domain,
              int samples_per_class) {
  ExperimentConfig cfg = load_config(g);
  auto ds = dataset_from_flags(cfg, manifest, domain, "train", samples_per_class);
  if (ds.samples.empty()) throw specband::invalid_input("slice: empty dataset");
  auto bank = specband::build_bank(cfg.analysis_bands, ds.samples[0].image.height,
                                   ds.samples[0].image.width, cfg.synth.reference_size);
  specband::save_slices(ds, bank, g.out);
  std::cout << "wrote " << ds.size() * bank.k() << " slices to " << g.out << "\n";
  return 0;
}

int run_train(const GlobalFlags& g, const std::string& manifest, const std::string& domain,
              const std::string& variant_name) {
  ExperimentConfig cfg = load_config(g);
  specband::TrainVariant variant;
  if (variant_name == "full")
    variant = specband::TrainVariant::full;
  else if (variant_name == "no_cons")
    variant = specband::TrainVariant::no_cons;
  else if (variant_name == "shared_branches")
    variant = specband::TrainVariant::shared_branches;
  else if (variant_name == "pass_only")
    variant = specband::TrainVariant::pass_only;
  else if (variant_name == "stop_only")
    variant = specband::TrainVariant::stop_only;
  else if (variant_name == "erm")
    variant = specband::TrainVariant::erm;
  else
    throw specband::invalid_input("train: unknown variant '" + variant_name + "'");

  auto train = dataset_from_flags(cfg, manifest, domain, "train", -1);
  auto eval = manifest.empty() ? dataset_from_flags(cfg, "", domain, "eval",
                                                    cfg.eval_samples_per_class)
                               : specband::Dataset{};
  auto bank = specband::build_bank(cfg.analysis_bands, train.samples[0].image.height,
                                   train.samples[0].image.width, cfg.synth.reference_size);
  specband::TrainConfig tc = cfg.train;
  tc.seed = specband::derive_seed(cfg.base_seed, "train");
  std::map<std::string, const specband::Dataset*> evals;
  if (!eval.samples.empty()) evals["source_eval"] = &eval;

  auto res = specband::train_variant(train, bank, tc, variant, evals);
  fs::create_directories(g.out);
  res.model.save(fs::path(g.out) / "checkpoint.sbnd", static_cast<std::uint32_t>(bank.k()));
  write_json_file(fs::path(g.out) / "runrecord.json", res.record.to_json());
  std::cout << "final train accuracy " << res.record.epochs.back().train_acc << ", checkpoint in "
            << g.out << "\n";
  return 0;
}

int run_eval(const GlobalFlags& g, const std::string& checkpoint, const std::string& manifest,
             const std::string& domain) {
  ExperimentConfig cfg = load_config(g);
  auto loaded = specband::Model::load(checkpoint);
  auto ds = dataset_from_flags(cfg, manifest, domain, "eval", cfg.eval_samples_per_class);
  const double acc = specband::evaluate(loaded.model, ds);
  nlohmann::json j = {{"accuracy", acc}, {"samples", ds.size()}, {"domain", domain}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_experiment(const GlobalFlags& g, const std::string& kind, const std::string& axis) {
  ExperimentConfig cfg = load_config(g);
  ExperimentReport rep;
  if (kind == "bandacc")
    rep = specband::cmd_bandacc(cfg);
  else if (kind == "xband")
    rep = specband::cmd_xband(cfg);
  else if (kind == "sdg")
    rep = specband::cmd_sdg(cfg);
  else if (kind == "ablation")
    rep = specband::cmd_ablation(cfg);
  else if (kind == "sweep")
    rep = specband::cmd_sweep(cfg, axis == "k" ? specband::SweepAxis::k
                                               : specband::SweepAxis::alpha);
  else
    throw specband::invalid_input("unknown experiment " + kind);
  rep.write(g.out, g.csv);
  std::cout << "wrote " << (fs::path(g.out) / (rep.kind + ".json")).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-decomposition single-domain-generalization workbench"};
  app.require_subcommand(1);

  GlobalFlags g;

  auto* bank = app.add_subcommand("bank", "write filter bank responses as PGM plus a summary");
  std::string bank_bands = "reference";
  std::size_t bank_h = 227, bank_w = 227;
  add_global_flags(bank, g);
  bank->add_option("--bands", bank_bands, "'reference' (227-scale six bands) or 'analysis'");
  bank->add_option("--height", bank_h);
  bank->add_option("--width", bank_w);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset to disk");
  std::string domain = "flat", split = "train", manifest;
  int samples_per_class = -1;
  add_global_flags(synth, g);
  synth->add_option("--domain", domain);
  synth->add_option("--split", split);
  synth->add_option("--samples-per-class", samples_per_class);

  auto* slice = app.add_subcommand("slice", "write per-band slices of a dataset");
  add_global_flags(slice, g);
  slice->add_option("--manifest", manifest, "dataset manifest (otherwise synthetic)");
  slice->add_option("--domain", domain);
  slice->add_option("--samples-per-class", samples_per_class);

  auto* train = app.add_subcommand("train", "train one model and save a checkpoint");
  std::string variant = "full";
  add_global_flags(train, g);
  train->add_option("--manifest", manifest);
  train->add_option("--domain", domain);
  train->add_option("--variant", variant,
                    "full|no_cons|shared_branches|pass_only|stop_only|erm");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string checkpoint;
  add_global_flags(eval, g);
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--manifest", manifest);
  eval->add_option("--domain", domain);

  std::string sweep_axis = "alpha";
  for (const char* kind : {"bandacc", "xband", "sdg", "ablation", "sweep"}) {
    auto* cmd = app.add_subcommand(kind, std::string(kind) + " experiment report");
    add_global_flags(cmd, g);
    if (std::string(kind) == "sweep") cmd->add_option("--axis", sweep_axis, "alpha|k");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (bank->parsed()) return run_bank(g, bank_bands, bank_h, bank_w);
    if (synth->parsed()) return run_synth(g, domain, split, samples_per_class);
    if (slice->parsed()) return run_slice(g, manifest, domain, samples_per_class);
    if (train->parsed()) return run_train(g, manifest, domain, variant);
    if (eval->parsed()) return run_eval(g, checkpoint, manifest, domain);
    for (const char* kind : {"bandacc", "xband", "sdg", "ablation", "sweep"})
      if (app.get_subcommand(kind)->parsed()) return run_experiment(g, kind, sweep_axis);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const specband::io_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
