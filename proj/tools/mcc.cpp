// Command-line front end: simulate, label, fuse, featurize-cache, train,
// evaluate, report.

#include <iostream>

#include <CLI11.hpp>

#include "mcc/mcc.hpp"

namespace {

using namespace mcc;
namespace fs = std::filesystem;

struct TrainFlags {
  int epochs = 2000;
  double lr = 1e-4;
  double dropout = 0.3;
  int batch = 16;
  int samples = 256;
  std::string optimizer = "adam";
  bool class_weights = false;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--lr", lr, "Learning rate")->capture_default_str();
    app->add_option("--dropout", dropout, "Dropout probability on the concatenated hidden states")
        ->capture_default_str();
    app->add_option("--batch", batch, "Batch size")->capture_default_str();
    app->add_option("--samples-per-video", samples, "Samples drawn per training video per epoch")
        ->capture_default_str();
    app->add_option("--optimizer", optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}))
        ->capture_default_str();
    app->add_flag("--class-weights", class_weights, "Inverse-frequency class weights in the loss");
  }

  nn::TrainConfig config(std::uint64_t seed) const {
    nn::TrainConfig c;
    c.epochs = epochs;
    c.learning_rate = lr;
    c.dropout_p = dropout;
    c.batch_size = batch;
    c.samples_per_video_per_epoch = samples;
    c.optimizer = optimizer == "sgd" ? nn::OptimizerKind::SGD : nn::OptimizerKind::Adam;
    c.class_weights = class_weights;
    c.seed = seed;
    return c;
  }
};

void log_line(const std::string& s) { std::cerr << s << '\n'; }

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = std::string(detail::trim(item));
    if (t.empty()) continue;
    if (t == "all") {
      out.assign(kAllMethods.begin(), kAllMethods.end());
      continue;
    }
    auto m = parse_method(t);
    if (!m) throw ValidationError("variants", "unknown method \"" + t + "\"");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  if (out.empty()) throw ValidationError("variants", "no methods given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-camera surgical tool-state classification toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Base random seed")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate synthetic two-camera sessions");
  std::string sim_preset, sim_config;
  std::size_t sim_n = 20;
  std::int64_t sim_frames = 0;
  std::string sim_out;
  auto* preset_opt = sim->add_option("--preset", sim_preset, "Scenario preset")->check(CLI::IsMember(preset_names()));
  sim->add_option("--config", sim_config, "Scenario JSON file")->excludes(preset_opt);
  sim->add_option("-n,--sessions", sim_n, "Number of sessions")->capture_default_str();
  sim->add_option("--frames", sim_frames, "Frames per session (overrides the scenario)");
  sim->add_option("--out", sim_out, "Output directory")->required();

  // label
  auto* lab = app.add_subcommand("label", "Write per-frame ground-truth labels");
  std::string lab_manifest, lab_out;
  lab->add_option("--manifest", lab_manifest, "Session manifest")->required();
  lab->add_option("--out", lab_out, "Output directory")->required();

  // fuse
  auto* fus = app.add_subcommand("fuse", "Naive per-frame fusion");
  std::string fus_manifest, fus_out, fus_cams = "both";
  fus->add_option("--manifest", fus_manifest, "Session manifest")->required();
  fus->add_option("--cameras", fus_cams, "top, close or both")
      ->check(CLI::IsMember({"top", "close", "both"}))
      ->capture_default_str();
  fus->add_option("--out", fus_out, "Output directory")->required();

  // featurize-cache
  auto* fea = app.add_subcommand("featurize-cache", "Precompute per-frame feature vectors");
  std::string fea_manifest, fea_out;
  fea->add_option("--manifest", fea_manifest, "Session manifest")->required();
  fea->add_option("--out", fea_out, "Output directory")->required();

  // train
  auto* trn = app.add_subcommand("train", "Train one recurrent variant on all sessions of a manifest");
  std::string trn_manifest, trn_out, trn_variant = "mcc";
  TrainFlags trn_flags;
  trn->add_option("--manifest", trn_manifest, "Session manifest")->required();
  trn->add_option("--variant", trn_variant, "mcc, high or low")
      ->check(CLI::IsMember({"mcc", "high", "low", "high-only", "low-only"}))
      ->capture_default_str();
  trn->add_option("--out", trn_out, "Output directory")->required();
  trn_flags.add_to(trn);

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "Cross-validated comparison of naive and recurrent methods");
  std::string evl_manifest, evl_out, evl_methods = "all", evl_compare;
  int evl_folds = 4;
  bool evl_no_train = false;
  TrainFlags evl_flags;
  evl->add_option("--manifest", evl_manifest, "Session manifest")->required();
  evl->add_option("--variants", evl_methods, "Comma-separated methods: top-naive, close-naive, both-naive, high, low, mcc, all")
      ->capture_default_str();
  evl->add_option("--folds", evl_folds, "Number of folds")->capture_default_str();
  evl->add_flag("--no-train", evl_no_train, "Disallow training; only naive methods may be requested");
  evl->add_option("--compare", evl_compare, "Show published values alongside (paper)")
      ->check(CLI::IsMember({"paper"}));
  evl->add_option("--out", evl_out, "Output directory")->required();
  evl_flags.add_to(evl);

  // report
  auto* rep = app.add_subcommand("report", "Render tables from a results file");
  std::string rep_results, rep_out, rep_compare;
  rep->add_option("--results", rep_results, "results.json from evaluate")->required();
  rep->add_option("--compare", rep_compare, "Show published values alongside (paper)")
      ->check(CLI::IsMember({"paper"}));
  rep->add_option("--out", rep_out, "Also write the tables to this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pipeline::kExitUsage;
  }

  try {
    if (*sim) {
      pipeline::SimulateArgs a;
      if (!sim_preset.empty()) a.preset = sim_preset;
      if (!sim_config.empty()) a.config_path = sim_config;
      a.sessions = sim_n;
      if (sim_frames > 0) a.n_frames = sim_frames;
      a.seed = seed;
      a.out_dir = sim_out;
      auto m = pipeline::simulate(a);
      std::cout << "wrote " << m.sessions.size() << " sessions to " << sim_out << '\n';
    } else if (*lab) {
      pipeline::label(lab_manifest, lab_out);
    } else if (*fus) {
      pipeline::fuse(fus_manifest, *parse_camera_set(fus_cams), fus_out);
    } else if (*fea) {
      pipeline::featurize_cache(fea_manifest, fea_out);
    } else if (*trn) {
      auto cfg = trn_flags.config(seed);
      cfg.variant = *nn::parse_variant(trn_variant);
      auto r = pipeline::train(trn_manifest, cfg, trn_out, log_line);
      std::cout << "final loss " << (r.loss_history.empty() ? 0.0 : r.loss_history.back()) << '\n';
    } else if (*evl) {
      ExperimentConfig cfg;
      cfg.folds = evl_folds;
      cfg.seed = seed;
      cfg.train = evl_flags.config(seed);
      cfg.train_enabled = !evl_no_train;
      cfg.workers = pipeline::worker_count_from_env();
      cfg.log = log_line;
      auto r = pipeline::evaluate(evl_manifest, parse_methods(evl_methods), cfg, evl_out, !evl_compare.empty());
      std::cout << render_aggregate_text(r, !evl_compare.empty());
    } else if (*rep) {
      std::optional<fs::path> out;
      if (!rep_out.empty()) out = rep_out;
      std::cout << pipeline::report(rep_results, !rep_compare.empty(), out);
    }
  } catch (const nn::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return pipeline::kExitRuntime;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return pipeline::kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return pipeline::kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return pipeline::kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return pipeline::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pipeline::kExitRuntime;
  }
  return pipeline::kExitOk;
}
