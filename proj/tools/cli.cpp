#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <thread>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "biaslens/error.hpp"
#include "biaslens/io.hpp"
#include "biaslens/metrics.hpp"
#include "biaslens/sim/sweep.hpp"
#include "biaslens/sim/train.hpp"
#include "biaslens/synth.hpp"
#include "biaslens/theory.hpp"

namespace biaslens::cli {

namespace {

using nlohmann::json;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

struct LayoutFlags {
  double noise_target = FeatureLayout{}.noise_target;
  double noise_spurious = FeatureLayout{}.noise_spurious;

  void add(CLI::App* cmd) {
    cmd->add_option("--noise-target", noise_target, "Target block noise sigma")->check(CLI::NonNegativeNumber);
    cmd->add_option("--noise-spurious", noise_spurious, "Spurious block noise sigma")
        ->check(CLI::NonNegativeNumber);
  }
  FeatureLayout layout(std::size_t n_target, std::size_t n_spurious) const {
    FeatureLayout l;
    l.target_dim = n_target;
    l.spurious_dim = n_spurious;
    l.noise_target = noise_target;
    l.noise_spurious = noise_spurious;
    return l;
  }
};

struct TrainFlags {
  std::string method;
  std::string biased_loss = "ce";
  double q = 0.7;
  std::size_t epochs = sim::TrainConfig{}.epochs;
  std::size_t batch_size = sim::TrainConfig{}.batch_size;
  double learning_rate = sim::TrainConfig{}.learning_rate;
  std::string model = "linear";
  std::size_t hidden_dim = sim::TrainConfig{}.hidden_dim;
  std::size_t test_size = sim::TrainConfig{}.test_size;
  std::size_t n_train = 10000;

  void add(CLI::App* cmd) {
    cmd->add_option("--method", method, "erm | dbam | dbam-did")->required();
    cmd->add_option("--biased-loss", biased_loss, "Loss of the biased model")
        ->check(CLI::IsMember({"ce", "gce"}));
    cmd->add_option("--q", q, "GCE exponent");
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch-size", batch_size);
    cmd->add_option("--lr", learning_rate, "SGD learning rate");
    cmd->add_option("--model", model)->check(CLI::IsMember({"linear", "mlp"}));
    cmd->add_option("--hidden", hidden_dim, "MLP hidden width");
    cmd->add_option("--test-size", test_size, "Balanced test split size");
    cmd->add_option("--n-train", n_train, "Training samples");
  }

  sim::TrainConfig config(std::uint64_t seed) const {
    sim::TrainConfig cfg;
    const auto m = sim::parse_method(method);
    if (!m) throw Error(ErrorCode::InvalidParams, "unknown method '" + method + "'");
    cfg.method = *m;
    cfg.biased_loss.kind =
        biased_loss == "gce" ? sim::LossKind::GeneralizedCrossEntropy : sim::LossKind::CrossEntropy;
    cfg.biased_loss.q = q;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.model = model == "mlp" ? sim::ModelKind::Mlp : sim::ModelKind::Linear;
    cfg.hidden_dim = hidden_dim;
    cfg.test_size = test_size;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }

  json echo() const {
    return {{"method", method},     {"biased_loss", biased_loss}, {"q", q},
            {"epochs", epochs},     {"batch_size", batch_size},   {"learning_rate", learning_rate},
            {"model", model},       {"hidden_dim", hidden_dim},   {"test_size", test_size},
            {"n_train", n_train},   {"destruction", "block-permute"}};
  }
};

json layout_echo(const FeatureLayout& l) {
  return {{"target_dim", l.target_dim},
          {"spurious_dim", l.spurious_dim},
          {"noise_target", l.noise_target},
          {"noise_spurious", l.noise_spurious}};
}

void emit(const Globals& g, std::ostream& out, const std::string& text) {
  if (g.out.empty()) {
    out << text;
  } else {
    io::write_text(g.out, text);
  }
}

void note(const Globals& g, std::ostream& err, const std::string& message) {
  if (!g.quiet) err << message << '\n';
}

std::size_t thread_cap() {
  if (const char* env = std::getenv("BIASLENS_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidParams, std::string("BIASLENS_THREADS must be a positive integer, got '") +
                                              env + "'");
  }
  return 0;
}

std::filesystem::path heatmap_sidecar(const std::filesystem::path& dataset) {
  std::filesystem::path p = dataset;
  p.replace_extension();
  p += ".heatmap.csv";
  return p;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bias magnitude and prevalence toolkit", "biaslens"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Random seed");
  app.add_option("--out", g.out, "Output file (stdout when omitted)");
  app.add_flag("--quiet", g.quiet, "Suppress progress messages");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Bias report for two columns of a labeled CSV");
  io::TabularSource source;
  double theta = kDefaultThreshold;
  char delimiter = ',';
  bool no_header = false;
  analyze->add_option("--input", source.path, "Labeled CSV file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--target", source.target_column, "Target column")->required();
  analyze->add_option("--spurious", source.spurious_column, "Spurious column")->required();
  analyze->add_option("--theta", theta, "Magnitude threshold");
  analyze->add_option("--delimiter", delimiter);
  analyze->add_flag("--no-header", no_header, "Columns are addressed by zero-based index");

  // synth
  auto* synth = app.add_subcommand("synth", "Synthesize a biased dataset and its exact joint");
  std::string preset_name_flag;
  std::string config_path;
  std::size_t n_samples = 0;
  LayoutFlags synth_layout;
  auto* preset_opt = synth->add_option("--preset", preset_name_flag, "LMLP, LMLP', HMLP, HMHP, Unbiased");
  auto* config_opt = synth->add_option("--config", config_path, "JSON synthesis recipe")->check(CLI::ExistingFile);
  preset_opt->excludes(config_opt);
  synth->add_option("--n", n_samples, "Number of samples")->required();
  synth_layout.add(synth);

  // verify
  auto* verify = app.add_subcommand("verify", "Grid verification of the binary propositions");
  int prop = 0;
  double verify_theta = 0.5;
  double phi = 0.5;
  std::optional<std::size_t> grid;
  verify->add_option("--prop", prop, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
  verify->add_option("--theta", verify_theta, "Threshold (proposition 1)");
  verify->add_option("--phi", phi, "Normalized magnitude (proposition 2)");
  verify->add_option("--grid", grid, "Points per axis");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Train on a preset and report weights and accuracy");
  std::string sim_preset;
  TrainFlags sim_flags;
  LayoutFlags sim_layout;
  simulate->add_option("--preset", sim_preset)->required();
  sim_flags.add(simulate);
  sim_layout.add(simulate);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Runs over a magnitude or prevalence axis");
  std::string axis;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  TrainFlags sweep_flags;
  LayoutFlags sweep_layout;
  sim::SweepBase base;
  sweep_cmd->add_option("--axis", axis, "magnitude | prevalence")
      ->required()
      ->check(CLI::IsMember({"magnitude", "prevalence"}));
  sweep_cmd->add_option("--values", values, "Comma-separated axis values")->required()->delimiter(',');
  sweep_cmd->add_option("--seeds", seeds, "Comma-separated seeds")->required()->delimiter(',');
  sweep_cmd->add_option("--corr", base.corr, "Correlation on the prevalence axis");
  sweep_cmd->add_option("--n-biased", base.n_biased, "|B| on the magnitude axis");
  sweep_cmd->add_option("--classes", base.n_classes);
  sweep_flags.add(sweep_cmd);
  sweep_layout.add(sweep_cmd);

  // report
  auto* report = app.add_subcommand("report", "Convert JSON results to plottable CSV matrices");
  std::string from;
  std::string format;
  report->add_option("--from", from, "simulate, sweep or analyze JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--format", format, "weights-csv | heatmap-csv")
      ->required()
      ->check(CLI::IsMember({"weights-csv", "heatmap-csv"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "biaslens: " << e.what() << '\n';
    return kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;
  const std::uint64_t seed = g.seed.value_or(0);

  try {
    if (analyze->parsed()) {
      source.delimiter = delimiter;
      source.has_header = !no_header;
      const JointDist joint = io::load_joint(source);
      emit(g, out, io::report_to_json(biaslens::analyze(joint, theta)).dump(2) + "\n");
      return kExitOk;
    }

    if (synth->parsed()) {
      if (g.out.empty()) {
        err << "biaslens: synth requires --out\n";
        return kExitUsage;
      }
      if (preset_opt->count() == 0 && config_opt->count() == 0) {
        err << "biaslens: synth requires --preset or --config\n";
        return kExitUsage;
      }
      io::SynthSpec spec;
      if (config_opt->count() > 0) {
        spec = io::synth_spec_from_json(json::parse(io::read_text(config_path)));
        if (g.seed) spec.seed = *g.seed;
      } else {
        spec.config = preset(preset_name_flag);
        spec.layout = synth_layout.layout(spec.config.n_target, spec.config.n_spurious);
        spec.seed = seed;
      }
      const LabeledDataset ds = synthesize(spec.config, n_samples, spec.layout, spec.seed);
      io::write_dataset(ds, g.out);
      const auto sidecar = heatmap_sidecar(g.out);
      io::export_heatmap(build_joint(spec.config), sidecar);
      note(g, err, "wrote " + g.out + " and " + sidecar.string());
      return kExitOk;
    }

    if (verify->parsed()) {
      const theory::PropositionReport r =
          prop == 1 ? theory::verify_prop1(verify_theta, grid.value_or(200))
                    : theory::verify_prop2(phi, grid.value_or(1000));
      emit(g, out, io::proposition_to_json(r).dump(2) + "\n");
      if (!r.passed) note(g, err, "proposition " + std::to_string(prop) + " falsified on the grid");
      return r.passed ? kExitOk : kExitFalsified;
    }

    if (simulate->parsed()) {
      const BiasConfig config = preset(sim_preset);
      const FeatureLayout layout = sim_layout.layout(config.n_target, config.n_spurious);
      const sim::TrainConfig cfg = sim_flags.config(seed);
      const sim::TrainResult result = sim::simulate(config, sim_flags.n_train, layout, cfg);
      json echo = sim_flags.echo();
      echo["preset"] = std::string(preset_name(parse_preset(sim_preset)));
      echo["seed"] = seed;
      echo["layout"] = layout_echo(layout);
      emit(g, out, io::run_metrics_to_json(result.metrics, echo).dump(2) + "\n");
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      const auto parsed_axis = sim::parse_axis(axis);
      base.n_train = sweep_flags.n_train;
      base.layout = sweep_layout.layout(base.n_classes, base.n_classes);
      base.train = sweep_flags.config(seed);
      const std::size_t threads = thread_cap();
      note(g, err, "running " + std::to_string(values.size() * seeds.size()) + " simulations");
      const auto rows = sim::sweep(*parsed_axis, values, base, seeds, threads);
      json echo = sweep_flags.echo();
      echo["classes"] = base.n_classes;
      echo["corr"] = base.corr;
      echo["n_biased"] = base.n_biased;
      echo["layout"] = layout_echo(base.layout);
      emit(g, out, io::sweep_to_json(*parsed_axis, base.train.method, rows, echo).dump(2) + "\n");
      return kExitOk;
    }

    if (report->parsed()) {
      const json doc = json::parse(io::read_text(from));
      emit(g, out, format == "weights-csv" ? io::weights_csv(doc) : io::heatmap_csv(doc));
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "biaslens: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const json::exception& e) {
    err << "biaslens: invalid JSON: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "biaslens: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace biaslens::cli
