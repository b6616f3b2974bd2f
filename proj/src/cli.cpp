#include "hpgan/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hpgan/config.hpp"
#include "hpgan/data.hpp"
#include "hpgan/detection.hpp"
#include "hpgan/error.hpp"
#include "hpgan/evaluation.hpp"
#include "hpgan/training.hpp"

namespace hpgan {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(source + ": not an unsigned integer seed: '" + text + "'");
  }
}

// --seed, else HPGAN_SEED, else `fallback`.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HPGAN_SEED"); env && *env) return parse_seed(env, "HPGAN_SEED");
  return fallback;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

template <class F>
std::string render(F&& f) {
  std::ostringstream s;
  f(s);
  return s.str();
}

struct Manifest {
  std::string subcommand;
  std::vector<std::string> argv;
  nlohmann::json config = nullptr;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  std::string started = utc_now();

  nlohmann::json finish() const {
    return {{"subcommand", subcommand},
            {"argv", argv},
            {"config", config},
            {"inputs", inputs},
            {"outputs", outputs},
            {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)},
            {"version", kVersion},
            {"started_at", started},
            {"finished_at", utc_now()}};
  }
};

Dataset load_data(const std::string& path) {
  if (!fs::exists(path)) throw DataError("data file not found: " + path);
  Dataset d = load_csv(path);
  d.validate();
  return d;
}

// Profile, then config file, then explicit flags.
struct ConfigFlags {
  std::string profile = "desk";
  std::string config_path;
  std::optional<std::size_t> epochs;
  std::optional<double> multiplier;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f, bool with_profile) {
  cmd->add_option("--config", f.config_path, "JSON file with ModelConfig fields");
  if (with_profile) {
    cmd->add_option("--profile", f.profile, "Base profile")->check(CLI::IsMember({"desk", "full"}));
  }
  cmd->add_option("--epochs", f.epochs, "Override epochs");
  cmd->add_option("--batch-size", f.batch_size, "Override batch size");
  cmd->add_option("--learning-rate", f.learning_rate, "Override learning rate");
}

ModelConfig resolve_config(const ConfigFlags& f) {
  ModelConfig c = profile_config(parse_profile(f.profile));
  if (!f.config_path.empty()) c = config_from_json(read_json_file(f.config_path), c);
  if (f.epochs) c.epochs = *f.epochs;
  if (f.batch_size) c.batch_size = *f.batch_size;
  if (f.learning_rate) c.learning_rate = *f.learning_rate;
  c.validate();
  return c;
}

// --- subcommands -------------------------------------------------------------

struct SynthArgs {
  std::size_t normal = 200;
  std::size_t abnormal = 60;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int run_synth(const SynthArgs& a, Manifest& m, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  m.seed = seed;
  const Dataset d = synth_generate(a.normal, a.abnormal, seed);
  save_csv(d, a.out);
  m.outputs["data"] = a.out;
  write_json(a.out + ".manifest.json", m.finish());
  out << "wrote " << d.samples.size() << " samples (" << a.normal << " normal, " << a.abnormal << " abnormal) to "
      << a.out << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string data;
  std::string out;
  ConfigFlags cfg;
  std::optional<std::uint64_t> seed;
  std::optional<double> multiplier;
};

int run_train(const TrainArgs& a, Manifest& m, std::ostream& out) {
  ModelConfig config = resolve_config(a.cfg);
  if (a.seed) {
    config.rng_seed = *a.seed;
  } else if (a.cfg.config_path.empty() || !read_json_file(a.cfg.config_path).contains("rng_seed")) {
    config.rng_seed = resolve_seed(std::nullopt, config.rng_seed);
  }
  if (a.multiplier) config.threshold_multiplier = *a.multiplier;
  config.validate();

  const Dataset raw = load_data(a.data);
  std::vector<Sample> normals;
  for (const Sample& s : raw.samples) {
    if (!s.abnormal()) normals.push_back(s);
  }
  if (normals.empty()) throw DataError("no normal samples in " + a.data);
  const NormStats stats = fit_norm(normals);
  for (Sample& s : normals) s = normalize(s, stats);

  const TrainRun run = train(normals, config, [&](std::size_t epoch, const LossBreakdown& b) {
    if (epoch % 25 == 0 || epoch == config.epochs) {
      out << "epoch " << epoch << "/" << config.epochs << " total " << b.total << '\n';
    }
  });
  const ThresholdModel threshold = fit_threshold(run.models, normals, config.threshold_multiplier);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_checkpoint(run, dir / "model.ckpt", stats);
  save_trace_csv(run.trace, dir / "trace.csv");
  write_json(dir / "threshold.json", to_json(threshold));

  m.seed = config.rng_seed;
  m.config = to_json(run.models.config);
  m.inputs["data"] = a.data;
  if (!a.cfg.config_path.empty()) m.inputs["config"] = a.cfg.config_path;
  m.outputs = {{"checkpoint", (dir / "model.ckpt").string()},
               {"trace", (dir / "trace.csv").string()},
               {"threshold", (dir / "threshold.json").string()}};
  nlohmann::json manifest = m.finish();
  manifest["train_samples"] = normals.size();
  manifest["wall_time_s"] = run.wall_time;
  write_json(dir / "manifest.json", manifest);

  out << "trained " << architecture_name(config) << " on " << normals.size() << " normal samples in "
      << std::fixed << std::setprecision(1) << run.wall_time << " s; theta = " << std::setprecision(6)
      << threshold.theta << '\n';
  return kExitOk;
}

struct DetectArgs {
  std::string model;
  std::string data;
  std::string out;
  std::optional<double> multiplier;
};

int run_detect(const DetectArgs& a, Manifest& m, std::ostream& out) {
  const fs::path dir(a.model);
  Checkpoint ckpt = load_checkpoint(dir / "model.ckpt");
  if (!ckpt.normalization) throw DataError("checkpoint has no normalisation statistics: " + a.model);
  std::ifstream tin(dir / "threshold.json");
  if (!tin) throw DataError("missing threshold.json in " + a.model);
  ThresholdModel threshold;
  try {
    threshold = threshold_from_json(nlohmann::json::parse(tin));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed threshold.json: ") + e.what());
  }
  if (a.multiplier) threshold = threshold.with_multiplier(*a.multiplier);

  const Dataset raw = load_data(a.data);
  std::vector<Sample> samples;
  samples.reserve(raw.samples.size());
  for (const Sample& s : raw.samples) samples.push_back(normalize(s, *ckpt.normalization));
  const auto verdicts = detect_batch(ckpt.models, threshold, samples);

  const fs::path out_path(a.out);
  if (out_path.extension() == ".json") {
    write_json(out_path, to_json(std::span<const Verdict>(verdicts)));
  } else {
    write_text(out_path, render([&](std::ostream& o) { write_verdicts_csv(verdicts, o); }));
  }
  m.config = to_json(ckpt.models.config);
  m.inputs = {{"model", a.model}, {"data", a.data}};
  m.outputs = {{"verdicts", a.out}};
  nlohmann::json manifest = m.finish();
  manifest["threshold"] = to_json(threshold);
  write_json(a.out + ".manifest.json", manifest);

  std::size_t flagged = 0;
  for (const Verdict& v : verdicts) flagged += v.is_abnormal ? 1 : 0;
  out << flagged << " of " << verdicts.size() << " samples flagged abnormal (theta " << threshold.theta << ")\n";
  return kExitOk;
}

struct EvalArgs {
  std::string data;
  ConfigFlags cfg;
  std::size_t repeats = 30;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
};

int run_eval(const EvalArgs& a, Manifest& m, std::ostream& out) {
  const ModelConfig config = resolve_config(a.cfg);
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  const Dataset raw = load_data(a.data);
  const MonteCarloSummary s = monte_carlo(raw, config, a.repeats, seed, a.jobs);
  print_monte_carlo_table(s, architecture_name(config.resolved()), out);

  m.seed = seed;
  m.config = to_json(config);
  m.inputs["data"] = a.data;
  if (!a.cfg.config_path.empty()) m.inputs["config"] = a.cfg.config_path;
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_text(dir / "monte_carlo.csv", render([&](std::ostream& o) { write_monte_carlo_csv(s, o); }));
    write_json(dir / "monte_carlo.json", to_json(s));
    write_text(dir / "monte_carlo.txt",
               render([&](std::ostream& o) { print_monte_carlo_table(s, architecture_name(config.resolved()), o); }));
    m.outputs = {{"csv", (dir / "monte_carlo.csv").string()},
                 {"json", (dir / "monte_carlo.json").string()},
                 {"table", (dir / "monte_carlo.txt").string()}};
    write_json(dir / "manifest.json", m.finish());
  }
  return kExitOk;
}

struct GridArgs {
  std::string data;
  ConfigFlags cfg;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
};

int run_grid(const GridArgs& a, Manifest& m, std::ostream& out) {
  const ModelConfig base = resolve_config(a.cfg);
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  const Dataset raw = load_data(a.data);
  std::size_t done = 0;
  GridOptions opts;
  opts.seed = seed;
  opts.jobs = a.jobs;
  opts.on_point = [&](const SurfacePoint& p) {
    ++done;
    out << "[" << done << "/108] k=" << p.kernel_size << " b=" << p.n_blocks << " lr=" << p.learning_rate;
    if (p.report) {
      out << " auroc=" << p.report->auroc << " auprc=" << p.report->auprc << '\n';
    } else {
      out << " failed: " << p.error << '\n';
    }
  };
  const auto points = grid_search(raw, base, opts);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  m.seed = seed;
  m.config = to_json(base);
  m.inputs["data"] = a.data;
  for (std::size_t b : kGridBlocks) {
    std::vector<SurfacePoint> slice;
    for (const SurfacePoint& p : points) {
      if (p.n_blocks == b) slice.push_back(p);
    }
    const std::string name = "surface_blocks" + std::to_string(b) + ".csv";
    write_text(dir / name, render([&](std::ostream& o) { write_surface_csv(slice, o); }));
    m.outputs["surface_blocks" + std::to_string(b)] = (dir / name).string();
  }
  write_text(dir / "surface.csv", render([&](std::ostream& o) { write_surface_csv(points, o); }));
  nlohmann::json j = {{"points", to_json(std::span<const SurfacePoint>(points))}};
  if (const auto best = best_point(points)) {
    const SurfacePoint& p = points[*best];
    j["best"] = {{"kernel_size", p.kernel_size}, {"n_blocks", p.n_blocks}, {"learning_rate", p.learning_rate},
                 {"report", to_json(*p.report)}};
    out << "best: kernel " << p.kernel_size << ", blocks " << p.n_blocks << ", lr " << p.learning_rate
        << " (auroc " << p.report->auroc << ", auprc " << p.report->auprc << ")\n";
  } else {
    j["best"] = nullptr;
    out << "no grid point succeeded\n";
  }
  write_json(dir / "surface.json", j);
  m.outputs["surface"] = (dir / "surface.csv").string();
  m.outputs["json"] = (dir / "surface.json").string();
  write_json(dir / "manifest.json", m.finish());
  return kExitOk;
}

struct AblateArgs {
  std::string data;
  ConfigFlags cfg;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
};

int run_ablate(const AblateArgs& a, Manifest& m, std::ostream& out) {
  const ModelConfig base = resolve_config(a.cfg);
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  const Dataset raw = load_data(a.data);
  const auto rows = run_ablation_suite(raw, seed, base, a.jobs);
  print_ablation_table(rows, out);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_text(dir / "ablation.csv", render([&](std::ostream& o) { write_ablation_csv(rows, o); }));
  write_text(dir / "ablation.txt", render([&](std::ostream& o) { print_ablation_table(rows, o); }));
  write_json(dir / "ablation.json", to_json(std::span<const AblationRow>(rows)));
  m.seed = seed;
  m.config = to_json(base);
  m.inputs["data"] = a.data;
  m.outputs = {{"csv", (dir / "ablation.csv").string()},
               {"table", (dir / "ablation.txt").string()},
               {"json", (dir / "ablation.json").string()}};
  write_json(dir / "manifest.json", m.finish());
  return kExitOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hypothesis-pruning GAN anomaly detector for PM2.5/PM10 daily profiles", "hpgan"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kVersion);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a labelled synthetic corpus (CSV)");
  c_synth->add_option("--normal", synth.normal, "Number of normal days")->required();
  c_synth->add_option("--abnormal", synth.abnormal, "Number of faulted days")->required();
  c_synth->add_option("--seed", synth.seed, "RNG seed (default: HPGAN_SEED or 0)");
  c_synth->add_option("--out", synth.out, "Output CSV")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train on the normal rows of a CSV");
  c_train->add_option("--data", tr.data, "Input CSV")->required();
  c_train->add_option("--out", tr.out, "Output directory")->required();
  c_train->add_option("--seed", tr.seed, "Override rng_seed");
  c_train->add_option("--multiplier", tr.multiplier, "Threshold multiplier");
  add_config_flags(c_train, tr.cfg, true);

  DetectArgs det;
  auto* c_detect = app.add_subcommand("detect", "Score and classify samples with a trained model");
  c_detect->add_option("--model", det.model, "Directory written by train")->required();
  c_detect->add_option("--data", det.data, "Input CSV")->required();
  c_detect->add_option("--out", det.out, "Verdict file (.csv or .json)")->required();
  c_detect->add_option("--multiplier", det.multiplier, "Override the threshold multiplier");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Monte Carlo evaluation over repeated random splits");
  c_eval->add_option("--data", ev.data, "Input CSV")->required();
  c_eval->add_option("--repeats", ev.repeats, "Number of runs")->check(CLI::PositiveNumber);
  c_eval->add_option("--seed", ev.seed, "Master seed");
  c_eval->add_option("--jobs", ev.jobs, "Worker threads")->check(CLI::PositiveNumber);
  c_eval->add_option("--out", ev.out, "Optional report directory");
  add_config_flags(c_eval, ev.cfg, true);

  GridArgs gr;
  auto* c_grid = app.add_subcommand("grid", "Kernel x blocks x learning-rate grid search");
  c_grid->add_option("--data", gr.data, "Input CSV")->required();
  c_grid->add_option("--out", gr.out, "Output directory")->required();
  c_grid->add_option("--seed", gr.seed, "Shared split seed");
  c_grid->add_option("--jobs", gr.jobs, "Worker threads")->check(CLI::PositiveNumber);
  add_config_flags(c_grid, gr.cfg, true);

  AblateArgs ab;
  auto* c_ablate = app.add_subcommand("ablate", "Six-architecture ablation under one split");
  c_ablate->add_option("--data", ab.data, "Input CSV")->required();
  c_ablate->add_option("--out", ab.out, "Output directory")->required();
  c_ablate->add_option("--seed", ab.seed, "Split and training seed");
  c_ablate->add_option("--jobs", ab.jobs, "Worker threads")->check(CLI::PositiveNumber);
  add_config_flags(c_ablate, ab.cfg, true);

  std::vector<const char*> argv;
  for (const std::string& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (!app.get_subcommands().empty()) {
      err << app.get_subcommands().front()->help();
    } else {
      err << app.help();
    }
    return kExitUsage;
  }

  Manifest m;
  m.argv = args;
  try {
    const CLI::App* cmd = app.get_subcommands().front();
    m.subcommand = cmd->get_name();
    if (cmd == c_synth) return run_synth(synth, m, out);
    if (cmd == c_train) return run_train(tr, m, out);
    if (cmd == c_detect) return run_detect(det, m, out);
    if (cmd == c_eval) return run_eval(ev, m, out);
    if (cmd == c_grid) return run_grid(gr, m, out);
    if (cmd == c_ablate) return run_ablate(ab, m, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace hpgan
