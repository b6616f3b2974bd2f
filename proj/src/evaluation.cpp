#include "hpgan/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "hpgan/detection.hpp"
#include "hpgan/error.hpp"
#include "hpgan/training.hpp"

namespace hpgan {

namespace {

void check_labels(std::span<const double> scores, std::span<const bool> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("scores and labels differ in length (" + std::to_string(scores.size()) + " vs " +
                    std::to_string(labels.size()) + ")");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericError("non-finite score");
  }
}

std::vector<Sample> gather(const Dataset& d, std::span<const std::size_t> idx) {
  std::vector<Sample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(d.samples[i]);
  return out;
}

std::string fmt_metric(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const bool> labels) {
  check_labels(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups, then Mann-Whitney U of the positives.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("auroc needs both normal and abnormal samples");
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double auprc(std::span<const double> scores, std::span<const bool> labels) {
  check_labels(scores, labels);
  const std::size_t n = scores.size();
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (n_pos == 0) throw DataError("auprc needs at least one abnormal sample");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::size_t group_tp = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) ++group_tp;
      ++j;
    }
    tp += group_tp;
    seen = j;
    if (group_tp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * static_cast<double>(group_tp) / static_cast<double>(n_pos);
    }
    i = j;
  }
  return ap;
}

double mse_metric(const Models& models, std::span<const Sample> normal_test) {
  if (normal_test.empty()) throw DataError("mse_metric: empty normal test set");
  const auto scores = anomaly_scores(models, normal_test);
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

Split make_split(const Dataset& dataset, std::uint64_t seed) {
  Split split;
  std::vector<std::size_t> normals;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    (dataset.samples[i].abnormal() ? split.test_abnormal : normals).push_back(i);
  }
  if (normals.empty() || split.test_abnormal.empty()) {
    throw DataError("experiment needs both normal and abnormal samples (got " + std::to_string(normals.size()) +
                    " normal, " + std::to_string(split.test_abnormal.size()) + " abnormal)");
  }
  Rng rng(seed);
  std::shuffle(normals.begin(), normals.end(), rng);
  const std::size_t n_train = normals.size() * 4 / 5;
  if (n_train == 0 || n_train == normals.size()) {
    throw DataError("too few normal samples for an 80/20 split: " + std::to_string(normals.size()));
  }
  split.train.assign(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_normal.assign(normals.begin() + static_cast<std::ptrdiff_t>(n_train), normals.end());
  return split;
}

MetricReport run_experiment(const Dataset& raw, const ModelConfig& config, std::uint64_t seed) {
  const Split split = make_split(raw, seed);
  const std::vector<Sample> train_raw = gather(raw, split.train);
  const NormStats stats = fit_norm(train_raw);

  auto norm_all = [&](std::span<const std::size_t> idx) {
    std::vector<Sample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(normalize(raw.samples[i], stats));
    return out;
  };
  const auto train_set = norm_all(split.train);
  const auto test_normal = norm_all(split.test_normal);
  const auto test_abnormal = norm_all(split.test_abnormal);

  ModelConfig c = config;
  c.rng_seed = seed;
  const TrainRun run = train(train_set, c);

  std::vector<double> scores = anomaly_scores(run.models, test_normal);
  const std::size_t n_norm = scores.size();
  const auto abn = anomaly_scores(run.models, test_abnormal);
  scores.insert(scores.end(), abn.begin(), abn.end());
  // std::vector<bool> is not contiguous, hence the array.
  const auto labels = std::make_unique<bool[]>(scores.size());
  std::fill(labels.get() + n_norm, labels.get() + scores.size(), true);
  const std::span<const bool> lab(labels.get(), scores.size());

  MetricReport r;
  r.auroc = auroc(scores, lab);
  r.auprc = auprc(scores, lab);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_norm; ++i) sum += scores[i];
  r.mse = sum / static_cast<double>(n_norm);
  r.n_normal = n_norm;
  r.n_abnormal = abn.size();
  r.n_train = train_set.size();
  r.wall_time = run.wall_time;
  return r;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<SurfacePoint> grid_search(const Dataset& raw, const ModelConfig& base, const GridOptions& options) {
  std::vector<SurfacePoint> points;
  for (std::size_t k : kGridKernels) {
    for (std::size_t b : kGridBlocks) {
      for (double lr : kGridLearningRates) {
        SurfacePoint p;
        p.architecture = architecture_name(base);
        p.kernel_size = k;
        p.n_blocks = b;
        p.learning_rate = lr;
        points.push_back(std::move(p));
      }
    }
  }
  std::mutex mu;
  parallel_for(points.size(), options.jobs, [&](std::size_t i) {
    SurfacePoint& p = points[i];
    try {
      ModelConfig c = base;
      c.kernel_size = p.kernel_size;
      c.n_blocks = p.n_blocks;
      c.learning_rate = p.learning_rate;
      p.report = run_experiment(raw, c, options.seed);
    } catch (const std::exception& e) {
      p.report.reset();
      p.error = e.what();
    }
    if (options.on_point) {
      std::lock_guard lock(mu);
      options.on_point(p);
    }
  });
  return points;
}

std::optional<std::size_t> best_point(std::span<const SurfacePoint> points) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].report) continue;
    if (!best) {
      best = i;
      continue;
    }
    const MetricReport& a = *points[i].report;
    const MetricReport& b = *points[*best].report;
    if (a.auroc > b.auroc || (a.auroc == b.auroc && a.auprc > b.auprc)) best = i;
  }
  return best;
}

void write_surface_csv(std::span<const SurfacePoint> points, std::ostream& out) {
  out << "architecture,kernel_size,n_blocks,learning_rate,auroc,auprc,mse\n";
  const auto old = out.precision(17);
  for (const SurfacePoint& p : points) {
    out << p.architecture << ',' << p.kernel_size << ',' << p.n_blocks << ',' << p.learning_rate << ',';
    if (p.report) {
      out << p.report->auroc << ',' << p.report->auprc << ',' << p.report->mse;
    } else {
      out << ",,";
    }
    out << '\n';
  }
  out.precision(old);
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"auroc", r.auroc},       {"auprc", r.auprc},         {"mse", r.mse},
          {"n_normal", r.n_normal}, {"n_abnormal", r.n_abnormal}, {"n_train", r.n_train},
          {"wall_time", r.wall_time}};
}

nlohmann::json to_json(std::span<const SurfacePoint> points) {
  nlohmann::json arr = nlohmann::json::array();
  for (const SurfacePoint& p : points) {
    nlohmann::json j = {{"architecture", p.architecture},
                        {"kernel_size", p.kernel_size},
                        {"n_blocks", p.n_blocks},
                        {"learning_rate", p.learning_rate}};
    j["report"] = p.report ? to_json(*p.report) : nlohmann::json(nullptr);
    if (!p.error.empty()) j["error"] = p.error;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ModelConfig> ablation_configs(const ModelConfig& base) {
  struct Flags {
    bool lm, vb, mh;
  };
  constexpr Flags kSets[] = {{true, false, false}, {false, true, false}, {true, true, false},
                             {true, false, true},  {false, true, true},  {true, true, true}};
  std::vector<ModelConfig> out;
  for (const Flags& f : kSets) {
    ModelConfig c = base;
    c.use_lm = f.lm;
    c.use_vb = f.vb;
    c.use_mh = f.mh;
    if (f.mh && c.n_hypotheses < 2) c.n_hypotheses = 4;
    out.push_back(c);
  }
  return out;
}

std::vector<AblationRow> run_ablation_suite(const Dataset& raw, std::uint64_t seed, const ModelConfig& base,
                                            std::size_t jobs) {
  std::vector<AblationRow> rows;
  const auto configs = ablation_configs(base);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    AblationRow r;
    r.name = "Ablation-" + std::to_string(i + 1) + " (" + architecture_name(configs[i]) + ")";
    r.config = configs[i];
    rows.push_back(std::move(r));
  }
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    try {
      rows[i].report = run_experiment(raw, rows[i].config, seed);
    } catch (const std::exception& e) {
      rows[i].report.reset();
      rows[i].error = e.what();
    }
  });
  return rows;
}

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out) {
  out << "name,architecture,use_lm,use_vb,use_mh,auroc,auprc,mse\n";
  const auto old = out.precision(17);
  for (const AblationRow& r : rows) {
    out << '"' << r.name << "\"," << architecture_name(r.config) << ',' << r.config.use_lm << ','
        << r.config.use_vb << ',' << r.config.use_mh << ',';
    if (r.report) {
      out << r.report->auroc << ',' << r.report->auprc << ',' << r.report->mse;
    } else {
      out << ",,";
    }
    out << '\n';
  }
  out.precision(old);
}

void print_ablation_table(std::span<const AblationRow> rows, std::ostream& out) {
  out << std::left << std::setw(28) << "Architecture" << std::setw(4) << "LM" << std::setw(4) << "VB"
      << std::setw(4) << "MH" << std::setw(10) << "AUROC" << std::setw(10) << "AUPRC" << "MSE\n";
  for (const AblationRow& r : rows) {
    out << std::left << std::setw(28) << r.name << std::setw(4) << (r.config.use_lm ? "x" : "")
        << std::setw(4) << (r.config.use_vb ? "x" : "") << std::setw(4) << (r.config.use_mh ? "x" : "");
    if (r.report) {
      out << std::setw(10) << fmt_metric(r.report->auroc) << std::setw(10) << fmt_metric(r.report->auprc)
          << fmt_metric(r.report->mse) << '\n';
    } else {
      out << "failed: " << r.error << '\n';
    }
  }
}

nlohmann::json to_json(std::span<const AblationRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const AblationRow& r : rows) {
    nlohmann::json j = {{"name", r.name}, {"architecture", architecture_name(r.config)}, {"config", to_json(r.config)}};
    j["report"] = r.report ? to_json(*r.report) : nlohmann::json(nullptr);
    if (!r.error.empty()) j["error"] = r.error;
    arr.push_back(std::move(j));
  }
  return arr;
}

MetricStats summarize_metric(std::span<const double> values) {
  if (values.size() < 2) throw ConfigError("summary needs at least two values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  MetricStats s;
  // Identical runs must report exactly zero spread; the rounded mean may not
  // equal the common value.
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    s.mean = values.front();
    return s;
  }
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / (n - 1.0));
  return s;
}

MonteCarloSummary monte_carlo(const Dataset& raw, const ModelConfig& config, std::size_t n,
                              std::uint64_t master_seed, std::size_t jobs) {
  if (n < 2) throw ConfigError("monte_carlo needs at least 2 repeats, got " + std::to_string(n));
  MonteCarloSummary s;
  s.n = n;
  s.master_seed = master_seed;
  for (std::size_t i = 0; i < n; ++i) s.seeds.push_back(derive_seed(master_seed, i));
  s.runs.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    try {
      s.runs[i] = run_experiment(raw, config, s.seeds[i]);
    } catch (const DataError& e) {
      throw DataError("run " + std::to_string(i) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error("run " + std::to_string(i) + ": " + e.what());
    }
  });
  auto column = [&](double MetricReport::*field) {
    std::vector<double> v;
    for (const MetricReport& r : s.runs) v.push_back(r.*field);
    return summarize_metric(v);
  };
  s.auroc = column(&MetricReport::auroc);
  s.auprc = column(&MetricReport::auprc);
  s.mse = column(&MetricReport::mse);
  return s;
}

void write_monte_carlo_csv(const MonteCarloSummary& s, std::ostream& out) {
  out << "run,seed,auroc,auprc,mse\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < s.runs.size(); ++i) {
    out << i << ',' << s.seeds[i] << ',' << s.runs[i].auroc << ',' << s.runs[i].auprc << ',' << s.runs[i].mse
        << '\n';
  }
  out << "mean,," << s.auroc.mean << ',' << s.auprc.mean << ',' << s.mse.mean << '\n';
  out << "std,," << s.auroc.std << ',' << s.auprc.std << ',' << s.mse.std << '\n';
  out.precision(old);
}

void print_monte_carlo_table(const MonteCarloSummary& s, const std::string& architecture, std::ostream& out) {
  auto cell = [](const MetricStats& m) { return fmt_metric(m.mean) + " +/- " + fmt_metric(m.std); };
  out << std::left << std::setw(16) << "Architecture" << std::setw(20) << "AUROC" << std::setw(20) << "AUPRC"
      << "MSE\n";
  out << std::left << std::setw(16) << architecture << std::setw(20) << cell(s.auroc) << std::setw(20)
      << cell(s.auprc) << cell(s.mse) << '\n';
  out << "(" << s.n << " runs, master seed " << s.master_seed << ")\n";
}

nlohmann::json to_json(const MonteCarloSummary& s) {
  auto stats = [](const MetricStats& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < s.runs.size(); ++i) {
    nlohmann::json j = to_json(s.runs[i]);
    j["seed"] = s.seeds[i];
    runs.push_back(std::move(j));
  }
  return {{"n", s.n},
          {"master_seed", s.master_seed},
          {"auroc", stats(s.auroc)},
          {"auprc", stats(s.auprc)},
          {"mse", stats(s.mse)},
          {"runs", std::move(runs)}};
}

}  // namespace hpgan
