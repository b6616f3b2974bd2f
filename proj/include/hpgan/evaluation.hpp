#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpgan/config.hpp"
#include "hpgan/data.hpp"
#include "hpgan/networks.hpp"

namespace hpgan {

// Rank (Mann-Whitney) AUROC with abnormal (true) as the positive class and
// ties counted one half. DataError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const bool> labels);

// Average precision: sum over distinct thresholds (descending) of
// (recall gain) * precision. DataError without positives.
double auprc(std::span<const double> scores, std::span<const bool> labels);

// Mean anomaly score over normalised normal test samples. DataError if empty.
double mse_metric(const Models& models, std::span<const Sample> normal_test);

struct MetricReport {
  double auroc = 0.0;
  double auprc = 0.0;
  double mse = 0.0;
  std::size_t n_normal = 0;    // test normals
  std::size_t n_abnormal = 0;  // test abnormals
  std::size_t n_train = 0;
  double wall_time = 0.0;  // seconds, training only; not part of equality

  bool operator==(const MetricReport& o) const {
    return auroc == o.auroc && auprc == o.auprc && mse == o.mse && n_normal == o.n_normal &&
           n_abnormal == o.n_abnormal && n_train == o.n_train;
  }
};

// Sample indices of one seeded 80/20 split.
struct Split {
  std::vector<std::size_t> train;          // normals
  std::vector<std::size_t> test_normal;    // held-out normals
  std::vector<std::size_t> test_abnormal;  // every abnormal
};

// Seeded shuffle of the normals; the first floor(0.8 n) train.
Split make_split(const Dataset& dataset, std::uint64_t seed);

// Split, fit normalisation on the training normals, train with
// config.rng_seed = seed, fit the threshold, score the test set.
MetricReport run_experiment(const Dataset& raw, const ModelConfig& config, std::uint64_t seed);

// Deterministic per-run seed (splitmix64 of master and index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Runs fn(0..count-1) on up to `jobs` threads. Results land in index order.
// The first exception (by index) is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

// Grid axes.
inline constexpr std::size_t kGridKernels[] = {3, 5, 7, 9, 11, 13};
inline constexpr std::size_t kGridBlocks[] = {2, 3, 4};
inline constexpr double kGridLearningRates[] = {5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5};

struct SurfacePoint {
  std::string architecture;
  std::size_t kernel_size = 0;
  std::size_t n_blocks = 0;
  double learning_rate = 0.0;
  std::optional<MetricReport> report;  // empty when the run failed
  std::string error;
};

struct GridOptions {
  std::uint64_t seed = 0;  // shared split and training seed
  std::size_t jobs = 1;
  // Called after each point completes (from a worker thread, serialised).
  std::function<void(const SurfacePoint&)> on_point;
};

// All 108 combinations in kernel-major, then blocks, then learning-rate
// order. Failed runs are kept as points without a report.
std::vector<SurfacePoint> grid_search(const Dataset& raw, const ModelConfig& base, const GridOptions& options = {});

// Argmax AUROC, ties broken by AUPRC; nullopt when no point succeeded.
std::optional<std::size_t> best_point(std::span<const SurfacePoint> points);

// architecture,kernel_size,n_blocks,learning_rate,auroc,auprc,mse
// (metric cells empty for failed points).
void write_surface_csv(std::span<const SurfacePoint> points, std::ostream& out);
nlohmann::json to_json(std::span<const SurfacePoint> points);

struct AblationRow {
  std::string name;  // e.g. "Ablation-4 (LMMH-GAN)"
  ModelConfig config;
  std::optional<MetricReport> report;
  std::string error;
};

// Flag sets in table order: LM, VB, LM+VB, LM+MH, VB+MH, LM+VB+MH.
std::vector<ModelConfig> ablation_configs(const ModelConfig& base);

std::vector<AblationRow> run_ablation_suite(const Dataset& raw, std::uint64_t seed, const ModelConfig& base,
                                            std::size_t jobs = 1);

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out);
void print_ablation_table(std::span<const AblationRow> rows, std::ostream& out);
nlohmann::json to_json(std::span<const AblationRow> rows);

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n-1)
};

MetricStats summarize_metric(std::span<const double> values);

struct MonteCarloSummary {
  std::size_t n = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricReport> runs;
  MetricStats auroc, auprc, mse;
};

// n independent run_experiment calls with derive_seed(master, i).
// ConfigError when n < 2; run failures are rethrown with the run index.
MonteCarloSummary monte_carlo(const Dataset& raw, const ModelConfig& config, std::size_t n = 30,
                              std::uint64_t master_seed = 0, std::size_t jobs = 1);

void write_monte_carlo_csv(const MonteCarloSummary& summary, std::ostream& out);
void print_monte_carlo_table(const MonteCarloSummary& summary, const std::string& architecture, std::ostream& out);
nlohmann::json to_json(const MonteCarloSummary& summary);
nlohmann::json to_json(const MetricReport& report);

}  // namespace hpgan
