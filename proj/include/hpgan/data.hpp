#pragma once

// Daily particulate-matter samples: 24 hourly readings of PM2.5 and PM10.

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpgan/optim.hpp"
#include "hpgan/tensor.hpp"

namespace hpgan {

enum class Label { kNormal, kAbnormal };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);  // DataError on anything else

inline constexpr std::size_t kPm25 = 0;
inline constexpr std::size_t kPm10 = 1;

struct Sample {
  std::string id;
  // values[hour][channel], channel 0 = PM2.5, 1 = PM10, raw ug/m^3 (or [0,1] once normalised)
  std::array<std::array<double, 2>, 24> values{};
  Label label = Label::kNormal;

  bool abnormal() const { return label == Label::kAbnormal; }
  // DataError on negative or non-finite readings.
  void validate() const;
};

// Channel-major [2,24] view of one sample.
Tensor to_tensor(const Sample& s);
// [B,2,24] batch of the given samples.
Tensor to_batch(std::span<const Sample> samples);
Tensor to_batch(std::span<const Sample* const> samples);

// Per-channel min/max fitted on training normals.
struct NormStats {
  std::array<double, 2> min{};
  std::array<double, 2> max{};

  bool operator==(const NormStats&) const = default;
};

struct Dataset {
  std::vector<Sample> samples;
  std::optional<NormStats> normalization;  // set once values are normalised

  std::size_t count(Label label) const;
  // DataError on duplicate ids or invalid samples.
  void validate() const;
};

// CSV: header `sample_id,hour,pm25,pm10,label`, 24 rows per sample, values
// written with 6 decimals. Samples keep their first-appearance order.
Dataset read_csv(std::istream& in);
void write_csv(const Dataset& dataset, std::ostream& out);
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

// JSON mirror: {"samples":[{"sample_id","label","pm25":[24],"pm10":[24]}]}.
nlohmann::json to_json(const Dataset& dataset);
Dataset dataset_from_json(const nlohmann::json& j);

// DataError when the set is empty or a channel is constant.
NormStats fit_norm(std::span<const Sample> train_normals);
// Min-max to [0,1] per channel, clamped.
Sample normalize(const Sample& s, const NormStats& stats);
Dataset normalize(const Dataset& dataset, const NormStats& stats);
Sample denormalize(const Sample& s, const NormStats& stats);
nlohmann::json to_json(const NormStats& stats);
NormStats norm_stats_from_json(const nlohmann::json& j);

// Synthetic corpus -----------------------------------------------------------

enum class FaultKind { kSpike, kStuck, kDropout, kDrift };
inline constexpr std::array<FaultKind, 4> kAllFaults{FaultKind::kSpike, FaultKind::kStuck, FaultKind::kDropout,
                                                     FaultKind::kDrift};
std::string_view fault_name(FaultKind kind);

// Relative frequency of each fault family among abnormal samples.
struct AnomalyMix {
  double spike = 0.25;
  double stuck = 0.25;
  double dropout = 0.25;
  double drift = 0.25;

  // DataError unless all weights are non-negative and sum to 1 (within 1e-9).
  void validate() const;
};

// Standard deviation of the multiplicative noise shared by both channels.
inline constexpr double kSynthNoise = 0.04;

struct SynthNormal {
  Sample sample;                                  // noisy readings
  std::array<std::array<double, 2>, 24> clean{};  // smooth diurnal base
};

// Two-harmonic diurnal profile (morning and evening peaks) times a random
// level, with correlated channel noise and PM10 >= PM2.5 everywhere.
SynthNormal synth_normal(Rng& rng, std::string id);

struct FaultInjection {
  Sample sample;
  FaultKind kind;
  std::array<bool, 24> affected{};  // hours altered by the fault
};

// spike: 1-3 h burst x5..x20; stuck: 8-16 h held at the onset reading;
// dropout: 4-10 h of zeros; drift: monotone ramp reaching x3 at hour 23.
FaultInjection inject_fault(const Sample& normal, FaultKind kind, Rng& rng);

// n_normal clean days followed by n_abnormal faulted days; deterministic per seed.
Dataset synth_generate(std::size_t n_normal, std::size_t n_abnormal, std::uint64_t seed,
                       const AnomalyMix& mix = {});

}  // namespace hpgan
