#include <cmath>
#include <numbers>

#include "hpgan/data.hpp"
#include "hpgan/error.hpp"

namespace hpgan {

std::string_view fault_name(FaultKind kind) {
  switch (kind) {
    case FaultKind::kSpike:
      return "spike";
    case FaultKind::kStuck:
      return "stuck";
    case FaultKind::kDropout:
      return "dropout";
    case FaultKind::kDrift:
      return "drift";
  }
  return "unknown";
}

void AnomalyMix::validate() const {
  const double w[] = {spike, stuck, dropout, drift};
  double total = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw DataError("anomaly mix weights must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("anomaly mix weights must sum to 1");
}

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

SynthNormal synth_normal(Rng& rng, std::string id) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double level = uniform(rng, 30.0, 70.0);  // daily PM10 level
  const double ratio = uniform(rng, 0.45, 0.65);  // PM2.5 / PM10
  const double daily = uniform(rng, 0.05, 0.15);
  const double rush = uniform(rng, 0.20, 0.30);
  const double shift = uniform(rng, -1.5, 1.5);
  std::normal_distribution<double> shared(0.0, kSynthNoise);
  std::normal_distribution<double> own(0.0, kSynthNoise / 2.0);

  SynthNormal out;
  out.sample.id = std::move(id);
  out.sample.label = Label::kNormal;
  for (std::size_t h = 0; h < 24; ++h) {
    const double t = static_cast<double>(h) - shift;
    // 12 h harmonic peaks near 08:00 and 20:00; the 24 h term lifts the afternoon.
    const double profile = 1.0 + daily * std::cos(kTwoPi * (t - 14.0) / 24.0) + rush * std::cos(kTwoPi * (t - 8.0) / 12.0);
    const double pm10 = level * profile;
    const double pm25 = ratio * pm10;
    out.clean[h] = {pm25, pm10};
    const double common = 1.0 + shared(rng);
    const double noisy10 = std::max(0.0, pm10 * common);
    const double noisy25 = std::max(0.0, pm25 * common * (1.0 + own(rng)));
    out.sample.values[h] = {std::min(noisy25, noisy10), noisy10};
  }
  return out;
}

FaultInjection inject_fault(const Sample& normal, FaultKind kind, Rng& rng) {
  FaultInjection out{normal, kind, {}};
  out.sample.label = Label::kAbnormal;
  auto& v = out.sample.values;
  switch (kind) {
    case FaultKind::kSpike: {
      const std::size_t len = uniform_int(rng, 1, 3);
      const std::size_t start = uniform_int(rng, 0, 24 - len);
      const double factor = uniform(rng, 5.0, 20.0);
      for (std::size_t h = start; h < start + len; ++h) {
        v[h][kPm25] *= factor;
        v[h][kPm10] *= factor;
        out.affected[h] = true;
      }
      break;
    }
    case FaultKind::kStuck: {
      const std::size_t len = uniform_int(rng, 8, 16);
      const std::size_t start = uniform_int(rng, 0, 24 - len);
      const auto held = v[start];
      for (std::size_t h = start + 1; h < start + len; ++h) {
        v[h] = held;
        out.affected[h] = true;
      }
      break;
    }
    case FaultKind::kDropout: {
      const std::size_t len = uniform_int(rng, 4, 10);
      const std::size_t start = uniform_int(rng, 0, 24 - len);
      for (std::size_t h = start; h < start + len; ++h) {
        v[h] = {0.0, 0.0};
        out.affected[h] = true;
      }
      break;
    }
    case FaultKind::kDrift: {
      const std::size_t start = uniform_int(rng, 0, 16);
      for (std::size_t h = start + 1; h < 24; ++h) {
        const double m = 1.0 + 2.0 * static_cast<double>(h - start) / static_cast<double>(23 - start);
        v[h][kPm25] *= m;
        v[h][kPm10] *= m;
        out.affected[h] = true;
      }
      break;
    }
  }
  return out;
}

Dataset synth_generate(std::size_t n_normal, std::size_t n_abnormal, std::uint64_t seed, const AnomalyMix& mix) {
  mix.validate();
  Rng rng(seed);
  std::discrete_distribution<std::size_t> pick({mix.spike, mix.stuck, mix.dropout, mix.drift});
  Dataset ds;
  ds.samples.reserve(n_normal + n_abnormal);
  char id[32];
  for (std::size_t i = 0; i < n_normal; ++i) {
    std::snprintf(id, sizeof id, "n%04zu", i);
    ds.samples.push_back(synth_normal(rng, id).sample);
  }
  for (std::size_t i = 0; i < n_abnormal; ++i) {
    std::snprintf(id, sizeof id, "a%04zu", i);
    const Sample base = synth_normal(rng, id).sample;
    ds.samples.push_back(inject_fault(base, kAllFaults[pick(rng)], rng).sample);
  }
  return ds;
}

}  // namespace hpgan
