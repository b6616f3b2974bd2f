#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "hpgan/config.hpp"
#include "hpgan/data.hpp"
#include "hpgan/losses.hpp"
#include "hpgan/networks.hpp"

namespace hpgan {

// Random inputs of one training step, drawn up front so a step can be
// replayed exactly (finite-difference checks rely on this).
struct StepNoise {
  Tensor z_noise;          // [B,latent] ~ N(0, I)
  std::size_t noise_head;  // head that renders z_noise
  Tensor vb_eps;           // [B,latent] ~ N(0, I); undefined when VB is off
};

StepNoise draw_step_noise(const Models& models, std::size_t batch, Rng& rng);

// Everything the generator-side forward pass produces for one batch.
struct GeneratorStep {
  Objective objective;  // weighted total and its breakdown
  HypothesisSet hyps;
  PruneResult pruned;
};

// Forward E, G and D on x ([B,2,24]), prune, and assemble the weighted
// objective w_enc*L_enc + w_gen*L_gen + w_adv*L_adv (+ KL with VB).
GeneratorStep generator_objective(const Models& models, const Tensor& x, const StepNoise& noise);

// Discriminator loss on x against detached copies of every generated sample
// (all conditioned hypotheses and the noise sample).
Tensor discriminator_objective(const Models& models, const Tensor& x, const HypothesisSet& hyps);

struct TrainRun {
  ModelConfig config;
  std::vector<LossBreakdown> trace;  // epoch means, one per completed epoch
  Models models;
  double wall_time = 0.0;  // seconds
  std::uint64_t seed = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, const LossBreakdown&)>;

// Trains on normalised normal samples. Per epoch: shuffle, then for every
// mini-batch (last partial batch kept) compute both objectives at the current
// parameters, step the discriminator, then step encoder + generator. The run
// is fully determined by (config.rng_seed, data, config).
// Throws DataError on an empty or unnormalised set and NumericError when a
// loss becomes non-finite.
TrainRun train(std::span<const Sample> train_set, const ModelConfig& config, const EpochCallback& on_epoch = {});

void write_trace_csv(std::span<const LossBreakdown> trace, std::ostream& out);
void save_trace_csv(std::span<const LossBreakdown> trace, const std::filesystem::path& path);

// Checkpoint file layout (all integers little-endian):
//   8 bytes   magic "HPGANCKP"
//   u32       format version (kCheckpointVersion)
//   u64       header length in bytes
//   header    UTF-8 JSON: {"version", "config", "normalization" (or null),
//             "tensors": [{"name", "shape"}...], "value_count"}
//   payload   value_count IEEE-754 doubles, tensors in header order
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Models models;
  std::optional<NormStats> normalization;
};

void save_checkpoint(const Models& models, const std::optional<NormStats>& normalization,
                     const std::filesystem::path& path);
void save_checkpoint(const TrainRun& run, const std::filesystem::path& path,
                     const std::optional<NormStats>& normalization = std::nullopt);
// Throws CheckpointError on bad magic, version mismatch, truncation or any
// header/payload inconsistency.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hpgan
