#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace hpgan {

struct LossWeights {
  double w_enc = 1.0;
  double w_gen = 50.0;
  double w_adv = 1.0;

  bool operator==(const LossWeights&) const = default;
};

// Every architectural and optimisation knob, plus the three ablation flags:
//   use_lm  latent-vector matching term (encoder loss)
//   use_vb  variational bound (KL term, reparameterised latent)
//   use_mh  multiple hypotheses with winner-take-all pruning
struct ModelConfig {
  std::size_t kernel_size = 7;
  std::size_t n_blocks = 3;
  std::size_t latent_dim = 64;
  std::size_t n_hypotheses = 4;
  std::size_t base_channels = 16;
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 1000;
  LossWeights loss_weights{};
  bool use_lm = true;
  bool use_vb = false;
  bool use_mh = true;
  double threshold_multiplier = 1.5;
  std::uint64_t rng_seed = 0;
  // Stop once the epoch-mean total improves by less than 1e-5 (relative)
  // over 50 epochs. Off by default; the epoch budget is the stop rule.
  bool early_stop = false;

  bool operator==(const ModelConfig&) const = default;

  // Throws ConfigError on invalid values.
  void validate() const;

  // Hypothesis count actually built: 1 when use_mh is off.
  std::size_t effective_hypotheses() const { return use_mh ? n_hypotheses : 1; }

  // Returns a validated copy with n_hypotheses forced to 1 when use_mh is off.
  ModelConfig resolved() const;
};

// Named starting points. "desk" trims epochs and widths for quick runs;
// "full" keeps the default 1000-epoch schedule.
enum class Profile { kDesk, kFull };
ModelConfig profile_config(Profile profile);
Profile parse_profile(const std::string& name);

// Architecture label derived from the ablation flags, e.g. "LMMH-GAN".
std::string architecture_name(const ModelConfig& config);

nlohmann::json to_json(const ModelConfig& config);
// Starts from `base` and overrides the keys present in `j`. Unknown keys and
// wrongly typed values throw ConfigError.
ModelConfig config_from_json(const nlohmann::json& j, const ModelConfig& base = {});

}  // namespace hpgan
