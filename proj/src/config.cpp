#include "hpgan/config.hpp"

#include <set>

#include "hpgan/error.hpp"

namespace hpgan {

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  if (kernel_size == 0 || kernel_size % 2 == 0) fail("kernel_size must be a positive odd integer");
  if (n_blocks < 2 || n_blocks > 4) fail("n_blocks must be in 2..4");
  if (latent_dim == 0) fail("latent_dim must be positive");
  if (n_hypotheses == 0) fail("n_hypotheses must be positive");
  if (base_channels == 0) fail("base_channels must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (epochs == 0) fail("epochs must be positive");
  if (!(loss_weights.w_enc >= 0.0 && loss_weights.w_gen >= 0.0 && loss_weights.w_adv >= 0.0)) {
    fail("loss weights must be non-negative");
  }
  if (!(threshold_multiplier >= 0.0)) fail("threshold_multiplier must be non-negative");
}

ModelConfig ModelConfig::resolved() const {
  validate();
  ModelConfig out = *this;
  if (!out.use_mh) out.n_hypotheses = 1;
  return out;
}

ModelConfig profile_config(Profile profile) {
  ModelConfig c;
  if (profile == Profile::kDesk) {
    c.epochs = 200;
    c.base_channels = 8;
  }
  return c;
}

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::kDesk;
  if (name == "full") return Profile::kFull;
  throw ConfigError("unknown profile '" + name + "' (expected desk or full)");
}

std::string architecture_name(const ModelConfig& config) {
  std::string name;
  if (config.use_lm) name += "LM";
  if (config.use_vb) name += "VB";
  if (config.use_mh) name += "MH";
  if (name.empty()) name = "Plain";
  return name + "-GAN";
}

nlohmann::json to_json(const ModelConfig& c) {
  return {
      {"kernel_size", c.kernel_size},
      {"n_blocks", c.n_blocks},
      {"latent_dim", c.latent_dim},
      {"n_hypotheses", c.n_hypotheses},
      {"base_channels", c.base_channels},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"loss_weights", {{"w_enc", c.loss_weights.w_enc}, {"w_gen", c.loss_weights.w_gen}, {"w_adv", c.loss_weights.w_adv}}},
      {"use_lm", c.use_lm},
      {"use_vb", c.use_vb},
      {"use_mh", c.use_mh},
      {"threshold_multiplier", c.threshold_multiplier},
      {"rng_seed", c.rng_seed},
      {"early_stop", c.early_stop},
  };
}

namespace {

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(std::string("'") + key + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer() || it->get<long long>() < 0) {
        throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
      }
    } else {
      if (!it->is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    }
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("'") + key + "': " + e.what());
  }
}

}  // namespace

ModelConfig config_from_json(const nlohmann::json& j, const ModelConfig& base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{
      "kernel_size", "n_blocks", "latent_dim",  "n_hypotheses", "base_channels",
      "learning_rate", "batch_size", "epochs",  "loss_weights", "use_lm",
      "use_vb",      "use_mh",     "threshold_multiplier", "rng_seed", "early_stop"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  ModelConfig c = base;
  read(j, "kernel_size", c.kernel_size);
  read(j, "n_blocks", c.n_blocks);
  read(j, "latent_dim", c.latent_dim);
  read(j, "n_hypotheses", c.n_hypotheses);
  read(j, "base_channels", c.base_channels);
  read(j, "learning_rate", c.learning_rate);
  read(j, "batch_size", c.batch_size);
  read(j, "epochs", c.epochs);
  read(j, "use_lm", c.use_lm);
  read(j, "use_vb", c.use_vb);
  read(j, "use_mh", c.use_mh);
  read(j, "threshold_multiplier", c.threshold_multiplier);
  read(j, "rng_seed", c.rng_seed);
  read(j, "early_stop", c.early_stop);
  if (auto it = j.find("loss_weights"); it != j.end()) {
    if (it->is_array()) {
      if (it->size() != 3) throw ConfigError("'loss_weights' array must have 3 entries");
      for (const auto& w : *it)
        if (!w.is_number()) throw ConfigError("'loss_weights' entries must be numbers");
      c.loss_weights = {(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
    } else if (it->is_object()) {
      for (const auto& [key, _] : it->items()) {
        if (key != "w_enc" && key != "w_gen" && key != "w_adv") {
          throw ConfigError("unknown loss_weights key '" + key + "'");
        }
      }
      read(*it, "w_enc", c.loss_weights.w_enc);
      read(*it, "w_gen", c.loss_weights.w_gen);
      read(*it, "w_adv", c.loss_weights.w_adv);
    } else {
      throw ConfigError("'loss_weights' must be an object or a 3-element array");
    }
  }
  c.validate();
  return c;
}

}  // namespace hpgan
