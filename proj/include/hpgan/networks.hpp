#pragma once

// Encoder, multiple-hypothesis generator and discriminator built from a
// ModelConfig. All three accept single samples ([2,24]) or batches
// ([B,2,24]); latent vectors are then [latent] or [B,latent].
//
// Topology (n = n_blocks, C_i = base_channels * 2^i):
//   encoder       n x (conv C_{i-1}->C_i, elu, conv C_i->C_i, elu, maxpool/2)
//                 -> flatten -> dense(hidden), elu -> dense(latent | 2*latent for VB)
//   generator     dense(hidden), elu -> dense(C_{n-1}*T_n), elu -> reshape
//                 -> n x (upsample x2, conv, elu, conv, elu) -> H head convs
//                 -> centre crop to 24 steps -> sigmoid
//   discriminator encoder conv stack (features kept per block) -> flatten
//                 -> dense(hidden), elu = embedding -> dense(1) -> sigmoid
// where hidden = 2*latent and T_n is the time extent after n ceil-halvings.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hpgan/config.hpp"
#include "hpgan/optim.hpp"
#include "hpgan/tensor.hpp"

namespace hpgan {

inline constexpr std::size_t kHours = 24;
inline constexpr std::size_t kChannels = 2;

// Accepted input range for encode(); slack absorbs rounding in normalisation.
inline constexpr double kInputLow = -0.001;
inline constexpr double kInputHigh = 1.001;

// Time extent after `blocks` ceil-halvings of 24 steps.
std::size_t pooled_extent(std::size_t blocks);

struct ConvLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
};

struct DenseLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
};

// Ordered, named parameter list shared by the three networks.
class Network {
 public:
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter*> parameter_ptrs();
  std::size_t parameter_count() const;

 protected:
  std::size_t add_weight(const std::string& name, const Shape& shape, std::size_t fan_in,
                         std::size_t fan_out, Rng& rng);
  std::size_t add_bias(const std::string& name, std::size_t extent);
  ConvLayer add_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t k, Rng& rng);
  DenseLayer add_dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  std::vector<ConvLayer> add_conv_stack(const ModelConfig& config, const std::string& prefix, Rng& rng);
  const Tensor& p(std::size_t index) const { return params_[index].value; }

  std::vector<Parameter> params_;
};

struct EncoderOutput {
  Tensor mean;     // [B,latent]; the latent code itself when VB is off
  Tensor log_var;  // defined only when VB is on
};

class Encoder : public Network {
 public:
  Encoder(const ModelConfig& config, Rng& rng, const std::string& prefix = "encoder");

  // No range check; callers validate raw inputs.
  EncoderOutput forward(const Tensor& x) const;
  std::size_t latent_dim() const { return latent_dim_; }
  bool variational() const { return variational_; }

 private:
  std::vector<ConvLayer> convs_;
  DenseLayer hidden_, out_;
  std::size_t latent_dim_;
  bool variational_;
};

// The H input-conditioned reconstructions plus one noise-conditioned sample.
struct HypothesisSet {
  std::vector<Tensor> conditioned;
  Tensor noise_sample;
  std::size_t noise_head = 0;
  // Filled by prune(): winning head per batch row (one entry for a single sample).
  std::optional<std::vector<std::size_t>> best_index;
};

class Generator : public Network {
 public:
  Generator(const ModelConfig& config, Rng& rng, const std::string& prefix = "generator");

  // Shared trunk: latent -> [B, base_channels, T_trunk].
  Tensor trunk(const Tensor& z) const;
  // Head h applied to a trunk output; result [B,2,24] in (0,1).
  Tensor head(const Tensor& trunk_out, std::size_t h) const;
  std::size_t n_heads() const { return heads_.size(); }
  std::size_t latent_dim() const { return latent_dim_; }

 private:
  DenseLayer in_hidden_, in_project_;
  std::vector<ConvLayer> convs_;
  std::vector<ConvLayer> heads_;
  std::size_t latent_dim_, top_channels_, top_extent_, trunk_extent_;
};

// Discriminator activations for one input (or batch).
struct FeatureStack {
  std::vector<Tensor> per_block;  // f_l, one per conv block
  Tensor embedding;               // [B,hidden] or [hidden]
  Tensor score;                   // [B] or scalar, in (0,1)
};

class Discriminator : public Network {
 public:
  Discriminator(const ModelConfig& config, Rng& rng, const std::string& prefix = "discriminator");

  FeatureStack forward(const Tensor& x) const;
  std::size_t embedding_dim() const { return hidden_dim_; }

 private:
  std::vector<ConvLayer> convs_;
  DenseLayer hidden_, out_;
  std::size_t hidden_dim_;
};

// The three networks of one model, with the resolved config that built them.
struct Models {
  ModelConfig config;
  Encoder encoder;
  Generator generator;
  Discriminator discriminator;

  std::vector<Parameter*> encoder_generator_parameters();
  std::vector<Parameter*> discriminator_parameters();
  // Encoder, generator, discriminator order; the checkpoint payload order.
  std::vector<Parameter*> all_parameters();
  std::vector<const Parameter*> all_parameters() const;
  std::size_t parameter_count() const;
};

// Validates the config (ConfigError) and initialises every weight with
// Xavier-uniform draws from `rng`; biases start at zero.
Models build_models(const ModelConfig& config, Rng& rng);

// Deterministic latent code of x ([2,24] or [B,2,24]); with VB the mean.
// Throws DataError when any value lies outside [kInputLow, kInputHigh].
Tensor encode(const Encoder& encoder, const Tensor& x);

// Runs every head on z and one head, `noise_head`, on z_noise.
HypothesisSet generate(const Generator& generator, const Tensor& z, const Tensor& z_noise,
                       std::size_t noise_head);
// As above with the noise head drawn uniformly from `rng`.
HypothesisSet generate(const Generator& generator, const Tensor& z, const Tensor& z_noise, Rng& rng);

FeatureStack discriminate(const Discriminator& discriminator, const Tensor& x);

// Throws DataError if x has values outside the accepted normalised range.
void check_normalized(const Tensor& x);

}  // namespace hpgan
