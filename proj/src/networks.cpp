#include "hpgan/networks.hpp"

#include <sstream>

#include "hpgan/error.hpp"
#include "hpgan/ops.hpp"

namespace hpgan {

namespace {

std::size_t block_channels(const ModelConfig& c, std::size_t block) { return c.base_channels << block; }

std::size_t hidden_dim(const ModelConfig& c) { return 2 * c.latent_dim; }

// Batched view of a signal or latent: adds a leading axis of 1 when needed.
Tensor as_batch(const Tensor& x, std::size_t unbatched_rank) {
  if (x.rank() == unbatched_rank) {
    Shape s{1};
    s.insert(s.end(), x.shape().begin(), x.shape().end());
    return ops::reshape(x, std::move(s));
  }
  if (x.rank() == unbatched_rank + 1) return x;
  throw ShapeError("unexpected input shape " + shape_str(x.shape()));
}

Tensor drop_batch(const Tensor& x) {
  Shape s(x.shape().begin() + 1, x.shape().end());
  return ops::reshape(x, std::move(s));
}

void check_signal(const Tensor& x) {
  const Shape& s = x.shape();
  const bool ok = (s.size() == 2 && s[0] == kChannels && s[1] == kHours) ||
                  (s.size() == 3 && s[1] == kChannels && s[2] == kHours);
  if (!ok) throw ShapeError("expected a [2,24] or [B,2,24] signal, got " + shape_str(s));
}

}  // namespace

std::size_t pooled_extent(std::size_t blocks) {
  std::size_t t = kHours;
  for (std::size_t i = 0; i < blocks; ++i) t = (t + 1) / 2;
  return t;
}

std::vector<Parameter*> Network::parameter_ptrs() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.numel();
  return n;
}

std::size_t Network::add_weight(const std::string& name, const Shape& shape, std::size_t fan_in,
                                std::size_t fan_out, Rng& rng) {
  params_.emplace_back(name, xavier_init(shape, fan_in, fan_out, rng));
  return params_.size() - 1;
}

std::size_t Network::add_bias(const std::string& name, std::size_t extent) {
  params_.emplace_back(name, Tensor::zeros({extent}));
  return params_.size() - 1;
}

ConvLayer Network::add_conv(const std::string& name, std::size_t in, std::size_t out, std::size_t k, Rng& rng) {
  ConvLayer l;
  l.weight = add_weight(name + ".weight", {out, in, k}, in * k, out * k, rng);
  l.bias = add_bias(name + ".bias", out);
  return l;
}

DenseLayer Network::add_dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer l;
  l.weight = add_weight(name + ".weight", {out, in}, in, out, rng);
  l.bias = add_bias(name + ".bias", out);
  return l;
}

// Downsampling conv stack shared by the encoder and the discriminator.
std::vector<ConvLayer> Network::add_conv_stack(const ModelConfig& c, const std::string& prefix, Rng& rng) {
  std::vector<ConvLayer> convs;
  std::size_t in = kChannels;
  for (std::size_t b = 0; b < c.n_blocks; ++b) {
    const std::size_t out = block_channels(c, b);
    const std::string block = prefix + ".block" + std::to_string(b);
    convs.push_back(add_conv(block + ".conv0", in, out, c.kernel_size, rng));
    convs.push_back(add_conv(block + ".conv1", out, out, c.kernel_size, rng));
    in = out;
  }
  return convs;
}

Encoder::Encoder(const ModelConfig& c, Rng& rng, const std::string& prefix)
    : latent_dim_(c.latent_dim), variational_(c.use_vb) {
  convs_ = add_conv_stack(c, prefix, rng);
  const std::size_t flat = block_channels(c, c.n_blocks - 1) * pooled_extent(c.n_blocks);
  hidden_ = add_dense(prefix + ".dense0", flat, hidden_dim(c), rng);
  out_ = add_dense(prefix + ".dense1", hidden_dim(c), variational_ ? 2 * latent_dim_ : latent_dim_, rng);
}

namespace {

Tensor run_conv_block(const Tensor& x, const Tensor& w0, const Tensor& b0, const Tensor& w1, const Tensor& b1) {
  Tensor h = ops::elu(ops::conv1d(x, w0, b0));
  return ops::elu(ops::conv1d(h, w1, b1));
}

}  // namespace

EncoderOutput Encoder::forward(const Tensor& x) const {
  check_signal(x);
  const bool single = x.rank() == 2;
  Tensor h = as_batch(x, 2);
  for (std::size_t b = 0; b < convs_.size() / 2; ++b) {
    const ConvLayer& c0 = convs_[2 * b];
    const ConvLayer& c1 = convs_[2 * b + 1];
    h = ops::maxpool1d(run_conv_block(h, p(c0.weight), p(c0.bias), p(c1.weight), p(c1.bias)));
  }
  const std::size_t batch = h.dim(0);
  h = ops::reshape(h, {batch, h.numel() / batch});
  h = ops::elu(ops::dense(h, p(hidden_.weight), p(hidden_.bias)));
  Tensor out = ops::dense(h, p(out_.weight), p(out_.bias));
  EncoderOutput result;
  if (variational_) {
    result.mean = ops::slice_last(out, 0, latent_dim_);
    result.log_var = ops::slice_last(out, latent_dim_, latent_dim_);
  } else {
    result.mean = out;
  }
  if (single) {
    result.mean = drop_batch(result.mean);
    if (result.log_var.defined()) result.log_var = drop_batch(result.log_var);
  }
  return result;
}

Generator::Generator(const ModelConfig& c, Rng& rng, const std::string& prefix)
    : latent_dim_(c.latent_dim),
      top_channels_(block_channels(c, c.n_blocks - 1)),
      top_extent_(pooled_extent(c.n_blocks)),
      trunk_extent_(pooled_extent(c.n_blocks) << c.n_blocks) {
  const std::size_t k = c.kernel_size;
  in_hidden_ = add_dense(prefix + ".dense0", latent_dim_, hidden_dim(c), rng);
  in_project_ = add_dense(prefix + ".dense1", hidden_dim(c), top_channels_ * top_extent_, rng);
  std::size_t in = top_channels_;
  for (std::size_t j = 0; j < c.n_blocks; ++j) {
    const std::size_t out = block_channels(c, c.n_blocks - 1 - j);
    const std::string block = prefix + ".block" + std::to_string(j);
    convs_.push_back(add_conv(block + ".conv0", in, out, k, rng));
    convs_.push_back(add_conv(block + ".conv1", out, out, k, rng));
    in = out;
  }
  const std::size_t heads = c.effective_hypotheses();
  for (std::size_t h = 0; h < heads; ++h) {
    heads_.push_back(add_conv(prefix + ".head" + std::to_string(h), in, kChannels, k, rng));
  }
}

Tensor Generator::trunk(const Tensor& z) const {
  Tensor h = as_batch(z, 1);
  if (h.dim(1) != latent_dim_) {
    throw ShapeError("generator expects latent extent " + std::to_string(latent_dim_) + ", got " +
                     shape_str(z.shape()));
  }
  const std::size_t batch = h.dim(0);
  h = ops::elu(ops::dense(h, p(in_hidden_.weight), p(in_hidden_.bias)));
  h = ops::elu(ops::dense(h, p(in_project_.weight), p(in_project_.bias)));
  h = ops::reshape(h, {batch, top_channels_, top_extent_});
  for (std::size_t j = 0; j < convs_.size() / 2; ++j) {
    const ConvLayer& c0 = convs_[2 * j];
    const ConvLayer& c1 = convs_[2 * j + 1];
    h = run_conv_block(ops::upsample1d(h), p(c0.weight), p(c0.bias), p(c1.weight), p(c1.bias));
  }
  return h;
}

Tensor Generator::head(const Tensor& trunk_out, std::size_t h) const {
  if (h >= heads_.size()) throw ShapeError("head index out of range");
  Tensor y = ops::conv1d(trunk_out, p(heads_[h].weight), p(heads_[h].bias));
  if (trunk_extent_ != kHours) y = ops::slice_last(y, (trunk_extent_ - kHours) / 2, kHours);
  return ops::sigmoid(y);
}

Discriminator::Discriminator(const ModelConfig& c, Rng& rng, const std::string& prefix)
    : hidden_dim_(hidden_dim(c)) {
  convs_ = add_conv_stack(c, prefix, rng);
  const std::size_t flat = block_channels(c, c.n_blocks - 1) * pooled_extent(c.n_blocks);
  hidden_ = add_dense(prefix + ".dense0", flat, hidden_dim_, rng);
  out_ = add_dense(prefix + ".dense1", hidden_dim_, 1, rng);
}

FeatureStack Discriminator::forward(const Tensor& x) const {
  check_signal(x);
  const bool single = x.rank() == 2;
  Tensor h = as_batch(x, 2);
  FeatureStack fs;
  for (std::size_t b = 0; b < convs_.size() / 2; ++b) {
    const ConvLayer& c0 = convs_[2 * b];
    const ConvLayer& c1 = convs_[2 * b + 1];
    h = ops::maxpool1d(run_conv_block(h, p(c0.weight), p(c0.bias), p(c1.weight), p(c1.bias)));
    fs.per_block.push_back(single ? drop_batch(h) : h);
  }
  const std::size_t batch = h.dim(0);
  h = ops::reshape(h, {batch, h.numel() / batch});
  Tensor embedding = ops::elu(ops::dense(h, p(hidden_.weight), p(hidden_.bias)));
  Tensor score = ops::sigmoid(ops::dense(embedding, p(out_.weight), p(out_.bias)));
  fs.embedding = single ? drop_batch(embedding) : embedding;
  fs.score = single ? ops::reshape(score, {}) : ops::reshape(score, {batch});
  return fs;
}

std::vector<Parameter*> Models::encoder_generator_parameters() {
  auto out = encoder.parameter_ptrs();
  auto g = generator.parameter_ptrs();
  out.insert(out.end(), g.begin(), g.end());
  return out;
}

std::vector<Parameter*> Models::discriminator_parameters() { return discriminator.parameter_ptrs(); }

std::vector<Parameter*> Models::all_parameters() {
  auto out = encoder_generator_parameters();
  auto d = discriminator_parameters();
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

std::vector<const Parameter*> Models::all_parameters() const {
  std::vector<const Parameter*> out;
  for (const Network* n : std::initializer_list<const Network*>{&encoder, &generator, &discriminator})
    for (const Parameter& p : n->parameters()) out.push_back(&p);
  return out;
}

std::size_t Models::parameter_count() const {
  return encoder.parameter_count() + generator.parameter_count() + discriminator.parameter_count();
}

Models build_models(const ModelConfig& config, Rng& rng) {
  const ModelConfig c = config.resolved();
  Encoder e(c, rng);
  Generator g(c, rng);
  Discriminator d(c, rng);
  return Models{c, std::move(e), std::move(g), std::move(d)};
}

void check_normalized(const Tensor& x) {
  const auto v = x.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= kInputLow && v[i] <= kInputHigh)) {
      std::ostringstream os;
      os << "input is not normalised: element " << i << " = " << v[i] << " outside [" << kInputLow << ", "
         << kInputHigh << "]";
      throw DataError(os.str());
    }
  }
}

Tensor encode(const Encoder& encoder, const Tensor& x) {
  check_signal(x);
  check_normalized(x);
  return encoder.forward(x).mean;
}

HypothesisSet generate(const Generator& generator, const Tensor& z, const Tensor& z_noise,
                       std::size_t noise_head) {
  if (z.shape() != z_noise.shape()) {
    throw ShapeError("z and z_noise differ: " + shape_str(z.shape()) + " vs " + shape_str(z_noise.shape()));
  }
  if (noise_head >= generator.n_heads()) throw ShapeError("noise head index out of range");
  const bool single = z.rank() == 1;
  HypothesisSet hs;
  const Tensor trunk = generator.trunk(z);
  for (std::size_t h = 0; h < generator.n_heads(); ++h) {
    Tensor y = generator.head(trunk, h);
    hs.conditioned.push_back(single ? drop_batch(y) : y);
  }
  Tensor noise = generator.head(generator.trunk(z_noise), noise_head);
  hs.noise_sample = single ? drop_batch(noise) : noise;
  hs.noise_head = noise_head;
  return hs;
}

HypothesisSet generate(const Generator& generator, const Tensor& z, const Tensor& z_noise, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, generator.n_heads() - 1);
  return generate(generator, z, z_noise, pick(rng));
}

FeatureStack discriminate(const Discriminator& discriminator, const Tensor& x) {
  return discriminator.forward(x);
}

}  // namespace hpgan
