#pragma once

#include <random>
#include <vector>

#include "hpgan/config.hpp"
#include "hpgan/data.hpp"
#include "hpgan/tensor.hpp"

namespace hpgan::test_support {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

inline Tensor param(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = random_tensor(std::move(shape), rng, lo, hi);
  t.set_requires_grad();
  return t;
}

// Small, fast model used by most unit tests.
inline ModelConfig tiny_config() {
  ModelConfig c;
  c.kernel_size = 3;
  c.n_blocks = 2;
  c.latent_dim = 8;
  c.n_hypotheses = 2;
  c.base_channels = 4;
  c.batch_size = 16;
  c.epochs = 3;
  c.learning_rate = 1e-3;
  return c;
}

// Normalised normal samples from the synthetic generator.
inline std::vector<Sample> normalized_normals(std::size_t n, std::uint64_t seed) {
  Dataset d = synth_generate(n, 0, seed);
  const NormStats stats = fit_norm(d.samples);
  return normalize(d, stats).samples;
}

}  // namespace hpgan::test_support
