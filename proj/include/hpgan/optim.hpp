#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "hpgan/tensor.hpp"

namespace hpgan {

// A trainable tensor plus its Adam state.
struct Parameter {
  std::string name;
  Tensor value;          // leaf, requires_grad
  Tensor first_moment;   // same shape as value
  Tensor second_moment;  // same shape as value
  std::uint64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string name, Tensor initial);

  // Copies are deep: the copy owns fresh tensors with the same values.
  Parameter(const Parameter& other);
  Parameter& operator=(const Parameter& other);
  Parameter(Parameter&&) noexcept = default;
  Parameter& operator=(Parameter&&) noexcept = default;

  const Shape& shape() const { return value.shape(); }
};

using Rng = std::mt19937_64;

// Glorot/Xavier uniform: U(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
double xavier_bound(std::size_t fan_in, std::size_t fan_out);
Tensor xavier_init(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update on every parameter, after which the
// gradients are cleared. Throws GraphError if any parameter has no gradient.
void adam_step(std::span<Parameter* const> params, double learning_rate, const AdamOptions& options = {});

// Resets every gradient to an all-zero buffer.
void zero_grad(std::span<Parameter* const> params);

}  // namespace hpgan
