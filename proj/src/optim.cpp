#include "hpgan/optim.hpp"

#include <cmath>

#include "hpgan/error.hpp"

namespace hpgan {

Parameter::Parameter(std::string param_name, Tensor initial)
    : name(std::move(param_name)),
      value(std::move(initial)),
      first_moment(Tensor::zeros(value.shape())),
      second_moment(Tensor::zeros(value.shape())) {
  value.set_requires_grad(true);
}

Parameter::Parameter(const Parameter& other)
    : name(other.name),
      value(other.value.detach()),
      first_moment(other.first_moment.detach()),
      second_moment(other.second_moment.detach()),
      step_count(other.step_count) {
  value.set_requires_grad(other.value.requires_grad());
}

Parameter& Parameter::operator=(const Parameter& other) {
  if (this != &other) *this = Parameter(other);
  return *this;
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  if (fan_in == 0 || fan_out == 0) throw ConfigError("xavier_init: fans must be positive");
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor xavier_init(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = xavier_bound(fan_in, fan_out);
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = dist(rng);
  return Tensor(shape, std::move(values));
}

void adam_step(std::span<Parameter* const> params, double learning_rate, const AdamOptions& options) {
  for (const Parameter* p : params) {
    if (!p->value.has_grad()) throw GraphError("adam_step: parameter '" + p->name + "' has no gradient");
  }
  for (Parameter* p : params) {
    ++p->step_count;
    const double t = static_cast<double>(p->step_count);
    const double correction1 = 1.0 - std::pow(options.beta1, t);
    const double correction2 = 1.0 - std::pow(options.beta2, t);
    auto w = p->value.mutable_data();
    auto m = p->first_moment.mutable_data();
    auto v = p->second_moment.mutable_data();
    const auto g = p->value.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g[i];
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + options.epsilon);
    }
    p->value.clear_grad();
  }
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->value.zero_grad();
}

}  // namespace hpgan
