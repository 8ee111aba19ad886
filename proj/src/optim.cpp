#include "gesture/optim.hpp"

#include <bit>
#include <cmath>

#include "gesture/error.hpp"
#include "gesture/rng.hpp"

namespace gesture {

Parameter::Parameter(std::string param_name, ag::Shape shape)
    : name(std::move(param_name)), tensor(ag::Tensor::zeros(std::move(shape), true)) {
  adam_m.assign(tensor.numel(), 0.0);
  adam_v.assign(tensor.numel(), 0.0);
}

void Parameter::init_uniform(Rng& rng, double bound) {
  for (double& v : tensor.mutable_values()) v = rng.uniform(-bound, bound);
}

void Parameter::fill(double value) {
  for (double& v : tensor.mutable_values()) v = value;
}

void adam_step(std::span<Parameter* const> params, const AdamOptions& options) {
  for (const Parameter* p : params) {
    if (!p->tensor.has_grad()) fail(ErrorKind::State, "parameter '" + p->name + "' has no gradient");
  }
  for (Parameter* p : params) {
    ++p->step_count;
    const double t = static_cast<double>(p->step_count);
    const double correction1 = 1.0 - std::pow(options.beta1, t);
    const double correction2 = 1.0 - std::pow(options.beta2, t);
    auto values = p->tensor.mutable_values();
    const auto grad = p->tensor.grad();
    const auto n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const double g = grad[i];
      p->adam_m[i] = options.beta1 * p->adam_m[i] + (1.0 - options.beta1) * g;
      p->adam_v[i] = options.beta2 * p->adam_v[i] + (1.0 - options.beta2) * g * g;
      const double m_hat = p->adam_m[i] / correction1;
      const double v_hat = p->adam_v[i] / correction2;
      values[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
    p->tensor.clear_grad();
  }
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->tensor.clear_grad();
}

std::uint64_t hash_parameters(std::span<Parameter* const> params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Parameter* p : params) {
    for (double v : p->tensor.values()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace gesture
