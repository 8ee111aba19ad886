#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gesture/tensor.hpp"

namespace gesture {

class Rng;

// A trainable tensor with its Adam moments. Move-only: copies would alias
// the underlying graph node.
struct Parameter {
  std::string name;
  ag::Tensor tensor;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::uint64_t step_count = 0;

  Parameter(std::string name, ag::Shape shape);
  Parameter(Parameter&&) = default;
  Parameter& operator=(Parameter&&) = default;
  Parameter(const Parameter&) = delete;
  Parameter& operator=(const Parameter&) = delete;

  std::size_t size() const { return tensor.numel(); }
  // U(-bound, bound) initialisation.
  void init_uniform(Rng& rng, double bound);
  void fill(double value);
};

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update per parameter, then clears the gradients.
// A parameter without a gradient is a state error.
void adam_step(std::span<Parameter* const> params, const AdamOptions& options);

void zero_grad(std::span<Parameter* const> params);

// FNV-1a over the raw bytes of every parameter value.
std::uint64_t hash_parameters(std::span<Parameter* const> params);

}  // namespace gesture
