#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gesture/tensor.hpp"

namespace gesture::ag {

enum class Mode { Train, Eval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kProbClamp = 1e-7;

// Running statistics of one batch-norm layer. Running variance is the
// unbiased batch variance, as in the common frameworks.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  bool initialized = false;
  double momentum = kBatchNormMomentum;
  double eps = kBatchNormEps;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels)
      : running_mean(channels, 0.0), running_var(channels, 1.0) {}
  std::size_t channels() const { return running_mean.size(); }
};

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor sum(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

// x [N, Cin, T], weight [Cout, Cin, 3], bias [Cout] -> [N, Cout, T].
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias);

// x [N, C, T]; statistics over batch and time per channel.
Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, Mode mode);

// Kernel 2, stride 2 over time; ties route the gradient to the earlier frame.
Tensor maxpool1d(const Tensor& x);
// Repeats every frame twice.
Tensor upsample_nearest(const Tensor& x);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// x [N, Din], weight [Dout, Din], bias [Dout] -> [N, Dout].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Channel (dim 1) concatenation of [N, C1, T] and [N, C2, T].
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count);
// [N, ...] -> [N, prod(...)]
Tensor flatten(const Tensor& x);

// Extends the time axis on the right by half-sample symmetric reflection.
Tensor pad_time_reflect(const Tensor& x, std::size_t right);
Tensor crop_time(const Tensor& x, std::size_t begin, std::size_t length);

// [N, C, T] losses. l1: sum of |pred - target| over channels and time;
// l2: sum over time of the per-frame Euclidean norm over channels. Both are
// averaged over the batch.
Tensor l1_loss(const Tensor& pred, const Tensor& target);
Tensor l2_loss(const Tensor& pred, const Tensor& target);
// Binary cross-entropy averaged over the batch; prob is clamped to
// [1e-7, 1 - 1e-7].
Tensor bce_loss(const Tensor& prob, std::span<const double> labels);

}  // namespace gesture::ag
