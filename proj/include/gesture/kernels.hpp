#pragma once

// Hot loops of the differentiation engine. Every kernel exists twice: a
// serial reference written as the direct per-element sum, and an OpenMP
// version. The parallel versions split work over independent output
// elements with a fixed per-element summation order, so their results do
// not depend on the thread count.

#include <cstddef>
#include <span>

namespace gesture::kernels {

// Temporal convolution with kernel 3, stride 1 and one frame of zero
// padding on each side. Layouts: x [N, Cin, T], w [Cout, Cin, 3], y [N, Cout, T].
struct Conv1dShape {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t length = 1;
};

inline constexpr std::size_t kConvTaps = 3;

// Per-channel statistics over batch and time of an [N, C, T] tensor.
struct ChannelShape {
  std::size_t batch = 1;
  std::size_t channels = 1;
  std::size_t length = 1;
};

namespace serial {

void conv1d_forward(const Conv1dShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
// dx += conv^T(dy)
void conv1d_backward_input(const Conv1dShape& s, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx);
// dw += dy * x, db += sum(dy)
void conv1d_backward_weight(const Conv1dShape& s, std::span<const double> x,
                            std::span<const double> dy, std::span<double> dw,
                            std::span<double> db);

// Batch mean and biased variance per channel.
void channel_moments(const ChannelShape& s, std::span<const double> x, std::span<double> mean,
                     std::span<double> var);
// y = gamma * (x - mean) * inv_std + beta; writes xhat as well.
void batchnorm_apply(const ChannelShape& s, std::span<const double> x,
                     std::span<const double> mean, std::span<const double> inv_std,
                     std::span<const double> gamma, std::span<const double> beta,
                     std::span<double> xhat, std::span<double> y);
// Backward of training-mode batch normalisation. Accumulates into dx,
// dgamma, dbeta.
void batchnorm_backward(const ChannelShape& s, std::span<const double> dy,
                        std::span<const double> xhat, std::span<const double> inv_std,
                        std::span<const double> gamma, std::span<double> dx,
                        std::span<double> dgamma, std::span<double> dbeta);

}  // namespace serial

namespace parallel {

void conv1d_forward(const Conv1dShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y);
void conv1d_backward_input(const Conv1dShape& s, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx);
void conv1d_backward_weight(const Conv1dShape& s, std::span<const double> x,
                            std::span<const double> dy, std::span<double> dw,
                            std::span<double> db);

void channel_moments(const ChannelShape& s, std::span<const double> x, std::span<double> mean,
                     std::span<double> var);
void batchnorm_apply(const ChannelShape& s, std::span<const double> x,
                     std::span<const double> mean, std::span<const double> inv_std,
                     std::span<const double> gamma, std::span<const double> beta,
                     std::span<double> xhat, std::span<double> y);
void batchnorm_backward(const ChannelShape& s, std::span<const double> dy,
                        std::span<const double> xhat, std::span<const double> inv_std,
                        std::span<const double> gamma, std::span<double> dx,
                        std::span<double> dgamma, std::span<double> dbeta);

}  // namespace parallel

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace gesture::kernels
