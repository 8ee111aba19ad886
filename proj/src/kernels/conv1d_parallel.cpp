#include "gesture/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gesture::kernels {

namespace {
// y[n, co, :] = b[co] + sum_ci sum_k w[co, ci, k] x[n, ci, t + k - 1]
inline void conv1d_forward_row(const Conv1dShape& s, const double* x, const double* w, double b,
                               std::size_t n, std::size_t co, double* y) {
  const std::size_t T = s.length;
  for (std::size_t t = 0; t < T; ++t) y[t] = b;
  for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
    const double* xr = x + (n * s.in_channels + ci) * T;
    const double* wr = w + (co * s.in_channels + ci) * kConvTaps;
    const double w0 = wr[0], w1 = wr[1], w2 = wr[2];
    if (T == 1) {
      y[0] += w1 * xr[0];
      continue;
    }
    y[0] += w1 * xr[0] + w2 * xr[1];
    for (std::size_t t = 1; t + 1 < T; ++t) y[t] += w0 * xr[t - 1] + w1 * xr[t] + w2 * xr[t + 1];
    y[T - 1] += w0 * xr[T - 2] + w1 * xr[T - 1];
  }
}

// dx[n, ci, t] += sum_co sum_k w[co, ci, k] dy[n, co, t - k + 1]
inline void conv1d_backward_input_row(const Conv1dShape& s, const double* dy, const double* w,
                                      std::size_t n, std::size_t ci, double* dx) {
  const std::size_t T = s.length;
  for (std::size_t co = 0; co < s.out_channels; ++co) {
    const double* g = dy + (n * s.out_channels + co) * T;
    const double* wr = w + (co * s.in_channels + ci) * kConvTaps;
    const double w0 = wr[0], w1 = wr[1], w2 = wr[2];
    if (T == 1) {
      dx[0] += w1 * g[0];
      continue;
    }
    dx[0] += w1 * g[0] + w0 * g[1];
    for (std::size_t t = 1; t + 1 < T; ++t) dx[t] += w2 * g[t - 1] + w1 * g[t] + w0 * g[t + 1];
    dx[T - 1] += w2 * g[T - 2] + w1 * g[T - 1];
  }
}

// Gradient of one output channel's filter bank and bias.
inline void conv1d_backward_weight_row(const Conv1dShape& s, const double* x, const double* dy,
                                       std::size_t co, double* dw, double* db) {
  const std::size_t T = s.length;
  double bias_acc = 0.0;
  for (std::size_t n = 0; n < s.batch; ++n) {
    const double* g = dy + (n * s.out_channels + co) * T;
    for (std::size_t t = 0; t < T; ++t) bias_acc += g[t];
  }
  *db += bias_acc;
  for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      const double* g = dy + (n * s.out_channels + co) * T;
      const double* xr = x + (n * s.in_channels + ci) * T;
      for (std::size_t t = 1; t < T; ++t) a0 += g[t] * xr[t - 1];
      for (std::size_t t = 0; t < T; ++t) a1 += g[t] * xr[t];
      for (std::size_t t = 0; t + 1 < T; ++t) a2 += g[t] * xr[t + 1];
    }
    double* d = dw + (co * s.in_channels + ci) * kConvTaps;
    d[0] += a0;
    d[1] += a1;
    d[2] += a2;
  }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

void conv1d_forward(const Conv1dShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  const auto rows = static_cast<std::ptrdiff_t>(s.batch * s.out_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto n = static_cast<std::size_t>(r) / s.out_channels;
    const auto co = static_cast<std::size_t>(r) % s.out_channels;
    conv1d_forward_row(s, x.data(), w.data(), b[co], n, co,
                               y.data() + static_cast<std::size_t>(r) * s.length);
  }
}

void conv1d_backward_input(const Conv1dShape& s, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx) {
  const auto rows = static_cast<std::ptrdiff_t>(s.batch * s.in_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const auto n = static_cast<std::size_t>(r) / s.in_channels;
    const auto ci = static_cast<std::size_t>(r) % s.in_channels;
    conv1d_backward_input_row(s, dy.data(), w.data(), n, ci,
                                      dx.data() + static_cast<std::size_t>(r) * s.length);
  }
}

void conv1d_backward_weight(const Conv1dShape& s, std::span<const double> x,
                            std::span<const double> dy, std::span<double> dw,
                            std::span<double> db) {
  const auto outs = static_cast<std::ptrdiff_t>(s.out_channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co = 0; co < outs; ++co) {
    conv1d_backward_weight_row(s, x.data(), dy.data(), static_cast<std::size_t>(co),
                                       dw.data(), db.data() + co);
  }
}

}  // namespace parallel
}  // namespace gesture::kernels
