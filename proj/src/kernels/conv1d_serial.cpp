#include "gesture/kernels.hpp"

// Direct transcriptions of the convolution sums, one output element at a
// time. Kept as the reference the parallel kernels are tested against.

namespace gesture::kernels::serial {

void conv1d_forward(const Conv1dShape& s, std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y) {
  const std::size_t T = s.length;
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t co = 0; co < s.out_channels; ++co) {
      for (std::size_t t = 0; t < T; ++t) {
        double acc = b[co];
        for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
          for (std::size_t k = 0; k < kConvTaps; ++k) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - 1;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
            acc += w[(co * s.in_channels + ci) * kConvTaps + k] *
                   x[(n * s.in_channels + ci) * T + static_cast<std::size_t>(src)];
          }
        }
        y[(n * s.out_channels + co) * T + t] = acc;
      }
    }
  }
}

void conv1d_backward_input(const Conv1dShape& s, std::span<const double> dy,
                           std::span<const double> w, std::span<double> dx) {
  const std::size_t T = s.length;
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      for (std::size_t t = 0; t < T; ++t) {
        double acc = 0.0;
        for (std::size_t co = 0; co < s.out_channels; ++co) {
          for (std::size_t k = 0; k < kConvTaps; ++k) {
            // x[t] fed output t' = t - k + 1.
            const std::ptrdiff_t out = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(k) + 1;
            if (out < 0 || out >= static_cast<std::ptrdiff_t>(T)) continue;
            acc += w[(co * s.in_channels + ci) * kConvTaps + k] *
                   dy[(n * s.out_channels + co) * T + static_cast<std::size_t>(out)];
          }
        }
        dx[(n * s.in_channels + ci) * T + t] += acc;
      }
    }
  }
}

void conv1d_backward_weight(const Conv1dShape& s, std::span<const double> x,
                            std::span<const double> dy, std::span<double> dw,
                            std::span<double> db) {
  const std::size_t T = s.length;
  for (std::size_t co = 0; co < s.out_channels; ++co) {
    double bias_acc = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      for (std::size_t t = 0; t < T; ++t) bias_acc += dy[(n * s.out_channels + co) * T + t];
    }
    db[co] += bias_acc;
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      for (std::size_t k = 0; k < kConvTaps; ++k) {
        double acc = 0.0;
        for (std::size_t n = 0; n < s.batch; ++n) {
          for (std::size_t t = 0; t < T; ++t) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) - 1;
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
            acc += dy[(n * s.out_channels + co) * T + t] *
                   x[(n * s.in_channels + ci) * T + static_cast<std::size_t>(src)];
          }
        }
        dw[(co * s.in_channels + ci) * kConvTaps + k] += acc;
      }
    }
  }
}

}  // namespace gesture::kernels::serial
