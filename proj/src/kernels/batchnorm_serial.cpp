#include "gesture/kernels.hpp"

namespace gesture::kernels::serial {

void channel_moments(const ChannelShape& s, std::span<const double> x, std::span<double> mean,
                     std::span<double> var) {
  const double count = static_cast<double>(s.batch * s.length);
  for (std::size_t c = 0; c < s.channels; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      for (std::size_t t = 0; t < s.length; ++t) sum += x[(n * s.channels + c) * s.length + t];
    }
    const double m = sum / count;
    double sq = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      for (std::size_t t = 0; t < s.length; ++t) {
        const double d = x[(n * s.channels + c) * s.length + t] - m;
        sq += d * d;
      }
    }
    mean[c] = m;
    var[c] = sq / count;
  }
}

void batchnorm_apply(const ChannelShape& s, std::span<const double> x,
                     std::span<const double> mean, std::span<const double> inv_std,
                     std::span<const double> gamma, std::span<const double> beta,
                     std::span<double> xhat, std::span<double> y) {
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      for (std::size_t t = 0; t < s.length; ++t) {
        const std::size_t i = (n * s.channels + c) * s.length + t;
        xhat[i] = (x[i] - mean[c]) * inv_std[c];
        y[i] = gamma[c] * xhat[i] + beta[c];
      }
    }
  }
}

void batchnorm_backward(const ChannelShape& s, std::span<const double> dy,
                        std::span<const double> xhat, std::span<const double> inv_std,
                        std::span<const double> gamma, std::span<double> dx,
                        std::span<double> dgamma, std::span<double> dbeta) {
  const double count = static_cast<double>(s.batch * s.length);
  for (std::size_t c = 0; c < s.channels; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      for (std::size_t t = 0; t < s.length; ++t) {
        const std::size_t i = (n * s.channels + c) * s.length + t;
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * xhat[i];
      }
    }
    dbeta[c] += sum_dy;
    dgamma[c] += sum_dy_xhat;
    const double scale = gamma[c] * inv_std[c] / count;
    for (std::size_t n = 0; n < s.batch; ++n) {
      for (std::size_t t = 0; t < s.length; ++t) {
        const std::size_t i = (n * s.channels + c) * s.length + t;
        dx[i] += scale * (count * dy[i] - sum_dy - xhat[i] * sum_dy_xhat);
      }
    }
  }
}

}  // namespace gesture::kernels::serial
