#include "gesture/kernels.hpp"

namespace gesture::kernels::parallel {

void channel_moments(const ChannelShape& s, std::span<const double> x, std::span<double> mean,
                     std::span<double> var) {
  const double count = static_cast<double>(s.batch * s.length);
  const auto channels = static_cast<std::ptrdiff_t>(s.channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      const double* row = x.data() + (n * s.channels + static_cast<std::size_t>(c)) * s.length;
      for (std::size_t t = 0; t < s.length; ++t) sum += row[t];
    }
    const double m = sum / count;
    double sq = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      const double* row = x.data() + (n * s.channels + static_cast<std::size_t>(c)) * s.length;
      for (std::size_t t = 0; t < s.length; ++t) sq += (row[t] - m) * (row[t] - m);
    }
    mean[c] = m;
    var[c] = sq / count;
  }
}

void batchnorm_apply(const ChannelShape& s, std::span<const double> x,
                     std::span<const double> mean, std::span<const double> inv_std,
                     std::span<const double> gamma, std::span<const double> beta,
                     std::span<double> xhat, std::span<double> y) {
  const auto rows = static_cast<std::ptrdiff_t>(s.batch * s.channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t c = static_cast<std::size_t>(r) % s.channels;
    const std::size_t base = static_cast<std::size_t>(r) * s.length;
    const double m = mean[c], is = inv_std[c], g = gamma[c], b = beta[c];
    for (std::size_t t = 0; t < s.length; ++t) {
      const double h = (x[base + t] - m) * is;
      xhat[base + t] = h;
      y[base + t] = g * h + b;
    }
  }
}

void batchnorm_backward(const ChannelShape& s, std::span<const double> dy,
                        std::span<const double> xhat, std::span<const double> inv_std,
                        std::span<const double> gamma, std::span<double> dx,
                        std::span<double> dgamma, std::span<double> dbeta) {
  const double count = static_cast<double>(s.batch * s.length);
  const auto channels = static_cast<std::ptrdiff_t>(s.channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < channels; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      const std::size_t base = (n * s.channels + static_cast<std::size_t>(c)) * s.length;
      for (std::size_t t = 0; t < s.length; ++t) {
        sum_dy += dy[base + t];
        sum_dy_xhat += dy[base + t] * xhat[base + t];
      }
    }
    dbeta[c] += sum_dy;
    dgamma[c] += sum_dy_xhat;
    const double scale = gamma[c] * inv_std[c] / count;
    for (std::size_t n = 0; n < s.batch; ++n) {
      const std::size_t base = (n * s.channels + static_cast<std::size_t>(c)) * s.length;
      for (std::size_t t = 0; t < s.length; ++t) {
        dx[base + t] += scale * (count * dy[base + t] - sum_dy - xhat[base + t] * sum_dy_xhat);
      }
    }
  }
}

}  // namespace gesture::kernels::parallel
