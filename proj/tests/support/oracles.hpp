#pragma once

// Independent reference computations: direct double loops, no FFT, no
// tridiagonal shortcuts.

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

struct Mfcc {
  std::array<double, 13> mfcc{};
  double log_energy = 0.0;
};

// 25 ms Hamming window, pre-emphasis 0.97 (first sample against itself),
// zero-padded 512-point DFT by direct summation, 40 triangular filters
// equally spaced on the HTK mel scale between 0 Hz and Nyquist, natural log
// with floor 1e-10, orthonormal DCT-II. Log energy is the mean square of the
// raw window.
inline Mfcc mfcc(std::span<const double> x, int sample_rate = 16000) {
  const std::size_t N = x.size();
  std::size_t nfft = 1;
  while (nfft < N) nfft *= 2;
  const std::size_t filters = 40;
  const double pi = std::numbers::pi;

  std::vector<double> frame(N);
  for (std::size_t n = 0; n < N; ++n) {
    const double prev = n == 0 ? x[0] : x[n - 1];
    const double hamming = 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(n) / static_cast<double>(N - 1));
    frame[n] = (x[n] - 0.97 * prev) * hamming;
  }

  std::vector<double> power(nfft / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const double a = -2.0 * pi * static_cast<double>(k * n % nfft) / static_cast<double>(nfft);
      re += frame[n] * std::cos(a);
      im += frame[n] * std::sin(a);
    }
    power[k] = re * re + im * im;
  }

  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const double top = mel(sample_rate / 2.0);
  std::vector<double> log_mel(filters);
  for (std::size_t m = 0; m < filters; ++m) {
    const double lo = top * static_cast<double>(m) / static_cast<double>(filters + 1);
    const double mid = top * static_cast<double>(m + 1) / static_cast<double>(filters + 1);
    const double hi = top * static_cast<double>(m + 2) / static_cast<double>(filters + 1);
    double e = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double f = mel(static_cast<double>(k) * sample_rate / static_cast<double>(nfft));
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      e += w * power[k];
    }
    log_mel[m] = std::log(std::max(e, 1e-10));
  }

  Mfcc out;
  for (std::size_t k = 0; k < 13; ++k) {
    double c = 0.0;
    for (std::size_t n = 0; n < filters; ++n) {
      c += log_mel[n] * std::cos(pi * static_cast<double>(k) * (static_cast<double>(n) + 0.5) / static_cast<double>(filters));
    }
    out.mfcc[k] = c * std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(filters));
  }
  double energy = 0.0;
  for (double v : x) energy += v * v;
  out.log_energy = std::log(energy / static_cast<double>(N) + 1e-10);
  return out;
}

// Solves A x = b by Gaussian elimination with partial pivoting on a dense
// copy of A.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

// Natural cubic spline: second derivatives M from the full n x n system
// (M_0 = M_{n-1} = 0), then the standard piecewise cubic.
inline double natural_spline(std::span<const double> xs, std::span<const double> ys, double q) {
  const std::size_t n = xs.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> rhs(n, 0.0);
  a[0][0] = 1.0;
  a[n - 1][n - 1] = 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = xs[i] - xs[i - 1], h1 = xs[i + 1] - xs[i];
    a[i][i - 1] = h0 / 6.0;
    a[i][i] = (h0 + h1) / 3.0;
    a[i][i + 1] = h1 / 6.0;
    rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
  }
  const auto m = solve_dense(a, rhs);
  std::size_t k = 0;
  while (k + 2 < n && q > xs[k + 1]) ++k;
  const double h = xs[k + 1] - xs[k];
  const double A = (xs[k + 1] - q) / h, B = (q - xs[k]) / h;
  return A * ys[k] + B * ys[k + 1] + ((A * A * A - A) * m[k] + (B * B * B - B) * m[k + 1]) * h * h / 6.0;
}

// exp(-k^2 / (2 sigma^2)) / Z over |k| <= ceil(3 sigma).
inline std::vector<double> gaussian(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k;
  double z = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k.push_back(std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma)));
    z += k.back();
  }
  for (double& v : k) v /= z;
  return k;
}

// Maximal runs of frames not covered by any length-`window` span whose mean
// is below `threshold`, enumerating every span directly.
inline std::vector<std::pair<std::size_t, std::size_t>> confidence_runs(std::span<const double> c,
                                                                       double threshold,
                                                                       std::size_t window,
                                                                       std::size_t min_length) {
  const std::size_t n = c.size();
  std::vector<bool> bad(n, false);
  const std::size_t w = std::min(window, n);
  for (std::size_t s = 0; s + w <= n; ++s) {
    double sum = 0.0;
    for (std::size_t i = s; i < s + w; ++i) sum += c[i];
    if (sum / static_cast<double>(w) < threshold) {
      for (std::size_t i = s; i < s + w; ++i) bad[i] = true;
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t t = 0;
  while (t < n) {
    if (bad[t]) { ++t; continue; }
    std::size_t e = t;
    while (e < n && !bad[e]) ++e;
    if (e - t >= min_length) runs.emplace_back(t, e);
    t = e;
  }
  return runs;
}

}  // namespace oracle
