#include "gesture/audio.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "gesture/error.hpp"

namespace gesture::audio {

namespace {

// fftw planning is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* plan) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
};

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

class MfccAnalyzer {
 public:
  explicit MfccAnalyzer(const MfccConfig& config)
      : config_(config), window_(config.window_length()), fft_size_(config.fft_size()) {
    if (window_ < 2) fail(ErrorKind::Config, "analysis window must hold at least 2 samples");
    if (config.num_filters < kNumCepstra) {
      fail(ErrorKind::Config, "need at least 13 mel filters");
    }
    if (config.upper_hz() <= config.low_hz || config.upper_hz() > config.sample_rate / 2.0) {
      fail(ErrorKind::Config, "mel filterbank band is outside [0, Nyquist]");
    }

    hamming_.resize(window_);
    for (std::size_t n = 0; n < window_; ++n) {
      hamming_[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (window_ - 1));
    }

    const std::size_t bins = fft_size_ / 2 + 1;
    const std::size_t filters = config.num_filters;
    filterbank_.assign(filters * bins, 0.0);
    const double mel_lo = hz_to_mel(config.low_hz);
    const double mel_hi = hz_to_mel(config.upper_hz());
    const double step = (mel_hi - mel_lo) / static_cast<double>(filters + 1);
    for (std::size_t m = 0; m < filters; ++m) {
      const double left = mel_lo + step * m;
      const double center = left + step;
      const double right = center + step;
      for (std::size_t k = 0; k < bins; ++k) {
        const double mel = hz_to_mel(static_cast<double>(k) * config.sample_rate / fft_size_);
        double w = 0.0;
        if (mel > left && mel <= center) {
          w = (mel - left) / (center - left);
        } else if (mel > center && mel < right) {
          w = (right - mel) / (right - center);
        }
        filterbank_[m * bins + k] = w;
      }
    }

    dct_.assign(kNumCepstra * filters, 0.0);
    for (std::size_t k = 0; k < kNumCepstra; ++k) {
      const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / filters);
      for (std::size_t n = 0; n < filters; ++n) {
        dct_[k * filters + n] =
            scale * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * filters));
      }
    }

    FftwBuffer<double> in(fftw_alloc_real(fft_size_));
    FftwBuffer<fftw_complex> out(fftw_alloc_complex(bins));
    std::lock_guard lock(planner_mutex());
    plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(fft_size_), in.get(), out.get(),
                                     FFTW_ESTIMATE));
    if (!plan_) fail(ErrorKind::Internal, "fftw planning failed");
  }

  std::size_t window() const { return window_; }

  MfccFrame analyze(std::span<const double> samples) const {
    if (samples.size() != window_) {
      fail(ErrorKind::Config, "window length " + std::to_string(samples.size()) +
                                  " does not match configured " + std::to_string(window_));
    }
    const std::size_t bins = fft_size_ / 2 + 1;
    const std::size_t filters = config_.num_filters;
    FftwBuffer<double> in(fftw_alloc_real(fft_size_));
    FftwBuffer<fftw_complex> out(fftw_alloc_complex(bins));

    MfccFrame frame;
    double energy = 0.0;
    for (double s : samples) energy += s * s;
    frame.log_energy = std::log(energy / static_cast<double>(window_) + config_.energy_floor);

    in[0] = (samples[0] - config_.preemphasis * samples[0]) * hamming_[0];
    for (std::size_t n = 1; n < window_; ++n) {
      in[n] = (samples[n] - config_.preemphasis * samples[n - 1]) * hamming_[n];
    }
    std::fill(in.get() + window_, in.get() + fft_size_, 0.0);
    fftw_execute_dft_r2c(plan_.get(), in.get(), out.get());

    std::vector<double> power(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    std::vector<double> log_mel(filters);
    for (std::size_t m = 0; m < filters; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += filterbank_[m * bins + k] * power[k];
      log_mel[m] = std::log(std::max(e, config_.energy_floor));
    }
    for (std::size_t k = 0; k < kNumCepstra; ++k) {
      double c = 0.0;
      for (std::size_t n = 0; n < filters; ++n) c += dct_[k * filters + n] * log_mel[n];
      frame.mfcc[k] = c;
    }
    return frame;
  }

 private:
  MfccConfig config_;
  std::size_t window_;
  std::size_t fft_size_;
  std::vector<double> hamming_;
  std::vector<double> filterbank_;
  std::vector<double> dct_;
  std::unique_ptr<fftw_plan_s, PlanDeleter> plan_;
};

StaticFrame to_static(const MfccFrame& f) {
  StaticFrame s{};
  std::copy(f.mfcc.begin(), f.mfcc.end(), s.begin());
  s[kNumCepstra] = f.log_energy;
  return s;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t MfccConfig::window_length() const {
  return static_cast<std::size_t>(std::lround(sample_rate * window_seconds));
}

std::size_t MfccConfig::fft_size() const {
  std::size_t n = 1;
  while (n < window_length()) n <<= 1;
  return n;
}

void validate(const AudioSignal& signal) {
  if (signal.sample_rate <= 0) fail(ErrorKind::InvalidInput, "sample rate must be positive");
  if (signal.samples.empty()) fail(ErrorKind::InvalidInput, "signal has no samples");
  for (double s : signal.samples) {
    if (!std::isfinite(s)) fail(ErrorKind::InvalidInput, "signal contains non-finite samples");
  }
}

AudioSignal normalize_signal(const AudioSignal& signal, double target_rms) {
  validate(signal);
  double sum_sq = 0.0;
  for (double s : signal.samples) sum_sq += s * s;
  AudioSignal out = signal;
  if (sum_sq == 0.0) return out;
  const double rms = std::sqrt(sum_sq / static_cast<double>(signal.samples.size()));
  const double gain = target_rms / rms;
  for (double& s : out.samples) s = std::clamp(s * gain, -1.0, 1.0);
  return out;
}

MfccFrame compute_mfcc_frame(std::span<const double> window, const MfccConfig& config) {
  return MfccAnalyzer(config).analyze(window);
}

std::vector<StaticFrame> compute_deltas(std::span<const StaticFrame> sequence) {
  if (sequence.size() < 2) fail(ErrorKind::TooShort, "deltas need at least 2 frames");
  std::vector<StaticFrame> deltas(sequence.size());
  deltas[0].fill(0.0);
  for (std::size_t t = 1; t < sequence.size(); ++t) {
    for (std::size_t d = 0; d < kStaticDims; ++d) {
      deltas[t][d] = sequence[t][d] - sequence[t - 1][d];
    }
  }
  return deltas;
}

AudioFeatureSequence extract_features(const AudioSignal& signal, const MfccConfig& config) {
  validate(signal);
  if (signal.sample_rate != config.sample_rate) {
    fail(ErrorKind::Config, "signal rate " + std::to_string(signal.sample_rate) +
                                " Hz does not match configured " +
                                std::to_string(config.sample_rate) + " Hz");
  }
  const MfccAnalyzer analyzer(config);
  const std::size_t window = analyzer.window();
  const std::size_t n = signal.samples.size();
  if (n < window) fail(ErrorKind::TooShort, "signal is shorter than one analysis window");

  const auto rate = static_cast<std::size_t>(config.sample_rate);
  const auto fps = static_cast<std::size_t>(kFrameRate);
  const std::size_t frames = (n * fps + rate - 1) / rate;
  std::vector<StaticFrame> statics(std::max<std::size_t>(frames, 2));

  const auto count = static_cast<std::ptrdiff_t>(frames);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    std::vector<double> buf(window, 0.0);
    const auto center = static_cast<std::ptrdiff_t>(((2 * t + 1) * rate) / (2 * fps));
    const std::ptrdiff_t start = center - static_cast<std::ptrdiff_t>(window / 2);
    for (std::size_t i = 0; i < window; ++i) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n)) buf[i] = signal.samples[idx];
    }
    statics[t] = to_static(analyzer.analyze(buf));
  }

  std::vector<StaticFrame> deltas;
  if (frames >= 2) {
    statics.resize(frames);
    deltas = compute_deltas(statics);
  } else {
    statics.resize(1);
    deltas.assign(1, StaticFrame{});
  }

  AudioFeatureSequence seq;
  seq.frames.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    std::copy(statics[t].begin(), statics[t].end(), seq.frames[t].begin());
    std::copy(deltas[t].begin(), deltas[t].end(), seq.frames[t].begin() + kStaticDims);
    for (double v : seq.frames[t]) {
      if (!std::isfinite(v)) fail(ErrorKind::Internal, "non-finite feature value");
    }
  }
  return seq;
}

}  // namespace gesture::audio
