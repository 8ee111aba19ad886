#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace gesture::audio {

inline constexpr double kFrameRate = 15.0;
inline constexpr std::size_t kNumCepstra = 13;
// 13 cepstra + log energy.
inline constexpr std::size_t kStaticDims = kNumCepstra + 1;
// Static features followed by their first differences.
inline constexpr std::size_t kFeatureDims = 2 * kStaticDims;

struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = 16000;
};

// Throws invalid-input on empty, non-finite or non-positive rate.
void validate(const AudioSignal& signal);

// Layout: [0,13) mfcc, 13 log energy, [14,27) mfcc deltas, 27 log-energy delta.
using FeatureFrame = std::array<double, kFeatureDims>;
using StaticFrame = std::array<double, kStaticDims>;

struct AudioFeatureSequence {
  std::vector<FeatureFrame> frames;
  double frame_rate = kFrameRate;

  std::size_t length() const { return frames.size(); }
};

struct MfccConfig {
  int sample_rate = 16000;
  double window_seconds = 0.025;
  std::size_t num_filters = 40;
  double low_hz = 0.0;
  double high_hz = 0.0;  // 0 selects Nyquist
  double preemphasis = 0.97;
  double energy_floor = 1e-10;

  std::size_t window_length() const;
  std::size_t fft_size() const;
  double upper_hz() const { return high_hz > 0.0 ? high_hz : sample_rate / 2.0; }
};

struct MfccFrame {
  std::array<double, kNumCepstra> mfcc{};
  double log_energy = 0.0;
};

// Rescales to RMS `target_rms`, clipping to [-1, 1]. Silence passes through.
AudioSignal normalize_signal(const AudioSignal& signal, double target_rms = 0.1);

// One analysis window: pre-emphasis, Hamming, |FFT|^2, mel filterbank, log,
// orthonormal DCT-II. log_energy is computed on the raw window.
MfccFrame compute_mfcc_frame(std::span<const double> window, const MfccConfig& config = {});

// Backward differences; frame 0 gets a zero delta.
std::vector<StaticFrame> compute_deltas(std::span<const StaticFrame> sequence);

// One frame per 1/15 s, each analysis window centred on the middle of its
// video frame (zero padded at the signal edges).
AudioFeatureSequence extract_features(const AudioSignal& signal, const MfccConfig& config = {});

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace gesture::audio
