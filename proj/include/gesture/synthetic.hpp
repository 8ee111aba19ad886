#pragma once

#include <cstdint>
#include <vector>

#include "gesture/annotation.hpp"

namespace gesture::synthetic {

// Fixed audio-to-pose mapping of one synthetic "subject". Every gesture
// channel is a linear read-out of a few latent tracks (each a causal,
// 3-frame filter over the static features) plus a small sinusoidal term.
struct Mapping {
  static constexpr std::size_t kLatents = 6;
  static constexpr std::size_t kLags = 3;
  static constexpr std::size_t kChannels =
      annotation::kFaceDims + annotation::kBodyDims + annotation::kHandDims;

  std::vector<double> latent_filters;  // [kLatents][kStaticDims][kLags]
  std::vector<double> readout;         // [kChannels][kLatents]
  std::vector<double> offset;          // [kChannels]
  std::vector<double> phase;           // [kChannels]
  double face_scale = 1.0;
  double pose_scale = 0.1;
  double wobble = 0.2;

  static Mapping from_seed(std::uint64_t seed);

  // Flattened channel index of (stream, channel).
  static std::size_t channel_index(annotation::Stream stream, std::size_t channel);
  // The linear combination of feature history that drives one channel,
  // before the sinusoidal term and scaling.
  std::vector<double> drive(const audio::AudioFeatureSequence& features,
                            annotation::Stream stream, std::size_t channel) const;
  annotation::GestureSequence gestures_for(const audio::AudioFeatureSequence& features) const;
};

// Smooth band-limited static tracks (sums of slow sinusoids) plus their
// backward differences.
audio::AudioFeatureSequence random_features(std::uint64_t seed, std::size_t length);

// Deterministic in `seed`: sequence i uses features seeded from (seed, i)
// and the shared mapping seeded from `seed`. All confidences are 1.
annotation::Corpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_sequences,
                                             std::size_t length,
                                             const std::string& subject_id = "synthetic");

}  // namespace gesture::synthetic
