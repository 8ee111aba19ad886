#include "gesture/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gesture/error.hpp"
#include "gesture/rng.hpp"

namespace gesture::synthetic {

using annotation::Stream;

Mapping Mapping::from_seed(std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0xfeed));
  Mapping m;
  const std::size_t fan_in = audio::kStaticDims * kLags;
  m.latent_filters.resize(kLatents * fan_in);
  for (double& w : m.latent_filters) w = rng.normal() / std::sqrt(static_cast<double>(fan_in));
  m.readout.resize(kChannels * kLatents);
  for (double& w : m.readout) w = rng.normal() / std::sqrt(static_cast<double>(kLatents));
  m.offset.resize(kChannels);
  for (double& o : m.offset) o = rng.uniform(-0.5, 0.5);
  m.phase.resize(kChannels);
  for (double& p : m.phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return m;
}

std::size_t Mapping::channel_index(Stream stream, std::size_t channel) {
  switch (stream) {
    case Stream::Face: return channel;
    case Stream::Body: return annotation::kFaceDims + channel;
    case Stream::Hand: return annotation::kFaceDims + annotation::kBodyDims + channel;
  }
  return 0;
}

namespace {

std::vector<double> latents(const Mapping& m, const audio::AudioFeatureSequence& features) {
  const std::size_t T = features.length();
  std::vector<double> u(Mapping::kLatents * T, 0.0);
  for (std::size_t l = 0; l < Mapping::kLatents; ++l) {
    for (std::size_t t = 0; t < T; ++t) {
      double acc = 0.0;
      for (std::size_t c = 0; c < audio::kStaticDims; ++c) {
        for (std::size_t lag = 0; lag < Mapping::kLags; ++lag) {
          const std::size_t src = t >= lag ? t - lag : 0;
          acc += m.latent_filters[(l * audio::kStaticDims + c) * Mapping::kLags + lag] *
                 features.frames[src][c];
        }
      }
      u[l * T + t] = acc;
    }
  }
  return u;
}

double channel_drive(const Mapping& m, const std::vector<double>& u, std::size_t T,
                     std::size_t index, std::size_t t) {
  double z = 0.0;
  for (std::size_t l = 0; l < Mapping::kLatents; ++l) {
    z += m.readout[index * Mapping::kLatents + l] * u[l * T + t];
  }
  return z;
}

}  // namespace

std::vector<double> Mapping::drive(const audio::AudioFeatureSequence& features, Stream stream,
                                   std::size_t channel) const {
  const auto u = latents(*this, features);
  const std::size_t T = features.length();
  const std::size_t index = channel_index(stream, channel);
  std::vector<double> z(T);
  for (std::size_t t = 0; t < T; ++t) z[t] = channel_drive(*this, u, T, index, t);
  return z;
}

annotation::GestureSequence Mapping::gestures_for(const audio::AudioFeatureSequence& features) const {
  const auto u = latents(*this, features);
  const std::size_t T = features.length();
  annotation::GestureSequence seq;
  seq.resize(T);
  auto value = [&](std::size_t index, std::size_t t) {
    const double z = channel_drive(*this, u, T, index, t);
    return z + offset[index] + wobble * std::sin(2.0 * z + phase[index]);
  };
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < annotation::kFaceDims; ++c) {
      seq.face[t][c] = face_scale * value(channel_index(Stream::Face, c), t);
    }
    for (std::size_t c = 0; c < annotation::kBodyDims; ++c) {
      seq.body[t][c] = pose_scale * value(channel_index(Stream::Body, c), t);
    }
    for (std::size_t c = 0; c < annotation::kHandDims; ++c) {
      seq.hand[t][c] = pose_scale * value(channel_index(Stream::Hand, c), t);
    }
  }
  return seq;
}

audio::AudioFeatureSequence random_features(std::uint64_t seed, std::size_t length) {
  if (length < 2) fail(ErrorKind::TooShort, "synthetic sequences need at least 2 frames");
  Rng rng(seed);
  constexpr std::size_t kPartials = 4;
  std::vector<audio::StaticFrame> statics(length);
  for (std::size_t c = 0; c < audio::kStaticDims; ++c) {
    double freq[kPartials], amp[kPartials], phase[kPartials];
    for (std::size_t j = 0; j < kPartials; ++j) {
      freq[j] = rng.uniform(0.1, 2.0);
      amp[j] = rng.uniform(0.3, 0.7);
      phase[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    for (std::size_t t = 0; t < length; ++t) {
      double v = 0.0;
      for (std::size_t j = 0; j < kPartials; ++j) {
        v += amp[j] * std::sin(2.0 * std::numbers::pi * freq[j] * t / audio::kFrameRate + phase[j]);
      }
      statics[t][c] = v;
    }
  }
  const auto deltas = audio::compute_deltas(statics);
  audio::AudioFeatureSequence seq;
  seq.frames.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    std::copy(statics[t].begin(), statics[t].end(), seq.frames[t].begin());
    std::copy(deltas[t].begin(), deltas[t].end(),
              seq.frames[t].begin() + audio::kStaticDims);
  }
  return seq;
}

annotation::Corpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_sequences,
                                             std::size_t length, const std::string& subject_id) {
  if (n_sequences < 1) fail(ErrorKind::InvalidInput, "need at least one synthetic sequence");
  if (length < annotation::kWindowLength) {
    fail(ErrorKind::InvalidInput, "synthetic sequences need at least 64 frames");
  }
  const Mapping mapping = Mapping::from_seed(seed);
  annotation::Corpus corpus(n_sequences);
  const auto count = static_cast<std::ptrdiff_t>(n_sequences);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    auto& rec = corpus[static_cast<std::size_t>(i)];
    char id[32];
    std::snprintf(id, sizeof id, "seq%03td", i);
    rec.id = id;
    rec.subject_id = subject_id;
    rec.features = random_features(Rng::mix(seed, static_cast<std::uint64_t>(i) + 1), length);
    rec.gestures = mapping.gestures_for(rec.features);
  }
  return corpus;
}

}  // namespace gesture::synthetic
