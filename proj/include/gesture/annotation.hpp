#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gesture/audio.hpp"
#include "gesture/io.hpp"

namespace gesture::annotation {

inline constexpr std::size_t kFaceDims = 64;
inline constexpr std::size_t kBodyKeypointDims = 39;  // 13 upper-body joints x XYZ
inline constexpr std::size_t kBodyDims = kBodyKeypointDims + 3;
inline constexpr std::size_t kHandDims = 126;  // 2 hands x 21 joints x XYZ
inline constexpr std::size_t kWindowLength = 64;
inline constexpr std::size_t kDefaultOverlap = 4;
inline constexpr std::size_t kDefaultMaxGap = 8;
inline constexpr std::size_t kDefaultConfidenceWindow = 15;
inline constexpr double kDefaultSigma = 1.5;

using FaceParams = std::array<double, kFaceDims>;
// Root-relative keypoints followed by the axis-angle head rotation.
using BodyParams = std::array<double, kBodyDims>;
using HandParams = std::array<double, kHandDims>;

enum class Stream { Face = 0, Body = 1, Hand = 2 };
using MissingMask = std::array<bool, 3>;

struct GestureSequence {
  std::vector<FaceParams> face;
  std::vector<BodyParams> body;
  std::vector<HandParams> hand;
  std::vector<double> confidence;
  std::vector<MissingMask> missing;
  double frame_rate = audio::kFrameRate;

  std::size_t length() const { return face.size(); }
  void resize(std::size_t frames);
  bool is_missing(std::size_t t, Stream s) const { return missing[t][static_cast<int>(s)]; }
  bool any_missing(std::size_t t) const { return missing[t][0] || missing[t][1] || missing[t][2]; }
  // Stream lengths, frame rate, confidence range, head-rotation bound and
  // finiteness of every known frame.
  void validate() const;
};

struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t size() const { return end - begin; }
  bool operator==(const Segment&) const = default;
};

// Frames covered by any length-`window` span whose mean confidence falls
// below `threshold` are rejected; the remaining maximal runs of at least
// `min_length` frames are returned in order.
std::vector<Segment> confidence_segments(std::span<const double> confidence, double threshold,
                                         std::size_t window, std::size_t min_length = kWindowLength);

std::vector<GestureSequence> confidence_filter(const GestureSequence& seq, double threshold,
                                               std::size_t window = kDefaultConfidenceWindow);

GestureSequence slice(const GestureSequence& seq, Segment segment);
audio::AudioFeatureSequence slice(const audio::AudioFeatureSequence& seq, Segment segment);

// Natural cubic spline through (xs, ys), xs strictly increasing, evaluated
// at `query`. Two knots degenerate to the straight line.
std::vector<double> natural_cubic_spline(std::span<const double> xs, std::span<const double> ys,
                                         std::span<const double> query);

// Fills interior gaps of at most `max_gap` missing frames per stream with a
// natural cubic spline through up to 4 known frames on each side. Longer
// gaps and gaps touching the sequence ends stay missing.
GestureSequence fill_gaps_cubic(const GestureSequence& seq, std::size_t max_gap = kDefaultMaxGap);

// Channel-major real matrix.
struct ChannelMatrix {
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<double> data;

  ChannelMatrix() = default;
  ChannelMatrix(std::size_t c, std::size_t t) : channels(c), length(t), data(c * t, 0.0) {}
  double& at(std::size_t c, std::size_t t) { return data[c * length + t]; }
  double at(std::size_t c, std::size_t t) const { return data[c * length + t]; }
};

// Unit-sum discrete Gaussian with radius ceil(3 sigma); element k is offset
// k - radius.
std::vector<double> gaussian_kernel(double sigma);

// Per-channel Gaussian filtering with half-sample symmetric reflection at
// the borders, which keeps each channel's mean.
ChannelMatrix gaussian_smooth(const ChannelMatrix& input, double sigma = kDefaultSigma);

// Smooths the body (keypoints and head rotation) and hand streams in place.
// Face coefficients are left alone.
void smooth_pose(GestureSequence& seq, double sigma = kDefaultSigma);

template <std::size_t N>
ChannelMatrix to_channels(std::span<const std::array<double, N>> frames) {
  ChannelMatrix m(N, frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t c = 0; c < N; ++c) m.at(c, t) = frames[t][c];
  }
  return m;
}

template <std::size_t N>
void from_channels(const ChannelMatrix& m, std::span<std::array<double, N>> frames) {
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t c = 0; c < N; ++c) frames[t][c] = m.at(c, t);
  }
}

struct TrainingWindow {
  std::vector<audio::FeatureFrame> features;
  std::vector<FaceParams> face;
  std::vector<BodyParams> body;
  std::vector<HandParams> hand;
  std::string subject_id;
};

// Windows start at 0, (length - overlap), 2 (length - overlap), ... while
// they fit; windows that would contain a missing frame are skipped.
std::vector<TrainingWindow> make_training_windows(const audio::AudioFeatureSequence& features,
                                                  const GestureSequence& gestures,
                                                  std::size_t overlap = kDefaultOverlap,
                                                  const std::string& subject_id = {},
                                                  std::size_t length = kWindowLength);

// One aligned (features, gestures) sequence of a subject's corpus.
struct SequenceRecord {
  std::string id;
  std::string subject_id;
  audio::AudioFeatureSequence features;
  GestureSequence gestures;
};

using Corpus = std::vector<SequenceRecord>;

// Splits by sequence; `fraction` of the (shuffled) sequences go to the
// first part, at least one sequence to each side when possible.
std::pair<Corpus, Corpus> split_by_sequence(const Corpus& corpus, double fraction, std::uint64_t seed);

// GFT1 conversion. NaN rows mark missing frames.
io::FrameMatrix features_to_matrix(const audio::AudioFeatureSequence& seq);
audio::AudioFeatureSequence features_from_matrix(const io::FrameMatrix& m);

// Manifest layout:
// {"sequences": [{"id", "subject", "features", "face", "body", "hand",
//                 "confidence" (optional)}]}
// with paths relative to the manifest's directory. "audio" (a WAV path) may
// replace "features".
struct ManifestEntry {
  std::string id;
  std::string subject_id;
  std::filesystem::path features;
  std::filesystem::path audio;
  std::filesystem::path face;
  std::filesystem::path body;
  std::filesystem::path hand;
  std::filesystem::path confidence;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

GestureSequence load_gestures(const ManifestEntry& entry);
Corpus load_corpus(const std::filesystem::path& manifest_path);
// Writes one GFT1 file per stream plus features and a manifest.
void save_corpus(const std::filesystem::path& dir, const Corpus& corpus);

io::FrameMatrix stream_to_matrix(const GestureSequence& seq, Stream stream);

}  // namespace gesture::annotation
