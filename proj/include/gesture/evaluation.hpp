#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gesture/annotation.hpp"
#include "gesture/io.hpp"
#include "gesture/model.hpp"

namespace gesture::evaluation {

using annotation::FaceParams;

inline constexpr std::size_t kDefaultLipVertices = 20;

// Linear lip model: vertex positions (mm) = neutral + sum_i theta_i basis_i.
struct LipBlendshapeBasis {
  std::size_t vertices = 0;
  std::vector<double> neutral;  // [L][3]
  std::vector<double> basis;    // [64][L][3]

  void validate() const;
};

// Lip contour on an ellipse with smooth random per-coefficient displacement
// fields of sub-millimetre magnitude.
LipBlendshapeBasis synthesize_lip_basis(std::uint64_t seed, std::size_t vertices = kDefaultLipVertices);

// GCK1 container with arrays "neutral" [L, 3] and "basis" [64, L, 3].
io::ArrayContainer to_container(const LipBlendshapeBasis& basis);
LipBlendshapeBasis lip_basis_from_container(const io::ArrayContainer& container);
LipBlendshapeBasis load_lip_basis(const std::filesystem::path& path);
void save_lip_basis(const std::filesystem::path& path, const LipBlendshapeBasis& basis);

// [L][3] positions. Coefficient count other than 64 is a shape error.
std::vector<double> lip_vertices(std::span<const double> face, const LipBlendshapeBasis& basis);

// Mean over frames and vertices of the Euclidean vertex distance.
double lip_error(std::span<const FaceParams> pred, std::span<const FaceParams> gt,
                 const LipBlendshapeBasis& basis);

// Every sequence against a uniformly chosen different sequence, truncated to
// the shorter length; mean of the per-sequence errors.
double random_baseline(const annotation::Corpus& corpus, const LipBlendshapeBasis& basis,
                       std::uint64_t seed);

// Synthesizes every sequence with the generator (eval mode) and averages the
// per-sequence lip errors.
double model_lip_error(model::ModelBundle& model, const annotation::Corpus& corpus,
                       const LipBlendshapeBasis& basis);

// Audio window paired with a gesture window of the same length; in-sync
// pairs come from the same sequence and start frame.
struct SyncPair {
  std::vector<audio::FeatureFrame> features;
  std::vector<annotation::BodyParams> body;
  std::vector<annotation::HandParams> hand;
  bool in_sync = true;
};

SyncPair make_sync_pair(const annotation::SequenceRecord& audio_source, std::size_t audio_start,
                        const annotation::SequenceRecord& gesture_source, std::size_t gesture_start,
                        std::size_t length);

// Held-out pairs: an in-sync pair at every `stride` frames of each sequence,
// each matched by an off-sync pair of the same audio and a random window of
// another sequence.
std::vector<SyncPair> sync_test_pairs(const annotation::Corpus& corpus, std::size_t length,
                                      std::size_t stride, std::uint64_t seed);

// Stacks pairs into [N, C, W] tensors.
struct SyncBatch {
  ag::Tensor features;
  ag::Tensor body;
  ag::Tensor hand;
  std::vector<double> labels;
};
SyncBatch stack_pairs(std::span<const SyncPair> pairs);

// Percentages.
struct SyncAccuracy {
  double in_sync = 0.0;
  double off_sync = 0.0;
  double combined = 0.0;
  std::size_t in_sync_count = 0;
  std::size_t off_sync_count = 0;
};

double combine_accuracies(double in_sync, double off_sync);
// p > 0.5 counts as in-sync; exactly 0.5 counts as off-sync.
SyncAccuracy accuracy_from_probabilities(std::span<const double> probs, std::span<const bool> in_sync);
// Eval-mode classification of every pair.
SyncAccuracy sync_accuracy_report(model::Discriminator& classifier, std::span<const SyncPair> pairs);

// Eval-mode plausibility of one audio/gesture pair of arbitrary length: the
// mean discriminator probability over the windows tiling the sequence.
double plausibility(model::Discriminator& classifier, const audio::AudioFeatureSequence& features,
                    const annotation::GestureSequence& gestures);

struct SubjectReport {
  std::string subject_id;
  std::size_t sequences = 0;
  double ours_mm = 0.0;
  double random_mm = 0.0;
};

nlohmann::json report_json(std::span<const SubjectReport> subjects, const SyncAccuracy* sync,
                           std::size_t window_length);

}  // namespace gesture::evaluation
