#include "gesture/evaluation.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "gesture/error.hpp"
#include "gesture/rng.hpp"

namespace gesture::evaluation {

using annotation::kFaceDims;

namespace {

constexpr double kLipHalfWidthMm = 25.0;
constexpr double kLipHalfHeightMm = 10.0;
constexpr double kDisplacementMm = 0.1;
constexpr std::size_t kHarmonics = 2;

template <std::size_t C, typename Frames>
ag::Tensor stack(std::span<const SyncPair> pairs, Frames SyncPair::*member) {
  const std::size_t N = pairs.size();
  const std::size_t W = (pairs[0].*member).size();
  std::vector<double> v(N * C * W);
  for (std::size_t n = 0; n < N; ++n) {
    const auto& frames = pairs[n].*member;
    if (frames.size() != W) fail(ErrorKind::Shape, "sync pairs differ in window length");
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < W; ++t) v[(n * C + c) * W + t] = frames[t][c];
    }
  }
  return ag::Tensor::from({N, C, W}, std::move(v));
}

}  // namespace

void LipBlendshapeBasis::validate() const {
  if (vertices == 0) fail(ErrorKind::Shape, "lip basis has no vertices");
  if (neutral.size() != vertices * 3 || basis.size() != kFaceDims * vertices * 3) {
    fail(ErrorKind::Shape, "lip basis must hold neutral [L, 3] and exactly 64 components [64, L, 3]");
  }
  for (double v : neutral) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidInput, "lip basis is not finite");
  }
  for (double v : basis) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidInput, "lip basis is not finite");
  }
}

LipBlendshapeBasis synthesize_lip_basis(std::uint64_t seed, std::size_t vertices) {
  if (vertices == 0) fail(ErrorKind::InvalidInput, "lip basis needs at least one vertex");
  Rng rng(Rng::mix(seed, 0x11b5));
  LipBlendshapeBasis b;
  b.vertices = vertices;
  b.neutral.resize(vertices * 3);
  b.basis.resize(kFaceDims * vertices * 3);
  for (std::size_t i = 0; i < vertices; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(vertices);
    b.neutral[i * 3 + 0] = kLipHalfWidthMm * std::cos(a);
    b.neutral[i * 3 + 1] = kLipHalfHeightMm * std::sin(a);
    b.neutral[i * 3 + 2] = 0.0;
  }
  for (std::size_t k = 0; k < kFaceDims; ++k) {
    for (std::size_t d = 0; d < 3; ++d) {
      double c[kHarmonics + 1], s[kHarmonics + 1];
      for (std::size_t h = 0; h <= kHarmonics; ++h) {
        c[h] = rng.normal();
        s[h] = rng.normal();
      }
      for (std::size_t i = 0; i < vertices; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(vertices);
        double v = c[0];
        for (std::size_t h = 1; h <= kHarmonics; ++h) {
          v += c[h] * std::cos(static_cast<double>(h) * a) + s[h] * std::sin(static_cast<double>(h) * a);
        }
        b.basis[(k * vertices + i) * 3 + d] = kDisplacementMm * v;
      }
    }
  }
  return b;
}

io::ArrayContainer to_container(const LipBlendshapeBasis& basis) {
  basis.validate();
  io::ArrayContainer c;
  c.config = {{"format", "lip-basis"}, {"vertices", basis.vertices}};
  const auto L = static_cast<std::uint32_t>(basis.vertices);
  c.arrays.push_back({"neutral", {L, 3}, basis.neutral});
  c.arrays.push_back({"basis", {static_cast<std::uint32_t>(kFaceDims), L, 3}, basis.basis});
  return c;
}

LipBlendshapeBasis lip_basis_from_container(const io::ArrayContainer& c) {
  const auto* neutral = c.find("neutral");
  if (neutral == nullptr || neutral->dims.size() != 2 || neutral->dims[1] != 3) {
    fail(ErrorKind::Checkpoint, "lip basis container needs a 'neutral' [L, 3] array");
  }
  LipBlendshapeBasis b;
  b.vertices = neutral->dims[0];
  b.neutral = neutral->values;
  const std::uint32_t dims[] = {static_cast<std::uint32_t>(kFaceDims), neutral->dims[0], 3};
  b.basis = c.require("basis", dims).values;
  b.validate();
  return b;
}

LipBlendshapeBasis load_lip_basis(const std::filesystem::path& path) {
  return lip_basis_from_container(io::read_gck(path));
}

void save_lip_basis(const std::filesystem::path& path, const LipBlendshapeBasis& basis) {
  io::write_gck(path, to_container(basis));
}

std::vector<double> lip_vertices(std::span<const double> face, const LipBlendshapeBasis& basis) {
  if (face.size() != kFaceDims) {
    fail(ErrorKind::Shape, "lip model takes 64 expression coefficients, got " + std::to_string(face.size()));
  }
  const std::size_t n = basis.vertices * 3;
  std::vector<double> v(basis.neutral);
  for (std::size_t k = 0; k < kFaceDims; ++k) {
    const double* col = basis.basis.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) v[j] += face[k] * col[j];
  }
  return v;
}

double lip_error(std::span<const FaceParams> pred, std::span<const FaceParams> gt,
                 const LipBlendshapeBasis& basis) {
  if (pred.size() != gt.size()) {
    fail(ErrorKind::Alignment, "lip error needs equal lengths, got " + std::to_string(pred.size()) +
                                   " and " + std::to_string(gt.size()));
  }
  if (pred.empty()) fail(ErrorKind::Contract, "lip error of an empty sequence");
  const std::size_t L = basis.vertices;
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const auto a = lip_vertices(pred[t], basis);
    const auto b = lip_vertices(gt[t], basis);
    for (std::size_t i = 0; i < L; ++i) {
      const double dx = a[i * 3] - b[i * 3];
      const double dy = a[i * 3 + 1] - b[i * 3 + 1];
      const double dz = a[i * 3 + 2] - b[i * 3 + 2];
      total += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  }
  return total / static_cast<double>(pred.size() * L);
}

double random_baseline(const annotation::Corpus& corpus, const LipBlendshapeBasis& basis,
                       std::uint64_t seed) {
  if (corpus.size() < 2) fail(ErrorKind::Contract, "random pairing needs at least two sequences");
  Rng rng(Rng::mix(seed, 0x2a4d));
  double total = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::size_t j = rng.index(corpus.size() - 1);
    if (j >= i) ++j;
    const auto& a = corpus[i].gestures.face;
    const auto& b = corpus[j].gestures.face;
    const std::size_t n = std::min(a.size(), b.size());
    total += lip_error(std::span(a).first(n), std::span(b).first(n), basis);
  }
  return total / static_cast<double>(corpus.size());
}

double model_lip_error(model::ModelBundle& model, const annotation::Corpus& corpus,
                       const LipBlendshapeBasis& basis) {
  if (corpus.empty()) fail(ErrorKind::Contract, "lip error over an empty corpus");
  double total = 0.0;
  for (const auto& rec : corpus) {
    const auto pred = model::synthesize(model, rec.features);
    total += lip_error(pred.face, rec.gestures.face, basis);
  }
  return total / static_cast<double>(corpus.size());
}

SyncPair make_sync_pair(const annotation::SequenceRecord& audio_source, std::size_t audio_start,
                        const annotation::SequenceRecord& gesture_source, std::size_t gesture_start,
                        std::size_t length) {
  if (audio_start + length > audio_source.features.length() ||
      gesture_start + length > gesture_source.gestures.length()) {
    fail(ErrorKind::Contract, "sync pair window runs past the end of its sequence");
  }
  SyncPair p;
  const auto& f = audio_source.features.frames;
  const auto& g = gesture_source.gestures;
  p.features.assign(f.begin() + audio_start, f.begin() + audio_start + length);
  p.body.assign(g.body.begin() + gesture_start, g.body.begin() + gesture_start + length);
  p.hand.assign(g.hand.begin() + gesture_start, g.hand.begin() + gesture_start + length);
  p.in_sync = &audio_source == &gesture_source && audio_start == gesture_start;
  return p;
}

std::vector<SyncPair> sync_test_pairs(const annotation::Corpus& corpus, std::size_t length,
                                      std::size_t stride, std::uint64_t seed) {
  if (corpus.size() < 2) fail(ErrorKind::Contract, "off-sync pairs need at least two sequences");
  if (stride == 0) fail(ErrorKind::Config, "sync test stride must be positive");
  Rng rng(Rng::mix(seed, 0x5e57));
  std::vector<SyncPair> pairs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& rec = corpus[i];
    const std::size_t T = std::min(rec.features.length(), rec.gestures.length());
    for (std::size_t s = 0; s + length <= T; s += stride) {
      pairs.push_back(make_sync_pair(rec, s, rec, s, length));
      std::size_t j = rng.index(corpus.size() - 1);
      if (j >= i) ++j;
      const auto& donor = corpus[j];
      const std::size_t donor_len = donor.gestures.length();
      if (donor_len < length) fail(ErrorKind::TooShort, "sequence " + donor.id + " is shorter than the window");
      pairs.push_back(make_sync_pair(rec, s, donor, rng.index(donor_len - length + 1), length));
    }
  }
  if (pairs.empty()) fail(ErrorKind::TooShort, "no sequence holds a full window");
  return pairs;
}

SyncBatch stack_pairs(std::span<const SyncPair> pairs) {
  if (pairs.empty()) fail(ErrorKind::Contract, "empty set of sync pairs");
  SyncBatch b;
  b.features = stack<audio::kFeatureDims>(pairs, &SyncPair::features);
  b.body = stack<annotation::kBodyDims>(pairs, &SyncPair::body);
  b.hand = stack<annotation::kHandDims>(pairs, &SyncPair::hand);
  for (const auto& p : pairs) b.labels.push_back(p.in_sync ? 1.0 : 0.0);
  return b;
}

double combine_accuracies(double in_sync, double off_sync) { return (in_sync + off_sync) / 2.0; }

SyncAccuracy accuracy_from_probabilities(std::span<const double> probs, std::span<const bool> in_sync) {
  if (probs.size() != in_sync.size()) fail(ErrorKind::Alignment, "one label per probability required");
  if (probs.empty()) fail(ErrorKind::Contract, "empty sync test set");
  SyncAccuracy acc;
  std::size_t in_hits = 0, off_hits = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted_in = probs[i] > 0.5;
    if (in_sync[i]) {
      ++acc.in_sync_count;
      in_hits += predicted_in ? 1 : 0;
    } else {
      ++acc.off_sync_count;
      off_hits += predicted_in ? 0 : 1;
    }
  }
  auto pct = [](std::size_t hits, std::size_t n) {
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(n);
  };
  acc.in_sync = pct(in_hits, acc.in_sync_count);
  acc.off_sync = pct(off_hits, acc.off_sync_count);
  acc.combined = combine_accuracies(acc.in_sync, acc.off_sync);
  return acc;
}

SyncAccuracy sync_accuracy_report(model::Discriminator& classifier, std::span<const SyncPair> pairs) {
  if (pairs.empty()) fail(ErrorKind::Contract, "empty sync test set");
  constexpr std::size_t kChunk = 64;
  std::vector<double> probs;
  auto labels = std::make_unique<bool[]>(pairs.size());
  for (std::size_t begin = 0; begin < pairs.size(); begin += kChunk) {
    const auto chunk = pairs.subspan(begin, std::min(kChunk, pairs.size() - begin));
    const auto batch = stack_pairs(chunk);
    const auto p = classifier.forward(batch.features, batch.body, batch.hand, ag::Mode::Eval);
    probs.insert(probs.end(), p.values().begin(), p.values().end());
    for (std::size_t i = 0; i < chunk.size(); ++i) labels[begin + i] = chunk[i].in_sync;
  }
  return accuracy_from_probabilities(probs, std::span<const bool>(labels.get(), pairs.size()));
}

double plausibility(model::Discriminator& classifier, const audio::AudioFeatureSequence& features,
                    const annotation::GestureSequence& gestures) {
  const std::size_t W = classifier.config().window_length;
  if (features.length() != gestures.length()) {
    fail(ErrorKind::Alignment, "features have " + std::to_string(features.length()) +
                                   " frames, gestures " + std::to_string(gestures.length()));
  }
  const std::size_t T = features.length();
  if (T < W) fail(ErrorKind::TooShort, "sequence is shorter than the " + std::to_string(W) + "-frame window");
  annotation::SequenceRecord rec{"", "", features, gestures};
  std::vector<SyncPair> pairs;
  for (std::size_t s = 0; s + W <= T; s += W) pairs.push_back(make_sync_pair(rec, s, rec, s, W));
  if (T % W != 0) pairs.push_back(make_sync_pair(rec, T - W, rec, T - W, W));
  const auto batch = stack_pairs(pairs);
  const auto p = classifier.forward(batch.features, batch.body, batch.hand, ag::Mode::Eval);
  double total = 0.0;
  for (double v : p.values()) total += v;
  return total / static_cast<double>(p.numel());
}

nlohmann::json report_json(std::span<const SubjectReport> subjects, const SyncAccuracy* sync,
                           std::size_t window_length) {
  nlohmann::json j;
  nlohmann::json per_subject = nlohmann::json::object();
  double ours = 0.0, random = 0.0;
  std::size_t sequences = 0;
  for (const auto& s : subjects) {
    per_subject[s.subject_id] = {{"sequences", s.sequences}, {"ours_mm", s.ours_mm}, {"random_mm", s.random_mm}};
    ours += s.ours_mm * static_cast<double>(s.sequences);
    random += s.random_mm * static_cast<double>(s.sequences);
    sequences += s.sequences;
  }
  j["subjects"] = per_subject;
  if (sequences > 0) {
    j["aggregate"] = {{"sequences", sequences},
                      {"ours_mm", ours / static_cast<double>(sequences)},
                      {"random_mm", random / static_cast<double>(sequences)}};
  }
  if (sync != nullptr) {
    j["sync"] = {{"window_frames", window_length},
                 {"in_sync_pair", sync->in_sync},
                 {"off_sync_pair", sync->off_sync},
                 {"combined", sync->combined},
                 {"in_sync_count", sync->in_sync_count},
                 {"off_sync_count", sync->off_sync_count}};
  }
  return j;
}

}  // namespace gesture::evaluation
