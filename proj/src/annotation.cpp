#include "gesture/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "gesture/error.hpp"
#include "gesture/rng.hpp"

namespace gesture::annotation {

namespace {

template <std::size_t N>
bool all_finite(const std::array<double, N>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

template <std::size_t N>
std::vector<std::array<double, N>>& stream_frames(GestureSequence& seq);
template <>
std::vector<FaceParams>& stream_frames<kFaceDims>(GestureSequence& seq) { return seq.face; }
template <>
std::vector<BodyParams>& stream_frames<kBodyDims>(GestureSequence& seq) { return seq.body; }
template <>
std::vector<HandParams>& stream_frames<kHandDims>(GestureSequence& seq) { return seq.hand; }

// Nearest original known frames around [gap_begin, gap_end).
std::vector<std::size_t> spline_support(const std::vector<MissingMask>& mask, int stream,
                                        std::size_t gap_begin, std::size_t gap_end,
                                        std::size_t per_side) {
  std::vector<std::size_t> before;
  for (std::size_t t = gap_begin; t-- > 0 && before.size() < per_side;) {
    if (!mask[t][stream]) before.push_back(t);
  }
  std::vector<std::size_t> support(before.rbegin(), before.rend());
  std::size_t after = 0;
  for (std::size_t t = gap_end; t < mask.size() && after < per_side; ++t) {
    if (!mask[t][stream]) {
      support.push_back(t);
      ++after;
    }
  }
  return support;
}

template <std::size_t N>
void fill_stream(GestureSequence& seq, const std::vector<MissingMask>& original, Stream stream,
                 std::size_t max_gap) {
  const int s = static_cast<int>(stream);
  auto& frames = stream_frames<N>(seq);
  const std::size_t T = frames.size();
  std::size_t t = 0;
  while (t < T) {
    if (!original[t][s]) {
      ++t;
      continue;
    }
    const std::size_t begin = t;
    while (t < T && original[t][s]) ++t;
    const std::size_t end = t;
    const bool interior = begin > 0 && end < T;
    if (!interior || end - begin > max_gap) continue;

    const auto support = spline_support(original, s, begin, end, 4);
    std::vector<double> xs(support.begin(), support.end());
    std::vector<double> query;
    for (std::size_t q = begin; q < end; ++q) query.push_back(static_cast<double>(q));
    std::vector<double> ys(support.size());
    for (std::size_t c = 0; c < N; ++c) {
      for (std::size_t k = 0; k < support.size(); ++k) ys[k] = frames[support[k]][c];
      const auto filled = natural_cubic_spline(xs, ys, query);
      for (std::size_t q = begin; q < end; ++q) frames[q][c] = filled[q - begin];
    }
    for (std::size_t q = begin; q < end; ++q) seq.missing[q][s] = false;
  }
}

std::size_t reflect_index(std::ptrdiff_t m, std::size_t length) {
  const auto period = static_cast<std::ptrdiff_t>(2 * length);
  std::ptrdiff_t r = m % period;
  if (r < 0) r += period;
  if (r >= static_cast<std::ptrdiff_t>(length)) r = period - 1 - r;
  return static_cast<std::size_t>(r);
}

template <std::size_t N>
io::FrameMatrix frames_to_matrix(const std::vector<std::array<double, N>>& frames,
                                 const std::vector<MissingMask>& missing, int stream) {
  io::FrameMatrix m;
  m.dims = N;
  m.frame_rate = static_cast<float>(audio::kFrameRate);
  m.values.reserve(frames.size() * N);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const bool absent = stream >= 0 && missing[t][stream];
    for (double v : frames[t]) {
      m.values.push_back(absent ? std::numeric_limits<float>::quiet_NaN() : static_cast<float>(v));
    }
  }
  return m;
}

template <std::size_t N>
void matrix_to_frames(const io::FrameMatrix& m, std::vector<std::array<double, N>>& frames,
                      std::vector<MissingMask>& missing, int stream, const std::string& what) {
  if (m.dims != N) {
    fail(ErrorKind::Shape, what + " stream has " + std::to_string(m.dims) + " dims, expected " +
                               std::to_string(N));
  }
  if (std::abs(m.frame_rate - audio::kFrameRate) > 1e-6) {
    fail(ErrorKind::Format, what + " stream is not sampled at 15 Hz");
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    bool absent = false;
    for (std::size_t c = 0; c < N; ++c) {
      const float v = m.values[t * N + c];
      if (std::isnan(v)) {
        absent = true;
      } else if (!std::isfinite(v)) {
        fail(ErrorKind::Format, what + " stream contains infinite values");
      }
      frames[t][c] = v;
    }
    missing[t][stream] = absent;
    if (absent) frames[t].fill(0.0);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

void GestureSequence::resize(std::size_t frames) {
  face.resize(frames);
  body.resize(frames);
  hand.resize(frames);
  confidence.resize(frames, 1.0);
  missing.resize(frames, MissingMask{false, false, false});
}

void GestureSequence::validate() const {
  const std::size_t T = face.size();
  if (body.size() != T || hand.size() != T || confidence.size() != T || missing.size() != T) {
    fail(ErrorKind::Alignment, "gesture streams have different lengths");
  }
  if (frame_rate != audio::kFrameRate) fail(ErrorKind::InvalidInput, "frame rate must be 15 Hz");
  for (std::size_t t = 0; t < T; ++t) {
    if (!(confidence[t] >= 0.0 && confidence[t] <= 1.0)) {
      fail(ErrorKind::InvalidInput, "confidence outside [0, 1] at frame " + std::to_string(t));
    }
    if (!missing[t][0] && !all_finite(face[t])) fail(ErrorKind::InvalidInput, "non-finite face");
    if (!missing[t][2] && !all_finite(hand[t])) fail(ErrorKind::InvalidInput, "non-finite hand");
    if (!missing[t][1]) {
      if (!all_finite(body[t])) fail(ErrorKind::InvalidInput, "non-finite body");
      const double* r = body[t].data() + kBodyKeypointDims;
      const double angle = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
      if (angle >= std::numbers::pi + 1e-6) {
        fail(ErrorKind::InvalidInput, "head rotation angle exceeds pi at frame " + std::to_string(t));
      }
    }
  }
}

std::vector<Segment> confidence_segments(std::span<const double> confidence, double threshold,
                                         std::size_t window, std::size_t min_length) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    fail(ErrorKind::InvalidInput, "confidence threshold must lie in [0, 1]");
  }
  if (window == 0) fail(ErrorKind::InvalidInput, "confidence window must be at least 1 frame");
  const std::size_t T = confidence.size();
  if (T == 0) return {};
  const std::size_t w = std::min(window, T);

  std::vector<double> prefix(T + 1, 0.0);
  for (std::size_t t = 0; t < T; ++t) prefix[t + 1] = prefix[t] + confidence[t];

  // +1 at a failing span's start, -1 past its end.
  std::vector<int> cover(T + 1, 0);
  for (std::size_t s = 0; s + w <= T; ++s) {
    const double mean = (prefix[s + w] - prefix[s]) / static_cast<double>(w);
    if (mean < threshold) {
      ++cover[s];
      --cover[s + w];
    }
  }

  std::vector<Segment> segments;
  int running = 0;
  std::size_t begin = 0;
  bool open = false;
  for (std::size_t t = 0; t <= T; ++t) {
    const bool rejected = t == T || (running += cover[t]) > 0;
    if (!rejected && !open) {
      begin = t;
      open = true;
    } else if (rejected && open) {
      if (t - begin >= min_length) segments.push_back({begin, t});
      open = false;
    }
  }
  return segments;
}

std::vector<GestureSequence> confidence_filter(const GestureSequence& seq, double threshold,
                                               std::size_t window) {
  std::vector<GestureSequence> out;
  for (const auto& seg : confidence_segments(seq.confidence, threshold, window)) {
    out.push_back(slice(seq, seg));
  }
  return out;
}

GestureSequence slice(const GestureSequence& seq, Segment segment) {
  if (segment.begin > segment.end || segment.end > seq.length()) {
    fail(ErrorKind::InvalidInput, "segment out of range");
  }
  GestureSequence out;
  out.frame_rate = seq.frame_rate;
  const auto b = static_cast<std::ptrdiff_t>(segment.begin);
  const auto e = static_cast<std::ptrdiff_t>(segment.end);
  out.face.assign(seq.face.begin() + b, seq.face.begin() + e);
  out.body.assign(seq.body.begin() + b, seq.body.begin() + e);
  out.hand.assign(seq.hand.begin() + b, seq.hand.begin() + e);
  out.confidence.assign(seq.confidence.begin() + b, seq.confidence.begin() + e);
  out.missing.assign(seq.missing.begin() + b, seq.missing.begin() + e);
  return out;
}

audio::AudioFeatureSequence slice(const audio::AudioFeatureSequence& seq, Segment segment) {
  if (segment.begin > segment.end || segment.end > seq.length()) {
    fail(ErrorKind::InvalidInput, "segment out of range");
  }
  audio::AudioFeatureSequence out;
  out.frame_rate = seq.frame_rate;
  out.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(segment.begin),
                    seq.frames.begin() + static_cast<std::ptrdiff_t>(segment.end));
  return out;
}

std::vector<double> natural_cubic_spline(std::span<const double> xs, std::span<const double> ys,
                                         std::span<const double> query) {
  const std::size_t n = xs.size();
  if (n == 0 || ys.size() != n) fail(ErrorKind::InvalidInput, "spline needs matching knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(xs[i] > xs[i - 1])) fail(ErrorKind::InvalidInput, "spline knots must increase");
  }
  std::vector<double> out(query.size());
  if (n == 1) {
    std::fill(out.begin(), out.end(), ys[0]);
    return out;
  }

  // Second derivatives with M[0] = M[n-1] = 0, tridiagonal solve.
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = xs[i] - xs[i - 1];
      const double h1 = xs[i + 1] - xs[i];
      diag[i - 1] = 2.0 * (h0 + h1);
      upper[i - 1] = h1;
      rhs[i - 1] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < k; ++i) {
      const double lower = xs[i + 1] - xs[i];  // h_{i} for row i
      const double f = lower / diag[i - 1];
      diag[i] -= f * upper[i - 1];
      rhs[i] -= f * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) {
      m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
  }

  for (std::size_t q = 0; q < query.size(); ++q) {
    const double x = query[q];
    std::size_t i = 0;
    while (i + 2 < n && x > xs[i + 1]) ++i;
    const double h = xs[i + 1] - xs[i];
    const double a = xs[i + 1] - x;
    const double b = x - xs[i];
    out[q] = m[i] * a * a * a / (6.0 * h) + m[i + 1] * b * b * b / (6.0 * h) +
             (ys[i] / h - m[i] * h / 6.0) * a + (ys[i + 1] / h - m[i + 1] * h / 6.0) * b;
  }
  return out;
}

GestureSequence fill_gaps_cubic(const GestureSequence& seq, std::size_t max_gap) {
  GestureSequence out = seq;
  const auto original = seq.missing;
  fill_stream<kFaceDims>(out, original, Stream::Face, max_gap);
  fill_stream<kBodyDims>(out, original, Stream::Body, max_gap);
  fill_stream<kHandDims>(out, original, Stream::Hand, max_gap);
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorKind::InvalidInput, "gaussian sigma must be positive");
  }
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double z = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    z += w;
  }
  for (double& w : kernel) w /= z;
  return kernel;
}

ChannelMatrix gaussian_smooth(const ChannelMatrix& input, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  ChannelMatrix out(input.channels, input.length);
  if (input.length == 0) return out;
  const auto channels = static_cast<std::ptrdiff_t>(input.channels);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < input.length; ++t) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const std::size_t src = reflect_index(static_cast<std::ptrdiff_t>(t) + k, input.length);
        acc += kernel[static_cast<std::size_t>(k + radius)] * input.at(c, src);
      }
      out.at(c, t) = acc;
    }
  }
  return out;
}

void smooth_pose(GestureSequence& seq, double sigma) {
  for (std::size_t t = 0; t < seq.length(); ++t) {
    if (seq.is_missing(t, Stream::Body) || seq.is_missing(t, Stream::Hand)) {
      fail(ErrorKind::State, "cannot smooth a sequence with missing body or hand frames");
    }
  }
  auto body = gaussian_smooth(to_channels<kBodyDims>(seq.body), sigma);
  from_channels<kBodyDims>(body, seq.body);
  auto hand = gaussian_smooth(to_channels<kHandDims>(seq.hand), sigma);
  from_channels<kHandDims>(hand, seq.hand);
}

std::vector<TrainingWindow> make_training_windows(const audio::AudioFeatureSequence& features,
                                                  const GestureSequence& gestures,
                                                  std::size_t overlap,
                                                  const std::string& subject_id,
                                                  std::size_t length) {
  if (features.length() != gestures.length()) {
    fail(ErrorKind::Alignment, "features have " + std::to_string(features.length()) +
                                   " frames but gestures have " +
                                   std::to_string(gestures.length()));
  }
  if (overlap < 1 || overlap > 5 || overlap >= length) {
    fail(ErrorKind::Config, "window overlap must lie in [1, 5] frames");
  }
  std::vector<TrainingWindow> windows;
  const std::size_t T = features.length();
  const std::size_t stride = length - overlap;
  for (std::size_t start = 0; start + length <= T; start += stride) {
    bool clean = true;
    for (std::size_t t = start; t < start + length && clean; ++t) clean = !gestures.any_missing(t);
    if (!clean) continue;
    const auto b = static_cast<std::ptrdiff_t>(start);
    const auto e = static_cast<std::ptrdiff_t>(start + length);
    TrainingWindow w;
    w.features.assign(features.frames.begin() + b, features.frames.begin() + e);
    w.face.assign(gestures.face.begin() + b, gestures.face.begin() + e);
    w.body.assign(gestures.body.begin() + b, gestures.body.begin() + e);
    w.hand.assign(gestures.hand.begin() + b, gestures.hand.begin() + e);
    w.subject_id = subject_id;
    windows.push_back(std::move(w));
  }
  return windows;
}

std::pair<Corpus, Corpus> split_by_sequence(const Corpus& corpus, double fraction,
                                            std::uint64_t seed) {
  const std::size_t n = corpus.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  auto first = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  if (n >= 2) first = std::clamp<std::size_t>(first, 1, n - 1);
  first = std::min(first, n);
  // Keep the original relative order inside each part.
  std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first));
  std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(first), order.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::pair<Corpus, Corpus> parts;
  for (auto i : a) parts.first.push_back(corpus[i]);
  for (auto i : b) parts.second.push_back(corpus[i]);
  return parts;
}

io::FrameMatrix features_to_matrix(const audio::AudioFeatureSequence& seq) {
  std::vector<MissingMask> none(seq.frames.size(), MissingMask{});
  return frames_to_matrix<audio::kFeatureDims>(seq.frames, none, -1);
}

audio::AudioFeatureSequence features_from_matrix(const io::FrameMatrix& m) {
  if (m.dims != audio::kFeatureDims) {
    fail(ErrorKind::Shape, "feature file has " + std::to_string(m.dims) + " dims, expected 28");
  }
  if (std::abs(m.frame_rate - audio::kFrameRate) > 1e-6) {
    fail(ErrorKind::Format, "feature file is not sampled at 15 Hz");
  }
  if (m.frames() == 0) fail(ErrorKind::TooShort, "feature file has no frames");
  audio::AudioFeatureSequence seq;
  seq.frames.resize(m.frames());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    for (std::size_t c = 0; c < audio::kFeatureDims; ++c) {
      const float v = m.values[t * audio::kFeatureDims + c];
      if (!std::isfinite(v)) fail(ErrorKind::Format, "feature file contains non-finite values");
      seq.frames[t][c] = v;
    }
  }
  return seq;
}

io::FrameMatrix stream_to_matrix(const GestureSequence& seq, Stream stream) {
  switch (stream) {
    case Stream::Face: return frames_to_matrix<kFaceDims>(seq.face, seq.missing, 0);
    case Stream::Body: return frames_to_matrix<kBodyDims>(seq.body, seq.missing, 1);
    case Stream::Hand: return frames_to_matrix<kHandDims>(seq.hand, seq.missing, 2);
  }
  fail(ErrorKind::Internal, "unknown stream");
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("sequences") || !doc["sequences"].is_array()) {
    fail(ErrorKind::Format, path.string() + ": manifest needs a \"sequences\" array");
  }
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  for (const auto& item : doc["sequences"]) {
    static const std::vector<std::string> known = {"id",   "subject", "features",  "audio",
                                                   "face", "body",    "hand",      "confidence"};
    for (const auto& [key, _] : item.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        fail(ErrorKind::Format, "unknown manifest key '" + key + "'");
      }
    }
    auto get = [&](const char* key) {
      return item.contains(key) ? item[key].get<std::string>() : std::string{};
    };
    ManifestEntry e;
    e.id = get("id");
    e.subject_id = get("subject");
    e.features = resolve(base, get("features"));
    e.audio = resolve(base, get("audio"));
    e.face = resolve(base, get("face"));
    e.body = resolve(base, get("body"));
    e.hand = resolve(base, get("hand"));
    e.confidence = resolve(base, get("confidence"));
    if (e.id.empty()) fail(ErrorKind::Format, "manifest entry without id");
    if (e.features.empty() && e.audio.empty()) {
      fail(ErrorKind::Format, "manifest entry '" + e.id + "' has neither features nor audio");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) -> std::string {
    if (p.empty()) return {};
    return p.lexically_relative(base).generic_string();
  };
  nlohmann::json doc;
  doc["sequences"] = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json item;
    item["id"] = e.id;
    item["subject"] = e.subject_id;
    if (!e.features.empty()) item["features"] = rel(e.features);
    if (!e.audio.empty()) item["audio"] = rel(e.audio);
    if (!e.face.empty()) item["face"] = rel(e.face);
    if (!e.body.empty()) item["body"] = rel(e.body);
    if (!e.hand.empty()) item["hand"] = rel(e.hand);
    if (!e.confidence.empty()) item["confidence"] = rel(e.confidence);
    doc["sequences"].push_back(std::move(item));
  }
  const std::string text = doc.dump(2) + "\n";
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

GestureSequence load_gestures(const ManifestEntry& entry) {
  if (entry.face.empty() || entry.body.empty() || entry.hand.empty()) {
    fail(ErrorKind::Format, "manifest entry '" + entry.id + "' is missing a gesture stream");
  }
  const auto face = io::read_gft(entry.face);
  const auto body = io::read_gft(entry.body);
  const auto hand = io::read_gft(entry.hand);
  const std::size_t T = face.frames();
  if (body.frames() != T || hand.frames() != T) {
    fail(ErrorKind::Alignment, "gesture streams of '" + entry.id + "' differ in length");
  }
  GestureSequence seq;
  seq.resize(T);
  matrix_to_frames<kFaceDims>(face, seq.face, seq.missing, 0, "face");
  matrix_to_frames<kBodyDims>(body, seq.body, seq.missing, 1, "body");
  matrix_to_frames<kHandDims>(hand, seq.hand, seq.missing, 2, "hand");
  if (!entry.confidence.empty()) {
    const auto conf = io::read_gft(entry.confidence);
    if (conf.dims != 1) fail(ErrorKind::Shape, "confidence stream must have 1 dim");
    if (conf.frames() != T) fail(ErrorKind::Alignment, "confidence stream length differs");
    for (std::size_t t = 0; t < T; ++t) {
      const float c = conf.values[t];
      seq.confidence[t] = std::isnan(c) ? 0.0 : c;
    }
  }
  seq.validate();
  return seq;
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
  Corpus corpus;
  for (const auto& entry : read_manifest(manifest_path)) {
    SequenceRecord rec;
    rec.id = entry.id;
    rec.subject_id = entry.subject_id;
    rec.gestures = load_gestures(entry);
    if (!entry.features.empty()) {
      rec.features = features_from_matrix(io::read_gft(entry.features));
      if (rec.features.length() != rec.gestures.length()) {
        fail(ErrorKind::Alignment, "features and gestures of '" + entry.id + "' differ in length");
      }
    } else {
      auto signal = audio::normalize_signal(io::read_wav(entry.audio));
      rec.features = audio::extract_features(signal);
      // Extraction rounds the frame count up; allow a one-frame difference.
      const std::size_t a = rec.features.length();
      const std::size_t g = rec.gestures.length();
      if (std::max(a, g) - std::min(a, g) > 1) {
        fail(ErrorKind::Alignment, "audio and gestures of '" + entry.id + "' differ in length");
      }
      const Segment common{0, std::min(a, g)};
      rec.features = slice(rec.features, common);
      rec.gestures = slice(rec.gestures, common);
    }
    corpus.push_back(std::move(rec));
  }
  return corpus;
}

void save_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (const auto& rec : corpus) {
    ManifestEntry e;
    e.id = rec.id;
    e.subject_id = rec.subject_id;
    e.features = dir / (rec.id + ".features.gft");
    e.face = dir / (rec.id + ".face.gft");
    e.body = dir / (rec.id + ".body.gft");
    e.hand = dir / (rec.id + ".hand.gft");
    e.confidence = dir / (rec.id + ".confidence.gft");
    io::write_gft(e.features, features_to_matrix(rec.features));
    io::write_gft(e.face, stream_to_matrix(rec.gestures, Stream::Face));
    io::write_gft(e.body, stream_to_matrix(rec.gestures, Stream::Body));
    io::write_gft(e.hand, stream_to_matrix(rec.gestures, Stream::Hand));
    io::FrameMatrix conf;
    conf.dims = 1;
    conf.values.assign(rec.gestures.confidence.begin(), rec.gestures.confidence.end());
    io::write_gft(e.confidence, conf);
    entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.json", entries);
}

}  // namespace gesture::annotation
