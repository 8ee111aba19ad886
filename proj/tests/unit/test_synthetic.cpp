#include <doctest.h>

#include <cmath>

#include "gesture/error.hpp"
#include "gesture/synthetic.hpp"

using namespace gesture;
using namespace gesture::synthetic;
using annotation::Stream;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> body_channel(const annotation::GestureSequence& g, std::size_t c) {
  std::vector<double> v;
  for (const auto& f : g.body) v.push_back(f[c]);
  return v;
}

}  // namespace

TEST_CASE("synthetic corpus is deterministic in its seed") {
  const auto a = generate_synthetic_corpus(7, 3, 100);
  const auto b = generate_synthetic_corpus(7, 3, 100);
  const auto c = generate_synthetic_corpus(8, 3, 100);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].features.frames == b[i].features.frames);
    CHECK(a[i].gestures.face == b[i].gestures.face);
    CHECK(a[i].gestures.hand == b[i].gestures.hand);
    CHECK(a[i].features.frames != c[i].features.frames);
    for (double conf : a[i].gestures.confidence) CHECK(conf == 1.0);
    a[i].gestures.validate();
  }
  CHECK_THROWS_AS(generate_synthetic_corpus(0, 0, 100), Error);
  CHECK_THROWS_AS(generate_synthetic_corpus(0, 1, 63), Error);
}

TEST_CASE("pose follows its own audio and not another sequence's") {
  const auto corpus = generate_synthetic_corpus(0, 21, 600);
  const auto mapping = Mapping::from_seed(0);
  const auto own = pearson(body_channel(corpus[0].gestures, 0), mapping.drive(corpus[0].features, Stream::Body, 0));
  CHECK(std::abs(own) > 0.9);

  double total = 0.0;
  for (std::size_t i = 1; i <= 20; ++i) {
    total += std::abs(pearson(body_channel(corpus[0].gestures, 0), mapping.drive(corpus[i].features, Stream::Body, 0)));
  }
  CHECK(total / 20.0 < 0.3);
}

TEST_CASE("synthetic features carry their own deltas") {
  const auto f = random_features(3, 50);
  for (std::size_t k = audio::kStaticDims; k < audio::kFeatureDims; ++k) CHECK(f.frames[0][k] == 0.0);
  for (std::size_t t = 1; t < 50; ++t) {
    for (std::size_t k = 0; k < audio::kStaticDims; ++k) {
      CHECK(f.frames[t][audio::kStaticDims + k] == f.frames[t][k] - f.frames[t - 1][k]);
    }
  }
}
