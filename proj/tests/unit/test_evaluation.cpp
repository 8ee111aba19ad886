#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "gesture/error.hpp"
#include "gesture/evaluation.hpp"
#include "gesture/rng.hpp"
#include "gesture/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace gesture;
using namespace gesture::evaluation;
using annotation::FaceParams;

namespace {

std::vector<FaceParams> random_faces(Rng& rng, std::size_t n) {
  std::vector<FaceParams> f(n);
  for (auto& frame : f) {
    for (auto& v : frame) v = rng.normal();
  }
  return f;
}

// Vertex distance written out as nested loops.
double lip_error_oracle(const std::vector<FaceParams>& a, const std::vector<FaceParams>& b,
                        const LipBlendshapeBasis& basis) {
  const std::size_t L = basis.vertices;
  double total = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t l = 0; l < L; ++l) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        double pa = basis.neutral[l * 3 + k], pb = pa;
        for (std::size_t i = 0; i < 64; ++i) {
          pa += a[t][i] * basis.basis[(i * L + l) * 3 + k];
          pb += b[t][i] * basis.basis[(i * L + l) * 3 + k];
        }
        d2 += (pa - pb) * (pa - pb);
      }
      total += std::sqrt(d2);
    }
  }
  return total / static_cast<double>(a.size() * L);
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("lip vertices are neutral plus the weighted basis") {
  const auto basis = synthesize_lip_basis(1);
  REQUIRE(basis.vertices == 20);
  CHECK_NOTHROW(basis.validate());
  std::vector<double> zero(64, 0.0);
  const auto rest = lip_vertices(zero, basis);
  CHECK(rest == basis.neutral);
  // Neutral contour is the 25 x 10 mm half-axis ellipse in the z = 0 plane.
  CHECK(rest[0] == doctest::Approx(25.0));
  CHECK(rest[1] == doctest::Approx(0.0));
  for (std::size_t l = 0; l < 20; ++l) {
    const double x = rest[l * 3] / 25.0, y = rest[l * 3 + 1] / 10.0;
    CHECK(x * x + y * y == doctest::Approx(1.0));
  }

  std::vector<double> e3(64, 0.0);
  e3[3] = 1.0;
  const auto moved = lip_vertices(e3, basis);
  for (std::size_t i = 0; i < moved.size(); ++i) {
    CHECK(moved[i] == doctest::Approx(basis.neutral[i] + basis.basis[3 * 60 + i]).epsilon(1e-15));
  }
  // Displacements are sub-millimetre per unit coefficient.
  double max_abs = 0.0;
  for (double v : basis.basis) max_abs = std::max(max_abs, std::abs(v));
  CHECK(max_abs > 0.0);
  CHECK(max_abs < 1.0);

  CHECK(kind_of([&] { lip_vertices(std::vector<double>(63, 0.0), basis); }) == ErrorKind::Shape);
}

TEST_CASE("lip error matches the direct computation") {
  Rng rng(2);
  const auto basis = synthesize_lip_basis(2);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 1 + rng.index(30);
    const auto a = random_faces(rng, n), b = random_faces(rng, n);
    CHECK(std::abs(lip_error(a, b, basis) - lip_error_oracle(a, b, basis)) < 1e-12);
  }
}

TEST_CASE("lip error is a distance") {
  Rng rng(3);
  const auto basis = synthesize_lip_basis(3);
  const auto a = random_faces(rng, 40), b = random_faces(rng, 40);
  CHECK(lip_error(a, a, basis) == 0.0);
  CHECK(lip_error(a, b, basis) == doctest::Approx(lip_error(b, a, basis)).epsilon(1e-14));
  // Scaling the coefficient difference scales the error.
  std::vector<FaceParams> zero(40), scaled = a;
  for (auto& f : zero) f.fill(0.0);
  for (auto& f : scaled) {
    for (auto& v : f) v *= 3.0;
  }
  CHECK(lip_error(scaled, zero, basis) == doctest::Approx(3.0 * lip_error(a, zero, basis)).epsilon(1e-12));

  CHECK(kind_of([&] { lip_error(std::span(a).first(39), b, basis); }) == ErrorKind::Alignment);
  CHECK(kind_of([&] { lip_error({}, {}, basis); }) == ErrorKind::Contract);
}

TEST_CASE("lip basis is seeded and survives the container") {
  TempDir dir;
  const auto a = synthesize_lip_basis(4), b = synthesize_lip_basis(4), c = synthesize_lip_basis(5);
  CHECK(a.basis == b.basis);
  CHECK(a.basis != c.basis);
  const auto path = dir.path() / "lips.gck";
  save_lip_basis(path, a);
  const auto loaded = load_lip_basis(path);
  CHECK(loaded.vertices == a.vertices);
  CHECK(loaded.neutral == a.neutral);
  CHECK(loaded.basis == a.basis);

  auto container = to_container(a);
  container.arrays.pop_back();
  CHECK(kind_of([&] { lip_basis_from_container(container); }) == ErrorKind::Checkpoint);
}

TEST_CASE("random baseline pairs different sequences") {
  const auto basis = synthesize_lip_basis(6);
  const auto corpus = synthetic::generate_synthetic_corpus(6, 5, 120);
  const double a = random_baseline(corpus, basis, 1);
  CHECK(a == random_baseline(corpus, basis, 1));
  CHECK(a > 0.0);

  // With two sequences each is paired with the other.
  annotation::Corpus two(corpus.begin(), corpus.begin() + 2);
  two[1].gestures.resize(100);
  two[1].features.frames.resize(100);
  const double expected = lip_error(std::span(two[0].gestures.face).first(100), two[1].gestures.face, basis);
  CHECK(random_baseline(two, basis, 9) == doctest::Approx(expected).epsilon(1e-12));

  annotation::Corpus one(corpus.begin(), corpus.begin() + 1);
  CHECK(kind_of([&] { random_baseline(one, basis, 1); }) == ErrorKind::Contract);
}

TEST_CASE("sync accuracy counting") {
  {
    const std::vector<double> p = {0.5, 0.5, 0.5, 0.5};
    const auto labels = std::make_unique<bool[]>(4);
    labels[0] = labels[1] = true;
    const auto acc = accuracy_from_probabilities(p, std::span<const bool>(labels.get(), 4));
    CHECK(acc.in_sync == 0.0);
    CHECK(acc.off_sync == 100.0);
    CHECK(acc.combined == 50.0);
    CHECK(acc.in_sync_count == 2);
    CHECK(acc.off_sync_count == 2);
  }
  {
    const std::vector<double> p = {0.9, 0.7, 0.1, 0.2, 0.6};
    const bool labels[] = {true, true, false, false, false};
    const auto acc = accuracy_from_probabilities(p, labels);
    CHECK(acc.in_sync == 100.0);
    CHECK(acc.off_sync == doctest::Approx(200.0 / 3.0));
    CHECK(acc.combined == doctest::Approx((100.0 + 200.0 / 3.0) / 2.0));
  }
  CHECK(combine_accuracies(82.7, 92.1) == doctest::Approx(87.4).epsilon(1e-12));
  const std::vector<double> p = {0.9};
  const bool labels[] = {true, false};
  CHECK_THROWS_AS(accuracy_from_probabilities(p, labels), Error);
}

TEST_CASE("sync pairs") {
  const auto corpus = synthetic::generate_synthetic_corpus(7, 4, 100);
  const auto same = make_sync_pair(corpus[0], 10, corpus[0], 10, 16);
  CHECK(same.in_sync);
  CHECK(same.features.size() == 16);
  CHECK(same.body.front() == corpus[0].gestures.body[10]);
  CHECK_FALSE(make_sync_pair(corpus[0], 10, corpus[0], 11, 16).in_sync);
  CHECK_FALSE(make_sync_pair(corpus[0], 10, corpus[1], 10, 16).in_sync);

  const auto pairs = sync_test_pairs(corpus, 16, 8, 3);
  // Starts 0, 8, ..., 80 in each 100-frame sequence, each matched once.
  std::size_t in = 0, off = 0;
  for (const auto& p : pairs) (p.in_sync ? in : off)++;
  CHECK(in == 4 * 11);
  CHECK(off == in);
  const auto again = sync_test_pairs(corpus, 16, 8, 3);
  REQUIRE(again.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(again[i].body == pairs[i].body);

  const auto batch = stack_pairs(std::span(pairs).first(4));
  CHECK(batch.features.shape() == ag::Shape{4, 28, 16});
  CHECK(batch.hand.shape() == ag::Shape{4, 126, 16});
  CHECK(batch.labels.size() == 4);
}

TEST_CASE("plausibility lies in the unit interval") {
  Rng rng(8);
  model::DiscriminatorConfig cfg;
  cfg.base_channels = 4;
  cfg.window_length = 16;
  model::Discriminator disc(cfg, rng);
  const auto corpus = synthetic::generate_synthetic_corpus(8, 2, 70);
  CHECK(kind_of([&] { plausibility(disc, corpus[0].features, corpus[0].gestures); }) == ErrorKind::State);
  const auto pairs = sync_test_pairs(corpus, 16, 8, 1);
  const auto batch = stack_pairs(pairs);
  disc.forward(batch.features, batch.body, batch.hand, ag::Mode::Train);
  const double p = plausibility(disc, corpus[0].features, corpus[0].gestures);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("report JSON aggregates by sequence count") {
  const std::vector<SubjectReport> subjects = {{"a", 1, 2.0, 4.0}, {"b", 3, 1.0, 2.0}};
  SyncAccuracy sync{80.0, 90.0, 85.0, 10, 10};
  const auto j = report_json(subjects, &sync, 64);
  CHECK(j["subjects"].size() == 2);
  CHECK(j["aggregate"]["ours_mm"].get<double>() == doctest::Approx(1.25));
  CHECK(j["aggregate"]["random_mm"].get<double>() == doctest::Approx(2.5));
  CHECK(j["sync"]["window_frames"] == 64);
  CHECK(j["sync"]["combined"].get<double>() == 85.0);
  CHECK_FALSE(report_json(subjects, nullptr, 64).contains("sync"));
}
