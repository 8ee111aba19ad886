#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "gesture/error.hpp"
#include "gesture/rng.hpp"
#include "gesture/synthetic.hpp"
#include "gesture/training.hpp"
#include "support/tempdir.hpp"

using namespace gesture;
using namespace gesture::training;

namespace {

model::GeneratorConfig gen_config() {
  model::GeneratorConfig g;
  g.base_channels = 4;
  return g;
}

model::DiscriminatorConfig disc_config() {
  model::DiscriminatorConfig d;
  d.base_channels = 4;
  return d;
}

std::vector<TrainingWindow> windows(std::size_t count, std::uint64_t seed = 3) {
  const auto corpus = synthetic::generate_synthetic_corpus(seed, 2, 200);
  auto w = corpus_windows(corpus, 4, 64);
  REQUIRE(w.size() >= count);
  w.resize(count);
  return w;
}

ag::Tensor probs(std::vector<double> v) {
  const std::size_t n = v.size();
  return ag::Tensor::from({n}, std::move(v));
}

// Mean binary cross-entropy written out directly.
double bce_oracle(const std::vector<double>& p, double label) {
  double s = 0.0;
  for (double q : p) s -= label * std::log(q) + (1.0 - label) * std::log(1.0 - q);
  return s / static_cast<double>(p.size());
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

TEST_CASE("regression weights combine the per-stream losses") {
  const LossWeights w;
  CHECK(weighted_regression(1.0, 1.0, 1.0, w) == doctest::Approx(1440.37).epsilon(1e-12));
  CHECK(weighted_regression(2.0, 0.0, 0.0, w) == doctest::Approx(0.74).epsilon(1e-12));
  CHECK(weighted_regression(0.0, 0.5, 0.25, w) == doctest::Approx(300.0 + 210.0).epsilon(1e-12));
  LossWeights bad;
  bad.w_hand = 0.0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::Config);
}

TEST_CASE("adversarial losses at chance level") {
  const auto half = probs({0.5, 0.5, 0.5});
  CHECK(discriminator_loss(half, half).item() == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(generator_adversarial_loss(half).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(generator_adversarial_loss(half, true).item() == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("adversarial losses match a direct cross-entropy") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> real(2 + rng.index(6)), fake(real.size());
    for (auto& p : real) p = rng.uniform(0.01, 0.99);
    for (auto& p : fake) p = rng.uniform(0.01, 0.99);
    const double d = discriminator_loss(probs(real), probs(fake)).item();
    CHECK(std::abs(d - (bce_oracle(real, 1.0) + bce_oracle(fake, 0.0))) < 1e-9);
    CHECK(std::abs(generator_adversarial_loss(probs(fake)).item() - bce_oracle(fake, 1.0)) < 1e-9);
    CHECK(std::abs(generator_adversarial_loss(probs(fake), true).item() + bce_oracle(fake, 0.0)) < 1e-9);
  }
}

TEST_CASE("regression terms add up") {
  auto model = model::ModelBundle::create(gen_config(), disc_config(), 1);
  const auto batch = make_batch(windows(3));
  const auto out = model.generator.forward(batch.features, ag::Mode::Train);
  const LossWeights w;
  const auto terms = regression_loss(out, batch, w);
  const double expected = weighted_regression(terms.face.item(), terms.body.item(), terms.hand.item(), w);
  CHECK(std::abs(terms.total.item() - expected) <= 1e-12 * std::abs(expected));
  CHECK(terms.face.item() > 0.0);
  CHECK(terms.body.item() > 0.0);
  CHECK(terms.hand.item() > 0.0);
}

TEST_CASE("batches are stacked channel-major") {
  const auto w = windows(2);
  const auto b = make_batch(w);
  CHECK(b.size() == 2);
  CHECK(b.features.shape() == ag::Shape{2, 28, 64});
  CHECK(b.face.shape() == ag::Shape{2, 64, 64});
  CHECK(b.body.shape() == ag::Shape{2, 42, 64});
  CHECK(b.hand.shape() == ag::Shape{2, 126, 64});
  CHECK(b.body.values()[(1 * 42 + 5) * 64 + 17] == w[1].body[17][5]);
  CHECK(b.features.values()[(0 * 28 + 27) * 64 + 63] == w[0].features[63][27]);
  CHECK(kind_of([] { make_batch({}); }) == ErrorKind::Contract);
}

TEST_CASE("a train step keeps the face head out of the adversarial gradient") {
  auto model = model::ModelBundle::create(gen_config(), disc_config(), 2);
  TrainConfig cfg;
  cfg.batch_size = 3;
  cfg.verify_isolation = true;
  const auto w = windows(3);
  for (int i = 0; i < 3; ++i) {
    const auto m = train_step(model, w, {}, cfg);
    CHECK(m.adversarial);
    CHECK(m.face_isolated);
    CHECK(m.generator_untouched_by_d);
    CHECK(std::abs(m.l_reg - weighted_regression(m.l_face, m.l_body, m.l_hand, {})) <= 1e-12 * m.l_reg);
    CHECK(std::isfinite(m.d_loss));
    CHECK(std::isfinite(m.g_loss));
  }
  for (Parameter* p : model.generator.parameters()) CHECK_FALSE(p->tensor.has_grad());
  for (Parameter* p : model.discriminator.parameters()) CHECK_FALSE(p->tensor.has_grad());
}

TEST_CASE("without the adversarial term the discriminator is untouched") {
  auto model = model::ModelBundle::create(gen_config(), disc_config(), 3);
  auto disc = model.discriminator.parameters();
  auto gen = model.generator.parameters();
  const auto d_before = hash_parameters(disc);
  const auto g_before = hash_parameters(gen);
  TrainConfig cfg;
  cfg.adversarial = false;
  cfg.batch_size = 1;
  const auto m = train_step(model, windows(1), {}, cfg);
  CHECK_FALSE(m.adversarial);
  CHECK(m.d_loss == 0.0);
  CHECK(hash_parameters(disc) == d_before);
  CHECK(hash_parameters(gen) != g_before);
  for (Parameter* p : disc) CHECK(p->step_count == 0);
}

TEST_CASE("several generator steps per discriminator step") {
  auto model = model::ModelBundle::create(gen_config(), disc_config(), 4);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.g_steps_per_d_step = 3;
  train_step(model, windows(2), {}, cfg);
  CHECK(model.generator.parameters().front()->step_count == 3);
  CHECK(model.discriminator.parameters().front()->step_count == 1);
}

TEST_CASE("step preconditions") {
  auto model = model::ModelBundle::create(gen_config(), disc_config(), 5);
  TrainConfig cfg;
  CHECK(kind_of([&] { train_step(model, {}, {}, cfg); }) == ErrorKind::Contract);
  CHECK(kind_of([&] { train_step(model, windows(1), {}, cfg); }) == ErrorKind::Contract);
  cfg.batch_size = 1;
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::Config);
  cfg.adversarial = false;
  CHECK_NOTHROW(cfg.validate());
  cfg.lr = 0.0;
  CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::Config);
}

TEST_CASE("training is reproducible from the seed") {
  const auto w = windows(6);
  TrainConfig cfg;
  cfg.batch_size = 3;
  cfg.max_iterations = 3;
  cfg.seed = 9;
  auto run = [&] {
    auto model = model::ModelBundle::create(gen_config(), disc_config(), 6);
    auto metrics = train(model, w, {}, cfg);
    auto params = model.generator.parameters();
    auto dparams = model.discriminator.parameters();
    params.insert(params.end(), dparams.begin(), dparams.end());
    return std::pair{metrics, hash_parameters(params)};
  };
  const auto [ma, ha] = run();
  const auto [mb, hb] = run();
  CHECK(ha == hb);
  REQUIRE(ma.size() == 3);
  REQUIRE(mb.size() == 3);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    CHECK(ma[i].iteration == i + 1);
    CHECK(ma[i].l_reg == mb[i].l_reg);
    CHECK(ma[i].d_loss == mb[i].d_loss);
    CHECK(ma[i].g_loss == mb[i].g_loss);
  }
}

TEST_CASE("checkpoint hook fires on schedule") {
  const auto w = windows(4);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_iterations = 5;
  cfg.checkpoint_every = 2;
  auto model = model::ModelBundle::create(gen_config(), disc_config(), 7);
  std::vector<std::uint64_t> seen;
  train(model, w, {}, cfg, [&](model::ModelBundle& m) { seen.push_back(m.iteration); });
  CHECK(seen.size() >= 2);
  CHECK(seen[0] == 2);
  CHECK(seen[1] == 4);
  CHECK(model.iteration == 5);
}

TEST_CASE("metrics CSV layout") {
  TempDir dir;
  StepMetrics adv;
  adv.iteration = 1;
  adv.adversarial = true;
  adv.l_face = 1.5;
  adv.d_loss = 0.25;
  StepMetrics plain;
  plain.iteration = 2;
  std::vector<StepMetrics> metrics = {adv, plain};
  const auto path = dir.path() / "m.csv";
  write_metrics_csv(path, metrics);
  std::ifstream in(path);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header == "iteration,l_face,l_body,l_hand,l_reg,d_loss,g_loss,wall_ms");
  CHECK(first.rfind("1,1.5,0,0,0,0.25,0,", 0) == 0);
  CHECK(second.rfind("2,0,0,0,0,,,", 0) == 0);
}

TEST_CASE("corpus windows respect overlap") {
  const auto corpus = synthetic::generate_synthetic_corpus(2, 2, 124);
  // Starts 0 and 60 fit in 124 frames with a 4-frame overlap.
  const auto w = corpus_windows(corpus, 4, 64);
  CHECK(w.size() == 4);
  CHECK(w[1].features.front() == corpus[0].features.frames[60]);
  CHECK(w[0].subject_id == "synthetic");
}
