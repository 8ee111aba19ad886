#include "gesture/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "gesture/error.hpp"
#include "gesture/rng.hpp"

namespace gesture::training {

namespace {

using Clock = std::chrono::steady_clock;

template <std::size_t C, typename Frames>
ag::Tensor stack(std::span<const TrainingWindow> windows, Frames TrainingWindow::*member,
                 std::size_t W) {
  const std::size_t N = windows.size();
  std::vector<double> v(N * C * W);
  for (std::size_t n = 0; n < N; ++n) {
    const auto& frames = windows[n].*member;
    if (frames.size() != W) fail(ErrorKind::Shape, "training windows differ in length");
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < W; ++t) v[(n * C + c) * W + t] = frames[t][c];
    }
  }
  return ag::Tensor::from({N, C, W}, std::move(v));
}

std::vector<double> labels(std::size_t n, double value) { return std::vector<double>(n, value); }

bool all_zero_or_absent(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    if (!p->tensor.has_grad()) continue;
    for (double g : p->tensor.grad()) {
      if (g != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

void LossWeights::validate() const {
  if (!(w_face > 0.0) || !(w_body > 0.0) || !(w_hand > 0.0) || !(w_adv > 0.0)) {
    fail(ErrorKind::Config, "loss weights must be strictly positive");
  }
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) fail(ErrorKind::Config, "learning rate must be positive");
  if (batch_size < 1) fail(ErrorKind::Config, "batch size must be at least 1");
  if (g_steps_per_d_step < 1) fail(ErrorKind::Config, "g_steps_per_d_step must be at least 1");
  if (adversarial && batch_size < 2) fail(ErrorKind::Config, "adversarial training needs batches of at least 2");
}

Batch make_batch(std::span<const TrainingWindow> windows) {
  if (windows.empty()) fail(ErrorKind::Contract, "empty batch");
  const std::size_t W = windows[0].features.size();
  Batch b;
  b.features = stack<audio::kFeatureDims>(windows, &TrainingWindow::features, W);
  b.face = stack<annotation::kFaceDims>(windows, &TrainingWindow::face, W);
  b.body = stack<annotation::kBodyDims>(windows, &TrainingWindow::body, W);
  b.hand = stack<annotation::kHandDims>(windows, &TrainingWindow::hand, W);
  return b;
}

RegressionTerms regression_loss(const model::GeneratorOutput& pred, const Batch& target,
                                const LossWeights& weights) {
  RegressionTerms r;
  r.face = ag::l2_loss(pred.face, target.face);
  r.body = ag::l1_loss(pred.body, target.body);
  r.hand = ag::l1_loss(pred.hand, target.hand);
  r.total = ag::add(ag::add(ag::scale(r.face, weights.w_face), ag::scale(r.body, weights.w_body)),
                    ag::scale(r.hand, weights.w_hand));
  return r;
}

double weighted_regression(double l_face, double l_body, double l_hand, const LossWeights& weights) {
  return weights.w_face * l_face + weights.w_body * l_body + weights.w_hand * l_hand;
}

ag::Tensor discriminator_loss(const ag::Tensor& real_prob, const ag::Tensor& fake_prob) {
  return ag::add(ag::bce_loss(real_prob, labels(real_prob.numel(), 1.0)),
                 ag::bce_loss(fake_prob, labels(fake_prob.numel(), 0.0)));
}

ag::Tensor generator_adversarial_loss(const ag::Tensor& fake_prob, bool saturating) {
  if (saturating) return ag::scale(ag::bce_loss(fake_prob, labels(fake_prob.numel(), 0.0)), -1.0);
  return ag::bce_loss(fake_prob, labels(fake_prob.numel(), 1.0));
}

StepMetrics train_step(ModelBundle& model, std::span<const TrainingWindow> windows,
                       const LossWeights& weights, const TrainConfig& config) {
  const auto start = Clock::now();
  if (windows.empty()) fail(ErrorKind::Contract, "empty batch");
  if (config.adversarial && windows.size() < 2) {
    fail(ErrorKind::Contract, "adversarial updates need a batch of at least 2 windows");
  }
  const Batch batch = make_batch(windows);
  const AdamOptions adam{.lr = config.lr};
  auto gen_params = model.generator.parameters();
  auto disc_params = model.discriminator.parameters();
  auto face_params = model.generator.head_parameters(annotation::Stream::Face);

  StepMetrics m;
  m.adversarial = config.adversarial;
  auto out = model.generator.forward(batch.features, ag::Mode::Train);

  if (config.adversarial) {
    const std::uint64_t before = config.verify_isolation ? hash_parameters(gen_params) : 0;
    const auto real = model.discriminator.forward(batch.features, batch.body, batch.hand, ag::Mode::Train);
    const auto fake = model.discriminator.forward(batch.features, out.body.detach(), out.hand.detach(),
                                                  ag::Mode::Train);
    const auto d_loss = discriminator_loss(real, fake);
    ag::backward(d_loss);
    adam_step(disc_params, adam);
    m.d_loss = d_loss.item();
    if (config.verify_isolation) {
      bool clean = hash_parameters(gen_params) == before;
      for (const Parameter* p : gen_params) clean = clean && !p->tensor.has_grad();
      m.generator_untouched_by_d = clean;
    }
  }

  for (std::size_t k = 0; k < config.g_steps_per_d_step; ++k) {
    if (k > 0) out = model.generator.forward(batch.features, ag::Mode::Train);
    const auto reg = regression_loss(out, batch, weights);
    ag::Tensor total = reg.total;
    if (config.adversarial) {
      const auto fake = model.discriminator.forward(batch.features, out.body, out.hand, ag::Mode::Train);
      const auto g_loss = generator_adversarial_loss(fake, config.saturating);
      const auto adv = ag::scale(g_loss, weights.w_adv);
      if (config.verify_isolation) {
        ag::backward(adv);
        m.face_isolated = m.face_isolated && all_zero_or_absent(face_params);
        zero_grad(gen_params);
        zero_grad(disc_params);
      }
      total = ag::add(total, adv);
      if (k == 0) m.g_loss = g_loss.item();
    }
    ag::backward(total);
    adam_step(gen_params, adam);
    zero_grad(disc_params);
    if (k == 0) {
      m.l_face = reg.face.item();
      m.l_body = reg.body.item();
      m.l_hand = reg.hand.item();
      m.l_reg = reg.total.item();
    }
  }

  m.iteration = ++model.iteration;
  m.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return m;
}

std::vector<TrainingWindow> corpus_windows(const annotation::Corpus& corpus, std::size_t overlap,
                                           std::size_t length) {
  std::vector<TrainingWindow> out;
  for (const auto& rec : corpus) {
    auto w = annotation::make_training_windows(rec.features, rec.gestures, overlap, rec.subject_id, length);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

std::vector<StepMetrics> train(ModelBundle& model, std::span<const TrainingWindow> windows,
                               const LossWeights& weights, const TrainConfig& config,
                               const CheckpointHook& on_checkpoint) {
  weights.validate();
  config.validate();
  if (windows.empty()) fail(ErrorKind::Contract, "the corpus yields no training windows");
  Rng rng(Rng::mix(config.seed, 0x7a11));
  std::vector<StepMetrics> log;
  log.reserve(config.max_iterations);
  std::vector<TrainingWindow> batch(config.batch_size);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    for (auto& w : batch) w = windows[rng.index(windows.size())];
    log.push_back(train_step(model, batch, weights, config));
    if (config.checkpoint_every > 0 && on_checkpoint && (it + 1) % config.checkpoint_every == 0) {
      on_checkpoint(model);
    }
  }
  return log;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const StepMetrics> metrics) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << "iteration,l_face,l_body,l_hand,l_reg,d_loss,g_loss,wall_ms\n";
  out << std::setprecision(17);
  for (const auto& m : metrics) {
    out << m.iteration << ',' << m.l_face << ',' << m.l_body << ',' << m.l_hand << ',' << m.l_reg << ',';
    if (m.adversarial) out << m.d_loss << ',' << m.g_loss;
    else out << ',';
    out << ',' << std::setprecision(6) << m.wall_ms << std::setprecision(17) << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

void SyncConfig::validate() const {
  model::DiscriminatorConfig probe;
  probe.window_length = window_length;
  probe.validate();
  if (base_channels < 1) fail(ErrorKind::Config, "base_channels must be positive");
  if (batch_size < 2 || batch_size % 2 != 0) fail(ErrorKind::Config, "sync batch size must be even and at least 2");
  if (!(lr > 0.0)) fail(ErrorKind::Config, "learning rate must be positive");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail(ErrorKind::Config, "train fraction must lie in (0, 1)");
  if (test_stride < 1) fail(ErrorKind::Config, "test stride must be positive");
}

SyncResult train_sync_classifier(const annotation::Corpus& corpus, const SyncConfig& config) {
  config.validate();
  if (corpus.size() < 2) fail(ErrorKind::Contract, "off-sync pairs need at least two sequences");
  const std::size_t W = config.window_length;
  for (const auto& rec : corpus) {
    if (rec.features.length() < W || rec.gestures.length() < W) {
      fail(ErrorKind::TooShort, "sequence " + rec.id + " is shorter than the " + std::to_string(W) + "-frame window");
    }
  }
  auto [train_set, test_set] = annotation::split_by_sequence(corpus, config.train_fraction, config.seed);
  if (train_set.size() < 2 || test_set.size() < 2) {
    fail(ErrorKind::Contract, "both sides of the split need at least two sequences");
  }

  model::GeneratorConfig gen;
  gen.base_channels = config.base_channels;
  model::DiscriminatorConfig disc;
  disc.base_channels = config.base_channels;
  disc.window_length = W;
  SyncResult result{ModelBundle::create(gen, disc, config.seed), {}, {}, train_set.size(), test_set.size()};
  auto& classifier = result.model.discriminator;
  auto params = classifier.parameters();
  const AdamOptions adam{.lr = config.lr};

  Rng rng(Rng::mix(config.seed, 0x5c11));
  auto start_in = [&](const annotation::SequenceRecord& rec) {
    const std::size_t T = std::min(rec.features.length(), rec.gestures.length());
    return rng.index(T - W + 1);
  };
  const std::size_t half = config.batch_size / 2;
  std::vector<evaluation::SyncPair> pairs;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    pairs.clear();
    for (std::size_t k = 0; k < half; ++k) {
      const auto& rec = train_set[rng.index(train_set.size())];
      const std::size_t s = start_in(rec);
      pairs.push_back(evaluation::make_sync_pair(rec, s, rec, s, W));
    }
    for (std::size_t k = 0; k < half; ++k) {
      const std::size_t i = rng.index(train_set.size());
      std::size_t j = rng.index(train_set.size() - 1);
      if (j >= i) ++j;
      const std::size_t s = start_in(train_set[i]);
      pairs.push_back(evaluation::make_sync_pair(train_set[i], s, train_set[j], start_in(train_set[j]), W));
    }
    const auto batch = evaluation::stack_pairs(pairs);
    const auto prob = classifier.forward(batch.features, batch.body, batch.hand, ag::Mode::Train);
    const auto loss = ag::bce_loss(prob, batch.labels);
    ag::backward(loss);
    adam_step(params, adam);
    result.losses.push_back(loss.item());
  }
  result.model.iteration = config.iterations;
  result.model.subject_id = corpus.front().subject_id;

  const auto test_pairs = evaluation::sync_test_pairs(test_set, W, config.test_stride, config.seed);
  result.accuracy = evaluation::sync_accuracy_report(classifier, test_pairs);
  return result;
}

}  // namespace gesture::training
