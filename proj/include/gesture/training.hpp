#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "gesture/annotation.hpp"
#include "gesture/evaluation.hpp"
#include "gesture/model.hpp"

namespace gesture::training {

using annotation::TrainingWindow;
using model::ModelBundle;

struct LossWeights {
  double w_face = 0.37;
  double w_body = 600.0;
  double w_hand = 840.0;
  double w_adv = 5.0;

  void validate() const;
};

struct TrainConfig {
  double lr = 5e-4;
  std::size_t batch_size = 25;
  std::size_t max_iterations = 2000;
  std::size_t g_steps_per_d_step = 1;
  bool adversarial = true;
  // log(1 - D(fake)) for the generator instead of -log D(fake).
  bool saturating = false;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // 0 disables
  // Per step, backpropagate the adversarial term alone and confirm the face
  // decoder receives nothing, and hash the generator around the D update.
  bool verify_isolation = false;

  void validate() const;
};

// Windows stacked as [N, C, W] tensors.
struct Batch {
  ag::Tensor features;
  ag::Tensor face;
  ag::Tensor body;
  ag::Tensor hand;
  std::size_t size() const { return features.dim(0); }
};

Batch make_batch(std::span<const TrainingWindow> windows);

struct RegressionTerms {
  ag::Tensor face;   // L2
  ag::Tensor body;   // L1
  ag::Tensor hand;   // L1
  ag::Tensor total;  // weighted sum
};

RegressionTerms regression_loss(const model::GeneratorOutput& pred, const Batch& target,
                                const LossWeights& weights);
double weighted_regression(double l_face, double l_body, double l_hand, const LossWeights& weights);

// BCE(real, 1) + BCE(fake, 0).
ag::Tensor discriminator_loss(const ag::Tensor& real_prob, const ag::Tensor& fake_prob);
// BCE(fake, 1), or -BCE(fake, 0) in the saturating form.
ag::Tensor generator_adversarial_loss(const ag::Tensor& fake_prob, bool saturating = false);

struct StepMetrics {
  std::uint64_t iteration = 0;
  double l_face = 0.0;
  double l_body = 0.0;
  double l_hand = 0.0;
  double l_reg = 0.0;
  bool adversarial = false;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double wall_ms = 0.0;
  // Only meaningful when verify_isolation was requested.
  bool face_isolated = true;
  bool generator_untouched_by_d = true;
};

// One discriminator update on real pairs and pairs with detached generated
// body and hand, then g_steps_per_d_step generator updates on
// L_Reg + w_adv g_loss. Without the adversarial term this is a plain
// regression step and the discriminator is not touched.
StepMetrics train_step(ModelBundle& model, std::span<const TrainingWindow> batch,
                       const LossWeights& weights, const TrainConfig& config);

// Every window of every sequence, in corpus order.
std::vector<TrainingWindow> corpus_windows(const annotation::Corpus& corpus, std::size_t overlap,
                                           std::size_t length);

using CheckpointHook = std::function<void(ModelBundle&)>;

// Mini-batches drawn uniformly with replacement from a seeded stream.
std::vector<StepMetrics> train(ModelBundle& model, std::span<const TrainingWindow> windows,
                               const LossWeights& weights, const TrainConfig& config,
                               const CheckpointHook& on_checkpoint = {});

void write_metrics_csv(const std::filesystem::path& path, std::span<const StepMetrics> metrics);

struct SyncConfig {
  std::size_t window_length = 64;
  std::size_t base_channels = 16;
  std::size_t iterations = 300;
  std::size_t batch_size = 16;  // half in-sync, half off-sync
  double lr = 5e-4;
  std::uint64_t seed = 0;
  double train_fraction = 0.9;
  std::size_t test_stride = 8;

  void validate() const;
};

struct SyncResult {
  ModelBundle model;  // the classifier is model.discriminator
  evaluation::SyncAccuracy accuracy;
  std::vector<double> losses;
  std::size_t train_sequences = 0;
  std::size_t test_sequences = 0;
};

// Trains the discriminator architecture to tell in-sync audio/gesture
// windows from audio paired with a random window of another sequence, on a
// seeded by-sequence split, and reports held-out accuracy.
SyncResult train_sync_classifier(const annotation::Corpus& corpus, const SyncConfig& config);

}  // namespace gesture::training
