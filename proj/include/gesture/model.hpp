#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gesture/annotation.hpp"
#include "gesture/io.hpp"
#include "gesture/ops.hpp"
#include "gesture/optim.hpp"

namespace gesture::model {

using ag::Mode;
using annotation::Stream;

// Shared encoder of 8 [Conv-BN-ReLU] blocks with max-pooling after blocks
// 2, 4 and 6; three decoders (face, body, hand) of 7 blocks each, upsampling
// before blocks 2, 4 and 6 and concatenating the encoder activation of the
// same resolution, then a plain kernel-3 output convolution.
struct GeneratorConfig {
  std::size_t base_channels = 64;
  std::size_t encoder_blocks = 8;
  std::size_t decoder_blocks = 7;
  std::size_t kernel = 3;
  std::size_t feature_dims = audio::kFeatureDims;
  std::size_t face_dims = annotation::kFaceDims;
  std::size_t body_dims = annotation::kBodyDims;
  std::size_t hand_dims = annotation::kHandDims;

  // b, b, 2b, 2b, 4b, 4b, 8b, 8b
  std::vector<std::size_t> encoder_widths() const;
  // 8b, 4b, 4b, 2b, 2b, b, b
  std::vector<std::size_t> decoder_widths() const;
  std::size_t head_dims(Stream head) const;
  // Temporal lengths are padded up to a multiple of this.
  std::size_t length_multiple() const { return 8; }
  void validate() const;

  nlohmann::json to_json() const;
  static GeneratorConfig from_json(const nlohmann::json& j);
  bool operator==(const GeneratorConfig&) const = default;
};

// Six [Conv-BN-ReLU] blocks over the channel concatenation of audio
// features, body and hand (196 channels), pooling after every second block
// (only after 2 and 4 for 16-frame windows), then flatten, linear, sigmoid.
struct DiscriminatorConfig {
  std::size_t base_channels = 64;
  std::size_t blocks = 6;
  std::size_t kernel = 3;
  std::size_t window_length = annotation::kWindowLength;

  std::size_t input_channels() const {
    return audio::kFeatureDims + annotation::kBodyDims + annotation::kHandDims;
  }
  std::vector<std::size_t> widths() const;
  std::size_t pool_count() const { return window_length == 16 ? 2 : 3; }
  std::size_t output_length() const { return window_length >> pool_count(); }
  void validate() const;

  nlohmann::json to_json() const;
  static DiscriminatorConfig from_json(const nlohmann::json& j);
  bool operator==(const DiscriminatorConfig&) const = default;
};

class ConvBlock {
 public:
  ConvBlock(const std::string& prefix, std::size_t in_channels, std::size_t out_channels, Rng& rng);

  ag::Tensor forward(const ag::Tensor& x, Mode mode);
  void collect(std::vector<Parameter*>& out);

  std::string prefix;
  Parameter weight;
  Parameter bias;
  Parameter gamma;
  Parameter beta;
  ag::BatchNormState bn;
};

using NamedBatchNorm = std::pair<std::string, ag::BatchNormState*>;

struct GeneratorOutput {
  ag::Tensor face;  // [N, 64, T]
  ag::Tensor body;  // [N, 42, T]
  ag::Tensor hand;  // [N, 126, T]
};

class Generator {
 public:
  Generator(const GeneratorConfig& config, Rng& rng);

  // features [N, 28, T] with T >= 8. Lengths that are not a multiple of 8
  // are reflect-padded and the outputs cropped back to T.
  GeneratorOutput forward(const ag::Tensor& features, Mode mode);

  const GeneratorConfig& config() const { return config_; }
  std::vector<Parameter*> parameters();
  std::vector<Parameter*> encoder_parameters();
  std::vector<Parameter*> head_parameters(Stream head);
  std::vector<NamedBatchNorm> batchnorm_states();

 private:
  struct Decoder {
    std::vector<ConvBlock> blocks;
    Parameter out_weight;
    Parameter out_bias;
  };

  ag::Tensor decode(Decoder& decoder, const ag::Tensor& bottleneck,
                    const std::vector<ag::Tensor>& skips, Mode mode);

  GeneratorConfig config_;
  std::vector<ConvBlock> encoder_;
  std::vector<Decoder> decoders_;  // indexed by Stream
};

class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& config, Rng& rng);

  // features [N, 28, W], body [N, 42, W], hand [N, 126, W] -> [N]
  // probabilities that the pair is real. W must equal the configured window.
  ag::Tensor forward(const ag::Tensor& features, const ag::Tensor& body, const ag::Tensor& hand,
                     Mode mode);

  const DiscriminatorConfig& config() const { return config_; }
  std::vector<Parameter*> parameters();
  std::vector<NamedBatchNorm> batchnorm_states();

 private:
  DiscriminatorConfig config_;
  std::vector<ConvBlock> blocks_;
  Parameter head_weight_;
  Parameter head_bias_;
};

struct ModelBundle {
  GeneratorConfig generator_config;
  DiscriminatorConfig discriminator_config;
  Generator generator;
  Discriminator discriminator;
  std::string subject_id;
  std::uint64_t iteration = 0;

  static ModelBundle create(const GeneratorConfig& gen, const DiscriminatorConfig& disc,
                            std::uint64_t seed, std::string subject_id = {});

  ModelBundle(ModelBundle&&) = default;
  ModelBundle& operator=(ModelBundle&&) = default;

 private:
  ModelBundle(const GeneratorConfig& gen, const DiscriminatorConfig& disc, Rng& rng);
};

// [T, C] frames -> [1, C, T] tensor.
template <std::size_t C>
ag::Tensor frames_to_tensor(std::span<const std::array<double, C>> frames) {
  const std::size_t T = frames.size();
  std::vector<double> v(C * T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) v[c * T + t] = frames[t][c];
  }
  return ag::Tensor::from({1, C, T}, std::move(v));
}

// Sample n of an [N, C, T] tensor back to frames.
template <std::size_t C>
std::vector<std::array<double, C>> tensor_to_frames(const ag::Tensor& x, std::size_t n = 0) {
  const std::size_t T = x.dim(2);
  std::vector<std::array<double, C>> frames(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) frames[t][c] = x.values()[(n * C + c) * T + t];
  }
  return frames;
}

// Eval-mode generator pass over a whole feature sequence. The result is
// unsmoothed; confidences are 1.
annotation::GestureSequence synthesize(ModelBundle& model, const audio::AudioFeatureSequence& features);

io::ArrayContainer to_container(ModelBundle& model);
ModelBundle from_container(const io::ArrayContainer& container);

void save_checkpoint(ModelBundle& model, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);
// Rejects checkpoints whose stored configuration differs from the given one.
ModelBundle load_checkpoint(const std::filesystem::path& path, const GeneratorConfig& gen,
                            const DiscriminatorConfig& disc);

}  // namespace gesture::model
