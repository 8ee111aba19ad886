#include "gesture/model.hpp"

#include <cmath>

#include "gesture/error.hpp"
#include "gesture/kernels.hpp"
#include "gesture/rng.hpp"

namespace gesture::model {

namespace {

constexpr std::array<Stream, 3> kHeads = {Stream::Face, Stream::Body, Stream::Hand};

const char* head_name(Stream s) {
  switch (s) {
    case Stream::Face: return "face";
    case Stream::Body: return "body";
    case Stream::Hand: return "hand";
  }
  return "?";
}

void init_conv(Parameter& weight, Parameter& bias, std::size_t in_channels, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernels::kConvTaps));
  weight.init_uniform(rng, bound);
  bias.init_uniform(rng, bound);
}

std::size_t get_size(const nlohmann::json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_unsigned()) fail(ErrorKind::Config, std::string(key) + " must be a non-negative integer");
  return j[key].get<std::size_t>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* what) {
  if (!j.is_object()) fail(ErrorKind::Config, std::string(what) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : keys) ok = ok || key == k;
    if (!ok) fail(ErrorKind::Config, std::string("unknown key '") + key + "' in " + what);
  }
}

}  // namespace

std::vector<std::size_t> GeneratorConfig::encoder_widths() const {
  const std::size_t b = base_channels;
  return {b, b, 2 * b, 2 * b, 4 * b, 4 * b, 8 * b, 8 * b};
}

std::vector<std::size_t> GeneratorConfig::decoder_widths() const {
  const std::size_t b = base_channels;
  return {8 * b, 4 * b, 4 * b, 2 * b, 2 * b, b, b};
}

std::size_t GeneratorConfig::head_dims(Stream head) const {
  switch (head) {
    case Stream::Face: return face_dims;
    case Stream::Body: return body_dims;
    case Stream::Hand: return hand_dims;
  }
  return 0;
}

void GeneratorConfig::validate() const {
  if (base_channels < 1) fail(ErrorKind::Config, "base_channels must be positive");
  if (encoder_blocks != 8 || decoder_blocks != 7) {
    fail(ErrorKind::Config, "generator needs 8 encoder and 7 decoder blocks per head");
  }
  if (kernel != 3) fail(ErrorKind::Config, "kernel size must be 3");
  if (feature_dims != audio::kFeatureDims || face_dims != annotation::kFaceDims ||
      body_dims != annotation::kBodyDims || hand_dims != annotation::kHandDims) {
    fail(ErrorKind::Config, "generator stream dimensionalities must be 28 -> (64, 42, 126)");
  }
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"base_channels", base_channels}, {"encoder_blocks", encoder_blocks},
          {"decoder_blocks", decoder_blocks}, {"kernel", kernel},
          {"feature_dims", feature_dims},     {"face_dims", face_dims},
          {"body_dims", body_dims},           {"hand_dims", hand_dims}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j, {"base_channels", "encoder_blocks", "decoder_blocks", "kernel", "feature_dims",
                     "face_dims", "body_dims", "hand_dims"},
                 "generator config");
  GeneratorConfig c;
  c.base_channels = get_size(j, "base_channels", c.base_channels);
  c.encoder_blocks = get_size(j, "encoder_blocks", c.encoder_blocks);
  c.decoder_blocks = get_size(j, "decoder_blocks", c.decoder_blocks);
  c.kernel = get_size(j, "kernel", c.kernel);
  c.feature_dims = get_size(j, "feature_dims", c.feature_dims);
  c.face_dims = get_size(j, "face_dims", c.face_dims);
  c.body_dims = get_size(j, "body_dims", c.body_dims);
  c.hand_dims = get_size(j, "hand_dims", c.hand_dims);
  c.validate();
  return c;
}

std::vector<std::size_t> DiscriminatorConfig::widths() const {
  const std::size_t b = base_channels;
  return {b, b, 2 * b, 2 * b, 4 * b, 4 * b};
}

void DiscriminatorConfig::validate() const {
  if (base_channels < 1) fail(ErrorKind::Config, "base_channels must be positive");
  if (blocks != 6) fail(ErrorKind::Config, "discriminator needs 6 blocks");
  if (kernel != 3) fail(ErrorKind::Config, "kernel size must be 3");
  if (window_length != 16 && window_length != 32 && window_length != 64) {
    fail(ErrorKind::Config, "window length must be 16, 32 or 64 frames");
  }
}

nlohmann::json DiscriminatorConfig::to_json() const {
  return {{"base_channels", base_channels},
          {"blocks", blocks},
          {"kernel", kernel},
          {"window_length", window_length},
          {"input_channels", input_channels()}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j, {"base_channels", "blocks", "kernel", "window_length", "input_channels"},
                 "discriminator config");
  DiscriminatorConfig c;
  c.base_channels = get_size(j, "base_channels", c.base_channels);
  c.blocks = get_size(j, "blocks", c.blocks);
  c.kernel = get_size(j, "kernel", c.kernel);
  c.window_length = get_size(j, "window_length", c.window_length);
  if (get_size(j, "input_channels", c.input_channels()) != c.input_channels()) {
    fail(ErrorKind::Config, "discriminator input must have 196 channels");
  }
  c.validate();
  return c;
}

ConvBlock::ConvBlock(const std::string& name, std::size_t in_channels, std::size_t out_channels,
                     Rng& rng)
    : prefix(name),
      weight(name + ".conv.weight", {out_channels, in_channels, kernels::kConvTaps}),
      bias(name + ".conv.bias", {out_channels}),
      gamma(name + ".bn.gamma", {out_channels}),
      beta(name + ".bn.beta", {out_channels}),
      bn(out_channels) {
  init_conv(weight, bias, in_channels, rng);
  gamma.fill(1.0);
}

ag::Tensor ConvBlock::forward(const ag::Tensor& x, Mode mode) {
  auto h = ag::conv1d(x, weight.tensor, bias.tensor);
  h = ag::batchnorm1d(h, gamma.tensor, beta.tensor, bn, mode);
  return ag::relu(h);
}

void ConvBlock::collect(std::vector<Parameter*>& out) {
  out.insert(out.end(), {&weight, &bias, &gamma, &beta});
}

Generator::Generator(const GeneratorConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const auto enc = config_.encoder_widths();
  std::size_t in = config_.feature_dims;
  for (std::size_t i = 0; i < enc.size(); ++i) {
    encoder_.emplace_back("gen.enc." + std::to_string(i), in, enc[i], rng);
    in = enc[i];
  }
  // Skip widths entering decoder blocks 1, 3 and 5 (0-based).
  const std::array<std::size_t, 3> skip_width = {enc[5], enc[3], enc[1]};
  const auto dec = config_.decoder_widths();
  for (Stream head : kHeads) {
    const std::string base = std::string("gen.dec.") + head_name(head);
    Decoder d{{}, Parameter(base + ".out.weight", {config_.head_dims(head), dec.back(), kernels::kConvTaps}),
              Parameter(base + ".out.bias", {config_.head_dims(head)})};
    std::size_t width = enc.back();
    for (std::size_t i = 0; i < dec.size(); ++i) {
      std::size_t block_in = width;
      if (i == 1 || i == 3 || i == 5) block_in += skip_width[(i - 1) / 2];
      d.blocks.emplace_back(base + "." + std::to_string(i), block_in, dec[i], rng);
      width = dec[i];
    }
    init_conv(d.out_weight, d.out_bias, dec.back(), rng);
    decoders_.push_back(std::move(d));
  }
}

ag::Tensor Generator::decode(Decoder& decoder, const ag::Tensor& bottleneck,
                             const std::vector<ag::Tensor>& skips, Mode mode) {
  auto h = decoder.blocks[0].forward(bottleneck, mode);
  for (std::size_t level = 0; level < 3; ++level) {
    h = ag::upsample_nearest(h);
    const auto& skip = skips[skips.size() - 1 - level];
    if (skip.dim(2) != h.dim(2)) {
      fail(ErrorKind::Internal, "skip connection length " + std::to_string(skip.dim(2)) +
                                    " does not match decoder length " + std::to_string(h.dim(2)));
    }
    h = ag::concat_channels(h, skip);
    h = decoder.blocks[1 + 2 * level].forward(h, mode);
    h = decoder.blocks[2 + 2 * level].forward(h, mode);
  }
  return ag::conv1d(h, decoder.out_weight.tensor, decoder.out_bias.tensor);
}

GeneratorOutput Generator::forward(const ag::Tensor& features, Mode mode) {
  if (!features.defined() || features.rank() != 3 || features.dim(1) != config_.feature_dims) {
    fail(ErrorKind::Shape, "generator expects features [N, 28, T], got " +
                               (features.defined() ? ag::to_string(features.shape()) : "undefined"));
  }
  const std::size_t T = features.dim(2);
  if (T < config_.length_multiple()) {
    fail(ErrorKind::Shape, "generator needs at least 8 frames, got " + std::to_string(T));
  }
  const std::size_t pad = (config_.length_multiple() - T % config_.length_multiple()) %
                          config_.length_multiple();
  auto h = pad > 0 ? ag::pad_time_reflect(features, pad) : features;

  std::vector<ag::Tensor> skips;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    h = encoder_[i].forward(h, mode);
    if (i == 1 || i == 3 || i == 5) {
      skips.push_back(h);
      h = ag::maxpool1d(h);
    }
  }

  GeneratorOutput out;
  ag::Tensor* slots[3] = {&out.face, &out.body, &out.hand};
  for (std::size_t k = 0; k < kHeads.size(); ++k) {
    auto y = decode(decoders_[k], h, skips, mode);
    *slots[k] = pad > 0 ? ag::crop_time(y, 0, T) : y;
  }
  return out;
}

std::vector<Parameter*> Generator::encoder_parameters() {
  std::vector<Parameter*> out;
  for (auto& b : encoder_) b.collect(out);
  return out;
}

std::vector<Parameter*> Generator::head_parameters(Stream head) {
  std::vector<Parameter*> out;
  auto& d = decoders_[static_cast<std::size_t>(head)];
  for (auto& b : d.blocks) b.collect(out);
  out.push_back(&d.out_weight);
  out.push_back(&d.out_bias);
  return out;
}

std::vector<Parameter*> Generator::parameters() {
  auto out = encoder_parameters();
  for (Stream head : kHeads) {
    auto p = head_parameters(head);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<NamedBatchNorm> Generator::batchnorm_states() {
  std::vector<NamedBatchNorm> out;
  for (auto& b : encoder_) out.emplace_back(b.prefix + ".bn", &b.bn);
  for (auto& d : decoders_) {
    for (auto& b : d.blocks) out.emplace_back(b.prefix + ".bn", &b.bn);
  }
  return out;
}

Discriminator::Discriminator(const DiscriminatorConfig& config, Rng& rng)
    : config_(config),
      head_weight_("disc.head.weight", {1, config.widths().back() * config.output_length()}),
      head_bias_("disc.head.bias", {1}) {
  config_.validate();
  std::size_t in = config_.input_channels();
  const auto widths = config_.widths();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    blocks_.emplace_back("disc." + std::to_string(i), in, widths[i], rng);
    in = widths[i];
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(head_weight_.size()));
  head_weight_.init_uniform(rng, bound);
  head_bias_.init_uniform(rng, bound);
}

ag::Tensor Discriminator::forward(const ag::Tensor& features, const ag::Tensor& body,
                                  const ag::Tensor& hand, Mode mode) {
  const std::size_t W = config_.window_length;
  if (body.defined() && body.rank() == 3 && body.dim(1) == annotation::kFaceDims) {
    fail(ErrorKind::Contract, "the discriminator never takes facial expression parameters");
  }
  auto check = [&](const ag::Tensor& x, std::size_t channels, const char* what) {
    if (!x.defined() || x.rank() != 3 || x.dim(1) != channels) {
      fail(ErrorKind::Shape, std::string("discriminator ") + what + " must be [N, " +
                                 std::to_string(channels) + ", T]");
    }
    if (x.dim(2) != W) {
      fail(ErrorKind::Shape, std::string("discriminator ") + what + " has " +
                                 std::to_string(x.dim(2)) + " frames, window is " +
                                 std::to_string(W));
    }
  };
  check(features, audio::kFeatureDims, "features");
  check(body, annotation::kBodyDims, "body");
  check(hand, annotation::kHandDims, "hand");

  auto h = ag::concat_channels(ag::concat_channels(features, body), hand);
  const std::size_t pools = config_.pool_count();
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    h = blocks_[i].forward(h, mode);
    if (i % 2 == 1 && (i + 1) / 2 <= pools) h = ag::maxpool1d(h);
  }
  auto logits = ag::linear(ag::flatten(h), head_weight_.tensor, head_bias_.tensor);
  return ag::reshape(ag::sigmoid(logits), {features.dim(0)});
}

std::vector<Parameter*> Discriminator::parameters() {
  std::vector<Parameter*> out;
  for (auto& b : blocks_) b.collect(out);
  out.push_back(&head_weight_);
  out.push_back(&head_bias_);
  return out;
}

std::vector<NamedBatchNorm> Discriminator::batchnorm_states() {
  std::vector<NamedBatchNorm> out;
  for (auto& b : blocks_) out.emplace_back(b.prefix + ".bn", &b.bn);
  return out;
}

ModelBundle::ModelBundle(const GeneratorConfig& gen, const DiscriminatorConfig& disc, Rng& rng)
    : generator_config(gen), discriminator_config(disc), generator(gen, rng), discriminator(disc, rng) {}

ModelBundle ModelBundle::create(const GeneratorConfig& gen, const DiscriminatorConfig& disc,
                                std::uint64_t seed, std::string subject_id) {
  Rng rng(seed);
  ModelBundle bundle(gen, disc, rng);
  bundle.subject_id = std::move(subject_id);
  return bundle;
}

annotation::GestureSequence synthesize(ModelBundle& model, const audio::AudioFeatureSequence& features) {
  auto x = frames_to_tensor<audio::kFeatureDims>(features.frames);
  auto out = model.generator.forward(x, Mode::Eval);
  annotation::GestureSequence seq;
  seq.face = tensor_to_frames<annotation::kFaceDims>(out.face);
  seq.body = tensor_to_frames<annotation::kBodyDims>(out.body);
  seq.hand = tensor_to_frames<annotation::kHandDims>(out.hand);
  seq.confidence.assign(features.length(), 1.0);
  seq.missing.assign(features.length(), annotation::MissingMask{});
  return seq;
}

}  // namespace gesture::model
