#include <string>

#include "gesture/error.hpp"
#include "gesture/model.hpp"

namespace gesture::model {

namespace {

constexpr const char* kFormat = "gesture-model";

std::vector<std::uint32_t> dims_of(const ag::Shape& shape) {
  return std::vector<std::uint32_t>(shape.begin(), shape.end());
}

std::vector<Parameter*> all_parameters(ModelBundle& m) {
  auto p = m.generator.parameters();
  auto d = m.discriminator.parameters();
  p.insert(p.end(), d.begin(), d.end());
  return p;
}

std::vector<NamedBatchNorm> all_batchnorms(ModelBundle& m) {
  auto b = m.generator.batchnorm_states();
  auto d = m.discriminator.batchnorm_states();
  b.insert(b.end(), d.begin(), d.end());
  return b;
}

}  // namespace

io::ArrayContainer to_container(ModelBundle& model) {
  io::ArrayContainer c;
  c.version = io::kContainerVersion;
  c.config = {{"format", kFormat},
              {"generator", model.generator_config.to_json()},
              {"discriminator", model.discriminator_config.to_json()},
              {"subject", model.subject_id},
              {"iteration", model.iteration}};
  for (Parameter* p : all_parameters(model)) {
    const auto dims = dims_of(p->tensor.shape());
    const auto values = p->tensor.values();
    c.arrays.push_back({p->name, dims, {values.begin(), values.end()}});
    c.arrays.push_back({p->name + ".adam_m", dims, p->adam_m});
    c.arrays.push_back({p->name + ".adam_v", dims, p->adam_v});
    c.arrays.push_back({p->name + ".adam_step", {1}, {static_cast<double>(p->step_count)}});
  }
  for (auto& [name, bn] : all_batchnorms(model)) {
    const std::vector<std::uint32_t> dims = {static_cast<std::uint32_t>(bn->channels())};
    c.arrays.push_back({name + ".running_mean", dims, bn->running_mean});
    c.arrays.push_back({name + ".running_var", dims, bn->running_var});
    c.arrays.push_back({name + ".initialized", {1}, {bn->initialized ? 1.0 : 0.0}});
  }
  return c;
}

ModelBundle from_container(const io::ArrayContainer& c) {
  const auto& cfg = c.config;
  if (!cfg.is_object() || cfg.value("format", "") != kFormat || !cfg.contains("generator") ||
      !cfg.contains("discriminator")) {
    fail(ErrorKind::Checkpoint, "container does not hold a gesture model");
  }
  GeneratorConfig gen;
  DiscriminatorConfig disc;
  try {
    gen = GeneratorConfig::from_json(cfg["generator"]);
    disc = DiscriminatorConfig::from_json(cfg["discriminator"]);
  } catch (const Error& e) {
    fail(ErrorKind::Checkpoint, "inconsistent model config: " + e.detail());
  }
  ModelBundle model = ModelBundle::create(gen, disc, 0);
  model.subject_id = cfg.value("subject", "");
  model.iteration = cfg.value("iteration", std::uint64_t{0});

  std::size_t expected = 0;
  for (Parameter* p : all_parameters(model)) {
    const auto dims = dims_of(p->tensor.shape());
    const std::uint32_t one[] = {1};
    const auto& values = c.require(p->name, dims).values;
    std::copy(values.begin(), values.end(), p->tensor.mutable_values().begin());
    p->adam_m = c.require(p->name + ".adam_m", dims).values;
    p->adam_v = c.require(p->name + ".adam_v", dims).values;
    p->step_count = static_cast<std::uint64_t>(c.require(p->name + ".adam_step", one).values[0]);
    expected += 4;
  }
  for (auto& [name, bn] : all_batchnorms(model)) {
    const std::uint32_t dims[] = {static_cast<std::uint32_t>(bn->channels())};
    const std::uint32_t one[] = {1};
    bn->running_mean = c.require(name + ".running_mean", dims).values;
    bn->running_var = c.require(name + ".running_var", dims).values;
    bn->initialized = c.require(name + ".initialized", one).values[0] != 0.0;
    expected += 3;
  }
  if (c.arrays.size() != expected) {
    fail(ErrorKind::Checkpoint, "checkpoint holds " + std::to_string(c.arrays.size()) +
                                    " arrays, model expects " + std::to_string(expected));
  }
  return model;
}

void save_checkpoint(ModelBundle& model, const std::filesystem::path& path) {
  io::write_gck(path, to_container(model));
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  try {
    return from_container(io::read_gck(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    fail(ErrorKind::Checkpoint, path.string() + ": " + e.detail());
  }
}

ModelBundle load_checkpoint(const std::filesystem::path& path, const GeneratorConfig& gen,
                            const DiscriminatorConfig& disc) {
  auto model = load_checkpoint(path);
  if (!(model.generator_config == gen) || !(model.discriminator_config == disc)) {
    fail(ErrorKind::Checkpoint, path.string() + ": checkpoint was written for a different model configuration");
  }
  return model;
}

}  // namespace gesture::model
