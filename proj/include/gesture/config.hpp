#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "gesture/model.hpp"
#include "gesture/training.hpp"

namespace gesture::config {

struct SyntheticData {
  std::size_t sequences = 20;
  std::size_t length = 600;
  std::uint64_t seed = 0;
};

struct PreprocessConfig {
  double confidence_threshold = 0.5;
  std::size_t confidence_window = annotation::kDefaultConfidenceWindow;
  std::size_t max_gap = annotation::kDefaultMaxGap;
  double sigma = annotation::kDefaultSigma;
};

struct EvalConfig {
  std::filesystem::path basis;  // empty selects the seeded synthetic basis
  std::uint64_t basis_seed = 0;
  std::size_t lip_vertices = evaluation::kDefaultLipVertices;
};

// Every tunable of a run. Relative paths resolve against the config file.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string subject;
  std::filesystem::path manifest;  // empty selects the synthetic corpus
  SyntheticData synthetic;
  model::GeneratorConfig generator;
  model::DiscriminatorConfig discriminator;
  training::LossWeights loss;
  training::TrainConfig train;
  std::size_t overlap = annotation::kDefaultOverlap;
  std::filesystem::path metrics_csv;
  PreprocessConfig preprocess;
  EvalConfig eval;

  void validate() const;
  nlohmann::json to_json() const;
};

// Unknown keys and ill-typed values are config errors.
RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load(const std::filesystem::path& path);

}  // namespace gesture::config
