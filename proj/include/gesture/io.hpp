#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gesture/audio.hpp"

namespace gesture::io {

// "GFT1" frame container: magic, u32 frame_count, u32 dims, f32 frame_rate,
// then frame_count x dims f32 values row-major. All little-endian.
struct FrameMatrix {
  std::uint32_t dims = 0;
  float frame_rate = 15.0f;
  std::vector<float> values;

  std::size_t frames() const { return dims == 0 ? 0 : values.size() / dims; }
  std::span<const float> row(std::size_t t) const {
    return std::span<const float>(values).subspan(t * dims, dims);
  }
};

std::vector<std::uint8_t> encode_gft(const FrameMatrix& matrix);
FrameMatrix decode_gft(std::span<const std::uint8_t> bytes);
void write_gft(const std::filesystem::path& path, const FrameMatrix& matrix);
FrameMatrix read_gft(const std::filesystem::path& path);

// "GCK1" array container: magic, u32 version, u32 json length, json text,
// u32 array count, then per array: u32 name length, name, u32 rank,
// u32 dims[rank], f64 payload.
struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

struct ArrayContainer {
  std::uint32_t version = 1;
  nlohmann::json config = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  // Throws a checkpoint error when absent or when dims differ.
  const NamedArray& require(const std::string& name, std::span<const std::uint32_t> dims) const;
};

inline constexpr std::uint32_t kContainerVersion = 1;

std::vector<std::uint8_t> encode_gck(const ArrayContainer& container);
ArrayContainer decode_gck(std::span<const std::uint8_t> bytes);
void write_gck(const std::filesystem::path& path, const ArrayContainer& container);
ArrayContainer read_gck(const std::filesystem::path& path);

// WAV: PCM 16-bit or IEEE float 32-bit; multi-channel input is averaged to mono.
audio::AudioSignal read_wav(const std::filesystem::path& path);
audio::AudioSignal decode_wav(std::span<const std::uint8_t> bytes);
void write_wav_pcm16(const std::filesystem::path& path, const audio::AudioSignal& signal);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gesture::io
