#include <doctest.h>

#include <bit>
#include <cstring>

#include "gesture/error.hpp"
#include "gesture/io.hpp"
#include "support/tempdir.hpp"

using namespace gesture;
using namespace gesture::io;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Internal;
}

void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void tag(std::vector<std::uint8_t>& b, const char* t) { b.insert(b.end(), t, t + 4); }

// Minimal canonical WAV with the given format code and payload.
std::vector<std::uint8_t> wav(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                              std::uint16_t bits, const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> b;
  tag(b, "RIFF");
  put32(b, static_cast<std::uint32_t>(36 + payload.size()));
  tag(b, "WAVE");
  tag(b, "fmt ");
  put32(b, 16);
  put16(b, format);
  put16(b, channels);
  put32(b, rate);
  put32(b, rate * channels * bits / 8);
  put16(b, static_cast<std::uint16_t>(channels * bits / 8));
  put16(b, bits);
  tag(b, "data");
  put32(b, static_cast<std::uint32_t>(payload.size()));
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

}  // namespace

TEST_CASE("GFT1 round trip and layout") {
  FrameMatrix m;
  m.dims = 3;
  m.values = {1.0f, -2.5f, 3.25f, 0.0f, 1e-3f, -7.0f};
  const auto bytes = encode_gft(m);
  REQUIRE(bytes.size() == 16 + 6 * 4);
  CHECK(std::memcmp(bytes.data(), "GFT1", 4) == 0);
  CHECK(bytes[4] == 2);  // frames, little-endian
  CHECK(bytes[8] == 3);  // dims
  const auto back = decode_gft(bytes);
  CHECK(back.dims == 3);
  CHECK(back.frames() == 2);
  CHECK(back.frame_rate == 15.0f);
  CHECK(back.values == m.values);

  TempDir dir;
  write_gft(dir / "m.gft", m);
  CHECK(read_gft(dir / "m.gft").values == m.values);
}

TEST_CASE("GFT1 rejects bad magic and size") {
  FrameMatrix m;
  m.dims = 2;
  m.values = {1.0f, 2.0f};
  auto bytes = encode_gft(m);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK(kind_of([&] { decode_gft(bad); }) == ErrorKind::Format);
  bytes.pop_back();
  CHECK(kind_of([&] { decode_gft(bytes); }) == ErrorKind::Format);
  CHECK(kind_of([] { read_gft("/nonexistent/file.gft"); }) == ErrorKind::Io);
}

TEST_CASE("GCK1 round trip is bit exact") {
  ArrayContainer c;
  c.config = {{"name", "probe"}, {"n", 3}};
  c.arrays.push_back({"a", {2, 2}, {1.0, -0.0, 1e-300, 3.141592653589793}});
  c.arrays.push_back({"scalar", {1}, {42.0}});
  const auto bytes = encode_gck(c);
  CHECK(std::memcmp(bytes.data(), "GCK1", 4) == 0);
  const auto back = decode_gck(bytes);
  CHECK(back.version == kContainerVersion);
  CHECK(back.config == c.config);
  REQUIRE(back.arrays.size() == 2);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::bit_cast<std::uint64_t>(back.arrays[0].values[i]) == std::bit_cast<std::uint64_t>(c.arrays[0].values[i]));
  }
  const std::uint32_t dims[] = {2, 2};
  CHECK(&back.require("a", dims) == &back.arrays[0]);
  const std::uint32_t wrong[] = {4};
  CHECK(kind_of([&] { back.require("a", wrong); }) == ErrorKind::Checkpoint);
  CHECK(kind_of([&] { back.require("missing", dims); }) == ErrorKind::Checkpoint);
  CHECK(encode_gck(back) == bytes);
}

TEST_CASE("GCK1 rejects corruption") {
  ArrayContainer c;
  c.arrays.push_back({"a", {3}, {1.0, 2.0, 3.0}});
  const auto bytes = encode_gck(c);

  auto bad_magic = bytes;
  bad_magic[1] = 'X';
  CHECK(kind_of([&] { decode_gck(bad_magic); }) == ErrorKind::Checkpoint);

  auto bad_version = bytes;
  bad_version[4] = 99;
  CHECK(kind_of([&] { decode_gck(bad_version); }) == ErrorKind::Checkpoint);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK(kind_of([&] { decode_gck(truncated); }) == ErrorKind::Checkpoint);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK(kind_of([&] { decode_gck(trailing); }) == ErrorKind::Checkpoint);
}

TEST_CASE("WAV PCM16 round trip") {
  audio::AudioSignal s;
  s.sample_rate = 16000;
  for (int i = 0; i < 100; ++i) s.samples.push_back((i - 50) / 64.0);
  TempDir dir;
  write_wav_pcm16(dir / "a.wav", s);
  const auto back = read_wav(dir / "a.wav");
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == s.samples.size());
  for (std::size_t i = 0; i < s.samples.size(); ++i) CHECK(back.samples[i] == doctest::Approx(s.samples[i]).epsilon(1e-4));
}

TEST_CASE("WAV float and stereo input") {
  std::vector<std::uint8_t> payload;
  for (float v : {0.5f, -0.5f, 0.25f, 0.75f}) put32(payload, std::bit_cast<std::uint32_t>(v));
  const auto stereo = decode_wav(wav(3, 2, 8000, 32, payload));
  CHECK(stereo.sample_rate == 8000);
  REQUIRE(stereo.samples.size() == 2);
  CHECK(stereo.samples[0] == doctest::Approx(0.0));
  CHECK(stereo.samples[1] == doctest::Approx(0.5));

  std::vector<std::uint8_t> pcm;
  put16(pcm, 16384);
  const auto mono = decode_wav(wav(1, 1, 16000, 16, pcm));
  CHECK(mono.samples[0] == doctest::Approx(0.5));

  CHECK(kind_of([&] { decode_wav(wav(1, 1, 16000, 8, {1, 2})); }) == ErrorKind::Format);
  std::vector<std::uint8_t> junk = {'R', 'I', 'F', 'F'};
  CHECK(kind_of([&] { decode_wav(junk); }) == ErrorKind::Format);
}
