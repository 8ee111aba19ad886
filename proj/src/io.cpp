#include "gesture/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gesture/error.hpp"

namespace gesture::io {

namespace {

class Writer {
 public:
  void bytes(std::span<const std::uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }
  void tag(const char (&magic)[5]) {
    out_.insert(out_.end(), magic, magic + 4);
  }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void text(const std::string& s) {
    out_.insert(out_.end(), s.begin(), s.end());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> data, ErrorKind kind) : data_(data), kind_(kind) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > data_.size() - pos_) fail(kind_, "truncated file");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool tag(const char (&magic)[5]) {
    auto s = take(4);
    return std::equal(s.begin(), s.end(), magic);
  }
  std::uint16_t u16() {
    auto s = take(2);
    return static_cast<std::uint16_t>(s[0] | (s[1] << 8));
  }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string text(std::size_t n) {
    auto s = take(n);
    return std::string(s.begin(), s.end());
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  void skip(std::size_t n) { take(n); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  ErrorKind kind_;
};

}  // namespace

std::vector<std::uint8_t> encode_gft(const FrameMatrix& matrix) {
  if (matrix.dims == 0 || matrix.values.size() % matrix.dims != 0) {
    fail(ErrorKind::Shape, "frame matrix payload is not a whole number of frames");
  }
  Writer w;
  w.tag("GFT1");
  w.u32(static_cast<std::uint32_t>(matrix.frames()));
  w.u32(matrix.dims);
  w.f32(matrix.frame_rate);
  for (float v : matrix.values) w.f32(v);
  return w.take();
}

FrameMatrix decode_gft(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, ErrorKind::Format);
  if (!r.tag("GFT1")) fail(ErrorKind::Format, "bad magic, expected GFT1");
  const std::uint32_t frames = r.u32();
  FrameMatrix m;
  m.dims = r.u32();
  m.frame_rate = r.f32();
  if (m.dims == 0) fail(ErrorKind::Format, "zero dims in GFT1 header");
  const std::uint64_t count = static_cast<std::uint64_t>(frames) * m.dims;
  if (count * 4 != r.remaining()) fail(ErrorKind::Format, "GFT1 payload size does not match header");
  m.values.resize(count);
  for (auto& v : m.values) v = r.f32();
  return m;
}

void write_gft(const std::filesystem::path& path, const FrameMatrix& matrix) {
  write_file(path, encode_gft(matrix));
}

FrameMatrix read_gft(const std::filesystem::path& path) {
  try {
    return decode_gft(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    fail(e.kind(), path.string() + ": " + e.detail());
  }
}

const NamedArray* ArrayContainer::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const NamedArray& ArrayContainer::require(const std::string& name,
                                          std::span<const std::uint32_t> dims) const {
  const NamedArray* a = find(name);
  if (a == nullptr) fail(ErrorKind::Checkpoint, "missing array '" + name + "'");
  if (!std::equal(a->dims.begin(), a->dims.end(), dims.begin(), dims.end())) {
    fail(ErrorKind::Checkpoint, "array '" + name + "' has unexpected shape");
  }
  return *a;
}

std::vector<std::uint8_t> encode_gck(const ArrayContainer& container) {
  Writer w;
  w.tag("GCK1");
  w.u32(container.version);
  const std::string json_text = container.config.dump();
  w.u32(static_cast<std::uint32_t>(json_text.size()));
  w.text(json_text);
  w.u32(static_cast<std::uint32_t>(container.arrays.size()));
  for (const auto& a : container.arrays) {
    std::size_t expected = 1;
    for (auto d : a.dims) expected *= d;
    if (expected != a.values.size()) {
      fail(ErrorKind::Shape, "array '" + a.name + "' payload does not match its dims");
    }
    w.u32(static_cast<std::uint32_t>(a.name.size()));
    w.text(a.name);
    w.u32(static_cast<std::uint32_t>(a.dims.size()));
    for (auto d : a.dims) w.u32(d);
    for (double v : a.values) w.f64(v);
  }
  return w.take();
}

ArrayContainer decode_gck(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, ErrorKind::Checkpoint);
  if (!r.tag("GCK1")) fail(ErrorKind::Checkpoint, "bad magic, expected GCK1");
  ArrayContainer c;
  c.version = r.u32();
  if (c.version != kContainerVersion) {
    fail(ErrorKind::Checkpoint, "unsupported container version " + std::to_string(c.version));
  }
  const std::uint32_t json_len = r.u32();
  try {
    c.config = nlohmann::json::parse(r.text(json_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Checkpoint, std::string("config block is not valid JSON: ") + e.what());
  }
  const std::uint32_t count = r.u32();
  c.arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.text(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank > 8) fail(ErrorKind::Checkpoint, "implausible rank for array '" + a.name + "'");
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      a.dims.push_back(r.u32());
      n *= a.dims.back();
    }
    if (n * 8 > r.remaining()) fail(ErrorKind::Checkpoint, "truncated file");
    a.values.resize(n);
    for (auto& v : a.values) v = r.f64();
    c.arrays.push_back(std::move(a));
  }
  if (r.remaining() != 0) fail(ErrorKind::Checkpoint, "trailing bytes after last array");
  return c;
}

void write_gck(const std::filesystem::path& path, const ArrayContainer& container) {
  write_file(path, encode_gck(container));
}

ArrayContainer read_gck(const std::filesystem::path& path) {
  try {
    return decode_gck(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    fail(e.kind(), path.string() + ": " + e.detail());
  }
}

audio::AudioSignal decode_wav(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, ErrorKind::Format);
  if (!r.tag("RIFF")) fail(ErrorKind::Format, "not a RIFF file");
  r.u32();
  if (!r.tag("WAVE")) fail(ErrorKind::Format, "not a WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (r.remaining() >= 8) {
    const std::string id = r.text(4);
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      if (size < 16) fail(ErrorKind::Format, "fmt chunk too small");
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();
      r.u16();
      bits = r.u16();
      std::uint32_t rest = size - 16;
      if (format == 0xFFFE && rest >= 10) {
        // WAVE_FORMAT_EXTENSIBLE: the sub-format GUID starts with the real tag.
        r.u16();
        r.u16();
        r.u32();
        format = r.u16();
        rest -= 10;
      }
      r.skip(rest + (size & 1));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) fail(ErrorKind::Format, "data chunk before fmt chunk");
      if (channels == 0 || rate == 0) fail(ErrorKind::Format, "invalid channel count or rate");
      const bool pcm16 = format == 1 && bits == 16;
      const bool float32 = format == 3 && bits == 32;
      if (!pcm16 && !float32) {
        fail(ErrorKind::Format, "unsupported WAV encoding (need PCM16 or float32)");
      }
      const std::size_t frame_bytes = static_cast<std::size_t>(bits / 8) * channels;
      const std::size_t available = std::min<std::size_t>(size, r.remaining());
      const std::size_t frames = available / frame_bytes;
      audio::AudioSignal signal;
      signal.sample_rate = static_cast<int>(rate);
      signal.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
          if (pcm16) {
            acc += static_cast<std::int16_t>(r.u16()) / 32768.0;
          } else {
            acc += r.f32();
          }
        }
        signal.samples[i] = acc / channels;
      }
      return signal;
    } else {
      r.skip(std::min<std::size_t>(size + (size & 1), r.remaining()));
    }
  }
  fail(ErrorKind::Format, "no data chunk");
}

audio::AudioSignal read_wav(const std::filesystem::path& path) {
  try {
    return decode_wav(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    fail(e.kind(), path.string() + ": " + e.detail());
  }
}

void write_wav_pcm16(const std::filesystem::path& path, const audio::AudioSignal& signal) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(signal.samples.size() * 2);
  Writer w;
  w.tag("RIFF");
  w.u32(36 + data_bytes);
  w.tag("WAVE");
  w.tag("fmt ");
  w.u32(16);
  w.u16(1);
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(signal.sample_rate));
  w.u32(static_cast<std::uint32_t>(signal.sample_rate) * 2);
  w.u16(2);
  w.u16(16);
  w.tag("data");
  w.u32(data_bytes);
  for (double s : signal.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clipped * 32767.0))));
  }
  write_file(path, w.take());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace gesture::io
