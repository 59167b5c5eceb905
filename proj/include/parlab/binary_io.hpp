#pragma once

// Little-endian record files: 8-byte magic, u32 version, payload, and a
// trailing FNV-1a-64 checksum over everything before it.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "parlab/errors.hpp"
#include "parlab/rng.hpp"

namespace parlab::io {

class Writer {
 public:
  Writer(std::string_view magic, std::uint32_t version) {
    if (magic.size() != 8) throw UsageError("magic must be 8 bytes");
    buf_.append(magic);
    put_u32(version);
  }

  void put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void put_u32(std::uint32_t v) { put_le(v, 4); }
  void put_u64(std::uint64_t v) { put_le(v, 8); }
  void put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
  void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void put_string(std::string_view s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }

  /// Appends the checksum and writes the file in one go.
  void save(const std::filesystem::path& path) {
    std::string out = buf_;
    const std::uint64_t sum = fnv1a(out);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((sum >> (8 * i)) & 0xff));
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open '" + path.string() + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("write to '" + path.string() + "' failed");
  }

  const std::string& bytes() const { return buf_; }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class Reader {
 public:
  /// Validates magic, then version, then the checksum, in that order.
  Reader(std::string bytes, std::string_view magic, std::uint32_t version) : buf_(std::move(bytes)) {
    if (buf_.size() < 8 || std::string_view(buf_).substr(0, 8) != magic) throw BadMagicError("bad magic bytes");
    pos_ = 8;
    if (buf_.size() < 12) throw ChecksumError("file truncated before the version field");
    const std::uint32_t v = get_u32();
    if (v != version)
      throw BadVersionError("unsupported format version " + std::to_string(v) + " (expected " +
                            std::to_string(version) + ")");
    if (buf_.size() < 20) throw ChecksumError("file truncated before the checksum");
    end_ = buf_.size() - 8;
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i)
      stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[end_ + static_cast<std::size_t>(i)]))
                << (8 * i);
    if (fnv1a(std::string_view(buf_).substr(0, end_)) != stored) throw ChecksumError("checksum mismatch");
  }

  static Reader open(const std::filesystem::path& path, std::string_view magic, std::uint32_t version) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return Reader(std::move(bytes), magic, version);
  }

  std::uint8_t get_u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t get_u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t get_u64() { return get_le(8); }
  float get_f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get_le(4))); }
  double get_f64() { return std::bit_cast<double>(get_le(8)); }
  std::string get_string() {
    const std::uint32_t n = get_u32();
    return std::string(take(n), n);
  }

  bool at_end() const { return pos_ == end_; }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  const char* take(std::size_t n) {
    const std::size_t limit = end_ == 0 ? buf_.size() : end_;
    if (n > limit - pos_) throw DataError("record shorter than its header declares");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t get_le(int n) {
    const char* p = take(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }

  std::string buf_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

}  // namespace parlab::io
