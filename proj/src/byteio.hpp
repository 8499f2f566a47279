#pragma once

// Little-endian primitives shared by the GLY1 and GMD1 codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "glyphlab/error.hpp"

namespace glyphlab::detail {

class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) fail(ErrorCode::Io, "write failed");
    count_ += n;
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) { put_le(v); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  std::size_t count() const noexcept { return count_; }

 private:
  template <typename T>
  void put_le(T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf, sizeof(T));
  }

  std::ostream& out_;
  std::size_t count_ = 0;
};

class LeReader {
 public:
  LeReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail(ErrorCode::CorruptFile, what_ + ": truncated");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint16_t u16() { return get_le<std::uint16_t>(); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) fail(ErrorCode::CorruptFile, what_ + ": trailing bytes");
  }

 private:
  template <typename T>
  T get_le() {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(buf[i]) << (8 * i));
    return v;
  }

  std::istream& in_;
  std::string what_;
};

}  // namespace glyphlab::detail
