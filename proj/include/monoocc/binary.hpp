#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "monoocc/error.hpp"

// Little-endian encode/decode for the on-disk formats.
namespace monoocc::binary {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename U>
U byteswap(U v) {
  U out = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) {
    out = static_cast<U>((out << 8) | ((v >> (8 * b)) & 0xFF));
  }
  return out;
}

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return byteswap(v);
  }
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void text(const std::string& s) { bytes(s.data(), s.size()); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(to_little(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { raw(to_little(std::bit_cast<std::uint64_t>(v))); }

  const std::vector<char>& buffer() const { return buf_; }

 private:
  template <typename U>
  void raw(U v) {
    bytes(&v, sizeof v);
  }
  std::vector<char> buf_;
};

/// Bounds-checked cursor; running past the end throws TruncatedData.
class Reader {
 public:
  explicit Reader(std::span<const char> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

  std::span<const char> take(std::size_t n) {
    if (n > remaining()) throw Error(ErrorCode::TruncatedData, "unexpected end of data");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return to_little(raw<std::uint32_t>()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(to_little(raw<std::uint64_t>())); }

 private:
  template <typename U>
  U raw() {
    U v;
    std::memcpy(&v, take(sizeof v).data(), sizeof v);
    return v;
  }
  std::span<const char> data_;
  std::size_t pos_ = 0;
};

}  // namespace monoocc::binary
