#pragma once

// Little-endian encode/decode helpers shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace drn::io {

class TruncatedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void put_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

inline void put_u16(std::ostream& os, std::uint16_t v) {
  put_u8(os, static_cast<std::uint8_t>(v & 0xFF));
  put_u8(os, static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) put_u8(os, static_cast<std::uint8_t>((v >> shift) & 0xFF));
}

inline void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

/// Reader that tracks the byte offset so truncation errors can name it.
class Reader {
 public:
  explicit Reader(std::istream& is, std::string what) : is_(is), what_(std::move(what)) {}

  std::uint64_t offset() const { return offset_; }

  void bytes(void* dst, std::size_t n) {
    is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(is_.gcount());
    if (got != n) {
      throw TruncatedError(what_ + ": truncated at byte offset " + std::to_string(offset_ + got) +
                               " (needed " + std::to_string(n) + " bytes from offset " +
                               std::to_string(offset_) + ")");
    }
    offset_ += n;
  }

  std::uint8_t u8() {
    unsigned char b;
    bytes(&b, 1);
    return b;
  }
  std::uint16_t u16() {
    unsigned char b[2];
    bytes(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }

  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& is_;
  std::string what_;
  std::uint64_t offset_ = 0;
};

}  // namespace drn::io
