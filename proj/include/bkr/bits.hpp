#ifndef BKR_BITS_HPP_
#define BKR_BITS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bkr/core.hpp"

namespace bkr {

/// Bit string of arbitrary length. Bit i lives in byte i/8 at position i%8
/// (LSB first); bits past size() in the final byte are always zero.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t bits) : bytes_((bits + 7) / 8, 0), size_(bits) {}

  static BitString from_bytes(std::span<const std::uint8_t> bytes) {
    BitString s;
    s.bytes_.assign(bytes.begin(), bytes.end());
    s.size_ = bytes.size() * 8;
    return s;
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

  bool get(std::size_t i) const { return (bytes_[i / 8] >> (i % 8)) & 1U; }

  void set(std::size_t i, bool v) {
    const auto mask = static_cast<std::uint8_t>(1U << (i % 8));
    if (v) {
      bytes_[i / 8] |= mask;
    } else {
      bytes_[i / 8] &= static_cast<std::uint8_t>(~mask);
    }
  }

  void push_back(bool v) {
    if (size_ % 8 == 0) bytes_.push_back(0);
    ++size_;
    set(size_ - 1, v);
  }

  void append_uint(std::uint64_t v, std::size_t width) {
    for (std::size_t k = 0; k < width; ++k) push_back((v >> k) & 1U);
  }

  void append(std::span<const std::uint8_t> bytes) {
    if (size_ % 8 == 0) {
      bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
      size_ += bytes.size() * 8;
      return;
    }
    for (std::uint8_t byte : bytes) append_uint(byte, 8);
  }

  std::uint64_t read_uint(std::size_t offset, std::size_t width) const {
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < width; ++k) v |= static_cast<std::uint64_t>(get(offset + k)) << k;
    return v;
  }

  std::vector<std::uint8_t> read_bytes(std::size_t offset, std::size_t count) const {
    std::vector<std::uint8_t> out(count);
    if (offset % 8 == 0) {
      std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(offset / 8), count, out.begin());
      return out;
    }
    for (std::size_t i = 0; i < count; ++i) out[i] = static_cast<std::uint8_t>(read_uint(offset + 8 * i, 8));
    return out;
  }

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t size_ = 0;
};

}  // namespace bkr

#endif  // BKR_BITS_HPP_
