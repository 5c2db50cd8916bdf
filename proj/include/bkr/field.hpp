#ifndef BKR_FIELD_HPP_
#define BKR_FIELD_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bkr/bits.hpp"
#include "bkr/core.hpp"

namespace bkr {

/* BinaryField<Bits, R> is GF(2^Bits) = GF(2)[X] / (X^Bits + r(X)), where the
   low-order part r(X) of the reduction polynomial is given by the bitmask R.
   Elements are little-endian arrays of 64-bit words. Multiplication is the
   portable interleaved shift-and-add method; no carry-less intrinsics. */
template <unsigned Bits, std::uint64_t ReductionLow>
class BinaryField {
  static_assert(Bits % 8 == 0 && Bits >= 8 && Bits <= 128);

 public:
  static constexpr unsigned kBits = Bits;
  static constexpr std::size_t kBytes = Bits / 8;
  static constexpr std::size_t kWords = (Bits + 63) / 64;
  static constexpr std::uint64_t kReductionLow = ReductionLow;
  using Words = std::array<std::uint64_t, kWords>;

  constexpr BinaryField() = default;

  static constexpr BinaryField zero() { return BinaryField(); }
  static constexpr BinaryField one() { return from_uint(1); }

  static constexpr BinaryField from_words(Words w) {
    w[kWords - 1] &= kTopMask;
    BinaryField f;
    f.w_ = w;
    return f;
  }

  static constexpr BinaryField from_uint(std::uint64_t v) {
    Words w{};
    w[0] = v;
    return from_words(w);
  }

  /// Little-endian byte encoding, exactly kBytes bytes.
  static BinaryField from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kBytes) throw Error(Errc::kBadParams, "field element needs exactly kBytes bytes");
    Words w{};
    for (std::size_t i = 0; i < kBytes; ++i) w[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (i % 8));
    return from_words(w);
  }

  std::array<std::uint8_t, kBytes> to_bytes() const {
    std::array<std::uint8_t, kBytes> out{};
    for (std::size_t i = 0; i < kBytes; ++i) out[i] = static_cast<std::uint8_t>(w_[i / 8] >> (8 * (i % 8)));
    return out;
  }

  static BinaryField random(Rng& rng) {
    Words w{};
    for (auto& word : w) word = rng.next_u64();
    return from_words(w);
  }

  const Words& words() const noexcept { return w_; }

  bool is_zero() const noexcept {
    for (auto word : w_) {
      if (word != 0) return false;
    }
    return true;
  }

  bool bit(unsigned i) const noexcept { return (w_[i / 64] >> (i % 64)) & 1U; }

  friend constexpr BinaryField operator+(BinaryField a, const BinaryField& b) {
    for (std::size_t i = 0; i < kWords; ++i) a.w_[i] ^= b.w_[i];
    return a;
  }
  BinaryField& operator+=(const BinaryField& b) { return *this = *this + b; }

  // Subtraction coincides with addition in characteristic 2.
  friend constexpr BinaryField operator-(const BinaryField& a, const BinaryField& b) { return a + b; }

  friend BinaryField operator*(const BinaryField& a, const BinaryField& b) {
    BinaryField acc;
    for (int i = static_cast<int>(Bits) - 1; i >= 0; --i) {
      acc.mul_x();
      if (b.bit(static_cast<unsigned>(i))) acc += a;
    }
    return acc;
  }
  BinaryField& operator*=(const BinaryField& b) { return *this = *this * b; }

  /// a^(2^Bits - 2), computed as the product of a^(2^i) for i = 1..Bits-1.
  BinaryField inverse() const {
    if (is_zero()) throw Error(Errc::kZeroInverse, "zero has no multiplicative inverse");
    BinaryField result = one();
    BinaryField power = *this;
    for (unsigned i = 1; i < Bits; ++i) {
      power = power * power;
      result = result * power;
    }
    return result;
  }

  friend constexpr bool operator==(const BinaryField&, const BinaryField&) = default;

 private:
  static constexpr std::uint64_t kTopMask =
      (Bits % 64 == 0) ? ~std::uint64_t{0} : ((std::uint64_t{1} << (Bits % 64)) - 1);

  // Multiply by X and reduce.
  void mul_x() {
    const bool carry = bit(Bits - 1);
    for (std::size_t i = kWords; i-- > 1;) w_[i] = (w_[i] << 1) | (w_[i - 1] >> 63);
    w_[0] <<= 1;
    w_[kWords - 1] &= kTopMask;
    if (carry) w_[0] ^= ReductionLow;
  }

  Words w_{};
};

/// X^8 + X^4 + X^3 + X + 1; small enough for exhaustive checks.
using Gf8 = BinaryField<8, 0x1B>;
/// X^128 + X^7 + X^2 + X + 1.
using Gf128 = BinaryField<128, 0x87>;

/// Polynomial with coeffs[i] the coefficient of X^i.
template <typename F>
struct Poly {
  std::vector<F> coeffs;

  friend bool operator==(const Poly&, const Poly&) = default;
};

template <typename F>
F poly_eval(const Poly<F>& p, const F& z) {
  F acc;
  for (auto it = p.coeffs.rbegin(); it != p.coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

template <typename F>
struct Point {
  F z;
  F value;
};

/// Unique polynomial with fewer than t coefficients through the t given
/// points, built from the Lagrange basis in O(t^2) field operations.
template <typename F>
Poly<F> interpolate(std::span<const Point<F>> points, std::size_t t) {
  if (points.size() != t) throw Error(Errc::kArityMismatch, "interpolation needs exactly t points");
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i + 1; j < t; ++j) {
      if (points[i].z == points[j].z) throw Error(Errc::kDuplicateAbscissa, "two points share an abscissa");
    }
  }

  // master(X) = prod (X + z_i), degree t.
  std::vector<F> master(t + 1);
  master[0] = F::one();
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t k = i + 1; k > 0; --k) master[k] = master[k - 1] + master[k] * points[i].z;
    master[0] = master[0] * points[i].z;
  }

  Poly<F> result{std::vector<F>(t)};
  std::vector<F> quotient(t);
  for (std::size_t i = 0; i < t; ++i) {
    const F& zi = points[i].z;
    // master / (X + z_i) by synthetic division.
    F carry;
    for (std::size_t k = t; k > 0; --k) {
      carry = master[k] + carry * zi;
      quotient[k - 1] = carry;
    }
    F denom = F::one();
    for (std::size_t j = 0; j < t; ++j) {
      if (j != i) denom = denom * (zi + points[j].z);
    }
    const F scale = points[i].value * denom.inverse();
    for (std::size_t k = 0; k < t; ++k) result.coeffs[k] += scale * quotient[k];
  }
  return result;
}

/// Chunks a bit string into field elements: an 8-byte little-endian bit
/// length, the packed bits, then zero padding to a whole element.
template <typename F>
std::vector<F> encode_state(const BitString& state) {
  std::vector<std::uint8_t> bytes;
  put_le(bytes, state.size(), 8);
  bytes.insert(bytes.end(), state.bytes().begin(), state.bytes().end());
  bytes.resize((bytes.size() + F::kBytes - 1) / F::kBytes * F::kBytes, 0);

  std::vector<F> out;
  out.reserve(bytes.size() / F::kBytes);
  for (std::size_t off = 0; off < bytes.size(); off += F::kBytes) {
    out.push_back(F::from_bytes(std::span<const std::uint8_t>(bytes).subspan(off, F::kBytes)));
  }
  return out;
}

template <typename F>
BitString decode_state(std::span<const F> elems) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(elems.size() * F::kBytes);
  for (const F& e : elems) {
    auto chunk = e.to_bytes();
    bytes.insert(bytes.end(), chunk.begin(), chunk.end());
  }
  if (bytes.size() < 8) throw Error(Errc::kPaddingCorrupt, "missing length prefix");
  const std::uint64_t bit_len = get_le(bytes, 8);
  if (bit_len > (bytes.size() - 8) * 8) throw Error(Errc::kPaddingCorrupt, "length prefix exceeds payload");
  const std::size_t data_bytes = static_cast<std::size_t>((bit_len + 7) / 8);
  const std::size_t expected = (8 + data_bytes + F::kBytes - 1) / F::kBytes;
  if (elems.size() != expected) throw Error(Errc::kPaddingCorrupt, "element count disagrees with length prefix");
  for (std::size_t i = 8 + data_bytes; i < bytes.size(); ++i) {
    if (bytes[i] != 0) throw Error(Errc::kPaddingCorrupt, "nonzero padding");
  }
  if (bit_len % 8 != 0 && (bytes[8 + data_bytes - 1] >> (bit_len % 8)) != 0) {
    throw Error(Errc::kPaddingCorrupt, "nonzero bits past the declared length");
  }

  BitString out = BitString::from_bytes(std::span<const std::uint8_t>(bytes).subspan(8, data_bytes));
  BitString trimmed(static_cast<std::size_t>(bit_len));
  for (std::size_t i = 0; i < bit_len; ++i) trimmed.set(i, out.get(i));
  return trimmed;
}

}  // namespace bkr

#endif  // BKR_FIELD_HPP_
