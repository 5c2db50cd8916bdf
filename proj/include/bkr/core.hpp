#ifndef BKR_CORE_HPP_
#define BKR_CORE_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bkr {

enum class Errc {
  kZeroInverse,
  kDuplicateAbscissa,
  kArityMismatch,
  kPaddingCorrupt,
  kBadParams,
  kUnresolvableHandle,
  kDimensionMismatch,
  kIndexOutOfRange,
  kEmptyProtectedSet,
  kMalformedModel,
  kInsufficientSamples,
  kConfigError,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kZeroInverse: return "ZeroInverse";
    case Errc::kDuplicateAbscissa: return "DuplicateAbscissa";
    case Errc::kArityMismatch: return "ArityMismatch";
    case Errc::kPaddingCorrupt: return "PaddingCorrupt";
    case Errc::kBadParams: return "BadParams";
    case Errc::kUnresolvableHandle: return "UnresolvableHandle";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kIndexOutOfRange: return "IndexOutOfRange";
    case Errc::kEmptyProtectedSet: return "EmptyProtectedSet";
    case Errc::kMalformedModel: return "MalformedModel";
    case Errc::kInsufficientSamples: return "InsufficientSamples";
    case Errc::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// A single class or message bit.
enum class Bit : std::uint8_t { kZero = 0, kOne = 1 };

constexpr Bit operator^(Bit a, Bit b) {
  return static_cast<Bit>(static_cast<std::uint8_t>(a) ^ static_cast<std::uint8_t>(b));
}
constexpr Bit flip(Bit b) { return b ^ Bit::kOne; }
constexpr Bit to_bit(unsigned v) { return (v & 1U) ? Bit::kOne : Bit::kZero; }
constexpr int to_int(Bit b) { return static_cast<int>(b); }

/// Sorted, duplicate-free list of 0-based feature indices.
using IndexSet = std::vector<std::size_t>;

inline IndexSet normalize(IndexSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline bool contains(const IndexSet& s, std::size_t i) {
  return std::binary_search(s.begin(), s.end(), i);
}

/// ceil(log2(n)) for n >= 1; the bit width of an index into [n].
constexpr std::size_t index_bits(std::size_t n) {
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  return bits;
}

/// Seeded randomness source. Streams are derived from a parent seed through
/// std::seed_seq, so a run is a pure function of its master seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed_from({seed, 0, 0})) {}

  /// Stream `index` of master seed `master`.
  static Rng stream(std::uint64_t master, std::uint64_t index) {
    return Rng(master, index, 1);
  }

  /// Child stream seeded from this stream's next output.
  Rng derive() { return Rng(engine_(), 0, 2); }

  std::uint64_t next_u64() { return engine_(); }

  Bit bit() { return to_bit(static_cast<unsigned>(engine_() >> 63)); }

  /// Uniform integer in [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  void fill(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size()) {
      std::uint64_t v = engine_();
      for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
        out[i] = static_cast<std::uint8_t>(v >> (8 * k));
      }
    }
  }

  /// Uniformly random subset of [n] of exactly k elements, sorted.
  IndexSet subset(std::size_t n, std::size_t k) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(n - i));
      std::swap(all[i], all[j]);
    }
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
  }

 private:
  Rng(std::uint64_t a, std::uint64_t b, std::uint64_t domain)
      : engine_(seed_from({a, b, domain})) {}

  static std::mt19937_64 seed_from(std::initializer_list<std::uint64_t> words) {
    std::vector<std::uint32_t> parts;
    for (std::uint64_t w : words) {
      parts.push_back(static_cast<std::uint32_t>(w));
      parts.push_back(static_cast<std::uint32_t>(w >> 32));
    }
    std::seed_seq seq(parts.begin(), parts.end());
    return std::mt19937_64(seq);
  }

  std::mt19937_64 engine_;
};

/// Little-endian fixed-width integer codec used by every binary layout here.
inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, std::size_t bytes) {
  for (std::size_t k = 0; k < bytes; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

inline std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t bytes) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(in[k]) << (8 * k);
  return v;
}

}  // namespace bkr

#endif  // BKR_CORE_HPP_
