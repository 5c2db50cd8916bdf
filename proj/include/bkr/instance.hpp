#ifndef BKR_INSTANCE_HPP_
#define BKR_INSTANCE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bkr/bigkey.hpp"
#include "bkr/field.hpp"

namespace bkr {

/// Feature vector: one ciphertext per feature.
struct Instance {
  std::vector<Ciphertext> features;

  std::size_t size() const noexcept { return features.size(); }

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Instance plus one Shamir share (z, f(z)) of the serialized problem state.
struct AugmentedInstance {
  Instance base;
  Gf128 z;
  Gf128 gamma;

  friend bool operator==(const AugmentedInstance&, const AugmentedInstance&) = default;
};

/* Binary layout shared by both kinds of instance:
     u32 LE feature count | u8 flags (bit 0: share trailer present)
     | count x 17-byte ciphertexts | [z (16 bytes LE) | gamma (16 bytes LE)] */
namespace layout {
inline constexpr std::size_t kHeaderBytes = 5;
inline constexpr std::uint8_t kShareTrailer = 0x01;
}  // namespace layout

namespace detail {

inline void serialize_features(const Instance& x, std::uint8_t flags, std::vector<std::uint8_t>& out) {
  out.reserve(layout::kHeaderBytes + x.size() * Ciphertext::kSerializedBytes + 2 * Gf128::kBytes);
  put_le(out, x.size(), 4);
  out.push_back(flags);
  for (const auto& ct : x.features) ct.serialize_into(out);
}

inline Instance parse_features(std::span<const std::uint8_t> bytes, std::uint8_t& flags) {
  if (bytes.size() < layout::kHeaderBytes) throw Error(Errc::kBadParams, "instance record too short");
  const auto count = static_cast<std::size_t>(get_le(bytes, 4));
  flags = bytes[4];
  const std::size_t trailer = (flags & layout::kShareTrailer) ? 2 * Gf128::kBytes : 0;
  if (bytes.size() != layout::kHeaderBytes + count * Ciphertext::kSerializedBytes + trailer) {
    throw Error(Errc::kBadParams, "instance record length disagrees with its header");
  }
  Instance x;
  x.features.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    x.features.push_back(Ciphertext::deserialize(
        bytes.subspan(layout::kHeaderBytes + i * Ciphertext::kSerializedBytes, Ciphertext::kSerializedBytes)));
  }
  return x;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const Instance& x) {
  std::vector<std::uint8_t> out;
  detail::serialize_features(x, 0, out);
  return out;
}

inline std::vector<std::uint8_t> serialize(const AugmentedInstance& x) {
  std::vector<std::uint8_t> out;
  detail::serialize_features(x.base, layout::kShareTrailer, out);
  auto z = x.z.to_bytes();
  auto g = x.gamma.to_bytes();
  out.insert(out.end(), z.begin(), z.end());
  out.insert(out.end(), g.begin(), g.end());
  return out;
}

inline Instance deserialize_instance(std::span<const std::uint8_t> bytes) {
  std::uint8_t flags = 0;
  Instance x = detail::parse_features(bytes, flags);
  if (flags != 0) throw Error(Errc::kBadParams, "record carries a share trailer");
  return x;
}

inline AugmentedInstance deserialize_augmented(std::span<const std::uint8_t> bytes) {
  std::uint8_t flags = 0;
  Instance x = detail::parse_features(bytes, flags);
  if (flags != layout::kShareTrailer) throw Error(Errc::kBadParams, "record lacks a share trailer");
  const auto tail = bytes.subspan(bytes.size() - 2 * Gf128::kBytes);
  return AugmentedInstance{std::move(x), Gf128::from_bytes(tail.first(Gf128::kBytes)),
                           Gf128::from_bytes(tail.last(Gf128::kBytes))};
}

}  // namespace bkr

#endif  // BKR_INSTANCE_HPP_
