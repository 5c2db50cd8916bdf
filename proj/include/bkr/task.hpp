#ifndef BKR_TASK_HPP_
#define BKR_TASK_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bkr/bigkey.hpp"
#include "bkr/bits.hpp"
#include "bkr/field.hpp"
#include "bkr/instance.hpp"

namespace bkr {

/// Secret state of the learning problem: n independent big keys, one per feature.
struct ProblemState {
  std::size_t ell = 0;
  std::vector<KeyPair> entries;

  std::size_t n() const noexcept { return entries.size(); }

  std::vector<EncHandle> handles() const {
    std::vector<EncHandle> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.handle);
    return out;
  }

  const BigKey& key(std::size_t i) const { return entries.at(i).key; }

  KeyTable key_table() const {
    KeyTable table;
    for (const auto& e : entries) table.add(e.key);
    return table;
  }

  friend bool operator==(const ProblemState&, const ProblemState&) = default;
};

inline ProblemState gen(std::size_t lambda, std::size_t ell, std::size_t n, Rng& rng) {
  if (n < 2) throw Error(Errc::kBadParams, "need at least two features");
  ProblemState st;
  st.ell = ell;
  st.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) st.entries.push_back(keygen(lambda, ell, rng));
  return st;
}

/* State serialization covers key ids and secret keys only; handles are
   rebuilt from the ids.
     u64 LE n | u64 LE ell | n x (u64 LE key_id | ell/8 key bytes) */
inline BitString serialize_state(const ProblemState& st) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(16 + st.n() * (8 + st.ell / 8));
  put_le(bytes, st.n(), 8);
  put_le(bytes, st.ell, 8);
  for (const auto& e : st.entries) {
    auto rec = e.key.serialize();
    bytes.insert(bytes.end(), rec.begin(), rec.end());
  }
  return BitString::from_bytes(bytes);
}

inline ProblemState deserialize_state(const BitString& bits) {
  if (bits.size() % 8 != 0) throw Error(Errc::kBadParams, "state is not byte aligned");
  const auto bytes = bits.bytes();
  if (bytes.size() < 16) throw Error(Errc::kBadParams, "state header truncated");
  const std::uint64_t n = get_le(bytes, 8);
  const std::uint64_t ell = get_le(bytes.subspan(8), 8);
  if (ell == 0 || ell % 8 != 0) throw Error(Errc::kBadParams, "bad key size in state header");
  const std::size_t record = 8 + static_cast<std::size_t>(ell / 8);
  if (n > (bytes.size() - 16) / record || bytes.size() != 16 + n * record) {
    throw Error(Errc::kBadParams, "state length disagrees with its header");
  }
  ProblemState st;
  st.ell = static_cast<std::size_t>(ell);
  for (std::size_t i = 0; i < n; ++i) {
    BigKey key = BigKey::deserialize(bytes.subspan(16 + i * record, record));
    st.entries.push_back(KeyPair{EncHandle{key.key_id()}, std::move(key)});
  }
  return st;
}

/// Number of Shamir shares (field elements of the encoded state) for (n, ell).
constexpr std::size_t share_count(std::size_t n, std::size_t ell) {
  const std::size_t state_bytes = 16 + n * (8 + ell / 8);
  return (8 + state_bytes + Gf128::kBytes - 1) / Gf128::kBytes;
}

/// Features whose index is in `flipped` (sorted, unique) encrypt the opposite class bit.
struct HybridSpec {
  IndexSet flipped;
};

namespace detail {

template <typename EncryptFn>
Instance sample_hybrid(std::size_t n, const HybridSpec& spec, Bit b, EncryptFn&& encrypt_feature) {
  if (!spec.flipped.empty() && spec.flipped.back() >= n) {
    throw Error(Errc::kIndexOutOfRange, "hybrid index outside [0, n)");
  }
  Instance x;
  x.features.reserve(n);
  auto next_flip = spec.flipped.begin();
  for (std::size_t i = 0; i < n; ++i) {
    Bit m = b;
    if (next_flip != spec.flipped.end() && *next_flip == i) {
      m = flip(b);
      ++next_flip;
    }
    x.features.push_back(encrypt_feature(i, m));
  }
  return x;
}

}  // namespace detail

/// D_J(b) sampled by the key holder.
inline Instance samp_hybrid(const ProblemState& st, const HybridSpec& spec, Bit b, Rng& rng) {
  return detail::sample_hybrid(st.n(), spec, b,
                               [&](std::size_t i, Bit m) { return encrypt(st.entries[i].key, m, rng); });
}

/// D_J(b) sampled through encryption handles only.
inline Instance samp_hybrid(const EncryptionService& service, std::span<const EncHandle> handles,
                            const HybridSpec& spec, Bit b, Rng& rng) {
  return detail::sample_hybrid(handles.size(), spec, b,
                               [&](std::size_t i, Bit m) { return service.enc(handles[i], m, rng); });
}

inline Instance samp(const ProblemState& st, Bit b, Rng& rng) { return samp_hybrid(st, HybridSpec{}, b, rng); }

inline Instance samp(const EncryptionService& service, std::span<const EncHandle> handles, Bit b, Rng& rng) {
  return samp_hybrid(service, handles, HybridSpec{}, b, rng);
}

/// The polynomial whose coefficients are the encoded, serialized state.
inline Poly<Gf128> share_polynomial(const ProblemState& st) {
  return Poly<Gf128>{encode_state<Gf128>(serialize_state(st))};
}

inline AugmentedInstance samp_augmented(const ProblemState& st, const Poly<Gf128>& shares, Bit b, Rng& rng) {
  Instance base = samp(st, b, rng);
  const Gf128 z = Gf128::random(rng);
  return AugmentedInstance{std::move(base), z, poly_eval(shares, z)};
}

inline AugmentedInstance samp_augmented(const ProblemState& st, Bit b, Rng& rng) {
  return samp_augmented(st, share_polynomial(st), b, rng);
}

}  // namespace bkr

#endif  // BKR_TASK_HPP_
