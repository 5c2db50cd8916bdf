#ifndef BKR_BIGKEY_HPP_
#define BKR_BIGKEY_HPP_

#include <openssl/sha.h>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bkr/bits.hpp"
#include "bkr/core.hpp"

namespace bkr {

/* Big-key encryption in the random-oracle style: a ciphertext is a fresh
   λ-bit nonce s and one payload bit m ^ lsb(H(s || sk)), with H = SHA-256
   over the whole secret key. λ is fixed at 128. */

inline constexpr std::size_t kLambda = 128;
inline constexpr std::size_t kNonceBytes = kLambda / 8;
inline constexpr const char* kHashName = "sha256";

using Nonce = std::array<std::uint8_t, kNonceBytes>;

/// Encryption capability. Resolvable only by the party holding the key table.
struct EncHandle {
  std::uint64_t key_id = 0;

  static constexpr std::size_t kSerializedBytes = 8;

  friend bool operator==(const EncHandle&, const EncHandle&) = default;
};

class BigKey {
 public:
  BigKey() = default;
  BigKey(std::uint64_t key_id, std::vector<std::uint8_t> sk) : key_id_(key_id), sk_(std::move(sk)) {}

  std::uint64_t key_id() const noexcept { return key_id_; }
  std::size_t ell() const noexcept { return sk_.size() * 8; }
  std::span<const std::uint8_t> sk() const noexcept { return sk_; }
  bool bit(std::size_t i) const { return (sk_[i / 8] >> (i % 8)) & 1U; }

  /// 8-byte little-endian key_id header followed by the raw key bytes.
  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(8 + sk_.size());
    put_le(out, key_id_, 8);
    out.insert(out.end(), sk_.begin(), sk_.end());
    return out;
  }

  static BigKey deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw Error(Errc::kBadParams, "key record shorter than its header");
    return BigKey(get_le(bytes, 8), std::vector<std::uint8_t>(bytes.begin() + 8, bytes.end()));
  }

  friend bool operator==(const BigKey&, const BigKey&) = default;

 private:
  std::uint64_t key_id_ = 0;
  std::vector<std::uint8_t> sk_;
};

struct Ciphertext {
  Nonce nonce{};
  Bit payload = Bit::kZero;

  /// nonce (16 bytes) || payload byte (0x00 or 0x01).
  static constexpr std::size_t kSerializedBytes = kNonceBytes + 1;

  void serialize_into(std::vector<std::uint8_t>& out) const {
    out.insert(out.end(), nonce.begin(), nonce.end());
    out.push_back(static_cast<std::uint8_t>(payload));
  }

  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(kSerializedBytes);
    serialize_into(out);
    return out;
  }

  static Ciphertext deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kSerializedBytes || bytes[kNonceBytes] > 1) {
      throw Error(Errc::kBadParams, "malformed ciphertext record");
    }
    Ciphertext ct;
    std::copy_n(bytes.begin(), kNonceBytes, ct.nonce.begin());
    ct.payload = to_bit(bytes[kNonceBytes]);
    return ct;
  }

  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

namespace detail {

inline Bit hash_mask(const Nonce& nonce, std::span<const std::uint8_t> sk) {
  SHA256_CTX ctx;
  SHA256_Init(&ctx);
  SHA256_Update(&ctx, nonce.data(), nonce.size());
  SHA256_Update(&ctx, sk.data(), sk.size());
  std::array<std::uint8_t, SHA256_DIGEST_LENGTH> digest;
  SHA256_Final(digest.data(), &ctx);
  return to_bit(digest[0]);
}

}  // namespace detail

struct KeyPair {
  EncHandle handle;
  BigKey key;

  friend bool operator==(const KeyPair&, const KeyPair&) = default;
};

inline KeyPair keygen(std::size_t lambda, std::size_t ell, Rng& rng) {
  if (lambda != kLambda) throw Error(Errc::kBadParams, "only lambda = 128 is supported");
  if (ell < lambda || ell % 8 != 0) throw Error(Errc::kBadParams, "key size must be >= lambda and a multiple of 8");
  const std::uint64_t id = rng.next_u64();
  std::vector<std::uint8_t> sk(ell / 8);
  rng.fill(sk);
  return KeyPair{EncHandle{id}, BigKey(id, std::move(sk))};
}

/// Key-holder encryption under a caller-chosen nonce.
inline Ciphertext encrypt_with_nonce(const BigKey& key, Bit m, const Nonce& nonce) {
  return Ciphertext{nonce, m ^ detail::hash_mask(nonce, key.sk())};
}

inline Ciphertext encrypt(const BigKey& key, Bit m, Rng& rng) {
  Nonce nonce;
  rng.fill(nonce);
  return encrypt_with_nonce(key, m, nonce);
}

inline Bit dec(const BigKey& key, const Ciphertext& ct) {
  return ct.payload ^ detail::hash_mask(ct.nonce, key.sk());
}

/// Encryption oracle served by the trusted party; the only way a handle
/// holder can produce ciphertexts.
class EncryptionService {
 public:
  virtual ~EncryptionService() = default;
  virtual Ciphertext enc(const EncHandle& handle, Bit m, Rng& rng) const = 0;
};

class KeyTable final : public EncryptionService {
 public:
  KeyTable() = default;

  void add(const BigKey& key) {
    index_[key.key_id()] = keys_.size();
    keys_.push_back(key);
  }

  Ciphertext enc(const EncHandle& handle, Bit m, Rng& rng) const override {
    auto it = index_.find(handle.key_id);
    if (it == index_.end()) throw Error(Errc::kUnresolvableHandle, "no key for handle " + std::to_string(handle.key_id));
    return encrypt(keys_[it->second], m, rng);
  }

 private:
  std::vector<BigKey> keys_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

inline Ciphertext enc(const EncryptionService& service, const EncHandle& handle, Bit m, Rng& rng) {
  return service.enc(handle, m, rng);
}

enum class RetentionPolicy { kPrefix, kRandomSubset };
enum class FillPolicy { kZeros, kRandom };

inline const char* policy_name(RetentionPolicy p) { return p == RetentionPolicy::kPrefix ? "prefix" : "random-subset"; }
inline const char* policy_name(FillPolicy p) { return p == FillPolicy::kZeros ? "zeros" : "random"; }

/// A key with most of its bits erased: floor(rho * ell) bits survive at the
/// recorded positions.
struct PartialKey {
  std::uint64_t key_id = 0;
  std::size_t ell = 0;
  RetentionPolicy policy = RetentionPolicy::kPrefix;
  std::vector<std::uint32_t> positions;  // sorted
  BitString values;                      // values[k] is the key bit at positions[k]

  std::size_t stored_bits() const noexcept { return positions.size(); }
};

inline PartialKey partial_key(const BigKey& key, double rho, RetentionPolicy policy, Rng& rng) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(Errc::kBadParams, "retained fraction must lie in [0, 1]");
  const std::size_t ell = key.ell();
  const auto keep = static_cast<std::size_t>(std::floor(rho * static_cast<double>(ell)));

  PartialKey pk;
  pk.key_id = key.key_id();
  pk.ell = ell;
  pk.policy = policy;
  if (policy == RetentionPolicy::kPrefix) {
    for (std::size_t i = 0; i < keep; ++i) pk.positions.push_back(static_cast<std::uint32_t>(i));
  } else {
    for (std::size_t i : rng.subset(ell, keep)) pk.positions.push_back(static_cast<std::uint32_t>(i));
  }
  for (std::uint32_t p : pk.positions) pk.values.push_back(key.bit(p));
  return pk;
}

/// Fills the erased bits per `fill`, then decrypts with the completed key.
inline Bit dec_attempt(const PartialKey& pk, const Ciphertext& ct, FillPolicy fill, Rng& rng) {
  std::vector<std::uint8_t> guess(pk.ell / 8, 0);
  if (fill == FillPolicy::kRandom) rng.fill(guess);
  for (std::size_t k = 0; k < pk.positions.size(); ++k) {
    const std::uint32_t p = pk.positions[k];
    const auto mask = static_cast<std::uint8_t>(1U << (p % 8));
    if (pk.values.get(k)) {
      guess[p / 8] |= mask;
    } else {
      guess[p / 8] &= static_cast<std::uint8_t>(~mask);
    }
  }
  return ct.payload ^ detail::hash_mask(ct.nonce, guess);
}

}  // namespace bkr

#endif  // BKR_BIGKEY_HPP_
