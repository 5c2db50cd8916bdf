#include <gtest/gtest.h>

#include <bitset>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "bkr/bigkey.hpp"
#include "test_util.hpp"

using bkr::Bit;
using bkr::Errc;
using testing_util::error_of;

namespace {

std::size_t popcount(std::span<const std::uint8_t> bytes) {
  std::size_t c = 0;
  for (auto b : bytes) c += std::bitset<8>(b).count();
  return c;
}

std::size_t hamming(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.size(); ++i) c += std::bitset<8>(a[i] ^ b[i]).count();
  return c;
}

bkr::Nonce nonce_from(std::initializer_list<int> first, int fill_from = -1) {
  bkr::Nonce n{};
  std::size_t i = 0;
  for (int v : first) n[i++] = static_cast<std::uint8_t>(v);
  if (fill_from >= 0) {
    for (std::size_t k = 0; k < n.size(); ++k) n[k] = static_cast<std::uint8_t>(fill_from + static_cast<int>(k));
  }
  return n;
}

}  // namespace

TEST(Keygen, SizeAndDeterminism) {
  bkr::Rng a(7), b(7), c(8);
  const auto k1 = bkr::keygen(128, 4096, a);
  const auto k2 = bkr::keygen(128, 4096, b);
  const auto k3 = bkr::keygen(128, 4096, c);
  EXPECT_EQ(k1.key.ell(), 4096U);
  EXPECT_EQ(k1.key.sk().size(), 512U);
  EXPECT_TRUE(std::ranges::equal(k1.key.sk(), k2.key.sk()));
  EXPECT_EQ(k1.handle.key_id, k2.handle.key_id);

  // Independent keys differ in about half the positions: within 4 sigma of l/2.
  const double sigma = std::sqrt(4096.0) / 2.0;
  EXPECT_LT(std::abs(static_cast<double>(hamming(k1.key.sk(), k3.key.sk())) - 2048.0), 4.0 * sigma);
}

TEST(Keygen, MonobitWithinFourSigma) {
  bkr::Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    const auto kp = bkr::keygen(128, 1024, rng);
    EXPECT_LT(std::abs(static_cast<double>(popcount(kp.key.sk())) - 512.0), 4.0 * 16.0);
  }
}

TEST(Keygen, RejectsBadParameters) {
  bkr::Rng rng(1);
  EXPECT_EQ(error_of([&] { bkr::keygen(64, 1024, rng); }), Errc::kBadParams);
  EXPECT_EQ(error_of([&] { bkr::keygen(128, 120, rng); }), Errc::kBadParams);
  EXPECT_EQ(error_of([&] { bkr::keygen(128, 1027, rng); }), Errc::kBadParams);
}

TEST(EncDec, RoundTripBothBits) {
  bkr::Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const auto kp = bkr::keygen(128, 1024, rng);
    bkr::KeyTable table;
    table.add(kp.key);
    for (Bit m : {Bit::kZero, Bit::kOne}) {
      for (int r = 0; r < 25; ++r) {
        EXPECT_EQ(bkr::dec(kp.key, bkr::enc(table, kp.handle, m, rng)), m);
        EXPECT_EQ(bkr::dec(kp.key, bkr::encrypt(kp.key, m, rng)), m);
      }
    }
  }
}

TEST(EncDec, NoncesDistinct) {
  bkr::Rng rng(3);
  const auto kp = bkr::keygen(128, 1024, rng);
  std::set<bkr::Nonce> seen;
  for (int k = 0; k < 10000; ++k) seen.insert(bkr::encrypt(kp.key, Bit::kZero, rng).nonce);
  EXPECT_EQ(seen.size(), 10000U);
}

TEST(EncDec, ForcedNonceDiffersOnlyInPayload) {
  bkr::Rng rng(4);
  const auto kp = bkr::keygen(128, 1024, rng);
  const bkr::Nonce n = nonce_from({}, 0x30);
  const auto c0 = bkr::encrypt_with_nonce(kp.key, Bit::kZero, n);
  const auto c1 = bkr::encrypt_with_nonce(kp.key, Bit::kOne, n);
  EXPECT_EQ(c0.nonce, c1.nonce);
  EXPECT_NE(c0.payload, c1.payload);
  const auto s0 = c0.serialize(), s1 = c1.serialize();
  EXPECT_EQ(hamming(s0, s1), 1U);
}

// Mask bit = low bit of SHA-256(nonce || sk)[0], computed externally.
TEST(EncDec, KnownMaskBits) {
  std::vector<std::uint8_t> sk(128);
  std::iota(sk.begin(), sk.end(), 0);
  const bkr::BigKey k1(1, sk);
  EXPECT_EQ(bkr::encrypt_with_nonce(k1, Bit::kZero, nonce_from({}, 0xA0)).payload, Bit::kOne);

  const bkr::BigKey k2(2, std::vector<std::uint8_t>(128, 0xFF));
  EXPECT_EQ(bkr::encrypt_with_nonce(k2, Bit::kZero, nonce_from({}, 0xA0)).payload, Bit::kOne);

  std::vector<std::uint8_t> sk3(128);
  for (int i = 0; i < 128; ++i) sk3[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((i * 7 + 3) & 0xFF);
  const bkr::BigKey k3(3, sk3);
  EXPECT_EQ(bkr::encrypt_with_nonce(k3, Bit::kZero, bkr::Nonce{}).payload, Bit::kZero);
  bkr::Nonce ones;
  ones.fill(1);
  EXPECT_EQ(bkr::encrypt_with_nonce(k3, Bit::kZero, ones).payload, Bit::kZero);
  EXPECT_EQ(bkr::encrypt_with_nonce(k3, Bit::kZero, nonce_from({}, 0)).payload, Bit::kOne);
  EXPECT_EQ(bkr::encrypt_with_nonce(k3, Bit::kOne, nonce_from({}, 0)).payload, Bit::kZero);
}

TEST(EncDec, WrongKeyIsAGuess) {
  bkr::Rng rng(5);
  const auto a = bkr::keygen(128, 1024, rng);
  const auto b = bkr::keygen(128, 1024, rng);
  int agree = 0;
  for (int k = 0; k < 10000; ++k) {
    const Bit m = rng.bit();
    agree += bkr::dec(b.key, bkr::encrypt(a.key, m, rng)) == m ? 1 : 0;
  }
  EXPECT_NEAR(agree / 10000.0, 0.5, 0.02);
}

TEST(EncDec, DecIsDeterministic) {
  bkr::Rng rng(6);
  const auto a = bkr::keygen(128, 1024, rng);
  const auto b = bkr::keygen(128, 1024, rng);
  const auto ct = bkr::encrypt(a.key, Bit::kOne, rng);
  EXPECT_EQ(bkr::dec(b.key, ct), bkr::dec(b.key, ct));
}

TEST(Compactness, SizesIndependentOfEll) {
  bkr::Rng rng(7);
  for (std::size_t ell : {1024U, 4096U, 65536U}) {
    const auto kp = bkr::keygen(128, ell, rng);
    EXPECT_EQ(bkr::encrypt(kp.key, Bit::kOne, rng).serialize().size(), 17U) << ell;
    EXPECT_EQ(bkr::EncHandle::kSerializedBytes, 8U);
    EXPECT_EQ(kp.key.sk().size() * 8, ell);
  }
}

TEST(Serialization, KeyAndCiphertextRoundTrip) {
  bkr::Rng rng(8);
  const auto kp = bkr::keygen(128, 1024, rng);
  const auto back = bkr::BigKey::deserialize(kp.key.serialize());
  EXPECT_EQ(back.key_id(), kp.key.key_id());
  EXPECT_TRUE(std::ranges::equal(back.sk(), kp.key.sk()));

  const auto ct = bkr::encrypt(kp.key, Bit::kOne, rng);
  EXPECT_EQ(bkr::Ciphertext::deserialize(ct.serialize()), ct);
  auto bad = ct.serialize();
  bad.back() = 2;
  EXPECT_EQ(error_of([&] { bkr::Ciphertext::deserialize(bad); }), Errc::kBadParams);
}

TEST(KeyTable, UnknownHandle) {
  bkr::Rng rng(9);
  bkr::KeyTable table;
  EXPECT_EQ(error_of([&] { table.enc(bkr::EncHandle{12345}, Bit::kOne, rng); }), Errc::kUnresolvableHandle);
}

TEST(PartialKey, SizeContracts) {
  bkr::Rng rng(10);
  const auto kp = bkr::keygen(128, 1024, rng);
  EXPECT_EQ(bkr::partial_key(kp.key, 0.0, bkr::RetentionPolicy::kPrefix, rng).stored_bits(), 0U);
  EXPECT_EQ(bkr::partial_key(kp.key, 0.5, bkr::RetentionPolicy::kPrefix, rng).stored_bits(), 512U);
  EXPECT_EQ(bkr::partial_key(kp.key, 0.5, bkr::RetentionPolicy::kRandomSubset, rng).stored_bits(), 512U);
  EXPECT_EQ(bkr::partial_key(kp.key, 1.0, bkr::RetentionPolicy::kRandomSubset, rng).stored_bits(), 1024U);
  EXPECT_EQ(error_of([&] { bkr::partial_key(kp.key, 1.5, bkr::RetentionPolicy::kPrefix, rng); }), Errc::kBadParams);
}

TEST(PartialKey, FullKeyDecryptsExactly) {
  bkr::Rng rng(11);
  const auto kp = bkr::keygen(128, 1024, rng);
  for (auto policy : {bkr::RetentionPolicy::kPrefix, bkr::RetentionPolicy::kRandomSubset}) {
    const auto pk = bkr::partial_key(kp.key, 1.0, policy, rng);
    for (auto fill : {bkr::FillPolicy::kZeros, bkr::FillPolicy::kRandom}) {
      for (int k = 0; k < 500; ++k) {
        const auto ct = bkr::encrypt(kp.key, rng.bit(), rng);
        ASSERT_EQ(bkr::dec_attempt(pk, ct, fill, rng), bkr::dec(kp.key, ct));
      }
    }
  }
}

TEST(PartialKey, MissingBitsLeaveOnlyAGuess) {
  bkr::Rng rng(12);
  const auto kp = bkr::keygen(128, 1024, rng);
  struct Case {
    double rho;
    bkr::FillPolicy fill;
  };
  for (const Case c : {Case{0.99, bkr::FillPolicy::kZeros}, Case{0.0, bkr::FillPolicy::kRandom}}) {
    const auto pk = bkr::partial_key(kp.key, c.rho, bkr::RetentionPolicy::kPrefix, rng);
    int ok = 0;
    for (int k = 0; k < 10000; ++k) {
      const Bit m = rng.bit();
      ok += bkr::dec_attempt(pk, bkr::encrypt(kp.key, m, rng), c.fill, rng) == m ? 1 : 0;
    }
    EXPECT_NEAR(ok / 10000.0, 0.5, 0.02) << "rho=" << c.rho;
  }
}
