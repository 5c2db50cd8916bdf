#include <gtest/gtest.h>

#include <vector>

#include "bkr/learn.hpp"
#include "bkr/metric.hpp"
#include "test_util.hpp"

using bkr::Bit;
using bkr::Errc;
using bkr::ModelKind;
using testing_util::error_of;

namespace {

// Re-encrypts the listed features of x to the opposite of b.
bkr::Instance flip_features(const bkr::ProblemState& st, bkr::Instance x, const bkr::IndexSet& idx, Bit b,
                            bkr::Rng& rng) {
  for (std::size_t i : idx) x.features[i] = bkr::encrypt(st.key(i), bkr::flip(b), rng);
  return x;
}

class LearnTest : public ::testing::Test {
 protected:
  bkr::Rng rng{2024};
  bkr::ProblemState st = bkr::gen(128, 1024, 8, rng);
};

}  // namespace

TEST_F(LearnTest, KnownMetricStoresMinIndex) {
  const auto h = bkr::learn_known_metric({5, 3}, st);
  EXPECT_EQ(h.kind, ModelKind::kKnownMetric);
  EXPECT_EQ(h.declared_bits(), 1027U);
  EXPECT_EQ(h.payload.read_uint(0, 3), 3U);
  EXPECT_TRUE(std::ranges::equal(h.payload.read_bytes(3, 128), st.key(3).sk()));
  EXPECT_EQ(error_of([&] { bkr::learn_known_metric({}, st); }), Errc::kEmptyProtectedSet);
  EXPECT_EQ(error_of([&] { bkr::learn_known_metric({9}, st); }), Errc::kIndexOutOfRange);
}

TEST_F(LearnTest, ClassifySmallCleanAndPerturbed) {
  const auto h = bkr::learn_known_metric({3, 5}, st);
  const auto c = bkr::KeyedClassifier::decode(h);
  const bkr::ProtectedMetric m(8, {3, 5});
  for (int k = 0; k < 1000; ++k) {
    const Bit b = rng.bit();
    const auto x = bkr::samp(st, b, rng);
    ASSERT_EQ(c.classify_small(x), b);
  }
  // Exhaustive single flips: admissible ones keep the label, feature i* flips it.
  for (int k = 0; k < 50; ++k) {
    const Bit b = rng.bit();
    const auto x = bkr::samp(st, b, rng);
    for (std::size_t i = 0; i < 8; ++i) {
      const auto z = flip_features(st, x, {i}, b, rng);
      if (i == 3) {
        EXPECT_EQ(c.classify_small(z), bkr::flip(b));
      } else if (bkr::is_admissible(m, x, z)) {
        EXPECT_EQ(c.classify_small(z), b);
      }
    }
    const auto multi = flip_features(st, x, {0, 1, 2, 4, 6, 7}, b, rng);
    ASSERT_TRUE(bkr::is_admissible(m, x, multi));
    EXPECT_EQ(c.classify_small(multi), b);
  }
}

TEST_F(LearnTest, AllKeysModel) {
  const auto h = bkr::learn_all(st);
  EXPECT_EQ(h.declared_bits(), 8192U);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_TRUE(std::ranges::equal(h.payload.read_bytes(i * 1024, 128), st.key(i).sk())) << i;
  }
  const auto c = bkr::KeyedClassifier::decode(h);
  for (int k = 0; k < 500; ++k) {
    const Bit b = rng.bit();
    ASSERT_EQ(c.classify_majority(bkr::samp(st, b, rng)), b);
  }
}

TEST_F(LearnTest, MajoritySurvivesMinorityFlips) {
  const auto c = bkr::KeyedClassifier::decode(bkr::learn_all(st));
  for (int k = 0; k < 200; ++k) {
    const Bit b = rng.bit();
    const auto idx = rng.subset(8, static_cast<std::size_t>(rng.below(4)));  // at most n/2 - 1
    ASSERT_EQ(c.classify_majority(flip_features(st, bkr::samp(st, b, rng), idx, b, rng)), b);
  }
  bkr::Rng r7(5);
  const auto st7 = bkr::gen(128, 1024, 7, r7);
  const auto c7 = bkr::KeyedClassifier::decode(bkr::learn_all(st7));
  for (int k = 0; k < 100; ++k) {
    const Bit b = r7.bit();
    const auto idx = r7.subset(7, 3);
    EXPECT_EQ(c7.classify_majority(flip_features(st7, bkr::samp(st7, b, r7), idx, b, r7)), b);
  }
}

TEST_F(LearnTest, MajorityTieGoesToZero) {
  const auto c = bkr::KeyedClassifier::decode(bkr::learn_all(st));
  const auto half = flip_features(st, bkr::samp(st, Bit::kOne, rng), {0, 1, 2, 3}, Bit::kOne, rng);
  EXPECT_EQ(c.classify_majority(half), Bit::kZero);
}

TEST_F(LearnTest, PartialModel) {
  const auto h = bkr::learn_partial(st, {3, 1, 2});
  EXPECT_EQ(h.declared_bits(), 3U * (1024 + 3));
  const auto c = bkr::KeyedClassifier::decode(h);
  EXPECT_EQ(c.indices(), (bkr::IndexSet{1, 2, 3}));
  for (Bit b : {Bit::kZero, Bit::kOne}) {
    const auto x = flip_features(st, bkr::samp(st, b, rng), {1, 2, 3}, b, rng);
    EXPECT_EQ(c.classify_majority(x), bkr::flip(b));
  }
  EXPECT_EQ(error_of([&] { bkr::learn_partial(st, {8}); }), Errc::kIndexOutOfRange);
}

TEST_F(LearnTest, PartialModelEquivalences) {
  const auto all = bkr::KeyedClassifier::decode(bkr::learn_all(st));
  const auto full = bkr::KeyedClassifier::decode(bkr::learn_partial(st, {0, 1, 2, 3, 4, 5, 6, 7}));
  const auto known = bkr::KeyedClassifier::decode(bkr::learn_known_metric({4}, st));
  const auto single = bkr::KeyedClassifier::decode(bkr::learn_partial(st, {4}));
  const auto none = bkr::KeyedClassifier::decode(bkr::learn_partial(st, {}));
  for (int k = 0; k < 300; ++k) {
    const Bit b = rng.bit();
    const auto x = flip_features(st, bkr::samp(st, b, rng), rng.subset(8, static_cast<std::size_t>(rng.below(9))), b, rng);
    ASSERT_EQ(full.classify_majority(x), all.classify_majority(x));
    ASSERT_EQ(single.classify_majority(x), known.classify_small(x));
    ASSERT_EQ(none.classify_majority(x), Bit::kZero);
  }
}

TEST_F(LearnTest, SizeBounds) {
  const std::size_t bound = 8 / 2 * 1024;
  EXPECT_FALSE(bkr::model_size_ok(bkr::learn_all(st), bound));
  EXPECT_TRUE(bkr::model_size_ok(bkr::learn_known_metric({0}, st), bound));
  EXPECT_FALSE(bkr::model_size_ok(bkr::learn_partial(st, {0, 1, 2, 3}), bound));
  EXPECT_TRUE(bkr::model_size_ok(bkr::learn_partial(st, {0, 1, 2}), bound));
}

TEST_F(LearnTest, ModelSerialization) {
  for (const auto& h : {bkr::learn_all(st), bkr::learn_known_metric({6}, st), bkr::learn_partial(st, {1, 4})}) {
    const auto bytes = bkr::serialize_model(h);
    EXPECT_EQ(bytes.size(), bkr::kModelHeaderBytes + (h.declared_bits() + 7) / 8);
    const auto back = bkr::deserialize_model(bytes);
    EXPECT_EQ(back.kind, h.kind);
    EXPECT_EQ(back.payload, h.payload);
    EXPECT_EQ(bkr::serialized_model_bits(bytes), h.declared_bits());
  }
  auto bytes = bkr::serialize_model(bkr::learn_known_metric({6}, st));
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_EQ(error_of([&] { bkr::deserialize_model(truncated); }), Errc::kMalformedModel);
  bytes[0] = 9;
  EXPECT_EQ(error_of([&] { bkr::deserialize_model(bytes); }), Errc::kMalformedModel);
  EXPECT_EQ(error_of([] { bkr::deserialize_model(std::vector<std::uint8_t>(3)); }), Errc::kMalformedModel);
}

TEST_F(LearnTest, KindAndWidthChecks) {
  const auto small = bkr::KeyedClassifier::decode(bkr::learn_known_metric({0}, st));
  const auto big = bkr::KeyedClassifier::decode(bkr::learn_all(st));
  const auto x = bkr::samp(st, Bit::kOne, rng);
  EXPECT_EQ(error_of([&] { small.classify_majority(x); }), Errc::kMalformedModel);
  EXPECT_EQ(error_of([&] { big.classify_small(x); }), Errc::kMalformedModel);
  auto narrow = x;
  narrow.features.pop_back();
  EXPECT_EQ(error_of([&] { big.classify_majority(narrow); }), Errc::kDimensionMismatch);
}

TEST_F(LearnTest, OracleCountsEveryCall) {
  auto oracle = bkr::make_oracle(bkr::learn_all(st));
  for (int k = 0; k < 37; ++k) oracle.classify(bkr::samp(st, rng.bit(), rng));
  EXPECT_EQ(oracle.queries(), 37U);
}

TEST_F(LearnTest, LearnFromShares) {
  const std::size_t t = bkr::share_count(8, 1024);
  const auto f = bkr::share_polynomial(st);
  std::vector<bkr::LabeledAugmentedInstance> samples;
  for (std::size_t k = 0; k < t; ++k) {
    const Bit b = rng.bit();
    samples.push_back({bkr::samp_augmented(st, f, b, rng), b});
  }
  const auto learned = bkr::learn_from_shares(samples, t);
  EXPECT_EQ(learned, st);
  EXPECT_EQ(bkr::serialize_state(learned), bkr::serialize_state(st));

  EXPECT_EQ(error_of([&] { bkr::learn_from_shares(std::span(samples).first(t - 1), t); }),
            Errc::kInsufficientSamples);
  auto dup = samples;
  dup[1].x.z = dup[0].x.z;
  EXPECT_EQ(error_of([&] { bkr::learn_from_shares(dup, t); }), Errc::kDuplicateAbscissa);
}

TEST(LearnFromShares, HundredSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    bkr::Rng rng = bkr::Rng::stream(99, seed);
    const auto st = bkr::gen(128, 1024, 8, rng);
    const std::size_t t = bkr::share_count(8, 1024);
    std::vector<bkr::LabeledAugmentedInstance> samples;
    for (std::size_t k = 0; k < t; ++k) samples.push_back({bkr::samp_augmented(st, Bit::kZero, rng), Bit::kZero});
    ASSERT_EQ(bkr::serialize_state(bkr::learn_from_shares(samples, t)), bkr::serialize_state(st)) << seed;
  }
}
