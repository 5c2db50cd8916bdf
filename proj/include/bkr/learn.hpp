#ifndef BKR_LEARN_HPP_
#define BKR_LEARN_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "bkr/bigkey.hpp"
#include "bkr/bits.hpp"
#include "bkr/field.hpp"
#include "bkr/instance.hpp"
#include "bkr/task.hpp"

namespace bkr {

enum class ModelKind : std::uint8_t { kKnownMetric = 1, kAllKeys = 2, kPartialKeys = 3 };

inline const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kKnownMetric: return "known-metric";
    case ModelKind::kAllKeys: return "all-keys";
    case ModelKind::kPartialKeys: return "partial-keys";
  }
  return "unknown";
}

/* A learned model. The payload is the only part that counts toward the
   model's size:
     known-metric  index(ceil(log2 n) bits) | key(ell bits)
     all-keys      key_0 | ... | key_{n-1}
     partial-keys  index_0 | ... | index_{k-1} | key_0 | ... | key_{k-1}
   n, ell and the key count travel in the serialization header. */
struct Model {
  ModelKind kind = ModelKind::kAllKeys;
  std::size_t n = 0;
  std::size_t ell = 0;
  std::size_t key_count = 0;
  BitString payload;

  std::size_t declared_bits() const noexcept { return payload.size(); }
};

/// Payload size implied by a model header.
inline std::size_t expected_payload_bits(ModelKind kind, std::size_t n, std::size_t ell, std::size_t key_count) {
  switch (kind) {
    case ModelKind::kKnownMetric: return ell + index_bits(n);
    case ModelKind::kAllKeys: return n * ell;
    case ModelKind::kPartialKeys: return key_count * (ell + index_bits(n));
  }
  throw Error(Errc::kMalformedModel, "unknown model kind");
}

/* u8 kind | u32 LE n | u64 LE ell | u32 LE key_count | u64 LE payload_bits
   | ceil(payload_bits / 8) payload bytes */
inline std::vector<std::uint8_t> serialize_model(const Model& h) {
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(h.kind));
  put_le(out, h.n, 4);
  put_le(out, h.ell, 8);
  put_le(out, h.key_count, 4);
  put_le(out, h.payload.size(), 8);
  out.insert(out.end(), h.payload.bytes().begin(), h.payload.bytes().end());
  return out;
}

inline constexpr std::size_t kModelHeaderBytes = 25;

inline Model deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kModelHeaderBytes) throw Error(Errc::kMalformedModel, "model header truncated");
  Model h;
  const std::uint8_t kind = bytes[0];
  if (kind < 1 || kind > 3) throw Error(Errc::kMalformedModel, "unknown model kind");
  h.kind = static_cast<ModelKind>(kind);
  h.n = static_cast<std::size_t>(get_le(bytes.subspan(1), 4));
  h.ell = static_cast<std::size_t>(get_le(bytes.subspan(5), 8));
  h.key_count = static_cast<std::size_t>(get_le(bytes.subspan(13), 4));
  const std::uint64_t bits = get_le(bytes.subspan(17), 8);
  if (bits != expected_payload_bits(h.kind, h.n, h.ell, h.key_count)) {
    throw Error(Errc::kMalformedModel, "payload size disagrees with the header");
  }
  if (bytes.size() != kModelHeaderBytes + (bits + 7) / 8) throw Error(Errc::kMalformedModel, "payload truncated");
  BitString payload = BitString::from_bytes(bytes.subspan(kModelHeaderBytes));
  h.payload = BitString(static_cast<std::size_t>(bits));
  for (std::size_t i = 0; i < bits; ++i) h.payload.set(i, payload.get(i));
  return h;
}

/// Model size re-derived from a serialized model rather than taken from the learner.
inline std::size_t serialized_model_bits(std::span<const std::uint8_t> bytes) {
  return deserialize_model(bytes).declared_bits();
}

inline bool model_size_ok(const Model& h, std::size_t bound_bits) { return h.declared_bits() <= bound_bits; }

namespace detail {

inline void append_key(BitString& payload, const BigKey& key) { payload.append(key.sk()); }

inline Model make_keyed_model(ModelKind kind, const ProblemState& st, const IndexSet& indices, bool write_indices) {
  Model h;
  h.kind = kind;
  h.n = st.n();
  h.ell = st.ell;
  h.key_count = indices.size();
  const std::size_t width = index_bits(st.n());
  if (write_indices) {
    for (std::size_t i : indices) h.payload.append_uint(i, width);
  }
  for (std::size_t i : indices) append_key(h.payload, st.key(i));
  return h;
}

}  // namespace detail

/// Stores the single key of i* = min(T).
inline Model learn_known_metric(const IndexSet& protected_set, const ProblemState& st) {
  const IndexSet t = normalize(protected_set);
  if (t.empty()) throw Error(Errc::kEmptyProtectedSet, "protected set is empty");
  if (t.back() >= st.n()) throw Error(Errc::kIndexOutOfRange, "protected index outside [0, n)");
  return detail::make_keyed_model(ModelKind::kKnownMetric, st, IndexSet{t.front()}, true);
}

inline Model learn_all(const ProblemState& st) {
  IndexSet all(st.n());
  for (std::size_t i = 0; i < st.n(); ++i) all[i] = i;
  return detail::make_keyed_model(ModelKind::kAllKeys, st, all, false);
}

inline Model learn_partial(const ProblemState& st, const IndexSet& subset) {
  const IndexSet s = normalize(subset);
  if (!s.empty() && s.back() >= st.n()) throw Error(Errc::kIndexOutOfRange, "key index outside [0, n)");
  return detail::make_keyed_model(ModelKind::kPartialKeys, st, s, true);
}

/// A model decoded once for repeated classification.
class KeyedClassifier {
 public:
  static KeyedClassifier decode(const Model& h) {
    if (h.declared_bits() != expected_payload_bits(h.kind, h.n, h.ell, h.key_count)) {
      throw Error(Errc::kMalformedModel, "payload size disagrees with the header");
    }
    KeyedClassifier c;
    c.kind_ = h.kind;
    c.n_ = h.n;
    const std::size_t width = index_bits(h.n);
    std::size_t offset = 0;
    if (h.kind == ModelKind::kAllKeys) {
      for (std::size_t i = 0; i < h.n; ++i) c.indices_.push_back(i);
    } else {
      const std::size_t count = h.kind == ModelKind::kKnownMetric ? 1 : h.key_count;
      for (std::size_t k = 0; k < count; ++k, offset += width) {
        const auto idx = static_cast<std::size_t>(h.payload.read_uint(offset, width));
        if (idx >= h.n) throw Error(Errc::kMalformedModel, "stored index outside [0, n)");
        c.indices_.push_back(idx);
      }
    }
    for (std::size_t k = 0; k < c.indices_.size(); ++k, offset += h.ell) {
      c.keys_.emplace_back(0, h.payload.read_bytes(offset, h.ell / 8));
    }
    return c;
  }

  ModelKind kind() const noexcept { return kind_; }
  const IndexSet& indices() const noexcept { return indices_; }

  /// Decrypts feature i* with the stored key.
  Bit classify_small(const Instance& x) const {
    if (kind_ != ModelKind::kKnownMetric) throw Error(Errc::kMalformedModel, "not a known-metric model");
    check_width(x);
    return dec(keys_[0], x.features[indices_[0]]);
  }

  /// 1 iff strictly more than half of the decryptable features give 1.
  Bit classify_majority(const Instance& x) const {
    if (kind_ == ModelKind::kKnownMetric) throw Error(Errc::kMalformedModel, "not a majority model");
    check_width(x);
    std::size_t ones = 0;
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      ones += static_cast<std::size_t>(to_int(dec(keys_[k], x.features[indices_[k]])));
    }
    return 2 * ones > indices_.size() ? Bit::kOne : Bit::kZero;
  }

 private:
  void check_width(const Instance& x) const {
    if (x.size() != n_) throw Error(Errc::kDimensionMismatch, "instance width differs from the model's n");
  }

  ModelKind kind_ = ModelKind::kAllKeys;
  std::size_t n_ = 0;
  IndexSet indices_;
  std::vector<BigKey> keys_;
};

inline Bit classify_small(const Model& h, const Instance& x) { return KeyedClassifier::decode(h).classify_small(x); }

inline Bit classify_majority(const Model& h, const Instance& x) {
  return KeyedClassifier::decode(h).classify_majority(x);
}

struct LabeledAugmentedInstance {
  AugmentedInstance x;
  Bit label = Bit::kZero;
};

/// Reconstructs the problem state from the first t shares by interpolation.
inline ProblemState learn_from_shares(std::span<const LabeledAugmentedInstance> samples, std::size_t t) {
  if (samples.size() < t) throw Error(Errc::kInsufficientSamples, "fewer samples than shares needed");
  std::vector<Point<Gf128>> points;
  points.reserve(t);
  for (std::size_t i = 0; i < t; ++i) points.push_back(Point<Gf128>{samples[i].x.z, samples[i].x.gamma});
  const Poly<Gf128> f = interpolate<Gf128>(points, t);
  return deserialize_state(decode_state<Gf128>(f.coeffs));
}

/// Black-box access to a classifier; every call is counted.
class ClassifierOracle {
 public:
  using Fn = std::function<Bit(const Instance&)>;

  explicit ClassifierOracle(Fn fn) : fn_(std::move(fn)) {}

  Bit classify(const Instance& x) {
    queries_.fetch_add(1, std::memory_order_relaxed);
    return fn_(x);
  }

  std::uint64_t queries() const noexcept { return queries_.load(std::memory_order_relaxed); }

 private:
  Fn fn_;
  std::atomic<std::uint64_t> queries_{0};
};

/// Oracle over a decoded model, dispatching on the model kind.
inline ClassifierOracle make_oracle(const Model& h) {
  auto c = std::make_shared<const KeyedClassifier>(KeyedClassifier::decode(h));
  if (h.kind == ModelKind::kKnownMetric) {
    return ClassifierOracle([c](const Instance& x) { return c->classify_small(x); });
  }
  return ClassifierOracle([c](const Instance& x) { return c->classify_majority(x); });
}

}  // namespace bkr

#endif  // BKR_LEARN_HPP_
