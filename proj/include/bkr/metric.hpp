#ifndef BKR_METRIC_HPP_
#define BKR_METRIC_HPP_

#include <boost/rational.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bkr/core.hpp"
#include "bkr/instance.hpp"

namespace bkr {

using Rational = boost::rational<std::int64_t>;

/// General weighted Hamming metric: d_w(x, z) = sum of w_i over differing features.
struct WeightVector {
  std::vector<Rational> weights;

  void validate() const {
    for (const auto& w : weights) {
      if (w <= 0) throw Error(Errc::kBadParams, "weights must be strictly positive");
    }
  }
};

/// Protected-set metric d_T: weight 1 on T, weight 1/n elsewhere.
struct ProtectedMetric {
  std::size_t n = 0;
  IndexSet protected_set;

  ProtectedMetric() = default;
  ProtectedMetric(std::size_t n_, IndexSet t) : n(n_), protected_set(normalize(std::move(t))) {
    if (!protected_set.empty() && protected_set.back() >= n) {
      throw Error(Errc::kIndexOutOfRange, "protected index outside [0, n)");
    }
  }

  bool is_protected(std::size_t i) const { return contains(protected_set, i); }

  WeightVector weights() const {
    WeightVector w;
    for (std::size_t i = 0; i < n; ++i) {
      w.weights.push_back(is_protected(i) ? Rational(1) : Rational(1, static_cast<std::int64_t>(n)));
    }
    return w;
  }

  /// {"n": 8, "T": [..]} descriptor for experiment logs (0-based indices).
  std::string describe() const {
    std::string s = "{\"n\":" + std::to_string(n) + ",\"T\":[";
    for (std::size_t k = 0; k < protected_set.size(); ++k) {
      if (k) s += ",";
      s += std::to_string(protected_set[k]);
    }
    return s + "]}";
  }
};

struct PerturbationDelta {
  std::size_t protected_diffs = 0;
  std::size_t unprotected_diffs = 0;

  /// protected_diffs + unprotected_diffs / n, exactly.
  Rational distance(std::size_t n) const {
    return Rational(static_cast<std::int64_t>(protected_diffs)) +
           Rational(static_cast<std::int64_t>(unprotected_diffs), static_cast<std::int64_t>(n));
  }
};

namespace detail {
inline void check_dims(std::size_t n, const Instance& x, const Instance& z) {
  if (x.size() != n || z.size() != n) throw Error(Errc::kDimensionMismatch, "instance width differs from the metric's n");
}
}  // namespace detail

inline PerturbationDelta delta(const ProtectedMetric& m, const Instance& x, const Instance& z) {
  detail::check_dims(m.n, x, z);
  PerturbationDelta d;
  for (std::size_t i = 0; i < m.n; ++i) {
    if (x.features[i] == z.features[i]) continue;
    if (m.is_protected(i)) {
      ++d.protected_diffs;
    } else {
      ++d.unprotected_diffs;
    }
  }
  return d;
}

inline Rational dist(const WeightVector& w, const Instance& x, const Instance& z) {
  detail::check_dims(w.weights.size(), x, z);
  Rational total(0);
  for (std::size_t i = 0; i < w.weights.size(); ++i) {
    if (!(x.features[i] == z.features[i])) total += w.weights[i];
  }
  return total;
}

inline Rational dist(const ProtectedMetric& m, const Instance& x, const Instance& z) {
  return delta(m, x, z).distance(m.n);
}

/// d_T(x, x~) < 1, decided on integer counts.
inline bool is_admissible(const ProtectedMetric& m, const Instance& x, const Instance& perturbed) {
  const PerturbationDelta d = delta(m, x, perturbed);
  return d.protected_diffs == 0 && d.unprotected_diffs < m.n;
}

/// Membership of d_T in the class { d_T : T subset of [n], |T| = t_class }.
inline bool metric_class_contains(std::size_t n, std::size_t t_class, const IndexSet& t) {
  const IndexSet norm = normalize(t);
  if (norm.size() != t.size()) return false;
  if (!norm.empty() && norm.back() >= n) return false;
  return norm.size() == t_class;
}

}  // namespace bkr

#endif  // BKR_METRIC_HPP_
