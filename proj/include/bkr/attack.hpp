#ifndef BKR_ATTACK_HPP_
#define BKR_ATTACK_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <optional>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bkr/bigkey.hpp"
#include "bkr/core.hpp"
#include "bkr/learn.hpp"
#include "bkr/metric.hpp"
#include "bkr/task.hpp"

namespace bkr {

/// Hoeffding estimation: m = ceil(lambda_est / delta^2) samples give error
/// at most delta except with probability 2 exp(-2 lambda_est).
struct EstimatorParams {
  double delta = 0.05;
  double lambda_est = 64.0;

  void validate() const {
    if (!(delta > 0.0 && delta <= 0.5)) throw Error(Errc::kBadParams, "delta must lie in (0, 1/2]");
    if (!(lambda_est >= 1.0)) throw Error(Errc::kBadParams, "lambda_est must be at least 1");
  }

  std::uint64_t sample_count() const {
    validate();
    // The relative slack absorbs rounding in delta^2 (0.05^2 is not exact).
    const double m = lambda_est / (delta * delta);
    return static_cast<std::uint64_t>(std::ceil(m * (1.0 - 1e-12)));
  }

  double failure_bound() const { return 2.0 * std::exp(-2.0 * lambda_est); }
};

namespace detail {
inline int as_int(bool v) { return v ? 1 : 0; }
inline int as_int(Bit v) { return to_int(v); }
}  // namespace detail

/// Empirical mean of sample_count() independent runs of a bit-valued trial.
template <typename Trial>
double estimate_mean(Trial&& trial, const EstimatorParams& params, Rng& rng) {
  const std::uint64_t m = params.sample_count();
  std::uint64_t sum = 0;
  for (std::uint64_t k = 0; k < m; ++k) sum += static_cast<std::uint64_t>(detail::as_int(trial(rng)));
  return static_cast<double>(sum) / static_cast<double>(m);
}

struct WalkStep {
  std::size_t index = 0;
  double mu = 0.0;          // estimate on D_J(1-b)
  double mu_flipped = 0.0;  // estimate on D_{J + index}(1-b)
  bool kept = false;        // index joined the insensitive set
};

struct SensitivityReport {
  std::size_t n = 0;
  double threshold = 0.0;  // 3 delta
  IndexSet sensitive;
  IndexSet insensitive;
  std::vector<double> gaps;  // gaps[i] = |mu_flipped - mu| at step i
  std::vector<WalkStep> trace;
  std::uint64_t queries = 0;
};

/* Hybrid walk over j = 0..n-1. J starts empty; at step j the classifier's
   rate of answering b is estimated on D_J(1-b) and on D_{J+j}(1-b). A gap
   below 3 delta keeps the flip (j is insensitive), otherwise the flip is
   reverted and j is marked sensitive. Each step draws fresh samples, so the
   walk issues exactly 2 n m queries. */
inline SensitivityReport probe_sensitivity(ClassifierOracle& oracle, const EncryptionService& service,
                                           std::span<const EncHandle> handles, Bit b,
                                           const EstimatorParams& params, Rng& rng) {
  params.validate();
  const std::size_t n = handles.size();
  const Bit source = flip(b);
  const std::uint64_t before = oracle.queries();

  SensitivityReport report;
  report.n = n;
  report.threshold = 3.0 * params.delta;
  report.gaps.assign(n, 0.0);

  auto rate_on = [&](const HybridSpec& spec) {
    Rng stream = rng.derive();
    return estimate_mean(
        [&](Rng& r) { return oracle.classify(samp_hybrid(service, handles, spec, source, r)) == b; }, params,
        stream);
  };

  HybridSpec current;
  for (std::size_t j = 0; j < n; ++j) {
    HybridSpec extended{current.flipped};
    extended.flipped.push_back(j);

    WalkStep step;
    step.index = j;
    step.mu = rate_on(current);
    step.mu_flipped = rate_on(extended);
    report.gaps[j] = std::abs(step.mu_flipped - step.mu);
    step.kept = report.gaps[j] < report.threshold;
    if (step.kept) {
      current = std::move(extended);
      report.insensitive.push_back(j);
    } else {
      report.sensitive.push_back(j);
    }
    report.trace.push_back(step);
  }
  report.queries = oracle.queries() - before;
  return report;
}

enum class AbortReason { kTooManySensitive };

inline const char* reason_name(AbortReason r) {
  switch (r) {
    case AbortReason::kTooManySensitive: return "TooManySensitive";
  }
  return "Unknown";
}

struct AttackSuccess {
  Instance adversarial;
  ProtectedMetric metric;
};

struct AttackAbort {
  AbortReason reason = AbortReason::kTooManySensitive;
};

struct AttackOutcome {
  SensitivityReport report;
  std::variant<AttackSuccess, AttackAbort> result;

  bool success() const noexcept { return std::holds_alternative<AttackSuccess>(result); }
  const AttackSuccess& as_success() const { return std::get<AttackSuccess>(result); }
  const AttackAbort& as_abort() const { return std::get<AttackAbort>(result); }
};

/* Re-encrypts every sensitive feature of a class-(1-b) instance to b and picks
   the lexicographically smallest class member T disjoint from the sensitive
   set. Aborts when fewer than t_class insensitive indices remain. */
inline AttackOutcome craft(const Instance& x, const SensitivityReport& report, const EncryptionService& service,
                           std::span<const EncHandle> handles, Bit b, std::size_t t_class, Rng& rng) {
  const std::size_t n = handles.size();
  if (x.size() != n || report.n != n) throw Error(Errc::kDimensionMismatch, "instance, report and handles disagree on n");

  IndexSet unprotected_pool;
  for (std::size_t i = 0; i < n; ++i) {
    if (!contains(report.sensitive, i)) unprotected_pool.push_back(i);
  }
  if (unprotected_pool.size() < t_class) return AttackOutcome{report, AttackAbort{AbortReason::kTooManySensitive}};

  unprotected_pool.resize(t_class);
  Instance adversarial = x;
  for (std::size_t i : report.sensitive) adversarial.features[i] = service.enc(handles[i], b, rng);
  return AttackOutcome{report, AttackSuccess{std::move(adversarial), ProtectedMetric(n, std::move(unprotected_pool))}};
}

struct FoolingStats {
  std::size_t trials = 0;
  std::size_t fooled = 0;         // oracle(x~) == b
  std::size_t clean_correct = 0;  // oracle(clean class-b sample) == b
  std::size_t admissible = 0;     // d_T(x, x~) < 1 and T in the class, re-checked
  std::uint64_t probe_queries = 0;
  std::uint64_t crafted_queries = 0;
  std::uint64_t clean_queries = 0;

  double fooling_rate() const { return trials ? static_cast<double>(fooled) / static_cast<double>(trials) : 0.0; }
  double clean_rate() const { return trials ? static_cast<double>(clean_correct) / static_cast<double>(trials) : 0.0; }
  double gap() const { return std::abs(clean_rate() - fooling_rate()); }
};

struct FullAttackResult {
  AttackOutcome outcome;  // the last crafted outcome, or the abort
  FoolingStats stats;
};

/* Probe once, then craft `trials` adversarial examples from fresh class-(1-b)
   samples and compare the classifier's rate of answering b on them with its
   rate on `trials` fresh class-b samples. */
inline FullAttackResult full_attack(ClassifierOracle& oracle, const EncryptionService& service,
                                    std::span<const EncHandle> handles, Bit b, const EstimatorParams& params,
                                    std::size_t t_class, std::size_t trials, Rng& rng) {
  const std::size_t n = handles.size();
  Rng probe_rng = rng.derive();
  SensitivityReport report = probe_sensitivity(oracle, service, handles, b, params, probe_rng);

  FoolingStats stats;
  stats.probe_queries = report.queries;

  Rng craft_rng = rng.derive();
  std::optional<AttackOutcome> last;
  std::uint64_t before = oracle.queries();
  for (std::size_t k = 0; k < trials; ++k) {
    const Instance x = samp(service, handles, flip(b), craft_rng);
    AttackOutcome outcome = craft(x, report, service, handles, b, t_class, craft_rng);
    if (!outcome.success()) return FullAttackResult{std::move(outcome), stats};

    const AttackSuccess& s = outcome.as_success();
    if (is_admissible(s.metric, x, s.adversarial) && metric_class_contains(n, t_class, s.metric.protected_set)) {
      ++stats.admissible;
    }
    if (oracle.classify(s.adversarial) == b) ++stats.fooled;
    ++stats.trials;
    last = std::move(outcome);
  }
  stats.crafted_queries = oracle.queries() - before;

  Rng clean_rng = rng.derive();
  before = oracle.queries();
  for (std::size_t k = 0; k < trials; ++k) {
    if (oracle.classify(samp(service, handles, b, clean_rng)) == b) ++stats.clean_correct;
  }
  stats.clean_queries = oracle.queries() - before;

  if (!last) {
    // trials == 0: still report the crafting decision.
    const Instance x = samp(service, handles, flip(b), craft_rng);
    last = craft(x, report, service, handles, b, t_class, craft_rng);
  }
  return FullAttackResult{std::move(*last), stats};
}

inline nlohmann::json to_json(const SensitivityReport& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : r.trace) {
    trace.push_back({{"index", s.index}, {"mu", s.mu}, {"mu_flipped", s.mu_flipped}, {"kept", s.kept}});
  }
  return {{"n", r.n},         {"threshold", r.threshold}, {"sensitive", r.sensitive}, {"insensitive", r.insensitive},
          {"gaps", r.gaps},   {"trace", trace},           {"queries", r.queries}};
}

inline nlohmann::json to_json(const AttackOutcome& o) {
  nlohmann::json j;
  if (o.success()) {
    j["status"] = "success";
    j["protected_set"] = o.as_success().metric.protected_set;
  } else {
    j["status"] = "abort";
    j["reason"] = reason_name(o.as_abort().reason);
  }
  j["report"] = to_json(o.report);
  return j;
}

inline nlohmann::json to_json(const FoolingStats& s) {
  return {{"trials", s.trials},
          {"fooled", s.fooled},
          {"clean_correct", s.clean_correct},
          {"admissible", s.admissible},
          {"fooling_rate", s.fooling_rate()},
          {"clean_rate", s.clean_rate()},
          {"gap", s.gap()},
          {"probe_queries", s.probe_queries},
          {"crafted_queries", s.crafted_queries},
          {"clean_queries", s.clean_queries}};
}

}  // namespace bkr

#endif  // BKR_ATTACK_HPP_
