#pragma once

// Path selection, path utility and online threshold adaptation.
//
// Threshold logic is authoritative for routing. Utilities are computed from
// the running per-path statistics on every decision and logged; the Utility
// routing mode uses their argmax instead.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "symroute/types.hpp"

namespace symroute {

struct ThresholdSet {
  double low_kappa = 0.4;
  double high_kappa = 0.8;
  double low_pressure = 0.6;
  double high_pressure = 0.85;

  static constexpr double kKappaFloor = 0.2;
  static constexpr double kKappaCeil = 0.9;

  bool operator==(const ThresholdSet&) const = default;

  void validate() const {
    if (!(low_kappa <= high_kappa)) throw ConfigError("low_kappa must not exceed high_kappa");
    if (!(low_pressure <= high_pressure))
      throw ConfigError("low_pressure must not exceed high_pressure");
    if (low_kappa < kKappaFloor || high_kappa > kKappaCeil)
      throw ConfigError("kappa thresholds must lie within [0.2, 0.9]");
    if (low_pressure < 0.0 || high_pressure > 1.0)
      throw ConfigError("pressure thresholds must lie within [0,1]");
  }
};

struct UtilityWeights {
  double accuracy = 0.6;
  double latency = 0.25;
  double cost = 0.15;
  double tau_max = 30.0;  // seconds
  double c_max = 1.0;

  void validate() const {
    if (std::abs(accuracy + latency + cost - 1.0) > 1e-9)
      throw ConfigError("utility weights must sum to 1");
    if (!(tau_max > 0.0) || !(c_max > 0.0))
      throw ConfigError("utility normalizers tau_max and c_max must be positive");
  }
};

struct PathEstimate {
  double accuracy = 0.0;
  double latency = 0.0;  // seconds
  double cost = 0.0;     // normalized
};

struct PathStat {
  double success_rate = 0.0;
  double avg_time = 0.0;
  double avg_cost = 0.0;
  std::uint64_t sample_count = 0;
};

struct PathStats {
  std::array<PathStat, 3> per_path{};

  PathStat& operator[](Path p) { return per_path[index_of(p)]; }
  const PathStat& operator[](Path p) const { return per_path[index_of(p)]; }

  /// Priors from the component baselines; sample_count stays 0 so the first
  /// real outcome replaces them.
  static PathStats with_priors() {
    PathStats s;
    s[Path::Symbolic] = {0.314, 0.362, 0.10, 0};
    s[Path::Neural] = {0.978, 0.904, 0.45, 0};
    s[Path::Hybrid] = {0.994, 0.985, 0.60, 0};
    return s;
  }
};

enum class RoutingMode { Adaptive, ForcedHybrid, ForcedNeural, ForcedSymbolic, Utility };

inline std::string_view to_string(RoutingMode m) {
  switch (m) {
    case RoutingMode::Adaptive: return "adaptive";
    case RoutingMode::ForcedHybrid: return "forced-hybrid";
    case RoutingMode::ForcedNeural: return "forced-neural";
    case RoutingMode::ForcedSymbolic: return "forced-symbolic";
    case RoutingMode::Utility: return "utility";
  }
  return "?";
}

inline std::optional<RoutingMode> parse_mode(std::string_view s) {
  for (auto m : {RoutingMode::Adaptive, RoutingMode::ForcedHybrid, RoutingMode::ForcedNeural,
                 RoutingMode::ForcedSymbolic, RoutingMode::Utility})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

enum class DecisionReason { LowBoth, HighEither, DefaultHybrid, Forced, UtilityArgmax };

inline std::string_view to_string(DecisionReason r) {
  switch (r) {
    case DecisionReason::LowBoth: return "low_both";
    case DecisionReason::HighEither: return "high_either";
    case DecisionReason::DefaultHybrid: return "default_hybrid";
    case DecisionReason::Forced: return "forced";
    case DecisionReason::UtilityArgmax: return "utility_argmax";
  }
  return "?";
}

struct PathDecision {
  Path path = Path::Hybrid;
  double kappa_eff = 0.0;
  double pressure = 0.0;
  ThresholdSet thresholds_used{};
  std::array<double, 3> utilities{};
  DecisionReason reason = DecisionReason::DefaultHybrid;
};

// ---------------------------------------------------------------------------
// utility
// ---------------------------------------------------------------------------

inline double path_utility(const PathEstimate& est, const UtilityWeights& w) {
  if (!(w.tau_max > 0.0) || !(w.c_max > 0.0))
    throw ConfigError("utility normalizers tau_max and c_max must be positive");
  return w.accuracy * est.accuracy - w.latency * (est.latency / w.tau_max) -
         w.cost * (est.cost / w.c_max);
}

/// Ties resolve Hybrid > Neural > Symbolic.
inline Path argmax_path(const std::array<double, 3>& utilities) {
  for (double u : utilities)
    if (std::isnan(u)) throw ContractViolation("NaN path utility");
  Path best = Path::Hybrid;
  for (Path p : {Path::Neural, Path::Symbolic}) {
    if (utilities[index_of(p)] > utilities[index_of(best)]) best = p;
  }
  return best;
}

inline std::array<double, 3> utilities_from_stats(const PathStats& stats, const UtilityWeights& w) {
  std::array<double, 3> u{};
  for (Path p : kAllPaths) {
    const auto& s = stats[p];
    u[index_of(p)] = path_utility({s.success_rate, s.avg_time, s.avg_cost}, w);
  }
  return u;
}

// ---------------------------------------------------------------------------
// selection
// ---------------------------------------------------------------------------

/// The dataset tag is accepted for interface parity; both dataset branches of
/// the selection logic are identical.
inline PathDecision select_path(double kappa_eff, double pressure, const ThresholdSet& th,
                                Dataset /*dataset*/, RoutingMode mode,
                                const std::array<double, 3>& utilities = {}) {
  PathDecision d;
  d.kappa_eff = kappa_eff;
  d.pressure = pressure;
  d.thresholds_used = th;
  d.utilities = utilities;
  switch (mode) {
    case RoutingMode::ForcedHybrid:
      d.path = Path::Hybrid;
      d.reason = DecisionReason::Forced;
      return d;
    case RoutingMode::ForcedNeural:
      d.path = Path::Neural;
      d.reason = DecisionReason::Forced;
      return d;
    case RoutingMode::ForcedSymbolic:
      d.path = Path::Symbolic;
      d.reason = DecisionReason::Forced;
      return d;
    case RoutingMode::Utility:
      d.path = argmax_path(utilities);
      d.reason = DecisionReason::UtilityArgmax;
      return d;
    case RoutingMode::Adaptive:
      break;
  }
  if (kappa_eff < th.low_kappa && pressure < th.low_pressure) {
    d.path = Path::Symbolic;
    d.reason = DecisionReason::LowBoth;
  } else if (kappa_eff >= th.high_kappa || pressure >= th.high_pressure) {
    d.path = Path::Neural;
    d.reason = DecisionReason::HighEither;
  } else {
    d.path = Path::Hybrid;
    d.reason = DecisionReason::DefaultHybrid;
  }
  return d;
}

// ---------------------------------------------------------------------------
// threshold adaptation
// ---------------------------------------------------------------------------

struct ThresholdStep {
  ThresholdSet thresholds;
  bool repaired = false;  // low/high kappa crossed and were set to their midpoint
};

inline ThresholdStep optimize_thresholds(const ThresholdSet& current, double pressure,
                                         const PathStats& stats, double delta = 0.05) {
  ThresholdSet t = current;
  constexpr double kPivot = 0.6;
  if (pressure > 0.9) {
    t.low_kappa = std::min(kPivot, t.low_kappa + delta);
    t.high_kappa = std::max(kPivot, t.high_kappa - delta);
  } else if (pressure < 0.3) {
    t.low_kappa = std::max(ThresholdSet::kKappaFloor, t.low_kappa - delta);
    t.high_kappa = std::min(ThresholdSet::kKappaCeil, t.high_kappa + delta);
  }
  for (Path p : {Path::Neural, Path::Symbolic}) {
    const auto& s = stats[p];
    if (!(s.success_rate < 0.5 && s.avg_time > 1.0)) continue;
    if (p == Path::Neural && t.high_kappa > kPivot)
      t.high_kappa = std::max(kPivot, t.high_kappa - delta);
    if (p == Path::Symbolic && t.low_kappa > ThresholdSet::kKappaFloor)
      t.low_kappa = std::max(ThresholdSet::kKappaFloor, t.low_kappa - delta);
  }
  t.low_kappa = std::clamp(t.low_kappa, ThresholdSet::kKappaFloor, ThresholdSet::kKappaCeil);
  t.high_kappa = std::clamp(t.high_kappa, ThresholdSet::kKappaFloor, ThresholdSet::kKappaCeil);
  ThresholdStep out{t, false};
  if (out.thresholds.low_kappa > out.thresholds.high_kappa) {
    const double mid = 0.5 * (out.thresholds.low_kappa + out.thresholds.high_kappa);
    out.thresholds.low_kappa = out.thresholds.high_kappa = mid;
    out.repaired = true;
  }
  return out;
}

inline PathStats record_outcome(PathStats stats, Path path, bool success, double latency,
                                double cost, double decay = 0.1) {
  if (!(latency >= 0.0)) throw ValidationError("latency must be non-negative");
  auto& s = stats[path];
  const double hit = success ? 1.0 : 0.0;
  if (s.sample_count == 0) {
    s.success_rate = hit;
    s.avg_time = latency;
    s.avg_cost = cost;
  } else {
    s.success_rate = decay * hit + (1.0 - decay) * s.success_rate;
    s.avg_time = decay * latency + (1.0 - decay) * s.avg_time;
    s.avg_cost = decay * cost + (1.0 - decay) * s.avg_cost;
  }
  ++s.sample_count;
  return stats;
}

// ---------------------------------------------------------------------------
// shared control state
// ---------------------------------------------------------------------------

struct ThresholdEvent {
  std::uint64_t completed = 0;  // queries completed when the step ran
  double pressure = 0.0;
  ThresholdSet thresholds;
  bool repaired = false;
};

/// Thresholds and path statistics behind one lock: routing reads a consistent
/// snapshot, recording and optimization are serialized.
class ControlState {
 public:
  struct Snapshot {
    ThresholdSet thresholds;
    PathStats stats;
  };

  ControlState(ThresholdSet initial, PathStats priors, std::size_t optimize_every = 10,
               double stats_decay = 0.1)
      : thresholds_(initial), stats_(priors), every_(optimize_every), decay_(stats_decay) {
    initial.validate();
  }

  Snapshot snapshot() const {
    std::lock_guard lk(mu_);
    return {thresholds_, stats_};
  }

  /// Records one outcome; every `optimize_every` completions runs a threshold
  /// step at the given pressure. Returns the event when a step ran.
  std::optional<ThresholdEvent> record(Path path, bool success, double latency, double cost,
                                       double pressure) {
    std::lock_guard lk(mu_);
    stats_ = record_outcome(stats_, path, success, latency, cost, decay_);
    ++completed_;
    if (every_ == 0 || completed_ % every_ != 0) return std::nullopt;
    auto step = optimize_thresholds(thresholds_, pressure, stats_);
    thresholds_ = step.thresholds;
    ThresholdEvent ev{completed_, pressure, thresholds_, step.repaired};
    if (step.repaired) ++repairs_;
    trajectory_.push_back(ev);
    return ev;
  }

  std::vector<ThresholdEvent> trajectory() const {
    std::lock_guard lk(mu_);
    return trajectory_;
  }
  std::uint64_t repairs() const {
    std::lock_guard lk(mu_);
    return repairs_;
  }
  std::uint64_t completed() const {
    std::lock_guard lk(mu_);
    return completed_;
  }

 private:
  mutable std::mutex mu_;
  ThresholdSet thresholds_;
  PathStats stats_;
  std::size_t every_;
  double decay_;
  std::uint64_t completed_ = 0;
  std::uint64_t repairs_ = 0;
  std::vector<ThresholdEvent> trajectory_;
};

}  // namespace symroute
