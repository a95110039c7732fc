#pragma once

// Path executors, the calibrated synthetic executor model, the simulated and
// live resource environments, and the control manager that routes, executes,
// retries, falls back and records outcomes.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "symroute/complexity.hpp"
#include "symroute/fusion.hpp"
#include "symroute/metrics.hpp"
#include "symroute/resources.hpp"
#include "symroute/router.hpp"
#include "symroute/rules.hpp"
#include "symroute/types.hpp"

namespace symroute {

using Load = LoadOverlaySource::Load;

/// The answer an executor is trying to produce: the gold answer when known,
/// otherwise a value derived from the query id.
struct Truth {
  AnswerValue value = 0.0;
  AnswerType type = AnswerType::Number;
};

inline Truth truth_for(const Query& q, const std::optional<Answer>& gold) {
  if (gold) return {gold->value, gold->answer_type};
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : q.id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return {static_cast<double>(h % 1000), AnswerType::Number};
}

struct ExecutionResult {
  std::optional<Answer> answer;  // nullopt: the executor failed
  double latency = 0.0;          // seconds, before contention
  Load cost{};
};

class PathExecutor {
 public:
  virtual ~PathExecutor() = default;
  virtual ExecutionResult execute(const Query& q, const ComplexityBreakdown& complexity,
                                  const Truth& truth, std::mt19937_64& rng) = 0;
};

// ---------------------------------------------------------------------------
// synthetic model
// ---------------------------------------------------------------------------

struct PathModel {
  double base_latency = 0.0;
  double kappa_slope = 0.0;
  double noise_sigma = 0.0;
  double accuracy = 1.0;
  double failure_rate = 0.0;     // probability the executor returns no answer
  double type_error_rate = 0.2;  // share of wrong answers that also have the wrong type
  Load cost{};

  void validate(const std::string& name) const {
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw ConfigError(name + ".accuracy outside [0,1]");
    if (!(failure_rate >= 0.0 && failure_rate <= 1.0))
      throw ConfigError(name + ".failure_rate outside [0,1]");
    if (!(noise_sigma >= 0.0)) throw ConfigError(name + ".noise_sigma must be >= 0");
    if (!(base_latency >= 0.0)) throw ConfigError(name + ".base_latency must be >= 0");
  }
};

/// Latency inflation under load: 1 + gain * max(0, p - knee) / (1 - knee).
struct ContentionModel {
  Load background{0.10, 0.15, 0.20, 0.10};
  double knee = 0.6;
  double gain = 3.0;

  double slowdown(double pressure) const {
    if (knee >= 1.0) return 1.0;
    return 1.0 + gain * std::max(0.0, pressure - knee) / (1.0 - knee);
  }
};

struct SyntheticModel {
  PathModel symbolic{0.362, 0.0, 0.05, 0.314, 0.0, 0.2, {0.25, 0.0, 0.05, 0.05}};
  PathModel neural{0.82, 0.1, 0.15, 0.978, 0.0, 0.2, {0.05, 0.55, 0.10, 0.30}};
  /// Hybrid runs both executors concurrently; only its cost and fusion
  /// overhead are configured here.
  Load hybrid_cost{0.30, 0.75, 0.20, 0.40};
  double fusion_overhead = 0.02;
  double idle_gap = 0.05;  // seconds between consecutive queries
  ContentionModel contention{};
  std::uint64_t seed = 0;

  void validate() const {
    symbolic.validate("symbolic");
    neural.validate("neural");
    if (!(fusion_overhead >= 0.0)) throw ConfigError("fusion_overhead must be >= 0");
    if (!(idle_gap >= 0.0)) throw ConfigError("idle_gap must be >= 0");
  }

  const PathModel& model_for(Path p) const {
    if (p == Path::Hybrid) throw ContractViolation("hybrid has no standalone executor model");
    return p == Path::Symbolic ? symbolic : neural;
  }

  Load cost_for(Path p) const { return p == Path::Hybrid ? hybrid_cost : model_for(p).cost; }
};

namespace detail {

inline Answer wrong_answer(const Truth& truth, bool wrong_type, double conf, Path src,
                           std::mt19937_64& rng) {
  if (wrong_type) {
    if (truth.type == AnswerType::Span) return Answer::number(std::uniform_int_distribution<int>(1, 99)(rng), conf, src);
    return Answer::span("unknown", conf, src);
  }
  switch (truth.type) {
    case AnswerType::Number:
      return Answer::number(std::get<double>(truth.value) + std::uniform_int_distribution<int>(1, 9)(rng),
                            conf, src);
    case AnswerType::Span:
      return Answer::span(std::get<std::string>(truth.value) + " jr", conf, src);
    case AnswerType::Date: {
      Date d = std::get<Date>(truth.value);
      d.day = d.day % 28 + 1;
      return Answer::date(d, conf, src);
    }
  }
  return Answer::span("unknown", conf, src);
}

}  // namespace detail

/// Seeded stand-in for a real executor. Latency = base + slope * kappa +
/// N(0, sigma), floored at 0; correct with probability `accuracy`.
inline ExecutionResult synthetic_execute(Path path, double kappa, const Truth& truth,
                                         const PathModel& m, std::mt19937_64& rng) {
  ExecutionResult r;
  r.cost = m.cost;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  r.latency = std::max(0.0, m.base_latency + m.kappa_slope * kappa + m.noise_sigma * noise(rng));
  const bool failed = unit(rng) < m.failure_rate;
  const bool correct = unit(rng) < m.accuracy;
  const bool wrong_type = unit(rng) < m.type_error_rate;
  const double conf = correct ? 0.6 + 0.4 * unit(rng) : 0.1 + 0.5 * unit(rng);
  if (failed) return r;
  r.answer = correct ? Answer{truth.value, truth.type, conf, path}
                     : detail::wrong_answer(truth, wrong_type, conf, path, rng);
  return r;
}

class SyntheticExecutor final : public PathExecutor {
 public:
  SyntheticExecutor(Path path, PathModel model) : path_(path), model_(std::move(model)) {}
  ExecutionResult execute(const Query&, const ComplexityBreakdown& c, const Truth& truth,
                          std::mt19937_64& rng) override {
    return synthetic_execute(path_, c.kappa, truth, model_, rng);
  }

 private:
  Path path_;
  PathModel model_;
};

/// Processing-time relationship used to validate the complexity score:
/// T = intercept + slope * kappa + hybrid_bump * [hybrid] + N(0, sigma^2).
struct LatencyKappaModel {
  double intercept = 1.85;
  double slope = 0.1;
  double hybrid_bump = 0.23;
  double sigma = 0.4;

  std::vector<double> sample(std::span<const double> kappas, std::uint64_t seed,
                             const std::vector<bool>& hybrid = {}) const {
    std::mt19937_64 rng(stats::detail::mix_seed(seed));
    std::normal_distribution<double> eps(0.0, sigma);
    std::vector<double> out;
    out.reserve(kappas.size());
    for (std::size_t i = 0; i < kappas.size(); ++i) {
      const double bump = (i < hybrid.size() && hybrid[i]) ? hybrid_bump : 0.0;
      out.push_back(intercept + slope * kappas[i] + bump + eps(rng));
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// environments
// ---------------------------------------------------------------------------

class Environment {
 public:
  virtual ~Environment() = default;
  virtual ResourceSnapshot snapshot() const = 0;
  double pressure() const { return symroute::pressure(snapshot().state); }
  /// Holds `load` for `seconds` of (simulated or real) time.
  virtual void occupy(const Load& load, double seconds) = 0;
  virtual void idle(double seconds) = 0;
  virtual bool deterministic() const = 0;
};

/// Simulated clock. Utilization is the background (or a replayed trace) plus
/// the load of whatever is executing; the monitor samples every period.
class SimulatedEnvironment final : public Environment {
 public:
  SimulatedEnvironment(Load background, double alpha = 0.3, std::int64_t period_ms = 100,
                       MetricSource* trace = nullptr)
      : overlay_(background, trace), monitor_(overlay_, alpha), period_ms_(period_ms) {
    monitor_.step(0);
  }

  ResourceSnapshot snapshot() const override { return *monitor_.snapshot(); }

  void occupy(const Load& load, double seconds) override {
    const auto dur = static_cast<std::int64_t>(std::llround(seconds * 1000.0));
    overlay_.inject(load, now_ms_, now_ms_ + dur);
    advance(dur);
    overlay_.prune(now_ms_);
  }

  void idle(double seconds) override { advance(static_cast<std::int64_t>(std::llround(seconds * 1000.0))); }
  bool deterministic() const override { return true; }
  std::int64_t now_ms() const { return now_ms_; }

 private:
  void advance(std::int64_t dur_ms) {
    const std::int64_t end = now_ms_ + dur_ms;
    std::int64_t next_tick = (now_ms_ / period_ms_ + 1) * period_ms_;
    for (; next_tick <= end; next_tick += period_ms_) {
      if (next_tick > last_tick_) {
        monitor_.step(next_tick);
        last_tick_ = next_tick;
      }
    }
    now_ms_ = end;
  }

  LoadOverlaySource overlay_;
  ResourceMonitor monitor_;
  std::int64_t period_ms_;
  std::int64_t now_ms_ = 0;
  std::int64_t last_tick_ = 0;
};

/// Host metrics sampled on a background thread; occupy/idle do not block.
class LiveEnvironment final : public Environment {
 public:
  explicit LiveEnvironment(LiveCapacities caps = {}, double alpha = 0.3,
                           std::chrono::milliseconds period = std::chrono::milliseconds(100))
      : source_(caps), monitor_(source_, alpha) {
    monitor_.step(0);
    monitor_.start(period);
  }
  ResourceSnapshot snapshot() const override { return *monitor_.snapshot(); }
  void occupy(const Load&, double) override {}
  void idle(double) override {}
  bool deterministic() const override { return false; }

 private:
  ProcMetricSource source_;
  ResourceMonitor monitor_;
};

// ---------------------------------------------------------------------------
// control manager
// ---------------------------------------------------------------------------

struct ControlConfig {
  int retry_limit = 2;
  double max_query_time = 30.0;  // seconds
  std::size_t optimize_every = 10;
  double stats_decay = 0.1;
  double hint_delta = 0.15;
  RoutingMode mode = RoutingMode::Adaptive;
  std::size_t workers = 1;

  void validate() const {
    if (retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
    if (!(max_query_time > 0.0)) throw ConfigError("max_query_time must be > 0");
  }
};

struct ExecutionRecord {
  std::string query_id;
  Dataset dataset = Dataset::Other;
  ComplexityBreakdown complexity;
  std::vector<std::string> matched_rules;
  PathDecision decision;
  Path final_path = Path::Hybrid;
  std::optional<Answer> answer;
  std::optional<FusionOutcome> fusion;
  double latency = 0.0;
  double cost = 0.0;
  std::optional<bool> correct;
  bool success = false;
  int retries = 0;
  bool timed_out = false;
  SmoothedState resources_at_dispatch{};
};

/// Fallback chain after a path fails: Hybrid, Neural, Symbolic, skipping
/// paths that already failed.
inline std::optional<Path> next_fallback(const std::vector<Path>& failed) {
  for (Path p : {Path::Hybrid, Path::Neural, Path::Symbolic})
    if (std::find(failed.begin(), failed.end(), p) == failed.end()) return p;
  return std::nullopt;
}

struct Dependencies {
  const SalienceProvider* salience = nullptr;
  ComplexityWeights complexity{};
  const RuleRegistry* rules = nullptr;
  UtilityWeights utility{};
  FusionPolicy fusion{};
  PathExecutor* symbolic = nullptr;
  PathExecutor* neural = nullptr;
  Load symbolic_cost{}, neural_cost{}, hybrid_cost{};
  double fusion_overhead = 0.02;
  ContentionModel contention{};
};

class ControlManager {
 public:
  ControlManager(Dependencies deps, ControlConfig cfg, ControlState& control, Environment& env,
                 std::uint64_t seed)
      : deps_(std::move(deps)), cfg_(cfg), control_(control), env_(env), seed_(seed) {
    cfg_.validate();
    if (!deps_.salience || !deps_.symbolic || !deps_.neural)
      throw ConfigError("control manager dependencies are incomplete");
  }

  ExecutionRecord process_query(const Query& q, const std::optional<Answer>& gold,
                                std::uint64_t index) {
    ExecutionRecord rec;
    rec.query_id = q.id;
    rec.dataset = q.dataset;

    auto breakdown = compute_kappa(q, *deps_.salience, deps_.complexity);
    std::optional<PathHint> hint;
    if (deps_.rules) {
      auto ms = match_rules(q.text, *deps_.rules);
      for (const auto& m : ms.matches) rec.matched_rules.push_back(m.rule->id);
      hint = suggest_path(ms.matches);
    }
    rec.complexity = effective_complexity(breakdown, hint, cfg_.hint_delta);

    const auto res = env_.snapshot();
    rec.resources_at_dispatch = res.state;
    const double p = symroute::pressure(res.state);
    const auto ctl = control_.snapshot();
    const auto util = utilities_from_stats(ctl.stats, deps_.utility);
    rec.decision = select_path(rec.complexity.kappa_eff, p, ctl.thresholds, q.dataset, cfg_.mode, util);

    std::mt19937_64 rng(stats::detail::mix_seed(seed_ ^ stats::detail::mix_seed(index)));
    const Truth truth = truth_for(q, gold);
    const double slowdown = deps_.contention.slowdown(p);

    Path path = rec.decision.path;
    std::vector<Path> failed;
    int failures_on_path = 0;
    double elapsed = 0.0;
    for (int attempt = 0;; ++attempt) {
      auto outcome = run_path(path, q, rec.complexity, truth, rng);
      double dt = outcome.latency * slowdown;
      const bool over = elapsed + dt > cfg_.max_query_time;
      if (over) dt = cfg_.max_query_time - elapsed;
      env_.occupy(cost_of(path), dt);
      elapsed += dt;
      rec.final_path = path;
      if (over) {
        rec.timed_out = true;
        rec.answer.reset();
        rec.fusion.reset();
        break;
      }
      rec.answer = outcome.answer;
      rec.fusion = outcome.fusion;
      if (outcome.answer) break;
      if (attempt >= cfg_.retry_limit) break;
      ++rec.retries;
      if (++failures_on_path >= 2) {
        failed.push_back(path);
        auto next = next_fallback(failed);
        if (!next) break;
        path = *next;
        failures_on_path = 0;
      }
    }
    rec.latency = elapsed;
    const Load c = cost_of(rec.final_path);
    rec.cost = std::max({c.cpu, c.gpu, c.mem});

    if (rec.answer && gold) {
      rec.correct = type_match(*rec.answer, *gold) && value_match(*rec.answer, *gold, deps_.fusion);
    } else if (gold) {
      rec.correct = false;
    }
    if (rec.timed_out || !rec.answer)
      rec.success = false;
    else if (rec.correct)
      rec.success = *rec.correct;
    else
      rec.success = rec.answer->confidence >= deps_.fusion.min_confidence;

    control_.record(rec.final_path, rec.success, rec.latency, rec.cost, env_.pressure());
    return rec;
  }

 private:
  struct PathOutcome {
    std::optional<Answer> answer;
    std::optional<FusionOutcome> fusion;
    double latency = 0.0;
  };

  Load cost_of(Path p) const {
    switch (p) {
      case Path::Symbolic: return deps_.symbolic_cost;
      case Path::Neural: return deps_.neural_cost;
      case Path::Hybrid: return deps_.hybrid_cost;
    }
    return {};
  }

  PathOutcome run_path(Path path, const Query& q, const ComplexityBreakdown& c, const Truth& truth,
                       std::mt19937_64& rng) {
    if (path == Path::Symbolic) {
      auto r = deps_.symbolic->execute(q, c, truth, rng);
      return {r.answer, std::nullopt, r.latency};
    }
    if (path == Path::Neural) {
      auto r = deps_.neural->execute(q, c, truth, rng);
      return {r.answer, std::nullopt, r.latency};
    }
    auto s = deps_.symbolic->execute(q, c, truth, rng);
    auto n = deps_.neural->execute(q, c, truth, rng);
    PathOutcome out;
    out.latency = std::max(s.latency, n.latency) + deps_.fusion_overhead;
    if (!s.answer && !n.answer) return out;
    out.fusion = fallback(s.answer, n.answer, deps_.fusion);
    out.answer = out.fusion->answer;
    return out;
  }

  Dependencies deps_;
  ControlConfig cfg_;
  ControlState& control_;
  Environment& env_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// workload runs
// ---------------------------------------------------------------------------

struct WorkloadItem {
  Query query;
  std::optional<Answer> gold;
};

struct LatencySummary {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  double sum = 0.0;
};

struct WorkloadReport {
  std::string mode;
  std::uint64_t seed = 0;
  std::size_t total = 0;
  std::array<std::size_t, 3> decided{};  // by decision path
  std::array<std::size_t, 3> executed{};  // by final path
  LatencySummary latency{};
  std::size_t with_gold = 0;
  std::size_t correct = 0;
  double em_rate = 0.0;
  std::size_t successes = 0;
  std::size_t timeouts = 0;
  std::size_t retries = 0;
  double mean_pressure = 0.0;
  double max_pressure = 0.0;
  std::array<double, 4> mean_utilization{};  // cpu, gpu, mem, power at dispatch
  std::vector<ThresholdEvent> trajectory;
  ThresholdSet final_thresholds{};
  std::uint64_t threshold_repairs = 0;
  PathStats final_stats{};
  std::vector<ExecutionRecord> records;

  double share(Path p) const {
    return total == 0 ? 0.0 : static_cast<double>(decided[index_of(p)]) / static_cast<double>(total);
  }
};

inline LatencySummary summarize_latency(std::vector<double> v) {
  LatencySummary s;
  if (v.empty()) return s;
  for (double x : v) s.sum += x;
  s.mean = s.sum / static_cast<double>(v.size());
  std::sort(v.begin(), v.end());
  s.median = stats::quantile_sorted(v, 0.5);
  s.p95 = stats::quantile_sorted(v, 0.95);
  return s;
}

inline WorkloadReport summarize(std::vector<ExecutionRecord> records, const ControlState& control,
                                RoutingMode mode, std::uint64_t seed) {
  WorkloadReport r;
  r.mode = std::string(to_string(mode));
  r.seed = seed;
  r.total = records.size();
  std::vector<double> lat;
  lat.reserve(records.size());
  for (const auto& rec : records) {
    ++r.decided[index_of(rec.decision.path)];
    ++r.executed[index_of(rec.final_path)];
    lat.push_back(rec.latency);
    if (rec.correct) {
      ++r.with_gold;
      if (*rec.correct) ++r.correct;
    }
    if (rec.success) ++r.successes;
    if (rec.timed_out) ++r.timeouts;
    r.retries += static_cast<std::size_t>(rec.retries);
    const double p = rec.decision.pressure;
    r.mean_pressure += p;
    r.max_pressure = std::max(r.max_pressure, p);
    const auto& s = rec.resources_at_dispatch;
    r.mean_utilization[0] += s.cpu;
    r.mean_utilization[1] += s.gpu;
    r.mean_utilization[2] += s.mem;
    r.mean_utilization[3] += s.power;
  }
  if (r.total > 0) {
    r.mean_pressure /= static_cast<double>(r.total);
    for (auto& u : r.mean_utilization) u /= static_cast<double>(r.total);
  }
  r.em_rate = r.with_gold ? static_cast<double>(r.correct) / static_cast<double>(r.with_gold) : 0.0;
  r.latency = summarize_latency(std::move(lat));
  r.trajectory = control.trajectory();
  const auto snap = control.snapshot();
  r.final_thresholds = snap.thresholds;
  r.final_stats = snap.stats;
  r.threshold_repairs = control.repairs();
  r.records = std::move(records);
  return r;
}

struct RunSetup {
  ControlConfig control{};
  ComplexityWeights complexity{};
  UtilityWeights utility{};
  FusionPolicy fusion{};
  ThresholdSet thresholds{};
  SyntheticModel model{};
  double resource_alpha = 0.3;
  std::int64_t resource_period_ms = 100;
};

/// Runs the workload on a simulated environment (or `env` when given).
/// Deterministic environments force a single worker.
inline WorkloadReport run_workload(const std::vector<WorkloadItem>& items, const RunSetup& setup,
                                   const RuleRegistry* rules, std::uint64_t seed,
                                   Environment* env = nullptr,
                                   const SalienceProvider* salience = nullptr) {
  setup.control.validate();
  setup.utility.validate();
  setup.fusion.validate();
  setup.thresholds.validate();
  setup.complexity.validate();
  setup.model.validate();

  LexicalSalience default_salience;
  SimulatedEnvironment sim(setup.model.contention.background, setup.resource_alpha,
                           setup.resource_period_ms);
  Environment& e = env ? *env : sim;
  ControlState control(setup.thresholds, PathStats::with_priors(), setup.control.optimize_every,
                       setup.control.stats_decay);
  SyntheticExecutor sym(Path::Symbolic, setup.model.symbolic);
  SyntheticExecutor neu(Path::Neural, setup.model.neural);

  Dependencies deps;
  deps.salience = salience ? salience : &default_salience;
  deps.complexity = setup.complexity;
  deps.rules = rules;
  deps.utility = setup.utility;
  deps.fusion = setup.fusion;
  deps.symbolic = &sym;
  deps.neural = &neu;
  deps.symbolic_cost = setup.model.symbolic.cost;
  deps.neural_cost = setup.model.neural.cost;
  deps.hybrid_cost = setup.model.hybrid_cost;
  deps.fusion_overhead = setup.model.fusion_overhead;
  deps.contention = setup.model.contention;

  const std::uint64_t run_seed = seed ^ setup.model.seed;
  ControlManager mgr(deps, setup.control, control, e, run_seed);
  std::vector<ExecutionRecord> records(items.size());

  const std::size_t workers =
      e.deterministic() ? 1 : std::max<std::size_t>(1, setup.control.workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      records[i] = mgr.process_query(items[i].query, items[i].gold, i);
      e.idle(setup.model.idle_gap);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < items.size(); i = next++)
          records[i] = mgr.process_query(items[i].query, items[i].gold, i);
      });
    }
  }
  return summarize(std::move(records), control, setup.control.mode, seed);
}

}  // namespace symroute
