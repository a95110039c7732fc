#include <random>

#include <gtest/gtest.h>

#include "symroute/symroute.hpp"

using namespace symroute;

namespace {

struct FixedSalience final : SalienceProvider {
  double v;
  explicit FixedSalience(double x) : v(x) {}
  double salience(std::span<const std::string>) const override { return v; }
};

// Fails (no answer) or answers the truth with a fixed latency.
struct ScriptedExecutor final : PathExecutor {
  Path path;
  bool fail;
  double latency;
  int calls = 0;
  ScriptedExecutor(Path p, bool f, double l) : path(p), fail(f), latency(l) {}
  ExecutionResult execute(const Query&, const ComplexityBreakdown&, const Truth& t,
                          std::mt19937_64&) override {
    ++calls;
    ExecutionResult r;
    r.latency = latency;
    if (!fail) r.answer = Answer{t.value, t.type, 0.9, path};
    return r;
  }
};

Dependencies scripted_deps(const SalienceProvider& sal, PathExecutor& sym, PathExecutor& neu) {
  Dependencies d;
  d.salience = &sal;
  d.complexity.w_length = 0.0;
  d.symbolic = &sym;
  d.neural = &neu;
  d.symbolic_cost = {0.1, 0, 0, 0};
  d.neural_cost = {0, 0.3, 0, 0};
  d.hybrid_cost = {0.1, 0.3, 0, 0};
  return d;
}

std::vector<WorkloadItem> small_workload(std::size_t n = 200) { return generate_workload(n, 99); }

}  // namespace

TEST(Synthetic, DeterministicBaseLatency) {
  PathModel m;
  m.base_latency = 0.362;
  std::mt19937_64 rng(1);
  auto r = synthetic_execute(Path::Symbolic, 0.7, {3.0, AnswerType::Number}, m, rng);
  EXPECT_DOUBLE_EQ(r.latency, 0.362);
}

TEST(Synthetic, PerfectAccuracy) {
  PathModel m;
  m.accuracy = 1.0;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    auto r = synthetic_execute(Path::Neural, 0.5, {std::string("Jaws"), AnswerType::Span}, m, rng);
    ASSERT_TRUE(r.answer);
    EXPECT_EQ(std::get<std::string>(r.answer->value), "Jaws");
  }
}

TEST(Synthetic, EmpiricalAccuracy) {
  PathModel m;
  m.accuracy = 0.978;
  std::mt19937_64 rng(3);
  const Truth t{42.0, AnswerType::Number};
  const FusionPolicy pol;
  int correct = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto r = synthetic_execute(Path::Neural, 0.5, t, m, rng);
    const Answer gold{t.value, t.type, 1.0, Path::Hybrid};
    if (r.answer && type_match(*r.answer, gold) && value_match(*r.answer, gold, pol)) ++correct;
  }
  const double em = static_cast<double>(correct) / n;
  EXPECT_GE(em, 0.973);
  EXPECT_LE(em, 0.983);
}

TEST(Synthetic, FailureRateDropsAnswers) {
  PathModel m;
  m.failure_rate = 1.0;
  std::mt19937_64 rng(4);
  EXPECT_FALSE(synthetic_execute(Path::Neural, 0.5, {1.0, AnswerType::Number}, m, rng).answer);
}

TEST(Synthetic, ModelValidation) {
  SyntheticModel m;
  EXPECT_NO_THROW(m.validate());
  m.neural.accuracy = 1.5;
  EXPECT_THROW(m.validate(), ConfigError);
}

TEST(Contention, Slowdown) {
  ContentionModel c;
  EXPECT_DOUBLE_EQ(c.slowdown(0.3), 1.0);
  EXPECT_DOUBLE_EQ(c.slowdown(0.6), 1.0);
  EXPECT_NEAR(c.slowdown(1.0), 1.0 + c.gain, 1e-12);
}

TEST(LatencyModel, SampleIsSeededAndBumpsHybrid) {
  LatencyKappaModel m;
  m.sigma = 0.0;
  const std::vector<double> k{0.0, 1.0, 2.0};
  auto t = m.sample(k, 1, {false, true, false});
  EXPECT_NEAR(t[0], 1.85, 1e-12);
  EXPECT_NEAR(t[1], 1.85 + 0.1 + 0.23, 1e-12);
  EXPECT_NEAR(t[2], 2.05, 1e-12);
  LatencyKappaModel noisy;
  EXPECT_EQ(noisy.sample(k, 5), noisy.sample(k, 5));
}

TEST(Fallback, Order) {
  EXPECT_EQ(next_fallback({}), Path::Hybrid);
  EXPECT_EQ(next_fallback({Path::Hybrid}), Path::Neural);
  EXPECT_EQ(next_fallback({Path::Symbolic}), Path::Hybrid);
  EXPECT_EQ(next_fallback({Path::Hybrid, Path::Neural}), Path::Symbolic);
  EXPECT_EQ(next_fallback({Path::Hybrid, Path::Neural, Path::Symbolic}), std::nullopt);
}

TEST(ProcessQuery, LowComplexityLowPressureGoesSymbolic) {
  FixedSalience sal(0.3);
  ScriptedExecutor sym(Path::Symbolic, false, 0.3), neu(Path::Neural, false, 0.9);
  SimulatedEnvironment env({0.5, 0.1, 0.1, 0.0});
  ControlState cs({}, PathStats::with_priors());
  ControlManager mgr(scripted_deps(sal, sym, neu), {}, cs, env, 1);
  auto rec = mgr.process_query(make_query("q", "count the goals", Dataset::DiscreteReasoning),
                               Answer::number(3, 1, Path::Hybrid), 0);
  EXPECT_NEAR(rec.complexity.kappa_eff, 0.3, 1e-12);
  EXPECT_NEAR(rec.decision.pressure, 0.5, 1e-12);
  EXPECT_EQ(rec.decision.path, Path::Symbolic);
  EXPECT_EQ(rec.decision.reason, DecisionReason::LowBoth);
  EXPECT_TRUE(rec.correct.value());
  EXPECT_TRUE(rec.success);
  EXPECT_EQ(sym.calls, 1);
  EXPECT_EQ(neu.calls, 0);
}

TEST(ProcessQuery, RetryThenFallback) {
  FixedSalience sal(0.3);
  ScriptedExecutor sym(Path::Symbolic, true, 0.3), neu(Path::Neural, false, 0.9);
  SimulatedEnvironment env({0.5, 0.1, 0.1, 0.0});
  ControlState cs({}, PathStats::with_priors());
  ControlConfig cfg;
  cfg.retry_limit = 2;
  ControlManager mgr(scripted_deps(sal, sym, neu), cfg, cs, env, 1);
  auto rec = mgr.process_query(make_query("q", "count the goals", Dataset::DiscreteReasoning),
                               Answer::number(3, 1, Path::Hybrid), 0);
  EXPECT_EQ(rec.decision.path, Path::Symbolic);
  EXPECT_EQ(rec.retries, 2);
  EXPECT_EQ(rec.final_path, Path::Hybrid);
  ASSERT_TRUE(rec.fusion);
  EXPECT_EQ(rec.fusion->fusion_case, FusionCase::FallbackNeur);
  EXPECT_TRUE(rec.success);
  EXPECT_EQ(sym.calls, 3);  // two symbolic attempts, then the symbolic half of hybrid
  EXPECT_EQ(neu.calls, 1);
  EXPECT_NEAR(rec.latency, 0.3 + 0.3 + 0.9 + 0.02, 1e-9);
}

TEST(ProcessQuery, AllPathsFailing) {
  FixedSalience sal(0.3);
  ScriptedExecutor sym(Path::Symbolic, true, 0.1), neu(Path::Neural, true, 0.1);
  SimulatedEnvironment env({0.5, 0.1, 0.1, 0.0});
  ControlState cs({}, PathStats::with_priors());
  ControlManager mgr(scripted_deps(sal, sym, neu), {}, cs, env, 1);
  auto rec = mgr.process_query(make_query("q", "count the goals", Dataset::DiscreteReasoning),
                               std::nullopt, 0);
  EXPECT_EQ(rec.retries, 2);
  EXPECT_FALSE(rec.answer);
  EXPECT_FALSE(rec.success);
  EXPECT_FALSE(rec.correct.has_value());
  EXPECT_EQ(cs.snapshot().stats[rec.final_path].success_rate, 0.0);
}

TEST(ProcessQuery, DeadlineExceeded) {
  FixedSalience sal(0.9);
  ScriptedExecutor sym(Path::Symbolic, false, 0.3), neu(Path::Neural, false, 45.0);
  SimulatedEnvironment env({0.5, 0.1, 0.1, 0.0});
  ControlState cs({}, PathStats::with_priors());
  ControlManager mgr(scripted_deps(sal, sym, neu), {}, cs, env, 1);
  auto rec = mgr.process_query(make_query("q", "count the goals", Dataset::MultiHop),
                               Answer::number(3, 1, Path::Hybrid), 0);
  EXPECT_EQ(rec.decision.path, Path::Neural);
  EXPECT_TRUE(rec.timed_out);
  EXPECT_DOUBLE_EQ(rec.latency, 30.0);
  EXPECT_FALSE(rec.success);
  EXPECT_EQ(cs.snapshot().stats[Path::Neural].success_rate, 0.0);
  EXPECT_DOUBLE_EQ(cs.snapshot().stats[Path::Neural].avg_time, 30.0);
}

TEST(ProcessQuery, IncompleteDependenciesRejected) {
  FixedSalience sal(0.3);
  SimulatedEnvironment env({});
  ControlState cs({}, PathStats::with_priors());
  Dependencies d;
  d.salience = &sal;
  EXPECT_THROW(ControlManager(d, {}, cs, env, 1), ConfigError);
}

TEST(RunWorkload, ForcedHybridEverywhere) {
  RunSetup s;
  s.control.mode = RoutingMode::ForcedHybrid;
  auto rep = run_workload(small_workload(), s, nullptr, 5);
  for (const auto& r : rep.records) {
    EXPECT_EQ(r.decision.path, Path::Hybrid);
    EXPECT_EQ(r.decision.reason, DecisionReason::Forced);
  }
  EXPECT_DOUBLE_EQ(rep.share(Path::Hybrid), 1.0);
}

TEST(RunWorkload, EmptyWorkload) {
  auto rep = run_workload({}, RunSetup{}, nullptr, 5);
  EXPECT_EQ(rep.total, 0u);
  EXPECT_EQ(rep.correct, 0u);
  EXPECT_EQ(rep.latency.sum, 0.0);
  EXPECT_TRUE(rep.records.empty());
  EXPECT_EQ(rep.share(Path::Neural), 0.0);
}

TEST(RunWorkload, SameSeedSameBytes) {
  const auto items = small_workload();
  std::ifstream rf(std::string(SYMROUTE_DATA_DIR) + "/drop_exemplar_rules.jsonl");
  const auto rules = load_rules(rf).registry;
  RunSetup s;
  auto a = run_workload(items, s, &rules, 17);
  auto b = run_workload(items, s, &rules, 17);
  EXPECT_EQ(report_json(a).dump(), report_json(b).dump());
  EXPECT_EQ(records_csv(a.records), records_csv(b.records));
  auto c = run_workload(items, s, &rules, 18);
  EXPECT_NE(records_csv(a.records), records_csv(c.records));
}

TEST(RunWorkloadProperty, AccountingConserved) {
  auto rep = run_workload(small_workload(300), RunSetup{}, nullptr, 6);
  std::size_t decided = 0, executed = 0, correct = 0, gold = 0, timeouts = 0, retries = 0;
  double sum = 0.0;
  for (const auto& r : rep.records) {
    sum += r.latency;
    if (r.correct) {
      ++gold;
      if (*r.correct) ++correct;
    }
    if (r.timed_out) ++timeouts;
    retries += static_cast<std::size_t>(r.retries);
  }
  for (auto n : rep.decided) decided += n;
  for (auto n : rep.executed) executed += n;
  EXPECT_EQ(decided, rep.total);
  EXPECT_EQ(executed, rep.total);
  EXPECT_EQ(rep.records.size(), rep.total);
  EXPECT_EQ(rep.correct, correct);
  EXPECT_EQ(rep.with_gold, gold);
  EXPECT_EQ(rep.timeouts, timeouts);
  EXPECT_EQ(rep.retries, retries);
  EXPECT_EQ(rep.latency.sum, sum);
}

TEST(RunWorkloadProperty, PathStatsReplayEquivalence) {
  RunSetup s;
  auto rep = run_workload(small_workload(300), s, nullptr, 7);
  PathStats replay = PathStats::with_priors();
  for (const auto& r : rep.records)
    replay = record_outcome(replay, r.final_path, r.success, r.latency, r.cost, s.control.stats_decay);
  for (Path p : kAllPaths) {
    EXPECT_EQ(rep.final_stats[p].success_rate, replay[p].success_rate);
    EXPECT_EQ(rep.final_stats[p].avg_time, replay[p].avg_time);
    EXPECT_EQ(rep.final_stats[p].avg_cost, replay[p].avg_cost);
    EXPECT_EQ(rep.final_stats[p].sample_count, replay[p].sample_count);
  }
}

TEST(RunWorkload, ThresholdTrajectoryCadence) {
  auto rep = run_workload(small_workload(95), RunSetup{}, nullptr, 8);
  EXPECT_EQ(rep.trajectory.size(), 9u);
  for (std::size_t i = 0; i < rep.trajectory.size(); ++i)
    EXPECT_EQ(rep.trajectory[i].completed, 10 * (i + 1));
}

TEST(RunWorkload, TraceDrivenPressure) {
  std::vector<ResourceState> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({0.1, 0.95, 0.2, 0.0, i * 1000});
  TraceReplaySource trace(rows);
  RunSetup s;
  SimulatedEnvironment env(s.model.contention.background, s.resource_alpha, s.resource_period_ms, &trace);
  auto rep = run_workload(small_workload(50), s, nullptr, 9, &env);
  for (const auto& r : rep.records) EXPECT_EQ(r.decision.path, Path::Neural);
}

TEST(RunWorkload, LiveEnvironmentWithWorkers) {
  RunSetup s;
  s.control.workers = 4;
  LiveEnvironment env;
  auto rep = run_workload(small_workload(100), s, nullptr, 10, &env);
  EXPECT_EQ(rep.total, 100u);
  std::size_t executed = 0;
  for (auto n : rep.executed) executed += n;
  EXPECT_EQ(executed, 100u);
  for (std::size_t i = 0; i < rep.records.size(); ++i) EXPECT_EQ(rep.records[i].query_id, "q" + std::to_string(i));
}

TEST(Workload, GeneratorMixAndRoundTrip) {
  auto items = generate_workload(100, 3);
  std::size_t drop = 0;
  for (const auto& it : items) {
    EXPECT_TRUE(it.gold.has_value());
    if (it.query.dataset == Dataset::DiscreteReasoning) ++drop;
  }
  EXPECT_EQ(drop, 50u);
  std::istringstream in(workload_to_jsonl(items));
  auto back = parse_workload(in);
  ASSERT_EQ(back.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(back[i].query.text, items[i].query.text);
    EXPECT_EQ(back[i].gold->answer_type, items[i].gold->answer_type);
  }
}

TEST(Workload, BadLinesRejected) {
  std::istringstream no_text(R"({"id":"a"})" "\n");
  EXPECT_THROW(parse_workload(no_text), ValidationError);
  std::istringstream empty_text(R"({"id":"a","text":"?!"})" "\n");
  EXPECT_THROW(parse_workload(empty_text), ValidationError);
  std::istringstream bad_gold(R"({"id":"a","text":"how many","gold":[1]})" "\n");
  EXPECT_THROW(parse_workload(bad_gold), ValidationError);
  EXPECT_THROW(load_workload("/nonexistent/workload.jsonl"), IoError);
}
