#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "symroute/complexity.hpp"

using namespace symroute;

namespace {

struct FixedSalience final : SalienceProvider {
  double v;
  explicit FixedSalience(double x) : v(x) {}
  double salience(std::span<const std::string>) const override { return v; }
};

Query synthetic_query(std::size_t n_tokens, std::size_t n_entities, int hops) {
  Query q;
  q.id = "synthetic";
  for (std::size_t i = 0; i < n_tokens; ++i) q.tokens.push_back("tok" + std::to_string(i));
  for (std::size_t i = 0; i < n_entities; ++i) q.entity_spans.push_back({i, i + 1});
  q.hop_markers = hops;
  return q;
}

}  // namespace

TEST(Structural, ZeroWithoutEntitiesOrHops) {
  EXPECT_DOUBLE_EQ(structural_heuristic(synthetic_query(10, 0, 0), {}), 0.0);
}

TEST(Structural, HandEvaluatedCase) {
  EXPECT_NEAR(structural_heuristic(synthetic_query(10, 2, 1), {}), 0.020, 1e-12);
}

TEST(Structural, MoreEntitiesScoreHigher) {
  const double two = structural_heuristic(synthetic_query(10, 2, 1), {});
  const double four = structural_heuristic(synthetic_query(10, 4, 1), {});
  EXPECT_NEAR(four, 0.030, 1e-12);
  EXPECT_GT(four, two);
}

TEST(Structural, EmptyTokensIsDegenerate) {
  EXPECT_THROW(structural_heuristic(synthetic_query(0, 0, 0), {}), DegenerateInput);
}

TEST(Kappa, FullLengthZeroSalience) {
  ComplexityWeights w;
  w.max_corpus_len = 12;
  auto b = compute_kappa(synthetic_query(12, 0, 0), FixedSalience(0.0), w);
  EXPECT_DOUBLE_EQ(b.kappa, 1.0);
  EXPECT_DOUBLE_EQ(b.length_norm, 1.0);
}

TEST(Kappa, StructuralIsMultiplier) {
  ComplexityWeights w;
  w.max_corpus_len = 40;
  auto with_sh = compute_kappa(synthetic_query(10, 2, 1), FixedSalience(0.5), w);
  EXPECT_NEAR(with_sh.length_norm, 0.25, 1e-15);
  EXPECT_NEAR(with_sh.structural, 0.02, 1e-15);
  EXPECT_NEAR(with_sh.kappa, 0.765, 1e-12);
  auto without = compute_kappa(synthetic_query(10, 0, 0), FixedSalience(0.5), w);
  EXPECT_NEAR(without.kappa, 0.75, 1e-12);
}

TEST(Kappa, SalienceOutOfRangeIsContractViolation) {
  auto q = synthetic_query(5, 0, 0);
  EXPECT_THROW(compute_kappa(q, FixedSalience(1.2), {}), ContractViolation);
  EXPECT_THROW(compute_kappa(q, FixedSalience(-0.1), {}), ContractViolation);
  EXPECT_THROW(compute_kappa(q, FixedSalience(std::nan("")), {}), ContractViolation);
}

TEST(Kappa, LongerThanCorpusClampsLength) {
  ComplexityWeights w;
  w.max_corpus_len = 8;
  auto b = compute_kappa(synthetic_query(20, 0, 0), FixedSalience(0.0), w);
  EXPECT_DOUBLE_EQ(b.length_norm, 1.0);
}

TEST(Kappa, BadWeightsRejected) {
  ComplexityWeights w;
  w.w_entity = -1;
  EXPECT_THROW(w.validate(), ConfigError);
  w = {};
  w.max_corpus_len = 0;
  EXPECT_THROW(w.validate(), ConfigError);
}

TEST(EffectiveComplexity, Examples) {
  ComplexityBreakdown b;
  b.kappa = 0.42;
  EXPECT_DOUBLE_EQ(effective_complexity(b, std::nullopt).kappa_eff, 0.42);
  EXPECT_NEAR(effective_complexity(b, PathHint::PreferSymbolic, 0.15).kappa_eff, 0.27, 1e-12);
  b.kappa = 0.95;
  EXPECT_NEAR(effective_complexity(b, PathHint::PreferNeural, 0.15).kappa_eff, 1.10, 1e-12);
  b.kappa = 0.1;
  EXPECT_DOUBLE_EQ(effective_complexity(b, PathHint::PreferSymbolic, 0.15).kappa_eff, 0.0);
  EXPECT_EQ(effective_complexity(b, PathHint::PreferNeural).rule_suggestion, PathHint::PreferNeural);
}

TEST(KappaProperty, NonDecreasingInEntities) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 60);
  std::uniform_real_distribution<double> sal(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(len(rng));
    const int hops = std::uniform_int_distribution<int>(0, 3)(rng);
    FixedSalience s(sal(rng));
    double prev = -1.0;
    for (std::size_t e = 0; e <= n; ++e) {
      const double k = compute_kappa(synthetic_query(n, e, hops), s, {}).kappa;
      EXPECT_GE(k, prev);
      EXPECT_GE(k, 0.0);
      prev = k;
    }
  }
}

TEST(KappaProperty, Deterministic) {
  LexicalSalience lex;
  auto q = make_query("q", "Which film directed by Robert Zemeckis was released before Jaws?",
                      Dataset::MultiHop);
  const auto a = compute_kappa(q, lex, {});
  const auto b = compute_kappa(q, lex, {});
  EXPECT_EQ(std::memcmp(&a.kappa, &b.kappa, sizeof(double)), 0);
  EXPECT_EQ(a.salience, b.salience);
}

TEST(KappaProperty, ContinuousInSalience) {
  ComplexityWeights w;
  auto q = synthetic_query(10, 1, 1);
  for (double s = 0.0; s < 1.0; s += 0.01) {
    const double k0 = compute_kappa(q, FixedSalience(s), w).kappa;
    const double k1 = compute_kappa(q, FixedSalience(s + 1e-9), w).kappa;
    EXPECT_LT(std::abs(k1 - k0), 1e-8);
  }
}

TEST(Tokenize, KeepsNumbersWhole) {
  const auto t = tokenize("In 2010, 26.20% of 1,200 people voted.");
  const std::vector<std::string> want{"In", "2010", "26.20%", "of", "1,200", "people", "voted"};
  EXPECT_EQ(t, want);
}

TEST(Detectors, CapitalizedRunsSkipFirstToken) {
  auto q = make_query("q", "Which film directed by Robert Zemeckis was released?", Dataset::MultiHop);
  ASSERT_EQ(q.entity_spans.size(), 1u);
  EXPECT_EQ(q.entity_spans[0], (TokenSpan{4, 6}));
}

TEST(Detectors, GazetteerMatchesLowercase) {
  DetectorConfig cfg;
  cfg.gazetteer = {"tampa bay"};
  auto q = make_query("q", "the saints lost to tampa bay again", Dataset::DiscreteReasoning, cfg);
  ASSERT_EQ(q.entity_spans.size(), 1u);
  EXPECT_EQ(q.entity_spans[0], (TokenSpan{4, 6}));
}

TEST(Detectors, HopMarkers) {
  auto q = make_query("q", "Who also starred in the film released after Jaws and before Alien?",
                      Dataset::MultiHop);
  // "who also", "after", "and", "before"
  EXPECT_EQ(q.hop_markers, 4);
}

TEST(LexicalSalienceTest, StaysInUnitInterval) {
  LexicalSalience lex;
  std::mt19937_64 rng(5);
  const std::vector<std::string> vocab{"the", "Saints", "2010", "of", "extraordinarily", "x", "How"};
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> toks(std::uniform_int_distribution<int>(1, 20)(rng));
    for (auto& t : toks) t = vocab[std::uniform_int_distribution<std::size_t>(0, vocab.size() - 1)(rng)];
    const double s = lex.salience(toks);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  EXPECT_EQ(lex.salience({}), 0.0);
}

TEST(CorpusPrepass, MaxLength) {
  std::vector<Query> qs{synthetic_query(3, 0, 0), synthetic_query(17, 0, 0), synthetic_query(9, 0, 0)};
  EXPECT_EQ(max_corpus_length(qs), 17u);
}
