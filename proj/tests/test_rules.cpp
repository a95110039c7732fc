#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "symroute/rules.hpp"

using namespace symroute;

namespace {

Rule make_rule(std::string id, RuleType type, std::string pattern, std::uint64_t support = 10,
               std::optional<PathHint> hint = std::nullopt) {
  Rule r;
  r.id = std::move(id);
  r.type = type;
  r.pattern = std::move(pattern);
  r.support = support;
  r.suggested_path = hint;
  r.compile();
  return r;
}

RuleLoadReport load_exemplars() {
  std::ifstream in(std::string(SYMROUTE_DATA_DIR) + "/drop_exemplar_rules.jsonl");
  return load_rules(in);
}

std::vector<std::string> matched_ids(const MatchSet& ms) {
  std::vector<std::string> ids;
  for (const auto& m : ms.matches) ids.push_back(m.rule->id);
  return ids;
}

}  // namespace

TEST(LoadRules, ExemplarFile) {
  auto rep = load_exemplars();
  EXPECT_EQ(rep.registry.size(), 6u);
  EXPECT_TRUE(rep.rejected.empty());
  EXPECT_EQ(rep.registry.by_type(RuleType::Number).size(), 2u);
  EXPECT_EQ(rep.registry.by_answer_type(AnswerType::Span).size(), 2u);
}

TEST(LoadRules, UndersupportedDropped) {
  std::istringstream in(
      R"({"id":"a","type":"count","pattern":"x","support":4})" "\n"
      R"({"id":"b","type":"count","pattern":"y","support":5})" "\n");
  auto rep = load_rules(in, 5);
  EXPECT_EQ(rep.registry.size(), 1u);
  EXPECT_EQ(rep.dropped_undersupported, 1u);
  EXPECT_EQ(rep.registry.rules()[0].id, "b");
}

TEST(LoadRules, EmptyFile) {
  std::istringstream in("");
  auto rep = load_rules(in);
  EXPECT_TRUE(rep.registry.empty());
  EXPECT_TRUE(match_rules("how many players scored", rep.registry).matches.empty());
}

TEST(LoadRules, MalformedPatternHasPosition) {
  std::istringstream in(
      R"({"id":"ok","type":"count","pattern":"abc","support":9})" "\n"
      R"({"id":"bad","type":"count","pattern":"ab(c","support":9})" "\n");
  auto rep = load_rules(in);
  EXPECT_EQ(rep.registry.size(), 1u);
  ASSERT_EQ(rep.rejected.size(), 1u);
  EXPECT_EQ(rep.rejected[0].line, 2u);
  EXPECT_EQ(rep.rejected[0].id, "bad");
  EXPECT_NE(rep.rejected[0].message.find("offset"), std::string::npos);
}

TEST(LoadRules, DuplicatesRejected) {
  std::istringstream in(
      R"({"id":"a","type":"count","pattern":"x","support":9})" "\n"
      R"({"id":"a","type":"count","pattern":"z","support":9})" "\n"
      R"({"id":"c","type":"count","pattern":"x","support":9})" "\n");
  auto rep = load_rules(in);
  EXPECT_EQ(rep.registry.size(), 1u);
  ASSERT_EQ(rep.rejected.size(), 2u);
  EXPECT_EQ(rep.rejected[0].line, 2u);
  EXPECT_EQ(rep.rejected[1].line, 3u);
}

TEST(LoadRules, BadFieldsRejected) {
  std::istringstream in(
      R"({"id":"a","type":"weird","pattern":"x","support":9})" "\n"
      R"({"id":"b","type":"count","pattern":"x","support":-1})" "\n"
      R"({"id":"c","type":"count","pattern":"x","support":9,"suggested_path":"sideways"})" "\n"
      "not json\n");
  auto rep = load_rules(in);
  EXPECT_TRUE(rep.registry.empty());
  EXPECT_EQ(rep.rejected.size(), 4u);
}

TEST(LoadRules, RoundTrip) {
  auto first = load_exemplars().registry;
  std::istringstream in(serialize_rules(first));
  auto second = load_rules(in).registry;
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first.rules()[i].id, second.rules()[i].id);
    EXPECT_EQ(first.rules()[i].pattern, second.rules()[i].pattern);
    EXPECT_EQ(first.rules()[i].support, second.rules()[i].support);
    EXPECT_EQ(first.rules()[i].suggested_path, second.rules()[i].suggested_path);
  }
}

TEST(MatchRules, CountCapture) {
  RuleRegistry reg;
  reg.add(make_rule("count", RuleType::Count, R"(\bhow\s+many\s+([\w]+?)s?\b)"));
  auto ms = match_rules("how many players scored", reg);
  ASSERT_EQ(ms.matches.size(), 1u);
  ASSERT_EQ(ms.matches[0].captures.size(), 1u);
  EXPECT_EQ(ms.matches[0].captures[0], "player");
}

TEST(MatchRules, NumberRulesNeedDigits) {
  auto reg = load_exemplars().registry;
  for (const auto* r : reg.by_type(RuleType::Number))
    EXPECT_FALSE(match_rule(*r, "the Saints lost to Tampa Bay in the rematch"));
}

TEST(MatchRules, DifferenceNeedsTrailingText) {
  auto reg = load_exemplars().registry;
  // The difference pattern requires whitespace after the keyword, so the
  // bare phrase only hits the count rule.
  auto bare = matched_ids(match_rules("how many yards difference", reg));
  EXPECT_EQ(bare, (std::vector<std::string>{"drop-count"}));
  auto full = matched_ids(match_rules("how many yards difference between the two field goals", reg));
  EXPECT_EQ(full, (std::vector<std::string>{"drop-count", "drop-difference"}));
}

TEST(MatchRules, ExemplarTableExamples) {
  auto reg = load_exemplars().registry;
  auto ids = [&](const std::string& t) { return matched_ids(match_rules(t, reg)); };
  auto has = [](const std::vector<std::string>& v, const std::string& id) {
    return std::find(v.begin(), v.end(), id) != v.end();
  };
  EXPECT_TRUE(has(ids("Saints losing to Tampa Bay 30 - 17"), "drop-num-scoring"));
  EXPECT_TRUE(has(ids("in a Week 7 rematch"), "drop-num-general"));
  EXPECT_TRUE(has(ids("26.20% were under the age of 18, with"), "drop-spans-percentage"));
  EXPECT_TRUE(has(ids("how many players"), "drop-count"));
  EXPECT_TRUE(has(ids("how many yards difference between them"), "drop-difference"));
  EXPECT_TRUE(has(ids("who scored the first touchdown"), "drop-entity-role"));

  auto ms = match_rules("Saints losing to Tampa Bay 30 - 17", reg);
  ASSERT_FALSE(ms.matches.empty());
  EXPECT_EQ(ms.matches[0].captures[0], "30");
}

TEST(MatchRules, OversizedTextSkipped) {
  RuleRegistry reg;
  reg.add(make_rule("r", RuleType::Other, "a"));
  MatchBudget budget;
  budget.max_text_bytes = 4;
  auto ms = match_rules("aaaaaaa", reg, budget);
  EXPECT_TRUE(ms.matches.empty());
  EXPECT_EQ(ms.skipped, (std::vector<std::string>{"r"}));
}

TEST(MatchRulesProperty, AgreesWithNaiveScan) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    RuleRegistry reg;
    std::vector<Rule> rules;
    const int n = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int i = 0; i < n; ++i) {
      auto r = make_rule("r" + std::to_string(i), RuleType::Other, oracle::random_pattern(rng));
      try {
        reg.add(r);
        rules.push_back(r);
      } catch (const ValidationError&) {
      }
    }
    const auto text = oracle::random_text(rng);
    const auto got = match_rules(text, reg);
    std::vector<oracle::NaiveMatch> mine;
    for (const auto& m : got.matches) mine.push_back({m.rule->id, m.captures});
    ASSERT_EQ(mine, oracle::naive_scan(text, rules)) << "text: " << text;
  }
}

TEST(SuggestPath, MajorityVote) {
  auto s1 = make_rule("s1", RuleType::Count, "a", 9, PathHint::PreferSymbolic);
  auto s2 = make_rule("s2", RuleType::Count, "b", 9, PathHint::PreferSymbolic);
  auto n1 = make_rule("n1", RuleType::Spans, "c", 9, PathHint::PreferNeural);
  EXPECT_EQ(suggest_path({{&s1, {}}, {&s2, {}}, {&n1, {}}}), PathHint::PreferSymbolic);
  EXPECT_EQ(suggest_path({{&s1, {}}, {&n1, {}}}), std::nullopt);
  EXPECT_EQ(suggest_path({}), std::nullopt);
}

TEST(ScoreChunk, Examples) {
  RuleRegistry empty;
  EXPECT_NEAR(score_chunk(1.0, 1.0, "nothing here", empty).total, 0.9, 1e-12);
  RuleRegistry reg;
  reg.add(make_rule("a", RuleType::Other, "goal"));
  reg.add(make_rule("b", RuleType::Other, "field"));
  auto s = score_chunk(0.0, 0.0, "field goal", reg);
  EXPECT_EQ(s.boost, 2u);
  EXPECT_NEAR(s.total, 0.2, 1e-12);
  EXPECT_EQ(score_chunk(0.0, 0.0, "", empty).total, 0.0);
}

TEST(ScoreChunk, RangeErrors) {
  RuleRegistry reg;
  EXPECT_THROW(score_chunk(1.5, 0.5, "x", reg), ValidationError);
  EXPECT_THROW(score_chunk(0.5, -0.1, "x", reg), ValidationError);
}

TEST(ScoreChunk, BoostCapAndLinearity) {
  RuleRegistry reg;
  for (int i = 0; i < 12; ++i) reg.add(make_rule("r" + std::to_string(i), RuleType::Other, "x{" + std::to_string(i % 3 + 1) + "}" + std::string(i / 3, 'x')));
  ChunkWeights w;
  const auto capped = score_chunk(0.3, 0.4, std::string(20, 'x'), reg, w);
  EXPECT_EQ(capped.boost, 10u);
  EXPECT_TRUE(capped.boost_capped);

  RuleRegistry one, three;
  for (int i = 0; i < 3; ++i) {
    auto r = make_rule("k" + std::to_string(i), RuleType::Other, "k" + std::to_string(i));
    if (i == 0) one.add(r);
    three.add(r);
  }
  const auto a = score_chunk(0.3, 0.4, "k0 k1 k2", one);
  const auto b = score_chunk(0.3, 0.4, "k0 k1 k2", three);
  EXPECT_NEAR(b.total - a.total, w.boost * 2.0, 1e-12);
}

TEST(Embedding, HashedBagCosine) {
  HashedBagEmbedding e;
  const auto a = e.embed("field goal by the kicker");
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-12);
  EXPECT_EQ(cosine_similarity(a, e.embed("")), 0.0);
  EXPECT_GT(cosine_similarity(a, e.embed("the kicker made a field goal")),
            cosine_similarity(a, e.embed("census population percent")));
  EXPECT_THROW(cosine_similarity({1.0}, {1.0, 2.0}), ContractViolation);
}

TEST(SupportValidation, RecountsOverCorpus) {
  std::vector<Rule> rules{make_rule("often", RuleType::Count, "how many", 0),
                          make_rule("rare", RuleType::Count, "census", 1000)};
  std::vector<std::string> corpus;
  for (int i = 0; i < 6; ++i) corpus.push_back("how many goals");
  corpus.push_back("the census");
  auto v = validate_supports(rules, corpus, 5);
  ASSERT_EQ(v.kept.size(), 1u);
  EXPECT_EQ(v.kept[0].id, "often");
  EXPECT_EQ(v.kept[0].support, 6u);
  ASSERT_EQ(v.dropped.size(), 1u);
  EXPECT_EQ(v.dropped[0].support, 1u);
}
