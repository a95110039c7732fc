#pragma once

// Symbolic rule registry: regex pattern rules with corpus support counts,
// matching, path suggestions and rule-guided chunk scoring.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/regex.hpp>
#include <nlohmann/json.hpp>

#include "symroute/complexity.hpp"
#include "symroute/types.hpp"

namespace symroute {

enum class RuleType { Number, Spans, Count, Difference, EntityRole, Other };

inline std::string_view to_string(RuleType t) {
  switch (t) {
    case RuleType::Number: return "number";
    case RuleType::Spans: return "spans";
    case RuleType::Count: return "count";
    case RuleType::Difference: return "difference";
    case RuleType::EntityRole: return "entity_role";
    case RuleType::Other: return "other";
  }
  return "?";
}

inline std::optional<RuleType> parse_rule_type(std::string_view s) {
  for (auto t : {RuleType::Number, RuleType::Spans, RuleType::Count, RuleType::Difference,
                 RuleType::EntityRole, RuleType::Other})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

struct Rule {
  std::string id;
  RuleType type = RuleType::Other;
  std::string pattern;
  std::uint64_t support = 0;
  std::optional<PathHint> suggested_path;
  AnswerType answer_type = AnswerType::Span;
  std::shared_ptr<const boost::regex> compiled;

  /// Throws ValidationError carrying the offending pattern offset.
  void compile() {
    try {
      compiled = std::make_shared<const boost::regex>(pattern, boost::regex::perl | boost::regex::icase);
    } catch (const boost::regex_error& e) {
      throw ValidationError("rule '" + id + "': bad pattern at offset " +
                            std::to_string(e.position()) + ": " + e.what());
    }
  }
};

inline nlohmann::json to_json(const Rule& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["type"] = to_string(r.type);
  j["pattern"] = r.pattern;
  j["support"] = r.support;
  j["suggested_path"] = r.suggested_path ? nlohmann::json(std::string(to_string(*r.suggested_path)))
                                         : nlohmann::json(nullptr);
  j["answer_type"] = to_string(r.answer_type);
  return j;
}

class RuleRegistry {
 public:
  /// Rejects duplicate ids and duplicate (type, pattern) pairs.
  void add(Rule r) {
    if (!r.compiled) r.compile();
    for (const auto& existing : rules_) {
      if (existing.id == r.id) throw ValidationError("duplicate rule id '" + r.id + "'");
      if (existing.type == r.type && existing.pattern == r.pattern)
        throw ValidationError("duplicate rule (" + std::string(to_string(r.type)) + ", " +
                              r.pattern + ") in '" + r.id + "'");
    }
    auto pos = std::lower_bound(rules_.begin(), rules_.end(), r.id,
                                [](const Rule& a, const std::string& id) { return a.id < id; });
    rules_.insert(pos, std::move(r));
  }

  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  std::vector<const Rule*> by_type(RuleType t) const {
    std::vector<const Rule*> out;
    for (const auto& r : rules_)
      if (r.type == t) out.push_back(&r);
    return out;
  }

  std::vector<const Rule*> by_answer_type(AnswerType t) const {
    std::vector<const Rule*> out;
    for (const auto& r : rules_)
      if (r.answer_type == t) out.push_back(&r);
    return out;
  }

 private:
  std::vector<Rule> rules_;  // sorted by id
};

// ---------------------------------------------------------------------------
// rule file (one JSON object per line)
// ---------------------------------------------------------------------------

struct RuleDiagnostic {
  std::size_t line = 0;
  std::string id;
  std::string message;
};

struct ParsedRules {
  std::vector<Rule> rules;
  std::vector<std::size_t> lines;  // source line of each rule
  std::vector<RuleDiagnostic> rejected;
};

inline Rule rule_from_json(const nlohmann::json& j) {
  Rule r;
  r.id = j.at("id").get<std::string>();
  const auto type = parse_rule_type(j.at("type").get<std::string>());
  if (!type) throw ValidationError("unknown rule type '" + j.at("type").get<std::string>() + "'");
  r.type = *type;
  r.pattern = j.at("pattern").get<std::string>();
  const auto& sup = j.at("support");
  if (!sup.is_number_integer() || sup.get<std::int64_t>() < 0)
    throw ValidationError("support must be a non-negative integer");
  r.support = sup.get<std::uint64_t>();
  if (j.contains("suggested_path") && !j["suggested_path"].is_null()) {
    r.suggested_path = parse_hint(j["suggested_path"].get<std::string>());
    if (!r.suggested_path)
      throw ValidationError("unknown suggested_path '" + j["suggested_path"].get<std::string>() + "'");
  }
  const auto at = parse_answer_type(j.value("answer_type", std::string("span")));
  if (!at) throw ValidationError("unknown answer_type");
  r.answer_type = *at;
  r.compile();
  return r;
}

/// Parses every record without support filtering. Bad records are reported
/// with their line number and skipped.
inline ParsedRules parse_rule_records(std::istream& in) {
  ParsedRules out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id;
    try {
      auto j = nlohmann::json::parse(line);
      id = j.value("id", std::string());
      out.rules.push_back(rule_from_json(j));
      out.lines.push_back(lineno);
    } catch (const nlohmann::json::exception& e) {
      out.rejected.push_back({lineno, id, e.what()});
    } catch (const ValidationError& e) {
      out.rejected.push_back({lineno, id, e.what()});
    }
  }
  return out;
}

struct RuleLoadReport {
  RuleRegistry registry;
  std::size_t dropped_undersupported = 0;
  std::vector<RuleDiagnostic> rejected;
};

inline RuleLoadReport build_registry(ParsedRules parsed, std::uint64_t min_support = 5) {
  RuleLoadReport rep;
  rep.rejected = std::move(parsed.rejected);
  for (std::size_t i = 0; i < parsed.rules.size(); ++i) {
    auto& r = parsed.rules[i];
    if (r.support < min_support) {
      ++rep.dropped_undersupported;
      continue;
    }
    const std::string id = r.id;
    try {
      rep.registry.add(std::move(r));
    } catch (const ValidationError& e) {
      rep.rejected.push_back({i < parsed.lines.size() ? parsed.lines[i] : 0, id, e.what()});
    }
  }
  return rep;
}

inline RuleLoadReport load_rules(std::istream& in, std::uint64_t min_support = 5) {
  return build_registry(parse_rule_records(in), min_support);
}

inline std::string serialize_rules(const RuleRegistry& reg) {
  std::string out;
  for (const auto& r : reg.rules()) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// matching
// ---------------------------------------------------------------------------

struct RuleMatch {
  const Rule* rule = nullptr;
  std::vector<std::string> captures;  // capture groups 1..n; unmatched groups are empty
};

struct MatchSet {
  std::vector<RuleMatch> matches;
  std::vector<std::string> skipped;  // rules that blew the match budget
};

struct MatchBudget {
  std::size_t max_text_bytes = 1 << 16;
};

/// First match of one rule, or nullopt. Throws std::runtime_error when the
/// regex engine gives up on complexity.
inline std::optional<RuleMatch> match_rule(const Rule& rule, std::string_view text) {
  boost::match_results<std::string_view::const_iterator> m;
  if (!boost::regex_search(text.begin(), text.end(), m, *rule.compiled)) return std::nullopt;
  RuleMatch rm{&rule, {}};
  for (std::size_t g = 1; g < m.size(); ++g) rm.captures.push_back(m[g].matched ? m[g].str() : "");
  return rm;
}

inline MatchSet match_rules(std::string_view text, const RuleRegistry& reg,
                            const MatchBudget& budget = {}) {
  MatchSet out;
  for (const auto& rule : reg.rules()) {
    if (text.size() > budget.max_text_bytes) {
      out.skipped.push_back(rule.id);
      continue;
    }
    try {
      if (auto m = match_rule(rule, text)) out.matches.push_back(std::move(*m));
    } catch (const std::runtime_error&) {
      out.skipped.push_back(rule.id);
    }
  }
  return out;
}

/// Majority vote over the hints of matched rules. No matches or a tie gives
/// no hint.
inline std::optional<PathHint> suggest_path(const std::vector<RuleMatch>& matches) {
  int symbolic = 0, neural = 0;
  for (const auto& m : matches) {
    if (!m.rule || !m.rule->suggested_path) continue;
    (*m.rule->suggested_path == PathHint::PreferSymbolic ? symbolic : neural)++;
  }
  if (symbolic > neural) return PathHint::PreferSymbolic;
  if (neural > symbolic) return PathHint::PreferNeural;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// rule-guided chunk scoring
// ---------------------------------------------------------------------------

struct ChunkWeights {
  double similarity = 0.6;
  double support_fact = 0.3;
  double boost = 0.1;
  std::size_t boost_cap = 10;
};

struct ChunkScore {
  double embedding_sim = 0.0;
  double support_fact = 0.0;
  std::size_t boost = 0;
  bool boost_capped = false;
  double total = 0.0;
};

inline ChunkScore score_chunk(double embedding_sim, double support_fact, std::string_view text,
                              const RuleRegistry& reg, const ChunkWeights& w = {}) {
  if (!(embedding_sim >= -1.0 && embedding_sim <= 1.0))
    throw ValidationError("embedding similarity outside [-1,1]");
  if (!(support_fact >= 0.0 && support_fact <= 1.0))
    throw ValidationError("support fact score outside [0,1]");
  ChunkScore s;
  s.embedding_sim = embedding_sim;
  s.support_fact = support_fact;
  const std::size_t hits = match_rules(text, reg).matches.size();
  s.boost = std::min(hits, w.boost_cap);
  s.boost_capped = hits > w.boost_cap;
  s.total = w.similarity * embedding_sim + w.support_fact * support_fact +
            w.boost * static_cast<double>(s.boost);
  return s;
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Hashed bag of lower-cased tokens (FNV-1a buckets).
class HashedBagEmbedding final : public EmbeddingProvider {
 public:
  explicit HashedBagEmbedding(std::size_t dim = 256) : dim_(dim) {}

  std::vector<double> embed(std::string_view text) const override {
    std::vector<double> v(dim_, 0.0);
    for (const auto& tok : tokenize(text)) {
      std::uint64_t h = 1469598103934665603ULL;
      for (unsigned char c : detail::lower(tok)) {
        h ^= c;
        h *= 1099511628211ULL;
      }
      v[h % dim_] += 1.0;
    }
    return v;
  }

 private:
  std::size_t dim_;
};

/// Cosine similarity; 0 when either vector is all zeros.
inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractViolation("embedding dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// support validation
// ---------------------------------------------------------------------------

struct SupportValidation {
  std::vector<Rule> kept;
  std::vector<Rule> dropped;
};

/// Recomputes each rule's support as the number of corpus lines it matches,
/// then keeps rules at or above min_support.
inline SupportValidation validate_supports(std::vector<Rule> rules,
                                           const std::vector<std::string>& corpus,
                                           std::uint64_t min_support = 5) {
  SupportValidation out;
  for (auto& r : rules) {
    if (!r.compiled) r.compile();
    std::uint64_t count = 0;
    for (const auto& line : corpus) {
      try {
        if (match_rule(r, line)) ++count;
      } catch (const std::runtime_error&) {
      }
    }
    r.support = count;
    (count >= min_support ? out.kept : out.dropped).push_back(std::move(r));
  }
  return out;
}

}  // namespace symroute
