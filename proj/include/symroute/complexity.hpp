#pragma once

// Query complexity scoring.
//
//   kappa     = (w_A * salience + w_L * length_norm) * (1 + structural)
//   structural = w_sh1 * entities/|q| + w_sh2 * hops/|q|
//   kappa_eff = kappa shifted by a rule hint (-delta toward symbolic, +delta
//               toward neural, floored at 0)
//
// Salience is pluggable. The shipped LexicalSalience is a deterministic
// stand-in for attention-derived salience.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symroute/types.hpp"

namespace symroute {

struct TokenSpan {
  std::size_t begin = 0;  // inclusive token index
  std::size_t end = 0;    // exclusive
  bool operator==(const TokenSpan&) const = default;
};

struct Query {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  Dataset dataset = Dataset::Other;
  std::vector<TokenSpan> entity_spans;
  int hop_markers = 0;
};

struct ComplexityWeights {
  double w_attention = 1.0;
  double w_length = 1.0;
  double w_entity = 0.05;
  double w_hop = 0.1;
  std::size_t max_corpus_len = 64;

  void validate() const {
    for (double w : {w_attention, w_length, w_entity, w_hop}) {
      if (!std::isfinite(w) || w < 0.0)
        throw ConfigError("complexity weights must be finite and non-negative");
    }
    if (max_corpus_len == 0) throw ConfigError("max_corpus_len must be positive");
  }
};

struct ComplexityBreakdown {
  double salience = 0.0;
  double length_norm = 0.0;
  double structural = 0.0;
  double kappa = 0.0;
  std::optional<PathHint> rule_suggestion;
  double kappa_eff = 0.0;
};

class SalienceProvider {
 public:
  virtual ~SalienceProvider() = default;
  /// Deterministic for identical input; must return a value in [0,1].
  virtual double salience(std::span<const std::string> tokens) const = 0;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words{
      "a",     "an",    "the",   "of",    "in",    "on",    "at",    "to",    "for",
      "by",    "with",  "from",  "and",   "or",    "but",   "is",    "are",   "was",
      "were",  "be",    "been",  "did",   "do",    "does",  "what",  "which", "who",
      "whom",  "whose", "how",   "many",  "much",  "when",  "where", "why",   "that",
      "this",  "these", "those", "it",    "its",   "as",    "than",  "then",  "there",
      "their", "they",  "he",    "she",   "his",   "her",   "has",   "have",  "had",
      "not",   "no",    "more",  "most",  "less",  "after", "before", "also", "same",
      "first", "second", "last", "into",  "over",  "under", "between", "during"};
  return words;
}

inline bool is_stopword(std::string_view tok) { return stopwords().count(lower(tok)) > 0; }

inline bool is_capitalized(std::string_view tok) {
  return !tok.empty() && std::isupper(static_cast<unsigned char>(tok.front()));
}

}  // namespace detail

/// Content-word ratio blended with a rare-token ratio. A token counts as rare
/// when it is long (>= rare_min_len chars), numeric, or capitalized.
class LexicalSalience final : public SalienceProvider {
 public:
  explicit LexicalSalience(std::size_t rare_min_len = 8) : rare_min_len_(rare_min_len) {}

  double salience(std::span<const std::string> tokens) const override {
    if (tokens.empty()) return 0.0;
    std::size_t content = 0;
    std::size_t rare = 0;
    for (const auto& t : tokens) {
      if (!detail::is_stopword(t)) ++content;
      const bool numeric = std::any_of(t.begin(), t.end(),
                                       [](unsigned char c) { return std::isdigit(c) != 0; });
      if (t.size() >= rare_min_len_ || numeric || detail::is_capitalized(t)) ++rare;
    }
    const double n = static_cast<double>(tokens.size());
    return std::clamp(0.5 * (content / n) + 0.5 * (rare / n), 0.0, 1.0);
  }

 private:
  std::size_t rare_min_len_;
};

// ---------------------------------------------------------------------------
// tokenization and detectors
// ---------------------------------------------------------------------------

/// Splits on whitespace; punctuation other than intra-token '.', ',', '%',
/// '-', '\'' is dropped. Numbers like "26.20%" and "1,200" stay whole.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && std::string_view(".,'-").find(cur.back()) != std::string_view::npos)
      cur.pop_back();
    while (!cur.empty() && std::string_view(".,'-").find(cur.front()) != std::string_view::npos)
      cur.erase(cur.begin());
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80 || ch == '%' ||
        ((ch == '.' || ch == ',' || ch == '\'' || ch == '-') && !cur.empty())) {
      cur.push_back(ch);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

struct DetectorConfig {
  /// Lower-cased multi-token names, e.g. "tampa bay".
  std::vector<std::string> gazetteer;
  std::vector<std::string> hop_keywords{"and", "who also", "before", "after", "the same"};
};

/// Gazetteer hits first, then maximal runs of capitalized non-stopword tokens
/// that do not start at token 0. Spans never overlap.
inline std::vector<TokenSpan> detect_entities(std::span<const std::string> tokens,
                                              const DetectorConfig& cfg) {
  std::vector<TokenSpan> spans;
  std::vector<bool> taken(tokens.size(), false);
  for (const auto& name : cfg.gazetteer) {
    const auto parts = tokenize(name);
    if (parts.empty() || parts.size() > tokens.size()) continue;
    for (std::size_t i = 0; i + parts.size() <= tokens.size(); ++i) {
      bool hit = true;
      for (std::size_t k = 0; k < parts.size() && hit; ++k)
        hit = !taken[i + k] && detail::lower(tokens[i + k]) == detail::lower(parts[k]);
      if (!hit) continue;
      spans.push_back({i, i + parts.size()});
      std::fill(taken.begin() + static_cast<std::ptrdiff_t>(i),
                taken.begin() + static_cast<std::ptrdiff_t>(i + parts.size()), true);
    }
  }
  std::size_t i = 1;
  while (i < tokens.size()) {
    auto cap = [&](std::size_t k) {
      return !taken[k] && detail::is_capitalized(tokens[k]) && !detail::is_stopword(tokens[k]);
    };
    if (!cap(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < tokens.size() && cap(j)) ++j;
    spans.push_back({i, j});
    i = j;
  }
  std::sort(spans.begin(), spans.end(),
            [](const TokenSpan& a, const TokenSpan& b) { return a.begin < b.begin; });
  return spans;
}

inline int count_hop_markers(std::span<const std::string> tokens, const DetectorConfig& cfg) {
  std::vector<std::string> low;
  low.reserve(tokens.size());
  for (const auto& t : tokens) low.push_back(detail::lower(t));
  int count = 0;
  for (const auto& kw : cfg.hop_keywords) {
    const auto parts = tokenize(detail::lower(kw));
    if (parts.empty() || parts.size() > low.size()) continue;
    for (std::size_t i = 0; i + parts.size() <= low.size(); ++i) {
      if (std::equal(parts.begin(), parts.end(), low.begin() + static_cast<std::ptrdiff_t>(i)))
        ++count;
    }
  }
  return count;
}

inline Query make_query(std::string id, std::string text, Dataset dataset,
                        const DetectorConfig& cfg = {}) {
  Query q;
  q.id = std::move(id);
  q.text = std::move(text);
  q.dataset = dataset;
  q.tokens = tokenize(q.text);
  q.entity_spans = detect_entities(q.tokens, cfg);
  q.hop_markers = count_hop_markers(q.tokens, cfg);
  return q;
}

// ---------------------------------------------------------------------------
// scoring
// ---------------------------------------------------------------------------

inline double structural_heuristic(const Query& q, const ComplexityWeights& w) {
  if (q.tokens.empty()) throw DegenerateInput("query '" + q.id + "' has no tokens");
  const double n = static_cast<double>(q.tokens.size());
  return w.w_entity * (static_cast<double>(q.entity_spans.size()) / n) +
         w.w_hop * (static_cast<double>(std::max(q.hop_markers, 0)) / n);
}

inline ComplexityBreakdown compute_kappa(const Query& q, const SalienceProvider& provider,
                                         const ComplexityWeights& w) {
  ComplexityBreakdown b;
  b.structural = structural_heuristic(q, w);
  b.salience = provider.salience(q.tokens);
  if (!(b.salience >= 0.0 && b.salience <= 1.0))
    throw ContractViolation("salience provider returned a value outside [0,1]");
  b.length_norm = std::clamp(
      static_cast<double>(q.tokens.size()) / static_cast<double>(w.max_corpus_len), 0.0, 1.0);
  b.kappa = (w.w_attention * b.salience + w.w_length * b.length_norm) * (1.0 + b.structural);
  b.kappa_eff = b.kappa;
  return b;
}

inline ComplexityBreakdown effective_complexity(ComplexityBreakdown b, std::optional<PathHint> hint,
                                                double hint_delta = 0.15) {
  b.rule_suggestion = hint;
  if (!hint) {
    b.kappa_eff = b.kappa;
  } else if (*hint == PathHint::PreferSymbolic) {
    b.kappa_eff = std::max(0.0, b.kappa - hint_delta);
  } else {
    b.kappa_eff = b.kappa + hint_delta;
  }
  return b;
}

/// Corpus pre-pass: longest token count observed, frozen into the weights.
inline std::size_t max_corpus_length(std::span<const Query> corpus) {
  std::size_t m = 0;
  for (const auto& q : corpus) m = std::max(m, q.tokens.size());
  return m;
}

}  // namespace symroute
