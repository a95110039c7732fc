#pragma once

// Symbolic/neural answer fusion: type and value agreement, piecewise fusion
// confidence, and low-confidence fallback.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "symroute/types.hpp"

namespace symroute {

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
  bool operator==(const Date&) const = default;
};

using AnswerValue = std::variant<double, std::string, Date>;

struct Answer {
  AnswerValue value = 0.0;
  AnswerType answer_type = AnswerType::Number;
  double confidence = 0.0;
  Path source = Path::Hybrid;

  static Answer number(double v, double conf, Path src) {
    return {v, AnswerType::Number, conf, src};
  }
  static Answer span(std::string v, double conf, Path src) {
    return {std::move(v), AnswerType::Span, conf, src};
  }
  static Answer date(Date v, double conf, Path src) { return {v, AnswerType::Date, conf, src}; }

  bool well_formed() const {
    if (!(confidence >= 0.0 && confidence <= 1.0)) return false;
    switch (answer_type) {
      case AnswerType::Number: return std::holds_alternative<double>(value);
      case AnswerType::Span: return std::holds_alternative<std::string>(value);
      case AnswerType::Date: return std::holds_alternative<Date>(value);
    }
    return false;
  }
};

inline std::string answer_value_string(const Answer& a) {
  if (auto d = std::get_if<double>(&a.value)) {
    std::string s = std::to_string(*d);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }
  if (auto s = std::get_if<std::string>(&a.value)) return *s;
  const auto& dt = std::get<Date>(a.value);
  return std::to_string(dt.year) + "-" + std::to_string(dt.month) + "-" + std::to_string(dt.day);
}

struct FusionPolicy {
  double beta_agree = 1.2;
  double beta_conflict = 0.8;
  double beta_mismatch = 0.6;
  double min_confidence = 0.3;
  double numeric_tolerance = 1e-6;  // relative

  void validate() const {
    if (!(beta_mismatch <= beta_conflict && beta_conflict <= beta_agree))
      throw ConfigError("fusion betas must satisfy mismatch <= conflict <= agree");
    if (!(numeric_tolerance >= 0.0)) throw ConfigError("numeric tolerance must be non-negative");
  }
};

enum class FusionCase { Agree, Conflict, Mismatch, FallbackSym, FallbackNeur, BothFailed };

inline std::string_view to_string(FusionCase c) {
  switch (c) {
    case FusionCase::Agree: return "agree";
    case FusionCase::Conflict: return "conflict";
    case FusionCase::Mismatch: return "mismatch";
    case FusionCase::FallbackSym: return "fallback_symbolic";
    case FusionCase::FallbackNeur: return "fallback_neural";
    case FusionCase::BothFailed: return "both_failed";
  }
  return "?";
}

struct FusionOutcome {
  std::optional<Answer> answer;
  double c_fusion = 0.0;
  FusionCase fusion_case = FusionCase::BothFailed;
  bool type_match = false;
  bool value_match = false;
};

/// Casefold, strip leading articles, strip terminal punctuation, collapse
/// whitespace.
inline std::string normalize_span(std::string_view s) {
  std::string low;
  low.reserve(s.size());
  for (unsigned char c : s) low.push_back(static_cast<char>(std::tolower(c)));
  std::string collapsed;
  bool space = false;
  for (char c : low) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !collapsed.empty();
      continue;
    }
    if (space) collapsed.push_back(' ');
    space = false;
    collapsed.push_back(c);
  }
  for (std::string_view art : {"the ", "a ", "an "}) {
    if (collapsed.rfind(art, 0) == 0) {
      collapsed.erase(0, art.size());
      break;
    }
  }
  while (!collapsed.empty() && std::ispunct(static_cast<unsigned char>(collapsed.back())))
    collapsed.pop_back();
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  return collapsed;
}

inline bool type_match(const Answer& a, const Answer& b) { return a.answer_type == b.answer_type; }

inline bool value_match(const Answer& a, const Answer& b, const FusionPolicy& pol) {
  if (!type_match(a, b)) throw ContractViolation("value comparison across answer types");
  switch (a.answer_type) {
    case AnswerType::Number: {
      const double x = std::get<double>(a.value), y = std::get<double>(b.value);
      return std::abs(x - y) <= pol.numeric_tolerance * std::max(std::abs(x), std::abs(y));
    }
    case AnswerType::Span:
      return normalize_span(std::get<std::string>(a.value)) ==
             normalize_span(std::get<std::string>(b.value));
    case AnswerType::Date: return std::get<Date>(a.value) == std::get<Date>(b.value);
  }
  return false;
}

/// Ties in confidence go to the symbolic side.
inline FusionOutcome fuse(const Answer& sym, const Answer& neur, const FusionPolicy& pol) {
  FusionOutcome out;
  out.type_match = type_match(sym, neur);
  out.value_match = out.type_match && value_match(sym, neur, pol);
  const Answer& stronger = neur.confidence > sym.confidence ? neur : sym;
  double c = 0.0;
  if (out.type_match && out.value_match) {
    out.fusion_case = FusionCase::Agree;
    c = std::min(sym.confidence, neur.confidence) * pol.beta_agree;
    out.answer = sym;
    out.answer->source = Path::Hybrid;
  } else if (out.type_match) {
    out.fusion_case = FusionCase::Conflict;
    c = std::max(sym.confidence, neur.confidence) * pol.beta_conflict;
    out.answer = stronger;
  } else {
    out.fusion_case = FusionCase::Mismatch;
    c = 0.5 * (sym.confidence + neur.confidence) * pol.beta_mismatch;
    out.answer = stronger;
  }
  out.c_fusion = std::clamp(c, 0.0, 1.0);
  out.answer->confidence = out.c_fusion;
  return out;
}

inline FusionOutcome fallback(const std::optional<Answer>& sym, const std::optional<Answer>& neur,
                              const FusionPolicy& pol) {
  auto usable = [&](const std::optional<Answer>& a) {
    return a.has_value() && a->confidence >= pol.min_confidence;
  };
  if (usable(sym) && usable(neur)) return fuse(*sym, *neur, pol);

  FusionOutcome out;
  if (sym && neur) {
    out.type_match = type_match(*sym, *neur);
    out.value_match = out.type_match && value_match(*sym, *neur, pol);
  }
  if (usable(sym)) {
    out.fusion_case = FusionCase::FallbackSym;
    out.answer = sym;
    out.c_fusion = sym->confidence;
  } else if (usable(neur)) {
    out.fusion_case = FusionCase::FallbackNeur;
    out.answer = neur;
    out.c_fusion = neur->confidence;
  } else {
    out.fusion_case = FusionCase::BothFailed;
    if (sym && neur)
      out.answer = neur->confidence > sym->confidence ? neur : sym;
    else if (sym)
      out.answer = sym;
    else if (neur)
      out.answer = neur;
    out.c_fusion = out.answer ? out.answer->confidence : 0.0;
  }
  return out;
}

}  // namespace symroute
