#pragma once

// Shared vocabulary for the routing engine: paths, hints, dataset tags,
// answer types and the error hierarchy every module throws from.

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace symroute {

enum class Path { Symbolic = 0, Neural = 1, Hybrid = 2 };

inline constexpr std::array<Path, 3> kAllPaths{Path::Symbolic, Path::Neural, Path::Hybrid};

enum class PathHint { PreferSymbolic, PreferNeural };

enum class Dataset { DiscreteReasoning, MultiHop, Other };

enum class AnswerType { Number, Span, Date };

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct DegenerateInput : Error {
  explicit DegenerateInput(const std::string& w) : Error("degenerate_input", w) {}
};
struct ContractViolation : Error {
  explicit ContractViolation(const std::string& w) : Error("contract_violation", w) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error("validation", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct UndefinedStatistic : Error {
  explicit UndefinedStatistic(const std::string& w) : Error("undefined_statistic", w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};

// ---------------------------------------------------------------------------
// enum <-> string
// ---------------------------------------------------------------------------

constexpr std::size_t index_of(Path p) { return static_cast<std::size_t>(p); }

inline std::string_view to_string(Path p) {
  switch (p) {
    case Path::Symbolic: return "symbolic";
    case Path::Neural: return "neural";
    case Path::Hybrid: return "hybrid";
  }
  return "?";
}

inline std::optional<Path> parse_path(std::string_view s) {
  if (s == "symbolic") return Path::Symbolic;
  if (s == "neural") return Path::Neural;
  if (s == "hybrid") return Path::Hybrid;
  return std::nullopt;
}

inline std::string_view to_string(PathHint h) {
  return h == PathHint::PreferSymbolic ? "symbolic" : "neural";
}

inline std::optional<PathHint> parse_hint(std::string_view s) {
  if (s == "symbolic") return PathHint::PreferSymbolic;
  if (s == "neural") return PathHint::PreferNeural;
  return std::nullopt;
}

inline std::string_view to_string(Dataset d) {
  switch (d) {
    case Dataset::DiscreteReasoning: return "drop";
    case Dataset::MultiHop: return "hotpotqa";
    case Dataset::Other: return "other";
  }
  return "?";
}

inline Dataset parse_dataset(std::string_view s) {
  if (s == "drop" || s == "DROP" || s == "discrete") return Dataset::DiscreteReasoning;
  if (s == "hotpotqa" || s == "HotpotQA" || s == "multihop") return Dataset::MultiHop;
  return Dataset::Other;
}

inline std::string_view to_string(AnswerType t) {
  switch (t) {
    case AnswerType::Number: return "number";
    case AnswerType::Span: return "span";
    case AnswerType::Date: return "date";
  }
  return "?";
}

inline std::optional<AnswerType> parse_answer_type(std::string_view s) {
  if (s == "number") return AnswerType::Number;
  if (s == "span") return AnswerType::Span;
  if (s == "date") return AnswerType::Date;
  return std::nullopt;
}

}  // namespace symroute
