#pragma once

// Workload files (one JSON object per line: id, text, dataset, optional gold)
// and the built-in mixed discrete-reasoning / multi-hop workload generator.

#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "symroute/complexity.hpp"
#include "symroute/executors.hpp"
#include "symroute/fusion.hpp"

namespace symroute {

inline std::optional<Answer> gold_from_json(const nlohmann::json& g) {
  if (g.is_null()) return std::nullopt;
  if (g.is_number()) return Answer::number(g.get<double>(), 1.0, Path::Hybrid);
  if (g.is_string()) return Answer::span(g.get<std::string>(), 1.0, Path::Hybrid);
  if (g.is_object() && g.contains("year"))
    return Answer::date({g.at("year").get<int>(), g.value("month", 0), g.value("day", 0)}, 1.0,
                        Path::Hybrid);
  throw ValidationError("unsupported gold answer: " + g.dump());
}

inline nlohmann::json gold_to_json(const Answer& a) {
  switch (a.answer_type) {
    case AnswerType::Number: return std::get<double>(a.value);
    case AnswerType::Span: return std::get<std::string>(a.value);
    case AnswerType::Date: {
      const auto& d = std::get<Date>(a.value);
      return {{"year", d.year}, {"month", d.month}, {"day", d.day}};
    }
  }
  return nullptr;
}

inline std::vector<WorkloadItem> parse_workload(std::istream& in, const DetectorConfig& det = {}) {
  std::vector<WorkloadItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      WorkloadItem it;
      it.query = make_query(j.at("id").get<std::string>(), j.at("text").get<std::string>(),
                            parse_dataset(j.value("dataset", std::string("other"))), det);
      if (it.query.tokens.empty())
        throw DegenerateInput("query '" + it.query.id + "' has no tokens");
      if (j.contains("gold")) it.gold = gold_from_json(j["gold"]);
      items.push_back(std::move(it));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("workload line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw ValidationError("workload line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

inline std::vector<WorkloadItem> load_workload(const std::string& path, const DetectorConfig& det = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open workload file: " + path);
  return parse_workload(in, det);
}

inline std::string workload_to_jsonl(const std::vector<WorkloadItem>& items) {
  std::string out;
  for (const auto& it : items) {
    nlohmann::ordered_json j;
    j["id"] = it.query.id;
    j["text"] = it.query.text;
    j["dataset"] = to_string(it.query.dataset);
    if (it.gold) j["gold"] = gold_to_json(*it.gold);
    out += j.dump();
    out += '\n';
  }
  return out;
}

/// Mixed workload: half discrete-reasoning questions over football and
/// census passages (numeric answers), half multi-hop film questions (span
/// and date answers). A few short counting questions are included.
inline std::vector<WorkloadItem> generate_workload(std::size_t n, std::uint64_t seed,
                                                   const DetectorConfig& det = {}) {
  static constexpr std::array teams{"Saints", "Buccaneers", "Falcons", "Panthers",
                                    "Bears",  "Packers",    "Vikings", "Lions"};
  static constexpr std::array players{"Drew Brees", "Jameis Winston", "Matt Ryan",
                                      "Cam Newton", "Aaron Rodgers",  "Matthew Stafford"};
  static constexpr std::array people{"Robert Zemeckis", "Steven Spielberg", "Kathryn Bigelow",
                                     "Greta Gerwig",    "Christopher Nolan", "Sofia Coppola",
                                     "Ridley Scott",    "Ang Lee"};
  static constexpr std::array films{"Back to the Future", "Jaws",      "The Hurt Locker",
                                    "Lady Bird",          "Inception", "Lost in Translation",
                                    "Blade Runner",       "Life of Pi"};
  static constexpr std::array ordinals{"first", "second", "third", "fourth"};
  static constexpr std::array nouns{"rushing yards", "passing yards", "first downs", "penalties"};

  std::mt19937_64 rng(stats::detail::mix_seed(seed));
  auto pick = [&](const auto& arr) {
    return std::string(arr[std::uniform_int_distribution<std::size_t>(0, arr.size() - 1)(rng)]);
  };
  auto num = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  std::vector<WorkloadItem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool drop = (i % 2 == 0);
    std::string text;
    std::optional<Answer> gold;
    if (drop) {
      switch (num(0, 9)) {
        case 0:
          text = "How many field goals were kicked?";
          gold = Answer::number(num(1, 6), 1.0, Path::Hybrid);
          break;
        case 1:
        case 2:
          text = "How many yards difference was there between the " + pick(ordinals) +
                 " field goal by " + pick(players) + " and the longest touchdown pass?";
          gold = Answer::number(num(1, 60), 1.0, Path::Hybrid);
          break;
        case 3:
        case 4:
          text = "How many points did the " + pick(teams) + " score in the " + pick(ordinals) +
                 " quarter after the " + pick(teams) + " fumbled the kickoff?";
          gold = Answer::number(num(0, 21), 1.0, Path::Hybrid);
          break;
        case 5:
          text = "Who threw the longest touchdown pass in the game between the " + pick(teams) +
                 " and the " + pick(teams) + "?";
          gold = Answer::span(pick(players), 1.0, Path::Hybrid);
          break;
        case 6:
        case 7:
          text = "How many more " + pick(nouns) + " did the " + pick(teams) + " have than the " +
                 pick(teams) + " in the Week " + std::to_string(num(1, 17)) + " rematch?";
          gold = Answer::number(num(1, 150), 1.0, Path::Hybrid);
          break;
        default:
          text = "How many percent of the population in the " + std::to_string(num(1990, 2010)) +
                 " census were not aged 65 or older?";
          gold = Answer::number(num(60, 95) + 0.1 * num(0, 9), 1.0, Path::Hybrid);
          break;
      }
    } else {
      switch (num(0, 4)) {
        case 0:
          text = "Which film directed by " + pick(people) + " was released before " + pick(films) +
                 " and starred the same lead actor?";
          gold = Answer::span(pick(films), 1.0, Path::Hybrid);
          break;
        case 1:
          text = "Who also directed the film that won the award after " + pick(films) +
                 " was released in theaters?";
          gold = Answer::span(pick(people), 1.0, Path::Hybrid);
          break;
        case 2:
          text = "What is the birth date of the director of " + pick(films) + "?";
          gold = Answer::date({num(1930, 1985), num(1, 12), num(1, 28)}, 1.0, Path::Hybrid);
          break;
        case 3:
          text = pick(people) + " and " + pick(people) +
                 " share which profession besides directing feature films?";
          gold = Answer::span("screenwriter", 1.0, Path::Hybrid);
          break;
        default:
          text = "Were " + pick(people) + " and " + pick(people) +
                 " of the same nationality when " + pick(films) + " premiered?";
          gold = Answer::span(num(0, 1) ? "yes" : "no", 1.0, Path::Hybrid);
          break;
      }
    }
    WorkloadItem it;
    it.query = make_query("q" + std::to_string(i), text,
                          drop ? Dataset::DiscreteReasoning : Dataset::MultiHop, det);
    it.gold = std::move(gold);
    out.push_back(std::move(it));
  }
  return out;
}

inline std::vector<Query> queries_of(const std::vector<WorkloadItem>& items) {
  std::vector<Query> qs;
  qs.reserve(items.size());
  for (const auto& it : items) qs.push_back(it.query);
  return qs;
}

}  // namespace symroute
