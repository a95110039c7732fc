#pragma once

// Output formats: report.json, records.csv, decisions.jsonl, thresholds.csv,
// fusion.jsonl, the complexity profile CSV and stats.json. Doubles are
// written in shortest round-trip form so identical runs give identical bytes.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "symroute/complexity.hpp"
#include "symroute/config.hpp"
#include "symroute/executors.hpp"
#include "symroute/metrics.hpp"

namespace symroute {

inline std::string fmt_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline nlohmann::ordered_json thresholds_json(const ThresholdSet& t) {
  return {{"low_kappa", t.low_kappa},
          {"high_kappa", t.high_kappa},
          {"low_pressure", t.low_pressure},
          {"high_pressure", t.high_pressure}};
}

inline nlohmann::ordered_json answer_json(const std::optional<Answer>& a) {
  if (!a) return nullptr;
  return {{"value", answer_value_string(*a)},
          {"type", to_string(a->answer_type)},
          {"confidence", a->confidence},
          {"source", to_string(a->source)}};
}

// ---------------------------------------------------------------------------
// records.csv
// ---------------------------------------------------------------------------

inline const char* kRecordsHeader =
    "query_id,dataset,salience,length_norm,structural,kappa,kappa_eff,rule_hint,pressure,"
    "decision_path,reason,final_path,retries,timed_out,latency,cost,answer,answer_type,"
    "confidence,fusion_case,correct,success";

inline std::string records_csv(const std::vector<ExecutionRecord>& records) {
  std::string out = kRecordsHeader;
  out += '\n';
  for (const auto& r : records) {
    const auto& c = r.complexity;
    std::vector<std::string> f{
        csv_escape(r.query_id),
        std::string(to_string(r.dataset)),
        fmt_double(c.salience),
        fmt_double(c.length_norm),
        fmt_double(c.structural),
        fmt_double(c.kappa),
        fmt_double(c.kappa_eff),
        c.rule_suggestion ? std::string(to_string(*c.rule_suggestion)) : "",
        fmt_double(r.decision.pressure),
        std::string(to_string(r.decision.path)),
        std::string(to_string(r.decision.reason)),
        std::string(to_string(r.final_path)),
        std::to_string(r.retries),
        r.timed_out ? "1" : "0",
        fmt_double(r.latency),
        fmt_double(r.cost),
        r.answer ? csv_escape(answer_value_string(*r.answer)) : "",
        r.answer ? std::string(to_string(r.answer->answer_type)) : "",
        r.answer ? fmt_double(r.answer->confidence) : "",
        r.fusion ? std::string(to_string(r.fusion->fusion_case)) : "",
        r.correct ? (*r.correct ? "1" : "0") : "",
        r.success ? "1" : "0"};
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i) out += ',';
      out += f[i];
    }
    out += '\n';
  }
  return out;
}

/// Minimal CSV reader for files written by records_csv (handles quoting).
inline std::vector<std::map<std::string, std::string>> read_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          cur += ch;
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        cells.push_back(std::move(cur));
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    cells.push_back(std::move(cur));
    return cells;
  };
  std::vector<std::map<std::string, std::string>> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  const auto header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw ValidationError("csv row " + std::to_string(rows.size() + 2) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = std::move(cells[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// decisions.jsonl / thresholds.csv / fusion.jsonl
// ---------------------------------------------------------------------------

inline std::string decisions_jsonl(const std::vector<ExecutionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["query_id"] = r.query_id;
    j["kappa_eff"] = r.decision.kappa_eff;
    j["pressure"] = r.decision.pressure;
    j["thresholds"] = thresholds_json(r.decision.thresholds_used);
    j["utilities"] = {{"symbolic", r.decision.utilities[0]},
                      {"neural", r.decision.utilities[1]},
                      {"hybrid", r.decision.utilities[2]}};
    j["path"] = to_string(r.decision.path);
    j["reason"] = to_string(r.decision.reason);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::string thresholds_csv(const ThresholdSet& initial,
                                  const std::vector<ThresholdEvent>& trajectory) {
  std::string out = "completed,pressure,low_kappa,high_kappa,low_pressure,high_pressure,repaired\n";
  auto row = [&](std::uint64_t n, double p, const ThresholdSet& t, bool rep) {
    out += std::to_string(n) + ',' + fmt_double(p) + ',' + fmt_double(t.low_kappa) + ',' +
           fmt_double(t.high_kappa) + ',' + fmt_double(t.low_pressure) + ',' +
           fmt_double(t.high_pressure) + ',' + (rep ? "1" : "0") + '\n';
  };
  row(0, 0.0, initial, false);
  for (const auto& e : trajectory) row(e.completed, e.pressure, e.thresholds, e.repaired);
  return out;
}

inline std::string fusion_jsonl(const std::vector<ExecutionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    if (!r.fusion) continue;
    nlohmann::ordered_json j;
    j["query_id"] = r.query_id;
    j["case"] = to_string(r.fusion->fusion_case);
    j["type_match"] = r.fusion->type_match;
    j["value_match"] = r.fusion->value_match;
    j["c_fusion"] = r.fusion->c_fusion;
    j["answer"] = answer_json(r.fusion->answer);
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// report.json
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json report_json(const WorkloadReport& r, const EngineConfig* cfg = nullptr) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["total"] = r.total;
  nlohmann::ordered_json dist, exec;
  for (Path p : kAllPaths) {
    dist[std::string(to_string(p))] = {{"count", r.decided[index_of(p)]}, {"share", r.share(p)}};
    exec[std::string(to_string(p))] = r.executed[index_of(p)];
  }
  j["path_distribution"] = dist;
  j["executed_paths"] = exec;
  j["latency"] = {{"mean", r.latency.mean},
                  {"median", r.latency.median},
                  {"p95", r.latency.p95},
                  {"sum", r.latency.sum}};
  j["accuracy"] = {{"with_gold", r.with_gold}, {"correct", r.correct}, {"em_rate", r.em_rate}};
  j["successes"] = r.successes;
  j["timeouts"] = r.timeouts;
  j["retries"] = r.retries;
  j["resources"] = {{"mean_pressure", r.mean_pressure},
                    {"max_pressure", r.max_pressure},
                    {"mean_cpu", r.mean_utilization[0]},
                    {"mean_gpu", r.mean_utilization[1]},
                    {"mean_mem", r.mean_utilization[2]},
                    {"mean_power", r.mean_utilization[3]}};
  j["final_thresholds"] = thresholds_json(r.final_thresholds);
  j["threshold_steps"] = r.trajectory.size();
  j["threshold_repairs"] = r.threshold_repairs;
  nlohmann::ordered_json ps;
  for (Path p : kAllPaths) {
    const auto& s = r.final_stats[p];
    ps[std::string(to_string(p))] = {{"success_rate", s.success_rate},
                                     {"avg_time", s.avg_time},
                                     {"avg_cost", s.avg_cost},
                                     {"sample_count", s.sample_count}};
  }
  j["path_stats"] = ps;
  if (cfg) j["config"] = to_json(*cfg);
  return j;
}

// ---------------------------------------------------------------------------
// complexity profile
// ---------------------------------------------------------------------------

inline std::string complexity_profile_csv(const std::vector<std::pair<std::string, ComplexityBreakdown>>& rows) {
  std::string out = "id,salience,length_norm,structural,kappa,kappa_eff\n";
  for (const auto& [id, b] : rows) {
    out += csv_escape(id) + ',' + fmt_double(b.salience) + ',' + fmt_double(b.length_norm) + ',' +
           fmt_double(b.structural) + ',' + fmt_double(b.kappa) + ',' + fmt_double(b.kappa_eff) +
           '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// stats.json
// ---------------------------------------------------------------------------

struct StatReport {
  std::size_t n = 0;
  double pearson_r = 0.0;
  double spearman_rho = 0.0;
  stats::LinearFit fit{};
  stats::Interval pearson_ci{};
  stats::Interval mean_latency_ci{};
  double mean_latency = 0.0;
  /// Latency comparison between two groups (e.g. hybrid vs neural runs).
  std::optional<std::string> group_a, group_b;
  std::optional<double> cohens_d;
  std::optional<stats::TTest> welch;
  std::optional<double> permutation_p;
  std::string p_value_method = "permutation";
};

/// kappa-vs-latency analysis plus a latency comparison across the two most
/// frequent final paths (when both have n >= 2).
inline StatReport analyze_records(const std::vector<std::map<std::string, std::string>>& rows,
                                  std::uint64_t seed = 0, std::size_t iterations = 1000) {
  std::vector<double> kappa, latency;
  std::map<std::string, std::vector<double>> by_path;
  for (const auto& r : rows) {
    const double k = std::stod(r.at("kappa"));
    const double l = std::stod(r.at("latency"));
    kappa.push_back(k);
    latency.push_back(l);
    by_path[r.at("final_path")].push_back(l);
  }
  StatReport s;
  s.n = kappa.size();
  s.pearson_r = stats::pearson(kappa, latency);
  s.spearman_rho = stats::spearman(kappa, latency);
  s.fit = stats::linfit(kappa, latency);
  s.mean_latency = stats::mean(latency);
  std::vector<double> bx(kappa.size()), by(kappa.size());
  s.pearson_ci = stats::bootstrap_ci_indexed(
      kappa.size(),
      [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
          bx[i] = kappa[idx[i]];
          by[i] = latency[idx[i]];
        }
        try {
          return stats::pearson(bx, by);
        } catch (const UndefinedStatistic&) {
          return 0.0;
        }
      },
      iterations, 0.95, seed);
  s.mean_latency_ci = stats::bootstrap_ci(
      latency, [](std::span<const double> v) { return stats::mean(v); }, iterations, 0.95, seed);

  std::vector<std::pair<std::size_t, std::string>> groups;
  for (const auto& [k, v] : by_path)
    if (v.size() >= 2) groups.emplace_back(v.size(), k);
  std::sort(groups.rbegin(), groups.rend());
  if (groups.size() >= 2) {
    const auto& a = by_path[groups[0].second];
    const auto& b = by_path[groups[1].second];
    s.group_a = groups[0].second;
    s.group_b = groups[1].second;
    try {
      s.cohens_d = stats::cohens_d(a, b);
      s.welch = stats::welch_t(a, b);
    } catch (const UndefinedStatistic&) {
    }
    s.permutation_p = stats::permutation_p(a, b, iterations, seed);
  }
  return s;
}

inline nlohmann::ordered_json stat_report_json(const StatReport& s) {
  nlohmann::ordered_json j;
  j["n"] = s.n;
  j["pearson_r"] = s.pearson_r;
  j["pearson_ci"] = {s.pearson_ci.low, s.pearson_ci.high};
  j["spearman_rho"] = s.spearman_rho;
  j["linfit"] = {{"intercept", s.fit.intercept}, {"slope", s.fit.slope}, {"r_squared", s.fit.r_squared}};
  j["mean_latency"] = s.mean_latency;
  j["mean_latency_ci"] = {s.mean_latency_ci.low, s.mean_latency_ci.high};
  if (s.group_a) {
    nlohmann::ordered_json g;
    g["group_a"] = *s.group_a;
    g["group_b"] = *s.group_b;
    g["cohens_d"] = s.cohens_d ? nlohmann::ordered_json(*s.cohens_d) : nlohmann::ordered_json(nullptr);
    if (s.welch) g["welch"] = {{"t", s.welch->t}, {"df", s.welch->df}, {"p", s.welch->p_value}};
    g["permutation_p"] = s.permutation_p ? nlohmann::ordered_json(*s.permutation_p)
                                         : nlohmann::ordered_json(nullptr);
    j["latency_by_path"] = g;
  }
  j["p_value_method"] = s.p_value_method;
  return j;
}

}  // namespace symroute
