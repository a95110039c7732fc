#pragma once

// Run configuration as JSON. Every key is optional; omitted keys keep the
// defaults of the corresponding structs. Sections:
//   control, thresholds, complexity, utility, fusion, resources, rules, model

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "symroute/executors.hpp"

namespace symroute {

struct EngineConfig {
  RunSetup setup{};
  std::optional<std::size_t> max_corpus_len;  // nullopt: corpus pre-pass
  std::uint64_t min_support = 5;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

inline void read_load(const nlohmann::json& j, const char* key, Load& l) {
  if (!j.contains(key)) return;
  const auto& o = j[key];
  reject_unknown(o, {"cpu", "gpu", "mem", "power"}, key);
  read(o, "cpu", l.cpu);
  read(o, "gpu", l.gpu);
  read(o, "mem", l.mem);
  read(o, "power", l.power);
}

inline void read_path_model(const nlohmann::json& j, const char* key, PathModel& m) {
  if (!j.contains(key)) return;
  const auto& o = j[key];
  reject_unknown(o, {"base_latency", "kappa_slope", "noise_sigma", "accuracy", "failure_rate",
                     "type_error_rate", "cost"},
                 key);
  read(o, "base_latency", m.base_latency);
  read(o, "kappa_slope", m.kappa_slope);
  read(o, "noise_sigma", m.noise_sigma);
  read(o, "accuracy", m.accuracy);
  read(o, "failure_rate", m.failure_rate);
  read(o, "type_error_rate", m.type_error_rate);
  read_load(o, "cost", m.cost);
}

inline nlohmann::ordered_json load_json(const Load& l) {
  return {{"cpu", l.cpu}, {"gpu", l.gpu}, {"mem", l.mem}, {"power", l.power}};
}

inline nlohmann::ordered_json path_model_json(const PathModel& m) {
  return {{"base_latency", m.base_latency}, {"kappa_slope", m.kappa_slope},
          {"noise_sigma", m.noise_sigma},   {"accuracy", m.accuracy},
          {"failure_rate", m.failure_rate}, {"type_error_rate", m.type_error_rate},
          {"cost", load_json(m.cost)}};
}

}  // namespace detail

/// Parses and validates. Utility weights must sum to 1 within 1e-9.
inline EngineConfig engine_config_from_json(const nlohmann::json& j) {
  using detail::read;
  EngineConfig cfg;
  auto& s = cfg.setup;
  detail::reject_unknown(j, {"control", "thresholds", "complexity", "utility", "fusion",
                             "resources", "rules", "model"},
                         "config");
  if (j.contains("control")) {
    const auto& o = j["control"];
    detail::reject_unknown(o, {"retry_limit", "max_query_time", "optimize_every", "stats_decay",
                               "hint_delta", "mode", "workers"},
                           "control");
    read(o, "retry_limit", s.control.retry_limit);
    read(o, "max_query_time", s.control.max_query_time);
    read(o, "optimize_every", s.control.optimize_every);
    read(o, "stats_decay", s.control.stats_decay);
    read(o, "hint_delta", s.control.hint_delta);
    read(o, "workers", s.control.workers);
    if (o.contains("mode")) {
      auto m = parse_mode(o["mode"].get<std::string>());
      if (!m) throw ConfigError("unknown mode '" + o["mode"].get<std::string>() + "'");
      s.control.mode = *m;
    }
  }
  if (j.contains("thresholds")) {
    const auto& o = j["thresholds"];
    detail::reject_unknown(o, {"low_kappa", "high_kappa", "low_pressure", "high_pressure"},
                           "thresholds");
    read(o, "low_kappa", s.thresholds.low_kappa);
    read(o, "high_kappa", s.thresholds.high_kappa);
    read(o, "low_pressure", s.thresholds.low_pressure);
    read(o, "high_pressure", s.thresholds.high_pressure);
  }
  if (j.contains("complexity")) {
    const auto& o = j["complexity"];
    detail::reject_unknown(o, {"w_attention", "w_length", "w_entity", "w_hop", "max_corpus_len"},
                           "complexity");
    read(o, "w_attention", s.complexity.w_attention);
    read(o, "w_length", s.complexity.w_length);
    read(o, "w_entity", s.complexity.w_entity);
    read(o, "w_hop", s.complexity.w_hop);
    if (o.contains("max_corpus_len") && !o["max_corpus_len"].is_null())
      cfg.max_corpus_len = o["max_corpus_len"].get<std::size_t>();
  }
  if (j.contains("utility")) {
    const auto& o = j["utility"];
    detail::reject_unknown(o, {"w_acc", "w_lat", "w_cost", "tau_max", "c_max"}, "utility");
    read(o, "w_acc", s.utility.accuracy);
    read(o, "w_lat", s.utility.latency);
    read(o, "w_cost", s.utility.cost);
    read(o, "tau_max", s.utility.tau_max);
    read(o, "c_max", s.utility.c_max);
  }
  if (j.contains("fusion")) {
    const auto& o = j["fusion"];
    detail::reject_unknown(o, {"beta_agree", "beta_conflict", "beta_mismatch", "min_confidence",
                               "numeric_tolerance"},
                           "fusion");
    read(o, "beta_agree", s.fusion.beta_agree);
    read(o, "beta_conflict", s.fusion.beta_conflict);
    read(o, "beta_mismatch", s.fusion.beta_mismatch);
    read(o, "min_confidence", s.fusion.min_confidence);
    read(o, "numeric_tolerance", s.fusion.numeric_tolerance);
  }
  if (j.contains("resources")) {
    const auto& o = j["resources"];
    detail::reject_unknown(o, {"alpha", "period_ms"}, "resources");
    read(o, "alpha", s.resource_alpha);
    read(o, "period_ms", s.resource_period_ms);
  }
  if (j.contains("rules")) {
    const auto& o = j["rules"];
    detail::reject_unknown(o, {"min_support"}, "rules");
    read(o, "min_support", cfg.min_support);
  }
  if (j.contains("model")) {
    const auto& o = j["model"];
    detail::reject_unknown(o, {"seed", "symbolic", "neural", "hybrid_cost", "fusion_overhead",
                               "idle_gap", "contention"},
                           "model");
    read(o, "seed", s.model.seed);
    detail::read_path_model(o, "symbolic", s.model.symbolic);
    detail::read_path_model(o, "neural", s.model.neural);
    detail::read_load(o, "hybrid_cost", s.model.hybrid_cost);
    read(o, "fusion_overhead", s.model.fusion_overhead);
    read(o, "idle_gap", s.model.idle_gap);
    if (o.contains("contention")) {
      const auto& c = o["contention"];
      detail::reject_unknown(c, {"background", "knee", "gain"}, "contention");
      detail::read_load(c, "background", s.model.contention.background);
      read(c, "knee", s.model.contention.knee);
      read(c, "gain", s.model.contention.gain);
    }
  }
  s.control.validate();
  s.thresholds.validate();
  s.complexity.validate();
  s.utility.validate();
  s.fusion.validate();
  s.model.validate();
  if (!(s.resource_alpha > 0.0 && s.resource_alpha <= 1.0))
    throw ConfigError("resources.alpha must be in (0,1]");
  if (s.resource_period_ms <= 0) throw ConfigError("resources.period_ms must be positive");
  return cfg;
}

inline EngineConfig load_engine_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  try {
    return engine_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
}

inline nlohmann::ordered_json to_json(const EngineConfig& cfg) {
  const auto& s = cfg.setup;
  nlohmann::ordered_json j;
  j["control"] = {{"retry_limit", s.control.retry_limit},
                  {"max_query_time", s.control.max_query_time},
                  {"optimize_every", s.control.optimize_every},
                  {"stats_decay", s.control.stats_decay},
                  {"hint_delta", s.control.hint_delta},
                  {"mode", to_string(s.control.mode)},
                  {"workers", s.control.workers}};
  j["thresholds"] = {{"low_kappa", s.thresholds.low_kappa},
                     {"high_kappa", s.thresholds.high_kappa},
                     {"low_pressure", s.thresholds.low_pressure},
                     {"high_pressure", s.thresholds.high_pressure}};
  j["complexity"] = {{"w_attention", s.complexity.w_attention},
                     {"w_length", s.complexity.w_length},
                     {"w_entity", s.complexity.w_entity},
                     {"w_hop", s.complexity.w_hop},
                     {"max_corpus_len", s.complexity.max_corpus_len}};
  j["utility"] = {{"w_acc", s.utility.accuracy}, {"w_lat", s.utility.latency},
                  {"w_cost", s.utility.cost},    {"tau_max", s.utility.tau_max},
                  {"c_max", s.utility.c_max}};
  j["fusion"] = {{"beta_agree", s.fusion.beta_agree},
                 {"beta_conflict", s.fusion.beta_conflict},
                 {"beta_mismatch", s.fusion.beta_mismatch},
                 {"min_confidence", s.fusion.min_confidence},
                 {"numeric_tolerance", s.fusion.numeric_tolerance}};
  j["resources"] = {{"alpha", s.resource_alpha}, {"period_ms", s.resource_period_ms}};
  j["rules"] = {{"min_support", cfg.min_support}};
  j["model"] = {{"seed", s.model.seed},
                {"symbolic", detail::path_model_json(s.model.symbolic)},
                {"neural", detail::path_model_json(s.model.neural)},
                {"hybrid_cost", detail::load_json(s.model.hybrid_cost)},
                {"fusion_overhead", s.model.fusion_overhead},
                {"idle_gap", s.model.idle_gap},
                {"contention",
                 {{"background", detail::load_json(s.model.contention.background)},
                  {"knee", s.model.contention.knee},
                  {"gain", s.model.contention.gain}}}};
  return j;
}

/// Applies the corpus pre-pass: max_corpus_len is frozen from the workload
/// unless the config pins it.
inline RunSetup resolve_setup(const EngineConfig& cfg, std::span<const WorkloadItem> items) {
  RunSetup s = cfg.setup;
  if (cfg.max_corpus_len) {
    s.complexity.max_corpus_len = *cfg.max_corpus_len;
  } else {
    std::size_t m = 0;
    for (const auto& it : items) m = std::max(m, it.query.tokens.size());
    if (m > 0) s.complexity.max_corpus_len = m;
  }
  s.complexity.validate();
  return s;
}

}  // namespace symroute
