// symroute: run workloads, ablations, rule validation, statistics and trace
// replay from the command line.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "symroute/symroute.hpp"

namespace fs = std::filesystem;
using namespace symroute;

namespace {

struct CommonOptions {
  std::string workload;
  std::size_t builtin_queries = 1000;
  std::string rules;
  std::string resource = "synthetic";
  std::string mode = "adaptive";
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  bool overwrite = false;
  std::optional<double> low_kappa, high_kappa, low_pressure, high_pressure;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_mode) {
  cmd->add_option("--workload", o.workload, "Workload file (JSON lines); omit for the built-in workload");
  cmd->add_option("--queries", o.builtin_queries, "Size of the built-in workload")->capture_default_str();
  cmd->add_option("--rules", o.rules, "Rule file (JSON lines)");
  cmd->add_option("--resource", o.resource, "synthetic | live | trace:PATH")->capture_default_str();
  if (with_mode)
    cmd->add_option("--mode", o.mode, "adaptive | forced-hybrid | forced-neural | forced-symbolic | utility")
        ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed (required for simulated resources)");
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->add_flag("--overwrite", o.overwrite, "Allow writing into a non-empty output directory");
  cmd->add_option("--low-kappa", o.low_kappa);
  cmd->add_option("--high-kappa", o.high_kappa);
  cmd->add_option("--low-pressure", o.low_pressure);
  cmd->add_option("--high-pressure", o.high_pressure);
  cmd->add_option("--workers", o.workers, "Worker threads (live resources only)");
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << content;
}


void require_file(const std::string& path, const char* what) {
  if (!path.empty() && !fs::is_regular_file(path))
    throw IoError(std::string(what) + " not found: " + path);
}

/// Refuses a non-empty output directory unless overwrite is set. Call after
/// all inputs validated so failures leave nothing behind.
void prepare_out(const std::string& dir, bool overwrite) {
  if (fs::exists(dir) && !fs::is_directory(dir)) throw IoError("output path is not a directory: " + dir);
  if (fs::exists(dir) && !fs::is_empty(dir) && !overwrite)
    throw ValidationError("output directory not empty (use --overwrite): " + dir);
  fs::create_directories(dir);
}

struct Inputs {
  EngineConfig config;
  std::vector<WorkloadItem> items;
  std::optional<RuleRegistry> rules;
  std::unique_ptr<TraceReplaySource> trace;
  bool live = false;
};

Inputs load_inputs(const CommonOptions& o, const std::string& mode) {
  require_file(o.workload, "workload file");
  require_file(o.rules, "rule file");
  require_file(o.config, "config file");
  Inputs in;
  in.config = o.config.empty() ? EngineConfig{} : load_engine_config(o.config);
  auto& th = in.config.setup.thresholds;
  if (o.low_kappa) th.low_kappa = *o.low_kappa;
  if (o.high_kappa) th.high_kappa = *o.high_kappa;
  if (o.low_pressure) th.low_pressure = *o.low_pressure;
  if (o.high_pressure) th.high_pressure = *o.high_pressure;
  th.validate();
  auto m = parse_mode(mode);
  if (!m) throw ConfigError("unknown mode '" + mode + "'");
  in.config.setup.control.mode = *m;
  if (o.workers) in.config.setup.control.workers = *o.workers;

  if (o.resource == "live") {
    in.live = true;
  } else if (o.resource.rfind("trace:", 0) == 0) {
    const auto path = o.resource.substr(6);
    require_file(path, "trace file");
    in.trace = std::make_unique<TraceReplaySource>(TraceReplaySource::load(path));
  } else if (o.resource != "synthetic") {
    throw ConfigError("unknown resource source '" + o.resource + "'");
  }
  if (!in.live && !o.seed) throw ConfigError("--seed is required for simulated runs");

  if (!o.rules.empty()) {
    std::ifstream rf(o.rules);
    auto rep = load_rules(rf, in.config.min_support);
    for (const auto& d : rep.rejected)
      std::cerr << "warning: rule rejected (line " << d.line << ", id '" << d.id << "'): " << d.message
                << "\n";
    in.rules = std::move(rep.registry);
  }
  in.items = o.workload.empty() ? generate_workload(o.builtin_queries, o.seed.value_or(0))
                                : load_workload(o.workload);
  in.config.setup = resolve_setup(in.config, in.items);
  return in;
}

WorkloadReport execute(Inputs& in, std::uint64_t seed) {
  const RuleRegistry* rules = in.rules ? &*in.rules : nullptr;
  const auto& s = in.config.setup;
  if (in.live) {
    LiveEnvironment env({}, s.resource_alpha, std::chrono::milliseconds(s.resource_period_ms));
    return run_workload(in.items, s, rules, seed, &env);
  }
  if (in.trace) {
    SimulatedEnvironment env(s.model.contention.background, s.resource_alpha, s.resource_period_ms,
                             in.trace.get());
    return run_workload(in.items, s, rules, seed, &env);
  }
  return run_workload(in.items, s, rules, seed);
}

void write_run_outputs(const fs::path& dir, const WorkloadReport& rep, const EngineConfig& cfg) {
  write_file(dir / "report.json", report_json(rep, &cfg).dump(2) + "\n");
  write_file(dir / "records.csv", records_csv(rep.records));
  write_file(dir / "decisions.jsonl", decisions_jsonl(rep.records));
  write_file(dir / "thresholds.csv", thresholds_csv(cfg.setup.thresholds, rep.trajectory));
  write_file(dir / "fusion.jsonl", fusion_jsonl(rep.records));
}

int cmd_run(const CommonOptions& o) {
  auto in = load_inputs(o, o.mode);
  prepare_out(o.out, o.overwrite);
  const auto rep = execute(in, o.seed.value_or(0));
  write_run_outputs(o.out, rep, in.config);
  std::cout << "queries " << rep.total << "  mean latency " << rep.latency.mean << " s  EM "
            << rep.em_rate << "  symbolic/neural/hybrid " << rep.share(Path::Symbolic) << "/"
            << rep.share(Path::Neural) << "/" << rep.share(Path::Hybrid) << "\n";
  return 0;
}

int cmd_ablate(const CommonOptions& o) {
  auto adaptive_in = load_inputs(o, "adaptive");
  auto forced_in = load_inputs(o, "forced-hybrid");
  prepare_out(o.out, o.overwrite);
  const auto seed = o.seed.value_or(0);
  const auto a = execute(adaptive_in, seed);
  const auto f = execute(forced_in, seed);

  std::vector<double> la, lf;
  for (const auto& r : a.records) la.push_back(r.latency);
  for (const auto& r : f.records) lf.push_back(r.latency);
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["queries"] = a.total;
  j["adaptive"] = {{"mean_latency", a.latency.mean}, {"em_rate", a.em_rate}};
  j["forced_hybrid"] = {{"mean_latency", f.latency.mean}, {"em_rate", f.em_rate}};
  const double dlat = a.latency.mean > 0 ? 100.0 * (f.latency.mean - a.latency.mean) / a.latency.mean : 0.0;
  j["delta_latency_pct"] = dlat;
  j["delta_em_pp"] = 100.0 * (f.em_rate - a.em_rate);
  std::optional<double> d;
  if (la.size() >= 2 && lf.size() >= 2) d = stats::cohens_d(lf, la);
  j["cohens_d_latency"] = d ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr);

  fs::create_directories(fs::path(o.out) / "adaptive");
  fs::create_directories(fs::path(o.out) / "forced-hybrid");
  write_run_outputs(fs::path(o.out) / "adaptive", a, adaptive_in.config);
  write_run_outputs(fs::path(o.out) / "forced-hybrid", f, forced_in.config);
  write_file(fs::path(o.out) / "ablation.json", j.dump(2) + "\n");

  std::cout << "configuration   mean_latency_s  em_rate\n"
            << "adaptive        " << a.latency.mean << "  " << a.em_rate << "\n"
            << "forced-hybrid   " << f.latency.mean << "  " << f.em_rate << "\n"
            << "delta latency " << dlat << " %  delta EM " << 100.0 * (f.em_rate - a.em_rate)
            << " pp  cohen's d " << (d ? std::to_string(*d) : "n/a") << "\n";
  return 0;
}

int cmd_validate_rules(const std::string& rules_path, const std::string& corpus_path,
                       const std::string& out_path, std::uint64_t min_support, bool overwrite) {
  require_file(rules_path, "rule file");
  require_file(corpus_path, "corpus file");
  if (fs::exists(out_path) && !overwrite)
    throw ValidationError("output file exists (use --overwrite): " + out_path);
  std::ifstream rf(rules_path);
  auto parsed = parse_rule_records(rf);
  for (const auto& d : parsed.rejected)
    std::cerr << "warning: rule rejected (line " << d.line << "): " << d.message << "\n";
  std::vector<std::string> corpus;
  {
    std::ifstream cf(corpus_path);
    std::string line;
    while (std::getline(cf, line)) {
      // Workload files are accepted as corpora: use their text field.
      if (!line.empty() && line.front() == '{') {
        try {
          corpus.push_back(nlohmann::json::parse(line).at("text").get<std::string>());
          continue;
        } catch (const nlohmann::json::exception&) {
        }
      }
      corpus.push_back(line);
    }
  }
  auto v = validate_supports(std::move(parsed.rules), corpus, min_support);
  std::string out;
  for (const auto& r : v.kept) out += to_json(r).dump() + "\n";
  write_file(out_path, out);
  std::cout << "kept " << v.kept.size() << " dropped " << v.dropped.size() << "\n";
  return 0;
}

int cmd_stats(const std::string& records, const std::string& out, bool overwrite, std::uint64_t seed,
              std::size_t iterations) {
  require_file(records, "records file");
  std::ifstream in(records);
  const auto rows = read_csv(in);
  const auto rep = analyze_records(rows, seed, iterations);
  prepare_out(out, overwrite);
  write_file(fs::path(out) / "stats.json", stat_report_json(rep).dump(2) + "\n");
  std::cout << "n " << rep.n << "  pearson r " << rep.pearson_r << "  spearman " << rep.spearman_rho
            << "  R^2 " << rep.fit.r_squared << "\n";
  return 0;
}

int cmd_replay(const std::string& trace_path, double alpha, const std::string& out, bool overwrite) {
  require_file(trace_path, "trace file");
  auto trace = TraceReplaySource::load(trace_path);
  EmaSmoother ema(alpha);
  std::string csv = "t_ms,cpu,gpu,mem,power,pressure\n";
  for (const auto& row : trace.rows()) {
    const auto& s = ema.ingest(row);
    csv += std::to_string(s.t_ms) + ',' + fmt_double(s.cpu) + ',' + fmt_double(s.gpu) + ',' +
           fmt_double(s.mem) + ',' + fmt_double(s.power) + ',' + fmt_double(pressure(s)) + '\n';
  }
  prepare_out(out, overwrite);
  write_file(fs::path(out) / "smoothed.csv", csv);
  std::cout << "replayed " << trace.rows().size() << " samples\n";
  return 0;
}

int cmd_profile(const std::string& workload, std::size_t builtin, std::uint64_t seed,
                const std::string& rules_path, const std::string& out, bool overwrite) {
  require_file(workload, "workload file");
  require_file(rules_path, "rule file");
  auto items = workload.empty() ? generate_workload(builtin, seed) : load_workload(workload);
  std::optional<RuleRegistry> reg;
  if (!rules_path.empty()) {
    std::ifstream rf(rules_path);
    reg = load_rules(rf).registry;
  }
  const auto setup = resolve_setup(EngineConfig{}, items);
  LexicalSalience sal;
  std::vector<std::pair<std::string, ComplexityBreakdown>> rows;
  for (const auto& it : items) {
    auto b = compute_kappa(it.query, sal, setup.complexity);
    std::optional<PathHint> hint;
    if (reg) hint = suggest_path(match_rules(it.query.text, *reg).matches);
    rows.emplace_back(it.query.id, effective_complexity(b, hint, setup.control.hint_delta));
  }
  prepare_out(out, overwrite);
  write_file(fs::path(out) / "complexity.csv", complexity_profile_csv(rows));
  std::cout << "profiled " << rows.size() << " queries (max_corpus_len "
            << setup.complexity.max_corpus_len << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource-aware adaptive query router"};
  app.require_subcommand(1);

  CommonOptions run_opts, ablate_opts;
  auto* run = app.add_subcommand("run", "Run a workload and write report, records and logs");
  add_common(run, run_opts, true);
  auto* ablate = app.add_subcommand("ablate", "Compare adaptive routing against forced hybrid");
  add_common(ablate, ablate_opts, false);

  std::string vr_rules, vr_corpus, vr_out;
  std::uint64_t vr_min_support = 5;
  bool vr_overwrite = false;
  auto* vr = app.add_subcommand("validate-rules", "Recount rule supports over a corpus and filter");
  vr->add_option("--rules", vr_rules)->required();
  vr->add_option("--corpus", vr_corpus, "Text lines or a workload file")->required();
  vr->add_option("--out", vr_out, "Filtered rule file")->required();
  vr->add_option("--min-support", vr_min_support)->capture_default_str();
  vr->add_flag("--overwrite", vr_overwrite);

  std::string st_records, st_out;
  std::uint64_t st_seed = 0;
  std::size_t st_iter = 1000;
  bool st_overwrite = false;
  auto* st = app.add_subcommand("stats", "Statistics over a records.csv");
  st->add_option("--records", st_records)->required();
  st->add_option("--out", st_out)->required();
  st->add_option("--seed", st_seed)->capture_default_str();
  st->add_option("--iterations", st_iter, "Bootstrap / permutation iterations")->capture_default_str();
  st->add_flag("--overwrite", st_overwrite);

  std::string rp_trace, rp_out;
  double rp_alpha = 0.3;
  bool rp_overwrite = false;
  auto* rp = app.add_subcommand("replay", "Smooth a resource trace and emit pressure");
  rp->add_option("--trace", rp_trace)->required();
  rp->add_option("--alpha", rp_alpha)->capture_default_str();
  rp->add_option("--out", rp_out)->required();
  rp->add_flag("--overwrite", rp_overwrite);

  std::string pf_workload, pf_rules, pf_out;
  std::size_t pf_queries = 1000;
  std::uint64_t pf_seed = 0;
  bool pf_overwrite = false;
  auto* pf = app.add_subcommand("profile", "Complexity pre-pass: per-query complexity CSV");
  pf->add_option("--workload", pf_workload);
  pf->add_option("--queries", pf_queries)->capture_default_str();
  pf->add_option("--seed", pf_seed)->capture_default_str();
  pf->add_option("--rules", pf_rules);
  pf->add_option("--out", pf_out)->required();
  pf->add_flag("--overwrite", pf_overwrite);

  std::size_t gw_queries = 1000;
  std::uint64_t gw_seed = 0;
  std::string gw_out;
  auto* gw = app.add_subcommand("gen-workload", "Write the built-in workload as JSON lines");
  gw->add_option("--queries", gw_queries)->capture_default_str();
  gw->add_option("--seed", gw_seed)->capture_default_str();
  gw->add_option("--out", gw_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts);
    if (*ablate) return cmd_ablate(ablate_opts);
    if (*vr) return cmd_validate_rules(vr_rules, vr_corpus, vr_out, vr_min_support, vr_overwrite);
    if (*st) return cmd_stats(st_records, st_out, st_overwrite, st_seed, st_iter);
    if (*rp) return cmd_replay(rp_trace, rp_alpha, rp_out, rp_overwrite);
    if (*pf) return cmd_profile(pf_workload, pf_queries, pf_seed, pf_rules, pf_out, pf_overwrite);
    if (*gw) {
      write_file(gw_out, workload_to_jsonl(generate_workload(gw_queries, gw_seed)));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
