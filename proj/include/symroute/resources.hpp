#pragma once

// Resource state R(t) = [cpu, gpu, mem, power], EMA smoothing and the
// routing pressure signal max(cpu, gpu, mem). Power is carried through but
// never enters the pressure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "symroute/types.hpp"

namespace symroute {

struct ResourceState {
  double cpu = 0.0;
  double gpu = 0.0;
  double mem = 0.0;
  double power = 0.0;
  std::int64_t t_ms = 0;

  void validate() const {
    for (double v : {cpu, gpu, mem, power}) {
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("resource channel outside [0,1] at t=" + std::to_string(t_ms));
    }
  }
};

struct SmoothedState {
  double cpu = 0.0;
  double gpu = 0.0;
  double mem = 0.0;
  double power = 0.0;
  std::int64_t t_ms = 0;
  double alpha = 0.3;
};

inline double pressure(const SmoothedState& s) { return std::max({s.cpu, s.gpu, s.mem}); }

class EmaSmoother {
 public:
  explicit EmaSmoother(double alpha = 0.3) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("EMA alpha must be in (0,1]");
  }

  const SmoothedState& ingest(const ResourceState& s) {
    s.validate();
    if (primed_ && s.t_ms <= last_t_)
      throw ValidationError("non-monotonic resource timestamp " + std::to_string(s.t_ms));
    if (!primed_) {
      state_ = {s.cpu, s.gpu, s.mem, s.power, s.t_ms, alpha_};
    } else {
      auto mix = [this](double raw, double prev) { return alpha_ * raw + (1.0 - alpha_) * prev; };
      state_.cpu = mix(s.cpu, state_.cpu);
      state_.gpu = mix(s.gpu, state_.gpu);
      state_.mem = mix(s.mem, state_.mem);
      state_.power = mix(s.power, state_.power);
      state_.t_ms = s.t_ms;
    }
    last_t_ = s.t_ms;
    primed_ = true;
    return state_;
  }

  bool primed() const { return primed_; }
  const SmoothedState& state() const { return state_; }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
  SmoothedState state_{};
  std::int64_t last_t_ = 0;
  bool primed_ = false;
};

// ---------------------------------------------------------------------------
// metric sources
// ---------------------------------------------------------------------------

class MetricSource {
 public:
  virtual ~MetricSource() = default;
  /// Reading for time t_ms, or nullopt when the source failed.
  virtual std::optional<ResourceState> read(std::int64_t t_ms) = 0;
};

/// Replays a `t_ms,cpu,gpu,mem,power` CSV. read(t) holds the latest row at or
/// before t; before the first row it returns the first row.
class TraceReplaySource final : public MetricSource {
 public:
  explicit TraceReplaySource(std::vector<ResourceState> rows) : rows_(std::move(rows)) {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      rows_[i].validate();
      if (i > 0 && rows_[i].t_ms <= rows_[i - 1].t_ms)
        throw ValidationError("trace timestamps must strictly increase (row " +
                              std::to_string(i + 1) + ")");
    }
  }

  static TraceReplaySource parse(std::istream& in) {
    std::vector<ResourceState> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      if (lineno == 1 && line.rfind("t_ms", 0) == 0) continue;
      std::istringstream ss(line);
      std::string field;
      std::vector<double> vals;
      while (std::getline(ss, field, ',')) {
        try {
          std::size_t used = 0;
          vals.push_back(std::stod(field, &used));
        } catch (const std::exception&) {
          throw ValidationError("trace line " + std::to_string(lineno) + ": bad number '" +
                                field + "'");
        }
      }
      if (vals.size() != 5)
        throw ValidationError("trace line " + std::to_string(lineno) + ": expected 5 fields");
      rows.push_back({vals[1], vals[2], vals[3], vals[4], static_cast<std::int64_t>(vals[0])});
    }
    return TraceReplaySource(std::move(rows));
  }

  static TraceReplaySource load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path);
    return parse(in);
  }

  std::optional<ResourceState> read(std::int64_t t_ms) override {
    if (rows_.empty()) return std::nullopt;
    auto it = std::upper_bound(rows_.begin(), rows_.end(), t_ms,
                               [](std::int64_t t, const ResourceState& r) { return t < r.t_ms; });
    ResourceState s = (it == rows_.begin()) ? rows_.front() : *std::prev(it);
    s.t_ms = t_ms;
    return s;
  }

  const std::vector<ResourceState>& rows() const { return rows_; }

 private:
  std::vector<ResourceState> rows_;
};

/// Additive utilisation per channel.
struct ResourceLoad {
  double cpu = 0, gpu = 0, mem = 0, power = 0;
};

/// Constant background level plus time-windowed load injections, optionally
/// layered over another source (e.g. a replayed trace). Channels clamp to 1.
class LoadOverlaySource final : public MetricSource {
 public:
  using Load = ResourceLoad;

  explicit LoadOverlaySource(Load background = Load{}, MetricSource* base = nullptr)
      : background_(background), base_(base) {}

  void inject(const Load& delta, std::int64_t from_ms, std::int64_t to_ms) {
    windows_.push_back({delta, from_ms, to_ms});
  }

  /// Drops injections that ended before t_ms.
  void prune(std::int64_t t_ms) {
    std::erase_if(windows_, [t_ms](const Window& w) { return w.to_ms <= t_ms; });
  }

  std::optional<ResourceState> read(std::int64_t t_ms) override {
    ResourceState s{background_.cpu, background_.gpu, background_.mem, background_.power, t_ms};
    if (base_) {
      auto b = base_->read(t_ms);
      if (!b) return std::nullopt;
      s = *b;
      s.t_ms = t_ms;
    }
    for (const auto& w : windows_) {
      if (t_ms >= w.from_ms && t_ms < w.to_ms) {
        s.cpu += w.delta.cpu;
        s.gpu += w.delta.gpu;
        s.mem += w.delta.mem;
        s.power += w.delta.power;
      }
    }
    s.cpu = std::clamp(s.cpu, 0.0, 1.0);
    s.gpu = std::clamp(s.gpu, 0.0, 1.0);
    s.mem = std::clamp(s.mem, 0.0, 1.0);
    s.power = std::clamp(s.power, 0.0, 1.0);
    return s;
  }

 private:
  struct Window {
    Load delta;
    std::int64_t from_ms, to_ms;
  };
  Load background_;
  MetricSource* base_;
  std::vector<Window> windows_;
};

struct LiveCapacities {
  double cpu_cores = 0.0;                // 0 = use online core count
  std::uint64_t mem_bytes = 0;           // 0 = MemTotal
};

/// Host CPU and memory from /proc. GPU and power read 0.
class ProcMetricSource final : public MetricSource {
 public:
  explicit ProcMetricSource(LiveCapacities caps = {}) : caps_(caps) {
    online_cores_ = std::max(1u, std::thread::hardware_concurrency());
  }

  std::optional<ResourceState> read(std::int64_t t_ms) override {
    auto jiffies = read_cpu_jiffies();
    auto mem = read_mem_used_fraction();
    if (!jiffies || !mem) return std::nullopt;
    double cpu = 0.0;
    if (prev_) {
      const double busy = static_cast<double>(jiffies->busy - prev_->busy);
      const double total = static_cast<double>(jiffies->total - prev_->total);
      if (total > 0) {
        const double busy_cores = busy / total * online_cores_;
        const double cap = caps_.cpu_cores > 0 ? caps_.cpu_cores : online_cores_;
        cpu = std::clamp(busy_cores / cap, 0.0, 1.0);
      }
    }
    prev_ = jiffies;
    return ResourceState{cpu, 0.0, std::clamp(*mem, 0.0, 1.0), 0.0, t_ms};
  }

 private:
  struct Jiffies {
    unsigned long long busy = 0, total = 0;
  };

  static std::optional<Jiffies> read_cpu_jiffies() {
    std::ifstream in("/proc/stat");
    std::string label;
    if (!(in >> label) || label != "cpu") return std::nullopt;
    unsigned long long v[8] = {};
    for (auto& x : v)
      if (!(in >> x)) return std::nullopt;
    Jiffies j;
    for (auto x : v) j.total += x;
    j.busy = j.total - v[3] - v[4];  // idle + iowait
    return j;
  }

  std::optional<double> read_mem_used_fraction() const {
    std::ifstream in("/proc/meminfo");
    std::string key;
    unsigned long long value = 0, total = 0, avail = 0;
    std::string unit;
    while (in >> key >> value) {
      std::getline(in, unit);
      if (key == "MemTotal:") total = value * 1024ULL;
      if (key == "MemAvailable:") avail = value * 1024ULL;
    }
    if (total == 0) return std::nullopt;
    const double cap = caps_.mem_bytes > 0 ? static_cast<double>(caps_.mem_bytes)
                                           : static_cast<double>(total);
    return static_cast<double>(total - std::min(avail, total)) / cap;
  }

  LiveCapacities caps_;
  double online_cores_ = 1.0;
  std::optional<Jiffies> prev_;
};

// ---------------------------------------------------------------------------
// monitor: sampler loop + published snapshot
// ---------------------------------------------------------------------------

struct ResourceSnapshot {
  SmoothedState state{};
  bool stale = false;
  std::uint64_t sequence = 0;  // number of successful ingests
};

enum class SampleStatus { Ok, Stale, Aborted };

/// Single writer (the sampler), many readers. step() can be driven by a
/// simulated clock; start() runs it on a background thread at a fixed period.
class ResourceMonitor {
 public:
  explicit ResourceMonitor(MetricSource& source, double alpha = 0.3, int max_consecutive_failures = 5)
      : source_(source), smoother_(alpha), max_failures_(max_consecutive_failures) {
    snapshot_ = std::make_shared<const ResourceSnapshot>();
  }

  ~ResourceMonitor() { stop(); }
  ResourceMonitor(const ResourceMonitor&) = delete;
  ResourceMonitor& operator=(const ResourceMonitor&) = delete;

  SampleStatus step(std::int64_t t_ms) {
    std::lock_guard writer(write_mu_);
    if (aborted_) return SampleStatus::Aborted;
    auto raw = source_.read(t_ms);
    auto snap = std::make_shared<ResourceSnapshot>(*snapshot());
    if (!raw) {
      if (++failures_ >= max_failures_) aborted_ = true;
      snap->stale = true;
      publish(std::move(snap));
      return aborted_ ? SampleStatus::Aborted : SampleStatus::Stale;
    }
    if (smoother_.primed() && raw->t_ms <= smoother_.state().t_ms) return SampleStatus::Ok;
    failures_ = 0;
    snap->state = smoother_.ingest(*raw);
    snap->stale = false;
    ++snap->sequence;
    publish(std::move(snap));
    return SampleStatus::Ok;
  }

  std::shared_ptr<const ResourceSnapshot> snapshot() const {
    std::lock_guard lk(read_mu_);
    return snapshot_;
  }

  double current_pressure() const { return pressure(snapshot()->state); }
  bool aborted() const {
    std::lock_guard writer(write_mu_);
    return aborted_;
  }

  void start(std::chrono::milliseconds period = std::chrono::milliseconds(100)) {
    stop();
    worker_ = std::jthread([this, period](std::stop_token st) {
      const auto t0 = std::chrono::steady_clock::now();
      auto next = t0;
      std::mutex m;
      std::condition_variable_any cv;
      while (!st.stop_requested()) {
        const auto now = std::chrono::steady_clock::now();
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - t0).count();
        if (step(ms) == SampleStatus::Aborted) break;
        next += period;
        std::unique_lock lk(m);
        cv.wait_until(lk, st, next, [] { return false; });
      }
    });
  }

  void stop() {
    if (worker_.joinable()) {
      worker_.request_stop();
      worker_.join();
    }
  }

 private:
  void publish(std::shared_ptr<const ResourceSnapshot> s) {
    std::lock_guard lk(read_mu_);
    snapshot_ = std::move(s);
  }

  MetricSource& source_;
  EmaSmoother smoother_;
  int max_failures_;
  int failures_ = 0;
  bool aborted_ = false;
  mutable std::mutex write_mu_;
  mutable std::mutex read_mu_;
  std::shared_ptr<const ResourceSnapshot> snapshot_;
  std::jthread worker_;
};

}  // namespace symroute
