#include "mdtune/sweep.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "mdtune/error.hpp"

namespace mdtune {

namespace fs = std::filesystem;

SyntheticExecutor::SyntheticExecutor(SyntheticNodeProfile profile) : profile_(std::move(profile)) {
  profile_.validate();
}

RunOutcome SyntheticExecutor::run(const LaunchConfig& cfg, const Workload& workload, const EngineProfile&,
                                  std::uint32_t) {
  try {
    const auto r = simulate(profile_, cfg, workload);
    return {true, synthetic_log(r, workload), ""};
  } catch (const Error& e) {
    return {false, "", e.what()};
  }
}

ShellExecutor::ShellExecutor(fs::path workdir) : workdir_(std::move(workdir)) {}

namespace {

std::string binary_of(const EngineProfile& engine) {
  return engine.flavor == MpiFlavor::external_mpi ? engine.mpirun : engine.mdrun;
}

bool on_path(const std::string& bin) {
  if (bin.find('/') != std::string::npos) return ::access(bin.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) dir = ".";
    const auto candidate = fs::path(dir) / bin;
    if (::access(candidate.c_str(), X_OK) == 0) return true;
  }
  return false;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

void ShellExecutor::check_available(const EngineProfile& engine) const {
  const auto bin = binary_of(engine);
  if (!on_path(bin)) throw ExecutorUnavailable("engine binary '" + bin + "' not found on PATH");
  std::error_code ec;
  fs::create_directories(workdir_, ec);
  if (ec) throw ExecutorUnavailable("cannot create work directory '" + workdir_.string() + "': " + ec.message());
}

std::string ShellExecutor::run_dir_name(const std::string& command, std::uint32_t repeat) {
  // FNV-1a over the command and repeat number.
  std::uint64_t h = 1469598103934665603ULL;
  const std::string key = command + "#" + std::to_string(repeat);
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("run_") + buf;
}

RunOutcome ShellExecutor::run(const LaunchConfig& cfg, const Workload&, const EngineProfile& engine,
                              std::uint32_t repeat) {
  EngineProfile e = engine;
  std::error_code ec;
  if (fs::path(e.tpr).is_relative() && fs::exists(e.tpr, ec)) e.tpr = fs::absolute(e.tpr).string();
  const auto command = render_command(cfg, e);
  const auto dir = workdir_ / run_dir_name(command, repeat);
  fs::create_directories(dir, ec);
  if (ec) return {false, "", "cannot create run directory '" + dir.string() + "': " + ec.message()};
  fs::remove(dir / e.log_file, ec);

  const std::string line = "cd " + shell_quote(dir.string()) + " && " + command + " > mdrun.out 2>&1";
  const int status = std::system(line.c_str());
  if (status == -1) return {false, "", "could not start the shell"};
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {false, "", "engine exited with status " + std::to_string(code) + " in " + dir.string()};
  }
  const auto log = dir / e.log_file;
  if (!fs::exists(log, ec)) return {false, "", "engine wrote no " + e.log_file + " in " + dir.string()};
  return {true, read_file(log), ""};
}

EngineProfile engine_for(const Workload& workload, const SweepOptions& options) {
  EngineProfile e = options.engine;
  if (!workload.tpr.empty()) e.tpr = workload.tpr;
  e.nsteps = workload.steps;
  if (options.reset_fraction) {
    const double f = *options.reset_fraction;
    if (!(f >= 0.0 && f < 1.0)) throw InvalidArgument("reset_fraction must be in [0,1)");
    e.resetstep = static_cast<std::uint64_t>(std::llround(static_cast<double>(workload.steps) * f));
  } else {
    e.resetstep = workload.reset_steps;
  }
  return e;
}

namespace {

struct RowWork {
  SweepRow row;
  std::vector<SweepFailure> failures;
};

void finish_stats(SweepRow& row) {
  const auto n = row.samples.size();
  row.repeats_ok = static_cast<std::uint32_t>(n);
  row.ok = n > 0;
  if (n == 0) return;
  // Welford's update keeps identical samples exactly equal to their mean.
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double s : row.samples) {
    ++k;
    const double d = s - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (s - mean);
  }
  row.mean = mean;
  row.stdev = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
}

RowWork run_row(std::size_t index, const LaunchConfig& cfg, Executor& ex, const Workload& w,
                const EngineProfile& engine, std::uint32_t repeats) {
  RowWork out;
  out.row.config = cfg;
  out.row.command = render_command(cfg, engine);
  double best_perf = -1.0;
  for (std::uint32_t r = 0; r < repeats; ++r) {
    std::string failure;
    try {
      auto outcome = ex.run(cfg, w, engine, r);
      if (!outcome.ok) {
        failure = outcome.error.empty() ? "run failed" : outcome.error;
      } else {
        auto m = parse_log(outcome.log);
        if (!m.performance) {
          failure = "log has no Performance line";
        } else {
          out.row.samples.push_back(*m.performance);
          if (*m.performance > best_perf) {
            best_perf = *m.performance;
            out.row.metrics = std::move(m);
          }
        }
      }
    } catch (const std::exception& e) {
      failure = e.what();
    }
    if (!failure.empty()) {
      ++out.row.repeats_failed;
      out.row.error = failure;
      out.failures.push_back({index, r, failure});
    }
  }
  finish_stats(out.row);
  if (out.row.metrics) out.row.advisories = out.row.metrics->notes;
  if (out.row.ok) out.row.error.clear();
  return out;
}

double key12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return std::strtod(buf, nullptr);
}

int dlb_rank(Dlb d) {
  switch (d) {
    case Dlb::off: return 0;
    case Dlb::auto_: return 1;
    case Dlb::on: return 2;
  }
  return 1;
}

}  // namespace

SweepResult run_sweep(const std::vector<LaunchConfig>& configs, Executor& executor, const Workload& workload,
                      const SweepOptions& options) {
  if (options.repeats < 1) throw InvalidArgument("repeats must be >= 1");
  const auto engine = engine_for(workload, options);
  executor.check_available(engine);

  std::vector<RowWork> work(configs.size());
  if (executor.exclusive() || configs.size() < 2) {
    for (std::size_t i = 0; i < configs.size(); ++i)
      work[i] = run_row(i, configs[i], executor, workload, engine, options.repeats);
  } else {
    // Independent rows fan out over a small worker pool; results land by index.
    const std::size_t workers =
        std::min<std::size_t>(configs.size(), std::max(1U, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++)
          work[i] = run_row(i, configs[i], executor, workload, engine, options.repeats);
      }));
    }
    for (auto& f : pool) f.get();
  }

  SweepResult res;
  res.executor = executor.name();
  res.repeats = options.repeats;
  for (auto& w : work) {
    res.rows.push_back(std::move(w.row));
    for (auto& f : w.failures) res.failures.push_back(std::move(f));
  }
  res.best = best_index(res.rows);
  return res;
}

namespace {

// True when row a ranks ahead of row b; both must be ok.
bool ahead(const SweepRow& a, const SweepRow& b) {
  const double ka = key12(a.mean), kb = key12(b.mean);
  if (ka != kb) return ka > kb;
  if (a.config.n_rank != b.config.n_rank) return a.config.n_rank < b.config.n_rank;
  if (dlb_rank(a.config.dlb) != dlb_rank(b.config.dlb)) return dlb_rank(a.config.dlb) < dlb_rank(b.config.dlb);
  return !a.config.use_ht && b.config.use_ht;
}

}  // namespace

std::optional<std::size_t> best_index(const std::vector<SweepRow>& rows) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].ok && (!best || ahead(rows[i], rows[*best]))) best = i;
  return best;
}

std::vector<std::size_t> rank_rows(const std::vector<SweepRow>& rows) {
  std::vector<std::size_t> ok, failed;
  for (std::size_t i = 0; i < rows.size(); ++i) (rows[i].ok ? ok : failed).push_back(i);
  std::stable_sort(ok.begin(), ok.end(), [&](std::size_t a, std::size_t b) { return ahead(rows[a], rows[b]); });
  ok.insert(ok.end(), failed.begin(), failed.end());
  return ok;
}

const LaunchConfig& select_best(const SweepResult& result) {
  const auto i = best_index(result.rows);
  if (!i) throw InvalidArgument("no successful rows to select from");
  return result.rows[*i].config;
}

}  // namespace mdtune
