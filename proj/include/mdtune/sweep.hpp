#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdtune/balance.hpp"
#include "mdtune/launch.hpp"
#include "mdtune/log_parser.hpp"
#include "mdtune/workload.hpp"

namespace mdtune {

struct RunOutcome {
  bool ok = false;
  std::string log;    // engine log text when ok
  std::string error;  // reason when not ok
};

class Executor {
 public:
  virtual ~Executor() = default;
  // One engine run; failures are reported in the outcome, not thrown.
  virtual RunOutcome run(const LaunchConfig& cfg, const Workload& workload, const EngineProfile& engine,
                         std::uint32_t repeat) = 0;
  // Exclusive executors own the node: their runs must never overlap.
  virtual bool exclusive() const = 0;
  // Throws ExecutorUnavailable when runs cannot start at all.
  virtual void check_available(const EngineProfile& engine) const { (void)engine; }
  virtual std::string name() const = 0;
};

class SyntheticExecutor : public Executor {
 public:
  explicit SyntheticExecutor(SyntheticNodeProfile profile);
  RunOutcome run(const LaunchConfig& cfg, const Workload& workload, const EngineProfile& engine,
                 std::uint32_t repeat) override;
  bool exclusive() const override { return false; }
  std::string name() const override { return "synthetic"; }
  const SyntheticNodeProfile& profile() const { return profile_; }

 private:
  SyntheticNodeProfile profile_;
};

// Runs the rendered command through /bin/sh inside run_<hash>/ below
// `workdir` and reads the engine log written there.
class ShellExecutor : public Executor {
 public:
  explicit ShellExecutor(std::filesystem::path workdir);
  RunOutcome run(const LaunchConfig& cfg, const Workload& workload, const EngineProfile& engine,
                 std::uint32_t repeat) override;
  bool exclusive() const override { return true; }
  void check_available(const EngineProfile& engine) const override;
  std::string name() const override { return "shell"; }

  static std::string run_dir_name(const std::string& command, std::uint32_t repeat);

 private:
  std::filesystem::path workdir_;
};

struct SweepOptions {
  std::uint32_t repeats = 2;
  // Fraction of the steps excluded from timing; overrides workload.reset_steps.
  std::optional<double> reset_fraction;
  EngineProfile engine;
};

struct SweepRow {
  LaunchConfig config;
  std::string command;
  bool ok = false;
  double mean = 0.0;   // ns/day over successful repeats
  double stdev = 0.0;  // sample standard deviation, 0 for a single repeat
  std::uint32_t repeats_ok = 0;
  std::uint32_t repeats_failed = 0;
  std::vector<double> samples;
  std::optional<PerfMetrics> metrics;  // from the fastest repeat
  std::vector<Advisory> advisories;
  std::string error;

  bool operator==(const SweepRow&) const = default;
};

struct SweepFailure {
  std::size_t row = 0;
  std::uint32_t repeat = 0;
  std::string message;
  bool operator==(const SweepFailure&) const = default;
};

struct SweepResult {
  std::string executor;
  std::uint32_t repeats = 0;
  std::vector<SweepRow> rows;
  std::optional<std::size_t> best;
  std::vector<SweepFailure> failures;

  bool operator==(const SweepResult&) const = default;
};

EngineProfile engine_for(const Workload& workload, const SweepOptions& options);

SweepResult run_sweep(const std::vector<LaunchConfig>& configs, Executor& executor, const Workload& workload,
                      const SweepOptions& options = {});

// Index of the winning row: highest mean (to 12 significant digits), then
// fewer ranks, DLB off before auto before on, HT off, input order.
std::optional<std::size_t> best_index(const std::vector<SweepRow>& rows);
// Row indices in that order; failed rows last, in input order.
std::vector<std::size_t> rank_rows(const std::vector<SweepRow>& rows);
const LaunchConfig& select_best(const SweepResult& result);

}  // namespace mdtune
