#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mdtune {

struct Grid3 {
  std::uint32_t nx = 0, ny = 0, nz = 0;
  std::uint64_t points() const { return static_cast<std::uint64_t>(nx) * ny * nz; }
  bool operator==(const Grid3&) const = default;
};

struct PmeLoad {
  double load = 0.0;
  std::optional<double> wait_pct;  // time lost to PP/PME imbalance
  bool operator==(const PmeLoad&) const = default;
};

struct GpuCpuRatio {
  double gpu_ms = 0.0;
  double cpu_ms = 0.0;
  double ratio = 0.0;  // as printed
  bool operator==(const GpuCpuRatio&) const = default;
};

struct LoadBalanceRow {
  double rcoulomb = 0.0;
  double rlist = 0.0;
  Grid3 grid;
  double spacing = 0.0;
  double inv_beta = 0.0;
  bool operator==(const LoadBalanceRow&) const = default;
};

struct ParsedLoadBalance {
  LoadBalanceRow initial;
  LoadBalanceRow final;
  double cost_ratio_pp = 0.0;
  double cost_ratio_pme = 0.0;

  bool shrunk() const { return final.rcoulomb < initial.rcoulomb; }
  bool operator==(const ParsedLoadBalance&) const = default;
};

enum class AdvisoryKind { pme_overprovisioned, gpu_underutilized, other };

std::string_view to_string(AdvisoryKind k);
AdvisoryKind parse_advisory_kind(std::string_view text);

struct Advisory {
  AdvisoryKind kind = AdvisoryKind::other;
  std::string text;  // the NOTE block verbatim, lines joined by '\n'
  bool operator==(const Advisory&) const = default;
};

struct PerfMetrics {
  std::optional<double> performance;  // ns/day
  std::optional<PmeLoad> pme;
  std::optional<GpuCpuRatio> gpu_cpu;
  std::optional<ParsedLoadBalance> load_balance;
  std::vector<Advisory> notes;
  std::vector<std::string> warnings;  // integrity checks; never fatal

  bool operator==(const PerfMetrics&) const = default;
};

// Each parser returns the last occurrence in the text. A missing line yields
// an empty optional; a present but malformed line throws ParseError.
std::optional<PmeLoad> parse_pme_load(std::string_view text);
std::optional<GpuCpuRatio> parse_gpu_cpu_ratio(std::string_view text);
std::optional<ParsedLoadBalance> parse_load_balance_table(std::string_view text);
std::vector<Advisory> parse_advisories(std::string_view text);
std::optional<double> parse_performance(std::string_view text);

PerfMetrics parse_log(std::string_view text);

AdvisoryKind classify_advisory(std::string_view note);

// Warnings for a printed ratio off by more than 0.001 from gpu/cpu, and for a
// PP cost ratio more than 2% away from the cube of the cutoff ratio.
std::optional<std::string> check_ratio(const GpuCpuRatio& r);
std::optional<std::string> check_cube_law(const ParsedLoadBalance& lb);
std::vector<std::string> integrity_warnings(const PerfMetrics& m);

// Log text in the engine's wording; parse_log(render_log(m)) reproduces m.
std::string render_log(const PerfMetrics& m);

std::string metrics_csv_header();
std::string metrics_csv_row(const PerfMetrics& m, std::string_view source);

}  // namespace mdtune
