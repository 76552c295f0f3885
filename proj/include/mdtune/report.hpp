#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mdtune/econ.hpp"
#include "mdtune/hardware.hpp"
#include "mdtune/json_io.hpp"
#include "mdtune/sweep.hpp"
#include "mdtune/workload.hpp"

namespace mdtune {

enum class ReportFormat { md, csv, json };

ReportFormat parse_report_format(const std::string& s);

// A sweep result together with what is needed to price and label it.
struct SweepDocument {
  Workload workload;
  NodeSpec node;
  EconParams econ;
  SweepResult result;
};

json encode(const SweepDocument& d);
SweepDocument decode_sweep_document(const json& j);

struct ReportOptions {
  double price_normalizer = 1000.0;  // P per this many EUR
  std::optional<double> power_w;     // node draw under load; adds energy and yield columns
};

// Estimate of the domain decomposition for `pp_ranks` cells when the config
// leaves it to the engine: the factorization with the least halo area, more
// cells along x on ties. The engine's own choice also weighs PME layout and
// may differ.
DdGrid dd_grid_for(std::uint32_t pp_ranks, const Box& box);

// Investment for the hardware a config occupies; empty when a price is missing.
std::optional<double> config_cost(const LaunchConfig& cfg, const NodeSpec& node, const EconParams& econ);

// Row-oriented output shared by all table-producing subcommands.
struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;  // printed below the markdown table
  json data = json::array();       // the --format json payload
};

std::string render(const Table& t, ReportFormat format);

Table sweep_table(const SweepDocument& doc, const ReportOptions& options = {});
std::string render_sweep_report(const SweepDocument& doc, ReportFormat format, const ReportOptions& options = {});

// analyze-costs input: {"econ", "digits", "normalizer", "rows": [...]}; see docs/formats.md.
Table cost_table(const json& input);
// scaling input: {"series": [...], "multi": [...]}.
Table scaling_table(const json& input);
Table recommend_table(const json& input, const CriteriaWeights& weights);

// One row per parsed log.
Table metrics_table(const std::vector<std::pair<std::string, PerfMetrics>>& logs);

}  // namespace mdtune
