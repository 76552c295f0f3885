#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdtune/balance.hpp"
#include "mdtune/econ.hpp"
#include "mdtune/json_io.hpp"
#include "mdtune/launch.hpp"
#include "mdtune/sweep.hpp"
#include "mdtune/workload.hpp"

namespace mdtune {

struct MultiSimRequest {
  std::uint32_t replicas = 1;
  std::uint32_t nodes = 1;
  Placement placement = Placement::dense;
  bool use_ht = true;
};

// Everything one benchmark campaign needs. The node is given inline or as a
// path to a node JSON file, resolved against the manifest's directory.
struct RunManifest {
  Workload workload;
  NodeSpec node;
  EnumerationOptions planner;
  std::vector<LaunchConfig> extra_configs;  // appended after the enumerated ones
  SweepOptions sweep;
  EconParams econ;
  json synthetic = json::object();  // overrides of SyntheticNodeProfile constants
  std::optional<MultiSimRequest> multi;
};

RunManifest decode_manifest(const json& j, const std::filesystem::path& base_dir);
RunManifest read_manifest(const std::filesystem::path& file);

NodeSpec read_node_file(const std::filesystem::path& file);

// A frozen list of configs plus the context needed to run and report them.
struct Plan {
  Workload workload;
  NodeSpec node;
  SweepOptions sweep;  // engine already carries nsteps / resetstep
  EconParams econ;
  json synthetic = json::object();
  std::vector<LaunchConfig> configs;

  SyntheticNodeProfile profile() const;
};

Plan make_plan(const RunManifest& m);

json encode(const Plan& p);
Plan decode_plan(const json& j);

// Commands in plan order; what --dry-run prints.
std::vector<std::string> plan_commands(const Plan& p);
std::string plan_script(const Plan& p);

MultiSimPlan make_multi_plan(const RunManifest& m);

std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, const std::string& text);

}  // namespace mdtune
