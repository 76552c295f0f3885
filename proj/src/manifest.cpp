#include "mdtune/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "mdtune/error.hpp"

namespace mdtune {

namespace fs = std::filesystem;

namespace {

const char* const kPlanFormat = "mdtune-plan/1";

[[noreturn]] void bad(const std::string& path, const std::string& msg) { throw InvalidConfig(path + ": " + msg); }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) bad(path, "expected an object");
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) bad(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown field");
  }
}

SyntheticNodeProfile build_profile(const NodeSpec& node, const json& overrides, const std::string& path) {
  expect_object(overrides, path);
  if (overrides.contains("node")) bad(path + ".node", "the node comes from the manifest, not the overrides");
  json j = overrides;
  j["node"] = encode(node);
  return decode<SyntheticNodeProfile>(j, path);
}

std::vector<LaunchConfig> read_configs(const json& j, const std::string& path, const NodeSpec& node) {
  if (!j.is_array()) bad(path, "expected an array");
  std::vector<LaunchConfig> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    auto cfg = decode<LaunchConfig>(j[i], p);
    const auto problems = check_config(cfg, node);
    if (!problems.empty()) bad(p, problems.front());
    out.push_back(std::move(cfg));
  }
  return out;
}

}  // namespace

std::string read_text_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read '" + file.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  out << text;
  if (!out.flush()) throw IoError("write to '" + file.string() + "' failed");
}

NodeSpec read_node_file(const fs::path& file) {
  return decode<NodeSpec>(parse_json(read_text_file(file)), "node");
}

RunManifest decode_manifest(const json& j, const fs::path& base_dir) {
  expect_object(j, "manifest");
  reject_unknown(j, {"workload", "node", "planner", "extra_configs", "sweep", "econ", "synthetic", "multi"}, "");
  RunManifest m;
  if (!j.contains("workload")) bad("workload", "missing required field");
  m.workload = decode<Workload>(j["workload"], "workload");

  if (!j.contains("node")) bad("node", "missing required field");
  const auto& node = j["node"];
  if (node.is_string()) {
    // "file.json" holds one node; "catalog.json#name" picks an entry of its "nodes" object.
    const auto ref = node.get<std::string>();
    const auto hash = ref.find('#');
    fs::path p = ref.substr(0, hash);
    if (p.is_relative()) p = base_dir / p;
    std::string text;
    try {
      text = read_text_file(p);
    } catch (const IoError& e) {
      throw IoError(std::string("node: ") + e.what());
    }
    auto doc = parse_json(text);
    if (hash != std::string::npos) {
      const auto name = ref.substr(hash + 1);
      if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_object() || !doc["nodes"].contains(name))
        bad("node", "no entry '" + name + "' in the nodes of " + p.string());
      doc = doc["nodes"][name];
    }
    m.node = decode<NodeSpec>(doc, "node");
  } else {
    m.node = decode<NodeSpec>(node, "node");
  }

  if (j.contains("planner")) m.planner = decode<EnumerationOptions>(j["planner"], "planner");
  if (j.contains("extra_configs")) m.extra_configs = read_configs(j["extra_configs"], "extra_configs", m.node);
  if (j.contains("sweep")) m.sweep = decode<SweepOptions>(j["sweep"], "sweep");
  if (j.contains("econ")) m.econ = decode<EconParams>(j["econ"], "econ");
  if (j.contains("synthetic")) {
    m.synthetic = j["synthetic"];
    build_profile(m.node, m.synthetic, "synthetic");
  }
  if (j.contains("multi")) {
    const auto& mj = j["multi"];
    expect_object(mj, "multi");
    reject_unknown(mj, {"replicas", "nodes", "placement", "use_ht"}, "multi");
    MultiSimRequest r;
    if (!mj.contains("replicas") || !mj["replicas"].is_number_unsigned() || mj["replicas"].get<std::uint64_t>() == 0)
      bad("multi.replicas", "expected a positive integer");
    r.replicas = mj["replicas"].get<std::uint32_t>();
    if (mj.contains("nodes")) {
      if (!mj["nodes"].is_number_unsigned() || mj["nodes"].get<std::uint64_t>() == 0)
        bad("multi.nodes", "expected a positive integer");
      r.nodes = mj["nodes"].get<std::uint32_t>();
    }
    if (mj.contains("placement")) {
      if (!mj["placement"].is_string()) bad("multi.placement", "expected \"dense\" or \"interleaved\"");
      try {
        r.placement = parse_placement(mj["placement"].get<std::string>());
      } catch (const Error& e) {
        bad("multi.placement", e.what());
      }
    }
    if (mj.contains("use_ht")) {
      if (!mj["use_ht"].is_boolean()) bad("multi.use_ht", "expected true or false");
      r.use_ht = mj["use_ht"].get<bool>();
    }
    m.multi = r;
  }
  return m;
}

RunManifest read_manifest(const fs::path& file) {
  const auto text = read_text_file(file);
  return decode_manifest(parse_json(text), file.parent_path());
}

SyntheticNodeProfile Plan::profile() const { return build_profile(node, synthetic, "synthetic"); }

Plan make_plan(const RunManifest& m) {
  m.workload.validate();
  Plan p;
  p.workload = m.workload;
  p.node = m.node;
  p.sweep = m.sweep;
  p.sweep.engine = engine_for(m.workload, m.sweep);
  p.econ = m.econ;
  p.synthetic = m.synthetic;
  p.configs = enumerate_single_node(m.node, m.planner);
  for (const auto& c : m.extra_configs)
    if (std::find(p.configs.begin(), p.configs.end(), c) == p.configs.end()) p.configs.push_back(c);
  return p;
}

std::vector<std::string> plan_commands(const Plan& p) {
  std::vector<std::string> out;
  for (const auto& c : p.configs) out.push_back(render_command(c, p.sweep.engine));
  return out;
}

std::string plan_script(const Plan& p) { return render_script(p.configs, p.sweep.engine); }

json encode(const Plan& p) {
  json j;
  j["format"] = kPlanFormat;
  j["workload"] = encode(p.workload);
  j["node"] = encode(p.node);
  j["sweep"] = encode(p.sweep);
  j["econ"] = encode(p.econ);
  j["synthetic"] = p.synthetic;
  json cfgs = json::array();
  for (const auto& c : p.configs) cfgs.push_back(encode(c));
  j["configs"] = cfgs;
  j["commands"] = plan_commands(p);
  return j;
}

Plan decode_plan(const json& j) {
  expect_object(j, "plan");
  reject_unknown(j, {"format", "workload", "node", "sweep", "econ", "synthetic", "configs", "commands"}, "");
  if (!j.contains("format") || j["format"] != kPlanFormat)
    bad("format", std::string("expected \"") + kPlanFormat + "\"");
  Plan p;
  if (!j.contains("workload")) bad("workload", "missing required field");
  p.workload = decode<Workload>(j["workload"], "workload");
  if (!j.contains("node")) bad("node", "missing required field");
  p.node = decode<NodeSpec>(j["node"], "node");
  if (j.contains("sweep")) p.sweep = decode<SweepOptions>(j["sweep"], "sweep");
  if (j.contains("econ")) p.econ = decode<EconParams>(j["econ"], "econ");
  if (j.contains("synthetic")) {
    p.synthetic = j["synthetic"];
    build_profile(p.node, p.synthetic, "synthetic");
  }
  if (!j.contains("configs")) bad("configs", "missing required field");
  p.configs = read_configs(j["configs"], "configs", p.node);
  return p;
}

MultiSimPlan make_multi_plan(const RunManifest& m) {
  if (!m.multi) bad("multi", "missing required field");
  return plan_multi_sim(m.node, m.multi->replicas, m.multi->nodes, m.multi->placement, m.multi->use_ht);
}

}  // namespace mdtune
