#include "mdtune/json_io.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <type_traits>

#include "mdtune/error.hpp"

namespace mdtune {

namespace {

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw InvalidConfig((path.empty() ? std::string("document") : path) + ": " + msg);
}

// Typed read of one JSON value; failures name the path.
template <class T>
T value(const json& v, const std::string& path) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) bad(path, "expected true or false");
    return v.get<bool>();
  } else if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) bad(path, "expected a number");
    return v.get<double>();
  } else if constexpr (std::is_integral_v<T>) {
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) bad(path, "integer out of range");
      return static_cast<T>(u);
    }
    if (v.is_number_integer()) bad(path, "expected a non-negative integer");
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d >= 0 && d == std::floor(d) && d <= static_cast<double>(std::numeric_limits<T>::max()))
        return static_cast<T>(d);
    }
    bad(path, "expected a non-negative integer");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) bad(path, "expected a string");
    return v.get<std::string>();
  } else if constexpr (is_vector<T>::value) {
    if (!v.is_array()) bad(path, "expected an array");
    T out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(value<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  } else {
    return decode<T>(v, path);
  }
}

// Field access for one JSON object; done() rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const char* key) const { return join(path_, key); }

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void req(const char* key, T& out) {
    const json* v = find(key);
    if (!v) bad(at(key), "missing required field");
    out = value<T>(*v, at(key));
  }

  template <class T>
  void opt(const char* key, T& out) {
    const json* v = find(key);
    if (v) out = value<T>(*v, at(key));
  }

  template <class T>
  void opt(const char* key, std::optional<T>& out) {
    const json* v = find(key);
    if (v && !v->is_null()) out = value<T>(*v, at(key));
  }

  // Enum stored as a string, converted by `parse` (which throws on unknown text).
  template <class E, class F>
  void enum_opt(const char* key, E& out, F parse) {
    const json* v = find(key);
    if (!v) return;
    const auto s = value<std::string>(*v, at(key));
    try {
      out = parse(s);
    } catch (const Error& e) {
      bad(at(key), e.what());
    }
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) bad(join(path_, it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
json opt_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_same_v<T, double>) return num(*v);
  else if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, std::string>) return json(*v);
  else return encode(*v);
}

template <class T>
json array_of(const std::vector<T>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(encode(x));
  return a;
}

std::string mpi_name(MpiFlavor f) { return f == MpiFlavor::thread_mpi ? "thread_mpi" : "external_mpi"; }

MpiFlavor parse_mpi(const std::string& s) {
  if (s == "thread_mpi") return MpiFlavor::thread_mpi;
  if (s == "external_mpi") return MpiFlavor::external_mpi;
  throw InvalidArgument("expected thread_mpi or external_mpi, got '" + s + "'");
}

// Runs a validate() and reattaches its message to the object path.
template <class T>
void checked(const T& v, const std::string& path) {
  try {
    v.validate();
  } catch (const Error& e) {
    bad(path, e.what());
  }
}

}  // namespace

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- hardware

json encode(const GpuSpec& v) {
  json j;
  j["model_name"] = v.model_name;
  j["cuda_cores"] = v.cuda_cores;
  j["base_clock_mhz"] = num(v.base_clock_mhz);
  j["max_app_clock_mhz"] = opt_json(v.max_app_clock_mhz);
  j["memory_gb"] = num(v.memory_gb);
  j["price_eur"] = opt_json(v.price_eur);
  j["idle_power_w"] = opt_json(v.idle_power_w);
  j["supports_app_clocks"] = v.supports_app_clocks;
  return j;
}

template <>
GpuSpec decode<GpuSpec>(const json& j, const std::string& path) {
  Fields f(j, path);
  GpuSpec v;
  f.req("model_name", v.model_name);
  f.req("cuda_cores", v.cuda_cores);
  f.req("base_clock_mhz", v.base_clock_mhz);
  f.opt("max_app_clock_mhz", v.max_app_clock_mhz);
  f.opt("memory_gb", v.memory_gb);
  f.opt("price_eur", v.price_eur);
  f.opt("idle_power_w", v.idle_power_w);
  f.opt("supports_app_clocks", v.supports_app_clocks);
  f.done();
  checked(v, path);
  return v;
}

json encode(const CpuSpec& v) {
  json j;
  j["model_name"] = v.model_name;
  j["sockets"] = v.sockets;
  j["cores_per_socket"] = v.cores_per_socket;
  j["hardware_threads_per_core"] = v.hardware_threads_per_core;
  j["base_clock_mhz"] = num(v.base_clock_mhz);
  return j;
}

template <>
CpuSpec decode<CpuSpec>(const json& j, const std::string& path) {
  Fields f(j, path);
  CpuSpec v;
  f.opt("model_name", v.model_name);
  f.req("sockets", v.sockets);
  f.req("cores_per_socket", v.cores_per_socket);
  f.opt("hardware_threads_per_core", v.hardware_threads_per_core);
  f.opt("base_clock_mhz", v.base_clock_mhz);
  f.done();
  checked(v, path);
  return v;
}

json encode(const NodeSpec& v) {
  json j;
  j["cpu"] = encode(v.cpu);
  j["gpus"] = array_of(v.gpus);
  j["node_price_eur"] = num(v.node_price_eur);
  j["interconnect"] = v.interconnect.name();
  j["rack_units"] = v.rack_units ? json(*v.rack_units) : json("desktop");
  j["idle_power_w"] = opt_json(v.idle_power_w);
  return j;
}

template <>
NodeSpec decode<NodeSpec>(const json& j, const std::string& path) {
  Fields f(j, path);
  NodeSpec v;
  f.req("cpu", v.cpu);
  f.opt("gpus", v.gpus);
  f.opt("node_price_eur", v.node_price_eur);
  if (const json* ic = f.find("interconnect")) v.interconnect = Interconnect::parse(value<std::string>(*ic, f.at("interconnect")));
  if (const json* ru = f.find("rack_units")) {
    if (ru->is_string()) {
      if (ru->get<std::string>() != "desktop") bad(f.at("rack_units"), "expected a count or \"desktop\"");
    } else if (!ru->is_null()) {
      v.rack_units = value<std::uint32_t>(*ru, f.at("rack_units"));
    }
  }
  f.opt("idle_power_w", v.idle_power_w);
  f.done();
  checked(v, path);
  return v;
}

json encode(const ClusterSpec& v) {
  json j;
  j["node"] = encode(v.node);
  j["node_count"] = v.node_count;
  j["per_node_network_cost_eur"] = num(v.per_node_network_cost_eur);
  return j;
}

template <>
ClusterSpec decode<ClusterSpec>(const json& j, const std::string& path) {
  Fields f(j, path);
  ClusterSpec v;
  f.req("node", v.node);
  f.opt("node_count", v.node_count);
  f.opt("per_node_network_cost_eur", v.per_node_network_cost_eur);
  f.done();
  checked(v, path);
  return v;
}

// ---- launch

json encode(const DdGrid& v) { return json::array({v.x, v.y, v.z}); }

template <>
DdGrid decode<DdGrid>(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) bad(path, "expected [x, y, z]");
  DdGrid g{value<std::uint32_t>(j[0], path + "[0]"), value<std::uint32_t>(j[1], path + "[1]"),
           value<std::uint32_t>(j[2], path + "[2]")};
  if (g.x == 0 || g.y == 0 || g.z == 0) bad(path, "grid dimensions must be >= 1");
  return g;
}

json encode(const LaunchConfig& v) {
  json j;
  j["n_rank"] = v.n_rank;
  j["n_th"] = v.n_th;
  j["n_pme"] = v.n_pme;
  j["n_th_pme"] = v.n_th_pme;
  j["dlb"] = std::string(to_string(v.dlb));
  j["gpu_id"] = v.gpu_id;
  j["use_ht"] = v.use_ht;
  j["nstlist"] = v.nstlist;
  j["dd_grid"] = opt_json(v.dd_grid);
  j["nodes"] = v.nodes;
  return j;
}

template <>
LaunchConfig decode<LaunchConfig>(const json& j, const std::string& path) {
  Fields f(j, path);
  LaunchConfig v;
  f.req("n_rank", v.n_rank);
  f.opt("n_th", v.n_th);
  f.opt("n_pme", v.n_pme);
  f.opt("n_th_pme", v.n_th_pme);
  f.enum_opt("dlb", v.dlb, [](const std::string& s) { return parse_dlb(s); });
  f.opt("gpu_id", v.gpu_id);
  f.opt("use_ht", v.use_ht);
  f.opt("nstlist", v.nstlist);
  f.opt("dd_grid", v.dd_grid);
  f.opt("nodes", v.nodes);
  f.done();
  return v;
}

json encode(const EnumerationOptions& v) {
  json j;
  json ht = json::array();
  for (bool b : v.ht_settings) ht.push_back(b);
  j["ht_settings"] = ht;
  j["gpus_active"] = opt_json(v.gpus_active);
  json dlb = json::array();
  for (auto d : v.gpu_dlb) dlb.push_back(std::string(to_string(d)));
  j["gpu_dlb"] = dlb;
  j["nstlist"] = v.nstlist;
  j["pme_variants"] = v.pme_variants;
  j["interleaved_pme"] = v.interleaved_pme;
  return j;
}

template <>
EnumerationOptions decode<EnumerationOptions>(const json& j, const std::string& path) {
  Fields f(j, path);
  EnumerationOptions v;
  f.opt("ht_settings", v.ht_settings);
  f.opt("gpus_active", v.gpus_active);
  if (const json* d = f.find("gpu_dlb")) {
    const auto names = value<std::vector<std::string>>(*d, f.at("gpu_dlb"));
    v.gpu_dlb.clear();
    for (std::size_t i = 0; i < names.size(); ++i) {
      try {
        v.gpu_dlb.push_back(parse_dlb(names[i]));
      } catch (const Error& e) {
        bad(f.at("gpu_dlb") + "[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  f.opt("nstlist", v.nstlist);
  f.opt("pme_variants", v.pme_variants);
  f.opt("interleaved_pme", v.interleaved_pme);
  f.done();
  return v;
}

json encode(const EngineProfile& v) {
  json j;
  j["flavor"] = mpi_name(v.flavor);
  j["mdrun"] = v.mdrun;
  j["mdrun_mpi"] = v.mdrun_mpi;
  j["mpirun"] = v.mpirun;
  j["tpr"] = v.tpr;
  j["nsteps"] = v.nsteps;
  j["resetstep"] = v.resetstep;
  j["resethway"] = v.resethway;
  j["log_file"] = v.log_file;
  return j;
}

template <>
EngineProfile decode<EngineProfile>(const json& j, const std::string& path) {
  Fields f(j, path);
  EngineProfile v;
  f.enum_opt("flavor", v.flavor, parse_mpi);
  f.opt("mdrun", v.mdrun);
  f.opt("mdrun_mpi", v.mdrun_mpi);
  f.opt("mpirun", v.mpirun);
  f.opt("tpr", v.tpr);
  f.opt("nsteps", v.nsteps);
  f.opt("resetstep", v.resetstep);
  f.opt("resethway", v.resethway);
  f.opt("log_file", v.log_file);
  f.done();
  return v;
}

json encode(const ReplicaSlot& v) {
  json j;
  j["replica"] = v.replica;
  j["node"] = v.node;
  j["ranks"] = v.ranks;
  j["gpu_id"] = v.gpu_id;
  return j;
}

json encode(const MultiSimPlan& v) {
  json j;
  j["replicas"] = v.replicas;
  j["nodes"] = v.nodes;
  j["placement"] = std::string(to_string(v.placement));
  j["use_ht"] = v.use_ht;
  j["threads_per_replica"] = v.threads_per_replica;
  j["ranks_per_replica"] = v.ranks_per_replica;
  j["threads_per_rank"] = v.threads_per_rank;
  j["leftover_threads"] = v.leftover_threads;
  j["per_replica_gpu_id"] = v.per_replica_gpu_id;
  j["layout"] = array_of(v.layout);
  return j;
}

// ---- workload

json encode(const Box& v) { return json::array({num(v.x), num(v.y), num(v.z)}); }

template <>
Box decode<Box>(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) bad(path, "expected [x, y, z] in nm");
  return {value<double>(j[0], path + "[0]"), value<double>(j[1], path + "[1]"), value<double>(j[2], path + "[2]")};
}

json encode(const Workload& v) {
  json j;
  j["name"] = v.name;
  j["atoms"] = v.atoms;
  j["time_step_fs"] = num(v.time_step_fs);
  j["steps"] = v.steps;
  j["reset_steps"] = v.reset_steps;
  j["box_nm"] = encode(v.box);
  j["rcoulomb_nm"] = num(v.rcoulomb_nm);
  j["fourier_spacing_nm"] = num(v.fourier_spacing_nm);
  j["tpr"] = v.tpr;
  return j;
}

template <>
Workload decode<Workload>(const json& j, const std::string& path) {
  Fields f(j, path);
  Workload v;
  f.req("name", v.name);
  f.req("atoms", v.atoms);
  f.opt("time_step_fs", v.time_step_fs);
  f.opt("steps", v.steps);
  f.opt("reset_steps", v.reset_steps);
  f.req("box_nm", v.box);
  f.opt("rcoulomb_nm", v.rcoulomb_nm);
  f.opt("fourier_spacing_nm", v.fourier_spacing_nm);
  f.opt("tpr", v.tpr);
  f.done();
  checked(v, path);
  return v;
}

// ---- log metrics

json encode(const Grid3& v) { return json::array({v.nx, v.ny, v.nz}); }

template <>
Grid3 decode<Grid3>(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) bad(path, "expected [nx, ny, nz]");
  return {value<std::uint32_t>(j[0], path + "[0]"), value<std::uint32_t>(j[1], path + "[1]"),
          value<std::uint32_t>(j[2], path + "[2]")};
}

json encode(const LoadBalanceRow& v) {
  json j;
  j["rcoulomb"] = num(v.rcoulomb);
  j["rlist"] = num(v.rlist);
  j["grid"] = encode(v.grid);
  j["spacing"] = num(v.spacing);
  j["inv_beta"] = num(v.inv_beta);
  return j;
}

template <>
LoadBalanceRow decode<LoadBalanceRow>(const json& j, const std::string& path) {
  Fields f(j, path);
  LoadBalanceRow v;
  f.req("rcoulomb", v.rcoulomb);
  f.req("rlist", v.rlist);
  f.req("grid", v.grid);
  f.req("spacing", v.spacing);
  f.req("inv_beta", v.inv_beta);
  f.done();
  return v;
}

json encode(const Advisory& v) {
  json j;
  j["kind"] = std::string(to_string(v.kind));
  j["text"] = v.text;
  return j;
}

template <>
Advisory decode<Advisory>(const json& j, const std::string& path) {
  Fields f(j, path);
  Advisory v;
  f.enum_opt("kind", v.kind, [](const std::string& s) { return parse_advisory_kind(s); });
  f.req("text", v.text);
  f.done();
  return v;
}

json encode(const PerfMetrics& v) {
  json j;
  j["performance_ns_day"] = opt_json(v.performance);
  if (v.pme) {
    j["pme_load"] = num(v.pme->load);
    j["pme_wait_pct"] = opt_json(v.pme->wait_pct);
  } else {
    j["pme_load"] = nullptr;
    j["pme_wait_pct"] = nullptr;
  }
  if (v.gpu_cpu) {
    json g;
    g["gpu_ms"] = num(v.gpu_cpu->gpu_ms);
    g["cpu_ms"] = num(v.gpu_cpu->cpu_ms);
    g["ratio"] = num(v.gpu_cpu->ratio);
    j["gpu_cpu"] = g;
  } else {
    j["gpu_cpu"] = nullptr;
  }
  if (v.load_balance) {
    json lb;
    lb["initial"] = encode(v.load_balance->initial);
    lb["final"] = encode(v.load_balance->final);
    lb["cost_ratio_pp"] = num(v.load_balance->cost_ratio_pp);
    lb["cost_ratio_pme"] = num(v.load_balance->cost_ratio_pme);
    j["load_balance"] = lb;
  } else {
    j["load_balance"] = nullptr;
  }
  j["notes"] = array_of(v.notes);
  j["warnings"] = v.warnings;
  return j;
}

template <>
PerfMetrics decode<PerfMetrics>(const json& j, const std::string& path) {
  Fields f(j, path);
  PerfMetrics v;
  f.opt("performance_ns_day", v.performance);
  std::optional<double> load, wait;
  f.opt("pme_load", load);
  f.opt("pme_wait_pct", wait);
  if (load) v.pme = PmeLoad{*load, wait};
  else if (wait) bad(f.at("pme_wait_pct"), "given without pme_load");
  if (const json* g = f.find("gpu_cpu"); g && !g->is_null()) {
    Fields gf(*g, f.at("gpu_cpu"));
    GpuCpuRatio r;
    gf.req("gpu_ms", r.gpu_ms);
    gf.req("cpu_ms", r.cpu_ms);
    gf.req("ratio", r.ratio);
    gf.done();
    v.gpu_cpu = r;
  }
  if (const json* lb = f.find("load_balance"); lb && !lb->is_null()) {
    Fields lf(*lb, f.at("load_balance"));
    ParsedLoadBalance p;
    lf.req("initial", p.initial);
    lf.req("final", p.final);
    lf.req("cost_ratio_pp", p.cost_ratio_pp);
    lf.req("cost_ratio_pme", p.cost_ratio_pme);
    lf.done();
    v.load_balance = p;
  }
  f.opt("notes", v.notes);
  f.opt("warnings", v.warnings);
  f.done();
  return v;
}

json encode(const BalanceState& v) {
  json j;
  j["k"] = num(v.k);
  j["rcoulomb_nm"] = num(v.rcoulomb);
  j["spacing_nm"] = num(v.spacing);
  j["actual_spacing_nm"] = num(v.actual_spacing);
  j["grid"] = encode(v.grid);
  j["grid0"] = encode(v.grid0);
  j["box_nm"] = encode(v.box);
  j["pp_cost_ratio"] = num(v.pp_cost_ratio);
  j["pme_cost_ratio"] = num(v.pme_cost_ratio);
  return j;
}

// ---- synthetic profile

namespace {

// Every tunable constant, in one table so encode and decode stay in step.
template <class P, class F>
void profile_fields(P& p, F&& f) {
  f("cpu_rate", p.cpu_rate);
  f("gpu_rate", p.gpu_rate);
  f("gpu_clock_scale", p.gpu_clock_scale);
  f("offload_fraction_base", p.offload_fraction_base);
  f("pme_fraction", p.pme_fraction);
  f("update_work", p.update_work);
  f("nstlist_penalty", p.nstlist_penalty);
  f("buffer_growth", p.buffer_growth);
  f("thread_decay", p.thread_decay);
  f("ht_yield", p.ht_yield);
  f("rank_overhead", p.rank_overhead);
  f("gpu_launch_overhead", p.gpu_launch_overhead);
  f("gpu_share_penalty", p.gpu_share_penalty);
  f("dd_imbalance", p.dd_imbalance);
  f("dlb_residual", p.dlb_residual);
  f("dlb_max_k", p.dlb_max_k);
  f("max_k", p.max_k);
  f("internode_latency", p.internode_latency);
  f("pme_alltoall", p.pme_alltoall);
}

}  // namespace

json encode(const SyntheticNodeProfile& v) {
  json j;
  j["node"] = encode(v.node);
  profile_fields(v, [&](const char* k, const double& x) { j[k] = num(x); });
  return j;
}

template <>
SyntheticNodeProfile decode<SyntheticNodeProfile>(const json& j, const std::string& path) {
  Fields f(j, path);
  SyntheticNodeProfile v;
  f.req("node", v.node);
  profile_fields(v, [&](const char* k, double& x) { f.opt(k, x); });
  f.done();
  checked(v, path);
  return v;
}

// ---- sweep

json encode(const SweepOptions& v) {
  json j;
  j["repeats"] = v.repeats;
  j["reset_fraction"] = opt_json(v.reset_fraction);
  j["engine"] = encode(v.engine);
  return j;
}

template <>
SweepOptions decode<SweepOptions>(const json& j, const std::string& path) {
  Fields f(j, path);
  SweepOptions v;
  f.opt("repeats", v.repeats);
  f.opt("reset_fraction", v.reset_fraction);
  f.opt("engine", v.engine);
  f.done();
  if (v.repeats < 1) bad(f.at("repeats"), "must be >= 1");
  if (v.reset_fraction && !(*v.reset_fraction >= 0.0 && *v.reset_fraction < 1.0))
    bad(f.at("reset_fraction"), "must be in [0,1)");
  return v;
}

json encode(const SweepRow& v) {
  json j;
  j["config"] = encode(v.config);
  j["command"] = v.command;
  j["ok"] = v.ok;
  j["mean_ns_day"] = num(v.mean);
  j["stdev_ns_day"] = num(v.stdev);
  j["repeats_ok"] = v.repeats_ok;
  j["repeats_failed"] = v.repeats_failed;
  json s = json::array();
  for (double x : v.samples) s.push_back(num(x));
  j["samples"] = s;
  j["metrics"] = opt_json(v.metrics);
  j["advisories"] = array_of(v.advisories);
  j["error"] = v.error;
  return j;
}

template <>
SweepRow decode<SweepRow>(const json& j, const std::string& path) {
  Fields f(j, path);
  SweepRow v;
  f.req("config", v.config);
  f.opt("command", v.command);
  f.req("ok", v.ok);
  f.opt("mean_ns_day", v.mean);
  f.opt("stdev_ns_day", v.stdev);
  f.opt("repeats_ok", v.repeats_ok);
  f.opt("repeats_failed", v.repeats_failed);
  f.opt("samples", v.samples);
  f.opt("metrics", v.metrics);
  f.opt("advisories", v.advisories);
  f.opt("error", v.error);
  f.done();
  return v;
}

json encode(const SweepResult& v) {
  json j;
  j["executor"] = v.executor;
  j["repeats"] = v.repeats;
  j["best"] = opt_json(v.best);
  j["rows"] = array_of(v.rows);
  json fl = json::array();
  for (const auto& x : v.failures) fl.push_back({{"row", x.row}, {"repeat", x.repeat}, {"message", x.message}});
  j["failures"] = fl;
  return j;
}

template <>
SweepResult decode<SweepResult>(const json& j, const std::string& path) {
  Fields f(j, path);
  SweepResult v;
  f.opt("executor", v.executor);
  f.opt("repeats", v.repeats);
  f.opt("best", v.best);
  f.req("rows", v.rows);
  if (const json* fl = f.find("failures")) {
    const auto p = f.at("failures");
    if (!fl->is_array()) bad(p, "expected an array");
    for (std::size_t i = 0; i < fl->size(); ++i) {
      Fields ff((*fl)[i], p + "[" + std::to_string(i) + "]");
      SweepFailure x;
      ff.req("row", x.row);
      ff.req("repeat", x.repeat);
      ff.req("message", x.message);
      ff.done();
      v.failures.push_back(std::move(x));
    }
  }
  f.done();
  if (v.best && *v.best >= v.rows.size()) bad(f.at("best"), "index out of range");
  return v;
}

// ---- econ

json encode(const EconParams& v) {
  json j;
  j["lifetime_years"] = num(v.lifetime_years);
  j["energy_price_eur_per_kwh"] = num(v.energy_price_eur_per_kwh);
  j["per_node_network_cost_eur"] = num(v.per_node_network_cost_eur);
  return j;
}

template <>
EconParams decode<EconParams>(const json& j, const std::string& path) {
  Fields f(j, path);
  EconParams v;
  f.opt("lifetime_years", v.lifetime_years);
  f.opt("energy_price_eur_per_kwh", v.energy_price_eur_per_kwh);
  f.opt("per_node_network_cost_eur", v.per_node_network_cost_eur);
  f.done();
  checked(v, path);
  return v;
}

json encode(const PowerReading& v) {
  json j;
  j["kind"] = to_string(v.kind);
  j["value"] = num(v.value);
  j["gpus_installed"] = v.gpus_installed;
  j["gpus_active"] = v.gpus_active;
  j["idle_gpu_power_w"] = num(v.idle_gpu_power_w);
  return j;
}

template <>
PowerReading decode<PowerReading>(const json& j, const std::string& path) {
  Fields f(j, path);
  PowerReading v;
  f.enum_opt("kind", v.kind, parse_power_kind);
  f.req("value", v.value);
  f.opt("gpus_installed", v.gpus_installed);
  f.opt("gpus_active", v.gpus_active);
  f.opt("idle_gpu_power_w", v.idle_gpu_power_w);
  f.done();
  checked(v, path);
  return v;
}

json encode(const EconRow& v) {
  json j;
  j["performance_ns_day"] = num(v.performance);
  j["production_us"] = num(v.production_us);
  j["effective_power_w"] = num(v.effective_power_w);
  j["energy_cost_eur"] = num(v.energy_cost);
  j["node_cost_eur"] = num(v.node_cost);
  j["trajectory_cost_eur_per_us"] = num(v.trajectory_cost);
  j["yield"] = num(v.yield);
  return j;
}

template <>
ClockPoint decode<ClockPoint>(const json& j, const std::string& path) {
  if (j.is_array()) {
    if (j.size() != 2) bad(path, "expected [clock_mhz, performance]");
    return {value<double>(j[0], path + "[0]"), value<double>(j[1], path + "[1]")};
  }
  Fields f(j, path);
  ClockPoint v;
  f.req("clock_mhz", v.clock_mhz);
  f.req("performance", v.performance);
  f.done();
  return v;
}

json encode(const ClockFit& v) {
  json j;
  j["slope"] = num(v.slope);
  j["intercept"] = num(v.intercept);
  j["gain"] = num(v.gain);
  return j;
}

json encode(const HardwareCandidate& v) {
  json j;
  j["label"] = v.label;
  j["perf_per_price"] = opt_json(v.perf_per_price);
  j["node_performance"] = opt_json(v.node_performance);
  j["time_to_solution"] = opt_json(v.time_to_solution);
  j["yield"] = opt_json(v.yield);
  j["rack_units"] = v.rack_units ? num(*v.rack_units) : json("desktop");
  return j;
}

template <>
HardwareCandidate decode<HardwareCandidate>(const json& j, const std::string& path) {
  Fields f(j, path);
  HardwareCandidate v;
  f.req("label", v.label);
  f.opt("perf_per_price", v.perf_per_price);
  f.opt("node_performance", v.node_performance);
  f.opt("time_to_solution", v.time_to_solution);
  f.opt("yield", v.yield);
  if (const json* ru = f.find("rack_units"); ru && !ru->is_null()) {
    if (ru->is_string()) {
      if (ru->get<std::string>() != "desktop") bad(f.at("rack_units"), "expected a number or \"desktop\"");
    } else {
      v.rack_units = value<double>(*ru, f.at("rack_units"));
    }
  }
  f.done();
  return v;
}

}  // namespace mdtune
