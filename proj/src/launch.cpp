#include "mdtune/launch.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "mdtune/error.hpp"

namespace mdtune {

std::string_view to_string(Dlb d) {
  switch (d) {
    case Dlb::on: return "on";
    case Dlb::off: return "off";
    case Dlb::auto_: return "auto";
  }
  return "auto";
}

Dlb parse_dlb(std::string_view text) {
  if (text == "on" || text == "yes") return Dlb::on;
  if (text == "off" || text == "no") return Dlb::off;
  if (text == "auto") return Dlb::auto_;
  throw InvalidArgument("unknown dlb setting '" + std::string(text) + "'");
}

std::string_view to_string(Placement p) { return p == Placement::dense ? "dense" : "interleaved"; }

Placement parse_placement(std::string_view text) {
  if (text == "dense") return Placement::dense;
  if (text == "interleaved") return Placement::interleaved;
  throw InvalidArgument("unknown placement '" + std::string(text) + "'");
}

std::uint32_t LaunchConfig::gpus_used() const {
  std::set<char> ids(gpu_id.begin(), gpu_id.end());
  return static_cast<std::uint32_t>(ids.size());
}

std::vector<std::string> check_config(const LaunchConfig& cfg, const NodeSpec& node) {
  std::vector<std::string> bad;
  if (cfg.nodes < 1) bad.emplace_back("nodes must be >= 1");
  if (cfg.n_rank < 1) bad.emplace_back("n_rank must be >= 1");
  if (!bad.empty()) return bad;
  if (cfg.n_pme >= cfg.n_rank) bad.emplace_back("n_pme must leave at least one PP rank");
  if (!bad.empty()) return bad;

  const std::uint32_t pp = cfg.pp_ranks();
  if (pp % cfg.nodes != 0 || cfg.n_pme % cfg.nodes != 0)
    bad.emplace_back("PP and PME ranks must divide evenly over " + std::to_string(cfg.nodes) + " nodes");

  const std::uint64_t budget = static_cast<std::uint64_t>(total_hw_threads(node, cfg.use_ht)) * cfg.nodes;
  if (cfg.n_th > 0) {
    const std::uint64_t used = static_cast<std::uint64_t>(pp) * cfg.n_th +
                               static_cast<std::uint64_t>(cfg.n_pme) * cfg.pme_threads();
    if (used > budget)
      bad.emplace_back("thread budget exceeded: " + std::to_string(used) + " threads on " +
                       std::to_string(budget) + " hardware threads");
  } else if (cfg.n_rank > budget) {
    bad.emplace_back("more ranks than hardware threads");
  }
  if (cfg.n_th_pme > 0 && cfg.n_pme == 0) bad.emplace_back("n_th_pme set without PME ranks");

  if (!cfg.gpu_id.empty()) {
    if (cfg.gpu_id.size() != cfg.pp_ranks_per_node())
      bad.emplace_back("gpu_id '" + cfg.gpu_id + "' has " + std::to_string(cfg.gpu_id.size()) +
                       " digits for " + std::to_string(cfg.pp_ranks_per_node()) + " PP ranks per node");
    for (char c : cfg.gpu_id) {
      if (c < '0' || c > '9' || static_cast<std::uint32_t>(c - '0') >= node.gpu_count()) {
        bad.emplace_back("gpu_id digit '" + std::string(1, c) + "' does not name a GPU of this node");
        break;
      }
    }
  }
  if (cfg.dd_grid && cfg.dd_grid->cells() != pp)
    bad.emplace_back("dd_grid has " + std::to_string(cfg.dd_grid->cells()) + " cells for " +
                     std::to_string(pp) + " PP ranks");
  return bad;
}

void validate_config(const LaunchConfig& cfg, const NodeSpec& node) {
  const auto bad = check_config(cfg, node);
  if (bad.empty()) return;
  std::string msg = "invalid launch config: " + bad.front();
  for (std::size_t i = 1; i < bad.size(); ++i) msg += "; " + bad[i];
  throw InvalidConfig(msg);
}

std::string gpu_id_string(std::uint32_t n_gpus, std::uint32_t n_pp_ranks) {
  if (n_gpus < 1) throw InvalidConfig("gpu_id_string needs at least one GPU");
  if (n_gpus > 10) throw InvalidConfig("gpu_id strings address at most 10 GPUs");
  if (n_pp_ranks < n_gpus)
    throw InvalidConfig(std::to_string(n_pp_ranks) + " PP ranks cannot serve " + std::to_string(n_gpus) +
                        " GPUs (one rank per GPU minimum)");
  std::string s(n_pp_ranks, '0');
  for (std::uint32_t i = 0; i < n_pp_ranks; ++i)
    s[i] = static_cast<char>('0' + static_cast<std::uint64_t>(i) * n_gpus / n_pp_ranks);
  return s;
}

std::vector<std::uint32_t> pme_rank_candidates(std::uint32_t ranks) {
  static constexpr double fractions[] = {1.0 / 8, 1.0 / 6, 1.0 / 4, 1.0 / 3, 1.0 / 2};
  std::vector<std::uint32_t> out;
  for (double f : fractions) {
    const auto n = static_cast<std::uint32_t>(std::lround(ranks * f));
    if (n >= 1 && n < ranks && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  }
  return out;
}

namespace {

std::vector<std::uint32_t> divisors_desc(std::uint32_t n) {
  std::vector<std::uint32_t> d;
  for (std::uint32_t i = n; i >= 1; --i)
    if (n % i == 0) d.push_back(i);
  return d;
}

std::vector<bool> ht_settings_for(const NodeSpec& node, const EnumerationOptions& opt) {
  if (!opt.ht_settings.empty()) return opt.ht_settings;
  if (node.cpu.hardware_threads_per_core > 1) return {false, true};
  return {false};
}

void push_with_nstlist(std::vector<LaunchConfig>& out, LaunchConfig cfg, const EnumerationOptions& opt) {
  if (opt.nstlist.empty()) {
    out.push_back(std::move(cfg));
    return;
  }
  for (auto n : opt.nstlist) {
    cfg.nstlist = n;
    out.push_back(cfg);
  }
}

std::vector<ThreadSplit> thread_splits(std::uint32_t pair_threads) {
  // Threads shared by one PP rank and its PME partner: equal split plus +-1.
  std::vector<ThreadSplit> out;
  const std::uint32_t half = pair_threads / 2;
  for (std::int64_t d : {0, -1, 1}) {
    const std::int64_t pp = static_cast<std::int64_t>(half) + d;
    const std::int64_t pme = static_cast<std::int64_t>(pair_threads) - pp;
    if (pp >= 1 && pme >= 1) out.push_back({static_cast<std::uint32_t>(pp), static_cast<std::uint32_t>(pme)});
  }
  return out;
}

}  // namespace

std::vector<LaunchConfig> enumerate_single_node(const NodeSpec& node, const EnumerationOptions& opt) {
  node.validate();
  const std::uint32_t gpus = opt.gpus_active.value_or(node.gpu_count());
  if (gpus > node.gpu_count())
    throw InvalidConfig("gpus_active=" + std::to_string(gpus) + " but node has " +
                        std::to_string(node.gpu_count()) + " GPUs");
  if (gpus > 0 && opt.gpu_dlb.empty()) throw InvalidConfig("gpu_dlb list is empty");

  std::vector<LaunchConfig> out;
  for (bool ht : ht_settings_for(node, opt)) {
    const std::uint32_t threads = total_hw_threads(node, ht);
    for (std::uint32_t ranks : divisors_desc(threads)) {
      if (ranks < gpus) continue;
      LaunchConfig base;
      base.n_rank = ranks;
      base.n_th = threads / ranks;
      base.use_ht = ht;
      base.gpu_id = gpus > 0 ? gpu_id_string(gpus, ranks) : "";

      std::vector<Dlb> dlbs;
      if (ranks == 1) dlbs = {Dlb::auto_};
      else if (gpus > 0) dlbs = opt.gpu_dlb;
      else dlbs = {Dlb::on};
      for (Dlb d : dlbs) {
        base.dlb = d;
        push_with_nstlist(out, base, opt);
      }

      if (opt.pme_variants && gpus == 0 && threads >= 20 && ranks >= 8) {
        for (std::uint32_t npme : pme_rank_candidates(ranks)) {
          LaunchConfig v = base;
          v.n_pme = npme;
          v.dlb = Dlb::on;
          push_with_nstlist(out, v, opt);
        }
      }
    }
    if (opt.interleaved_pme && gpus > 0) {
      for (auto cfg : interleaved_pme_variants(node, ht, 1)) {
        if (cfg.gpu_id.size() != gpus) continue;
        std::vector<Dlb> dlbs = cfg.pp_ranks() > 1 ? opt.gpu_dlb : std::vector<Dlb>{Dlb::auto_};
        for (Dlb d : dlbs) {
          cfg.dlb = d;
          push_with_nstlist(out, cfg, opt);
        }
      }
    }
  }
  return out;
}

LaunchConfig interleaved_pme_layout(std::uint32_t nodes, std::uint32_t ranks_per_node,
                                    std::uint32_t gpus_per_node, std::optional<ThreadSplit> threads) {
  if (nodes < 1) throw InvalidConfig("interleaved layout needs at least one node");
  if (ranks_per_node < 2 || ranks_per_node % 2 != 0)
    throw InvalidConfig("interleaved PME layout needs an even number of ranks per node, got " +
                        std::to_string(ranks_per_node));
  if (gpus_per_node != ranks_per_node / 2)
    throw InvalidConfig("interleaved PME layout maps each PP rank to its own GPU: " +
                        std::to_string(ranks_per_node / 2) + " PP ranks per node but " +
                        std::to_string(gpus_per_node) + " GPUs");
  LaunchConfig cfg;
  cfg.nodes = nodes;
  cfg.n_rank = nodes * ranks_per_node;
  cfg.n_pme = cfg.n_rank / 2;
  cfg.gpu_id = gpu_id_string(gpus_per_node, ranks_per_node / 2);
  if (threads) {
    cfg.n_th = threads->n_th;
    cfg.n_th_pme = threads->n_th_pme == threads->n_th ? 0 : threads->n_th_pme;
  }
  return cfg;
}

std::vector<LaunchConfig> interleaved_pme_variants(const NodeSpec& node, bool use_ht, std::uint32_t nodes) {
  const std::uint32_t gpus = node.gpu_count();
  if (gpus == 0) return {};
  const std::uint32_t threads = total_hw_threads(node, use_ht);
  std::vector<LaunchConfig> out;
  for (const auto& split : thread_splits(threads / gpus)) {
    auto cfg = interleaved_pme_layout(nodes, 2 * gpus, gpus, split);
    cfg.use_ht = use_ht;
    out.push_back(cfg);
  }
  return out;
}

MultiSimPlan plan_multi_sim(const NodeSpec& node, std::uint32_t replicas, std::uint32_t nodes,
                            Placement placement, bool use_ht) {
  if (replicas < 1) throw InvalidConfig("multi-simulation needs at least one replica");
  if (nodes < 1) throw InvalidConfig("multi-simulation needs at least one node");
  const std::uint32_t threads = total_hw_threads(node, use_ht);
  const std::uint32_t gpus = node.gpu_count();

  // Replicas sharing one node, and nodes spanned by one replica.
  std::uint32_t per_node = 0;
  std::uint32_t span = 0;
  if (placement == Placement::interleaved) {
    per_node = replicas;
    span = nodes;
  } else if (nodes >= replicas) {
    if (nodes % replicas != 0)
      throw InvalidConfig("dense placement of " + std::to_string(replicas) + " replicas needs a node count divisible by it, got " +
                          std::to_string(nodes));
    per_node = 1;
    span = nodes / replicas;
  } else {
    if (replicas % nodes != 0)
      throw InvalidConfig("dense placement of " + std::to_string(replicas) + " replicas on " + std::to_string(nodes) +
                          " nodes leaves replicas unevenly packed");
    per_node = replicas / nodes;
    span = 1;
  }
  if (per_node > threads)
    throw InvalidConfig(std::to_string(per_node) + " replicas per node exceed " + std::to_string(threads) +
                        " hardware threads");

  const std::uint32_t ranks_on_node_per_replica =
      (gpus > per_node) ? (gpus + per_node - 1) / per_node : 1;
  const std::uint32_t ranks_on_node = per_node * ranks_on_node_per_replica;
  if (ranks_on_node > threads)
    throw InvalidConfig("not enough hardware threads for one rank per GPU per replica");

  MultiSimPlan plan;
  plan.replicas = replicas;
  plan.nodes = nodes;
  plan.placement = placement;
  plan.use_ht = use_ht;
  plan.threads_per_replica = threads / per_node;
  plan.threads_per_rank = plan.threads_per_replica / ranks_on_node_per_replica;
  plan.ranks_per_replica = ranks_on_node_per_replica * span;
  plan.leftover_threads = threads - ranks_on_node * plan.threads_per_rank;
  plan.per_replica_gpu_id = gpus > 0 ? gpu_id_string(gpus, ranks_on_node) : "";

  for (std::uint32_t r = 0; r < replicas; ++r) {
    const std::uint32_t first = placement == Placement::interleaved ? 0 : (r / per_node) * span;
    const std::uint32_t slot = placement == Placement::interleaved ? r : r % per_node;
    for (std::uint32_t n = first; n < first + span; ++n) {
      ReplicaSlot s;
      s.replica = r;
      s.node = n;
      s.ranks = ranks_on_node_per_replica;
      if (!plan.per_replica_gpu_id.empty())
        s.gpu_id = plan.per_replica_gpu_id.substr(slot * ranks_on_node_per_replica, ranks_on_node_per_replica);
      plan.layout.push_back(std::move(s));
    }
  }
  return plan;
}

namespace {

void append_tail(std::ostringstream& os, const EngineProfile& engine) {
  os << " -s " << engine.tpr;
  if (engine.nsteps > 0) os << " -nsteps " << engine.nsteps;
  if (engine.resetstep > 0) os << " -resetstep " << engine.resetstep;
  if (engine.resethway) os << " -resethway";
}

}  // namespace

std::string render_command(const LaunchConfig& cfg, const EngineProfile& engine) {
  std::ostringstream os;
  if (engine.flavor == MpiFlavor::external_mpi || cfg.nodes > 1)
    os << engine.mpirun << " -np " << cfg.n_rank << ' ' << engine.mdrun_mpi;
  else
    os << engine.mdrun << " -ntmpi " << cfg.n_rank;
  if (cfg.n_pme > 0) os << " -npme " << cfg.n_pme;
  if (cfg.dd_grid) os << " -dd " << cfg.dd_grid->x << ' ' << cfg.dd_grid->y << ' ' << cfg.dd_grid->z;
  if (cfg.n_th > 0) os << " -ntomp " << cfg.n_th;
  if (cfg.n_pme > 0 && cfg.n_th_pme > 0 && cfg.n_th_pme != cfg.n_th) os << " -ntomp_pme " << cfg.n_th_pme;
  if (cfg.dlb != Dlb::auto_) os << " -dlb " << (cfg.dlb == Dlb::on ? "yes" : "no");
  if (cfg.nstlist > 0) os << " -nstlist " << cfg.nstlist;
  if (!cfg.gpu_id.empty()) os << " -gpu_id " << cfg.gpu_id;
  append_tail(os, engine);
  return os.str();
}

std::string render_multi_command(const MultiSimPlan& plan, const EngineProfile& engine) {
  std::ostringstream os;
  os << engine.mpirun << " -np " << plan.replicas * plan.ranks_per_replica << ' ' << engine.mdrun_mpi;
  if (plan.replicas > 1) os << " -multi " << plan.replicas;
  os << " -ntomp " << plan.threads_per_rank;
  if (!plan.per_replica_gpu_id.empty()) os << " -gpu_id " << plan.per_replica_gpu_id;
  append_tail(os, engine);
  return os.str();
}

namespace {

struct Token {
  std::string_view text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back({s.substr(start, i - start), start});
  }
  return out;
}

std::uint32_t to_count(const Token& t) {
  std::uint32_t v = 0;
  const auto* end = t.text.data() + t.text.size();
  auto [p, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc{} || p != end) throw ParseError("expected a count, got '" + std::string(t.text) + "'", t.offset);
  return v;
}

}  // namespace

LaunchConfig parse_command(std::string_view command) {
  const auto toks = tokenize(command);
  LaunchConfig cfg;
  std::size_t i = 0;
  auto need = [&](std::size_t n) {
    if (i + n >= toks.size())
      throw ParseError("flag '" + std::string(toks[i].text) + "' is missing its value", toks[i].offset);
  };
  if (toks.empty()) throw ParseError("empty command", 0);
  if (toks[0].text.find("mpirun") != std::string_view::npos || toks[0].text.find("mpiexec") != std::string_view::npos) {
    if (toks.size() < 4 || (toks[1].text != "-np" && toks[1].text != "-n"))
      throw ParseError("expected '-np N <engine>' after the MPI launcher", toks[0].offset);
    cfg.n_rank = to_count(toks[2]);
    i = 4;  // launcher, flag, count, engine binary
  } else {
    i = 1;
  }
  for (; i < toks.size(); ++i) {
    const auto f = toks[i].text;
    if (f == "-ntmpi" || f == "-np") {
      need(1);
      cfg.n_rank = to_count(toks[++i]);
    } else if (f == "-npme") {
      need(1);
      cfg.n_pme = to_count(toks[++i]);
    } else if (f == "-ntomp") {
      need(1);
      cfg.n_th = to_count(toks[++i]);
    } else if (f == "-ntomp_pme") {
      need(1);
      cfg.n_th_pme = to_count(toks[++i]);
    } else if (f == "-dlb") {
      need(1);
      try {
        cfg.dlb = parse_dlb(toks[++i].text);
      } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), toks[i].offset);
      }
    } else if (f == "-nstlist") {
      need(1);
      cfg.nstlist = to_count(toks[++i]);
    } else if (f == "-gpu_id") {
      need(1);
      cfg.gpu_id = std::string(toks[++i].text);
    } else if (f == "-dd") {
      need(3);
      DdGrid g{to_count(toks[i + 1]), to_count(toks[i + 2]), to_count(toks[i + 3])};
      cfg.dd_grid = g;
      i += 3;
    } else if (f == "-s" || f == "-nsteps" || f == "-resetstep" || f == "-multi") {
      need(1);
      ++i;
    } else if (f == "-resethway") {
    } else {
      throw ParseError("unknown flag '" + std::string(f) + "'", toks[i].offset);
    }
  }
  if (cfg.n_pme > 0 && cfg.n_th_pme == cfg.n_th) cfg.n_th_pme = 0;
  return cfg;
}

std::string render_script(const std::vector<LaunchConfig>& configs, const EngineProfile& engine) {
  std::string out = "#!/bin/sh\n";
  for (const auto& c : configs) out += render_command(c, engine) + "\n";
  return out;
}

}  // namespace mdtune
