#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdtune/hardware.hpp"

namespace mdtune {

enum class Dlb { auto_, on, off };

std::string_view to_string(Dlb d);
Dlb parse_dlb(std::string_view text);

struct DdGrid {
  std::uint32_t x = 1, y = 1, z = 1;
  std::uint32_t cells() const { return x * y * z; }
  bool operator==(const DdGrid&) const = default;
};

// One candidate engine invocation. Zero in n_th / n_th_pme / nstlist means
// "leave it to the engine" and is not rendered.
struct LaunchConfig {
  std::uint32_t n_rank = 1;
  std::uint32_t n_th = 0;
  std::uint32_t n_pme = 0;
  std::uint32_t n_th_pme = 0;
  Dlb dlb = Dlb::auto_;
  std::string gpu_id;
  bool use_ht = false;
  std::uint32_t nstlist = 0;
  std::optional<DdGrid> dd_grid;
  std::uint32_t nodes = 1;

  std::uint32_t pp_ranks() const { return n_rank - n_pme; }
  std::uint32_t pp_ranks_per_node() const { return pp_ranks() / nodes; }
  std::uint32_t pme_threads() const { return n_th_pme != 0 ? n_th_pme : n_th; }
  // Number of distinct GPUs referenced by gpu_id.
  std::uint32_t gpus_used() const;

  bool operator==(const LaunchConfig&) const = default;
};

// Human-readable list of every violated invariant; empty when valid.
std::vector<std::string> check_config(const LaunchConfig& cfg, const NodeSpec& node);
void validate_config(const LaunchConfig& cfg, const NodeSpec& node);

// Digit i maps PP rank i to GPU floor(i * n_gpus / n_pp_ranks).
std::string gpu_id_string(std::uint32_t n_gpus, std::uint32_t n_pp_ranks);

struct EnumerationOptions {
  std::vector<bool> ht_settings;              // empty: off, plus on when the CPU has SMT
  std::optional<std::uint32_t> gpus_active;   // default: every GPU in the node
  std::vector<Dlb> gpu_dlb{Dlb::off, Dlb::on};  // DLB settings tried for GPU runs
  std::vector<std::uint32_t> nstlist;         // empty: engine default
  bool pme_variants = true;                   // scan (d) on large CPU-only nodes
  bool interleaved_pme = false;               // add interleaved PP/PME layouts on GPU nodes
};

std::vector<LaunchConfig> enumerate_single_node(const NodeSpec& node,
                                                const EnumerationOptions& options = {});

// Candidate PME rank counts for a run with `ranks` total ranks.
std::vector<std::uint32_t> pme_rank_candidates(std::uint32_t ranks);

struct ThreadSplit {
  std::uint32_t n_th = 0;
  std::uint32_t n_th_pme = 0;
};

// Half of every node's ranks do PME; the PP half maps one-to-one onto GPUs.
LaunchConfig interleaved_pme_layout(std::uint32_t nodes, std::uint32_t ranks_per_node,
                                    std::uint32_t gpus_per_node,
                                    std::optional<ThreadSplit> threads = std::nullopt);

// Interleaved layouts for one node count with the thread splits that fill the node.
std::vector<LaunchConfig> interleaved_pme_variants(const NodeSpec& node, bool use_ht,
                                                   std::uint32_t nodes = 1);

enum class Placement { dense, interleaved };

std::string_view to_string(Placement p);
Placement parse_placement(std::string_view text);

struct ReplicaSlot {
  std::uint32_t replica = 0;
  std::uint32_t node = 0;
  std::uint32_t ranks = 0;
  std::string gpu_id;  // per-rank GPU ids of this replica's ranks on this node

  bool operator==(const ReplicaSlot&) const = default;
};

struct MultiSimPlan {
  std::uint32_t replicas = 1;
  std::uint32_t nodes = 1;
  Placement placement = Placement::dense;
  bool use_ht = true;
  std::uint32_t threads_per_replica = 0;   // per node the replica occupies
  std::uint32_t ranks_per_replica = 0;     // total over all its nodes
  std::uint32_t threads_per_rank = 0;
  std::uint32_t leftover_threads = 0;      // per node, left idle by integer division
  std::string per_replica_gpu_id;          // node-level -gpu_id string for the whole -multi run
  std::vector<ReplicaSlot> layout;

  bool operator==(const MultiSimPlan&) const = default;
};

MultiSimPlan plan_multi_sim(const NodeSpec& node, std::uint32_t replicas, std::uint32_t nodes,
                            Placement placement, bool use_ht = true);

enum class MpiFlavor { thread_mpi, external_mpi };

struct EngineProfile {
  MpiFlavor flavor = MpiFlavor::thread_mpi;
  std::string mdrun = "mdrun";
  std::string mdrun_mpi = "mdrun_mpi";
  std::string mpirun = "mpirun";
  std::string tpr = "in.tpr";
  std::uint64_t nsteps = 0;     // 0: not rendered
  std::uint64_t resetstep = 0;  // 0: not rendered
  bool resethway = false;
  std::string log_file = "md.log";

  bool operator==(const EngineProfile&) const = default;
};

std::string render_command(const LaunchConfig& cfg, const EngineProfile& engine = {});
std::string render_multi_command(const MultiSimPlan& plan, const EngineProfile& engine = {});

// Inverse of render_command for the fields it encodes.
LaunchConfig parse_command(std::string_view command);

// "#!/bin/sh" followed by one rendered command per line.
std::string render_script(const std::vector<LaunchConfig>& configs, const EngineProfile& engine);

}  // namespace mdtune
