#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mdtune/hardware.hpp"
#include "mdtune/launch.hpp"
#include "mdtune/log_parser.hpp"
#include "mdtune/workload.hpp"

namespace mdtune {

// Cutoff and PME grid after shifting k times the short-range work to the GPU.
struct BalanceState {
  double k = 1.0;
  double rcoulomb = 0.0;
  double spacing = 0.0;         // nominal: spacing0 scaled like the cutoff
  double actual_spacing = 0.0;  // max over dimensions of L / grid
  Grid3 grid;
  Grid3 grid0;
  Box box;
  double pp_cost_ratio = 1.0;
  double pme_cost_ratio = 1.0;
};

// True when n > 0 has no prime factor above 7.
bool is_fft_friendly(std::uint32_t n);

// Smallest FFT-friendly size that covers `target` grid points.
std::uint32_t fft_size_at_least(double target);

BalanceState balance_cutoff(double rc0, double spacing0, const Box& box, double k);

// Tuning constants of the synthetic performance model. The defaults are
// picked so the orchestrator sees realistic shapes: rank-parallel beats
// thread-parallel on CPU-only nodes, GPU nodes peak at 4-5 threads per rank,
// and the neighbor-search interval has an interior optimum.
struct SyntheticNodeProfile {
  NodeSpec node;

  double cpu_rate = 1.0e6;   // work units per second per core
  double gpu_rate = 3.0e7;   // work units per second per GPU at base clock
  double gpu_clock_scale = 1.0;  // application clock / base clock

  // Shares of one unit of per-atom force work at k = 1.
  double offload_fraction_base = 0.60;  // short-range nonbonded, GPU-capable
  double pme_fraction = 0.25;           // reciprocal-space mesh
  // The remainder is bonded work, which stays on the CPU.
  double update_work = 0.10;            // integration and constraints, not overlapped

  double nstlist_penalty = 1.0;     // work units per atom per neighbor search
  double buffer_growth = 0.012;     // relative pair-list growth per step of nstlist
  double thread_decay = 0.03;       // efficiency(n) = 1 / (1 + decay (n - 1))
  double ht_yield = 1.15;           // throughput of a core running two hardware threads

  double rank_overhead = 4.0e-5;      // s per step per log2(PP ranks), halo exchange
  double gpu_launch_overhead = 1.0e-5;  // s per step per rank sharing a GPU
  double gpu_share_penalty = 0.05;    // GPU slowdown per extra rank sharing it
  double dd_imbalance = 0.08;         // load imbalance without DLB at many ranks
  double dlb_residual = 0.25;         // fraction of that imbalance left with DLB
  double dlb_max_k = 2.0;             // DLB cell limits cap the cutoff scaling
  double max_k = 5.0;
  double internode_latency = 6.0e-5;  // s per step per log2(nodes)
  double pme_alltoall = 3.0e-6;       // s per step per rank taking part in the PME transpose

  double thread_efficiency(std::uint32_t n_threads) const;
  void validate() const;
};

// Everything the model decided for one config; feeds the synthetic md.log.
struct SyntheticRun {
  double performance = 0.0;  // ns/day
  double step_time_s = 0.0;
  BalanceState balance;
  bool tuned = false;  // cutoff scaling was active
  std::optional<double> pme_load;
  std::optional<double> pme_wait_pct;
  std::optional<double> gpu_ms;
  std::optional<double> cpu_ms;
};

SyntheticRun simulate(const SyntheticNodeProfile& profile, const LaunchConfig& cfg, const Workload& workload);

double predict_performance(const SyntheticNodeProfile& profile, const LaunchConfig& cfg,
                           const Workload& workload);

// Log text for a simulated run, using the engine's wording and rounding.
std::string synthetic_log(const SyntheticRun& run, const Workload& workload);

}  // namespace mdtune
