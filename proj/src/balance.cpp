#include "mdtune/balance.hpp"

#include <algorithm>
#include <cmath>

#include "mdtune/error.hpp"
#include "mdtune/numfmt.hpp"

namespace mdtune {

bool is_fft_friendly(std::uint32_t n) {
  if (n == 0) return false;
  for (std::uint32_t p : {2U, 3U, 5U, 7U})
    while (n % p == 0) n /= p;
  return n == 1;
}

std::uint32_t fft_size_at_least(double target) {
  if (!(target > 0.0) || !std::isfinite(target)) throw InvalidArgument("grid target must be positive");
  // Absorb floating-point noise so an exact quotient does not round up.
  auto n = static_cast<std::uint32_t>(std::ceil(target - 1e-9 * std::max(1.0, target)));
  n = std::max(n, 1U);
  while (!is_fft_friendly(n)) ++n;
  return n;
}

BalanceState balance_cutoff(double rc0, double spacing0, const Box& box, double k) {
  if (!(k >= 1.0)) throw InvalidArgument("cost multiplier k must be >= 1 (work only moves to the GPU)");
  if (!(rc0 > 0.0) || !(spacing0 > 0.0)) throw InvalidArgument("rc0 and spacing0 must be positive");
  if (!(box.x > 0.0 && box.y > 0.0 && box.z > 0.0)) throw InvalidArgument("box lengths must be positive");

  const double scale = std::cbrt(k);
  BalanceState s;
  s.k = k;
  s.box = box;
  s.rcoulomb = rc0 * scale;
  s.spacing = spacing0 * scale;
  s.grid0 = {fft_size_at_least(box.x / spacing0), fft_size_at_least(box.y / spacing0),
             fft_size_at_least(box.z / spacing0)};
  s.grid = {fft_size_at_least(box.x / s.spacing), fft_size_at_least(box.y / s.spacing),
            fft_size_at_least(box.z / s.spacing)};
  s.actual_spacing = std::max({box.x / s.grid.nx, box.y / s.grid.ny, box.z / s.grid.nz});
  s.pp_cost_ratio = k;
  s.pme_cost_ratio = static_cast<double>(s.grid.points()) / static_cast<double>(s.grid0.points());
  return s;
}

double SyntheticNodeProfile::thread_efficiency(std::uint32_t n_threads) const {
  if (n_threads <= 1) return 1.0;
  return 1.0 / (1.0 + thread_decay * (n_threads - 1));
}

void SyntheticNodeProfile::validate() const {
  node.validate();
  if (!(cpu_rate > 0) || !(gpu_rate > 0) || !(gpu_clock_scale > 0))
    throw InvalidConfig("profile rates must be positive");
  if (offload_fraction_base < 0 || pme_fraction < 0 || offload_fraction_base + pme_fraction > 1.0)
    throw InvalidConfig("profile work fractions must be >= 0 and sum to at most 1");
  if (update_work < 0 || nstlist_penalty < 0 || buffer_growth < 0 || thread_decay < 0)
    throw InvalidConfig("profile cost terms must be >= 0");
  if (!(ht_yield >= 1.0)) throw InvalidConfig("ht_yield must be >= 1");
  if (rank_overhead < 0 || gpu_launch_overhead < 0 || gpu_share_penalty < 0 || dd_imbalance < 0 || internode_latency < 0 || pme_alltoall < 0)
    throw InvalidConfig("profile overheads must be >= 0");
  if (dlb_residual < 0 || dlb_residual > 1) throw InvalidConfig("dlb_residual must be in [0,1]");
  if (!(max_k >= 1.0) || !(dlb_max_k >= 1.0)) throw InvalidConfig("profile k limits must be >= 1");
}

namespace {

constexpr double kStepK = 0.01;
constexpr double kRlistBuffer = 0.012;  // nm, rlist - rcoulomb in the log table
constexpr double kInvBetaPerRc = 0.289;  // 1/beta per nm of cutoff at the default Ewald tolerance

struct StepTimes {
  double total, t_cpu, t_gpu, t_pp, t_pme;
};

}  // namespace

SyntheticRun simulate(const SyntheticNodeProfile& p, const LaunchConfig& cfg, const Workload& w) {
  validate_config(cfg, p.node);
  w.validate();

  const double m = cfg.nodes;
  const std::uint32_t ranks_per_node = cfg.n_rank / cfg.nodes;
  const std::uint32_t pp_per_node = cfg.pp_ranks_per_node();
  const std::uint32_t pme_per_node = cfg.n_pme / cfg.nodes;
  const std::uint32_t hw = total_hw_threads(p.node, cfg.use_ht);
  const std::uint32_t n_th = cfg.n_th ? cfg.n_th : std::max(1U, hw / ranks_per_node);
  const std::uint32_t n_th_pme = cfg.n_pme ? (cfg.n_th_pme ? cfg.n_th_pme : n_th) : 0;

  // Threads beyond the physical cores share a core at ht_yield total throughput.
  const double used = static_cast<double>(pp_per_node) * n_th + static_cast<double>(pme_per_node) * n_th_pme;
  const double cores = p.node.cpu.physical_cores();
  const double node_rate = used <= cores ? used * p.cpu_rate : p.cpu_rate * (cores + (used - cores) * (p.ht_yield - 1.0));
  const double thread_rate = node_rate / used;

  const double cap_pp = pp_per_node * n_th * p.thread_efficiency(n_th) * thread_rate;
  const double cap_pme = cfg.n_pme ? pme_per_node * n_th_pme * p.thread_efficiency(n_th_pme) * thread_rate : 0.0;
  const std::uint32_t gpus = cfg.gpus_used();
  const double ranks_per_gpu = gpus > 0 ? std::ceil(static_cast<double>(pp_per_node) / gpus) : 0.0;
  const double cap_gpu =
      gpus > 0 ? gpus * p.gpu_rate * p.gpu_clock_scale / (1.0 + p.gpu_share_penalty * (ranks_per_gpu - 1.0)) : 0.0;

  const double atoms = static_cast<double>(w.atoms) / m;
  const std::uint32_t pp_total = cfg.pp_ranks();
  double imbalance = pp_total > 1 ? p.dd_imbalance * (1.0 - 1.0 / pp_total) : 0.0;
  if (cfg.dlb != Dlb::off) imbalance *= p.dlb_residual;
  const double imb = 1.0 + imbalance;

  const std::uint32_t nstlist = cfg.nstlist ? cfg.nstlist : (gpus > 0 ? 40U : 10U);
  const double buffer = 1.0 + p.buffer_growth * nstlist;
  const double search = p.nstlist_penalty / nstlist;

  const double comm = (pp_total > 1 ? p.rank_overhead * std::log2(static_cast<double>(pp_total)) : 0.0) +
                      (cfg.nodes > 1 ? p.internode_latency * std::log2(m) : 0.0);
  const double pme_participants = cfg.n_pme ? cfg.n_pme : pp_total;
  const double alltoall = p.pme_alltoall * pme_participants * (cfg.nodes > 1 ? 1.0 : 0.2);
  const double gpu_overhead = p.gpu_launch_overhead * ranks_per_gpu;
  const double bonded = 1.0 - p.offload_fraction_base - p.pme_fraction;

  auto times = [&](const BalanceState& bs) {
    const double nb = p.offload_fraction_base * bs.k * buffer * atoms;
    const double pme = p.pme_fraction * bs.pme_cost_ratio * atoms;
    const double cpu_work = bonded * atoms + (gpus == 0 ? nb : 0.0) + (cfg.n_pme == 0 ? pme : 0.0);
    StepTimes t{};
    t.t_cpu = cpu_work * imb / cap_pp;
    t.t_gpu = gpus > 0 ? nb / cap_gpu + gpu_overhead : 0.0;
    t.t_pp = std::max(t.t_cpu, t.t_gpu);
    t.t_pme = cfg.n_pme ? pme / cap_pme : 0.0;
    const double rest = (p.update_work + search) * atoms * imb / cap_pp;
    t.total = std::max(t.t_pp, t.t_pme) + rest + comm + alltoall;
    return t;
  };

  const bool tune = gpus > 0 || cfg.n_pme > 0;
  const double k_limit = (gpus > 0 && cfg.dlb != Dlb::off && pp_total > 1) ? std::min(p.max_k, p.dlb_max_k) : p.max_k;
  const Box& box = w.box;
  BalanceState best = balance_cutoff(w.rcoulomb_nm, w.fourier_spacing_nm, box, 1.0);
  StepTimes best_t = times(best);
  if (tune) {
    const int steps = static_cast<int>(std::floor((k_limit - 1.0) / kStepK + 1e-9));
    for (int i = 1; i <= steps; ++i) {
      const auto bs = balance_cutoff(w.rcoulomb_nm, w.fourier_spacing_nm, box, 1.0 + i * kStepK);
      const auto t = times(bs);
      if (t.total < best_t.total) {
        best = bs;
        best_t = t;
      }
    }
  }

  SyntheticRun run;
  run.step_time_s = best_t.total;
  run.performance = w.time_step_fs * 1e-6 * 86400.0 / best_t.total;
  run.balance = best;
  run.tuned = tune && best.k > 1.0;
  if (cfg.n_pme > 0) {
    run.pme_load = best_t.t_pme / best_t.t_pp;
    run.pme_wait_pct = 100.0 * std::fabs(best_t.t_pp - best_t.t_pme) / best_t.total;
  }
  if (gpus > 0) {
    run.gpu_ms = best_t.t_gpu * 1e3;
    run.cpu_ms = best_t.t_cpu * 1e3;
  }
  return run;
}

double predict_performance(const SyntheticNodeProfile& profile, const LaunchConfig& cfg, const Workload& workload) {
  return simulate(profile, cfg, workload).performance;
}

std::string synthetic_log(const SyntheticRun& run, const Workload& w) {
  PerfMetrics m;
  m.performance = round_display(run.performance, 3);
  if (run.tuned) {
    const auto base = balance_cutoff(w.rcoulomb_nm, w.fourier_spacing_nm, w.box, 1.0);
    auto row = [](const BalanceState& s) {
      LoadBalanceRow r;
      r.rcoulomb = round_display(s.rcoulomb, 3);
      r.rlist = round_display(s.rcoulomb + kRlistBuffer, 3);
      r.grid = s.grid;
      r.spacing = round_display(s.actual_spacing, 3);
      r.inv_beta = round_display(s.rcoulomb * kInvBetaPerRc, 3);
      return r;
    };
    ParsedLoadBalance lb;
    lb.initial = row(base);
    lb.final = row(run.balance);
    lb.cost_ratio_pp = round_display(run.balance.pp_cost_ratio, 2);
    lb.cost_ratio_pme = round_display(run.balance.pme_cost_ratio, 2);
    m.load_balance = lb;
  }
  if (run.pme_load) {
    PmeLoad pl;
    pl.load = round_display(*run.pme_load, 3);
    pl.wait_pct = round_display(*run.pme_wait_pct, 1);
    m.pme = pl;
    if (*pl.wait_pct >= 5.0) {
      const std::string pct = format_fixed(*pl.wait_pct, 1);
      if (pl.load < 1.0)
        m.notes.push_back({AdvisoryKind::pme_overprovisioned,
                           "NOTE: " + pct +
                               " % performance was lost because the PME nodes\n"
                               "      had less work to do than the PP nodes.\n"
                               "      You might want to decrease the number of PME nodes\n"
                               "      or decrease the cut-off and the grid spacing."});
      else
        m.notes.push_back({AdvisoryKind::other,
                           "NOTE: " + pct +
                               " % performance was lost because the PME nodes\n"
                               "      had more work to do than the PP nodes.\n"
                               "      You might want to increase the number of PME nodes\n"
                               "      or increase the cut-off and the grid spacing."});
    }
  }
  if (run.gpu_ms) {
    GpuCpuRatio g;
    g.gpu_ms = round_display(*run.gpu_ms, 3);
    g.cpu_ms = round_display(*run.cpu_ms, 3);
    g.ratio = g.cpu_ms > 0 ? round_display(g.gpu_ms / g.cpu_ms, 3) : 0.0;
    m.gpu_cpu = g;
    if (g.ratio < 0.75)
      m.notes.push_back({AdvisoryKind::gpu_underutilized,
                         "NOTE: The GPU has >25% less load than the CPU. This imbalance causes\n"
                         "      performance loss."});
    else if (g.ratio > 1.2)
      m.notes.push_back({AdvisoryKind::other,
                         "NOTE: The GPU has >20% more load than the CPU. This imbalance causes\n"
                         "      performance loss, consider using a shorter cut-off and a finer PME grid."});
  }
  return render_log(m);
}

}  // namespace mdtune
