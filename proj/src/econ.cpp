#include "mdtune/econ.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mdtune/error.hpp"
#include "mdtune/numfmt.hpp"

namespace mdtune {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

constexpr double hours_per_year = 365.0 * 24.0;

}  // namespace

void EconParams::validate() const {
  if (!finite_nonneg(lifetime_years)) throw InvalidArgument("lifetime_years must be >= 0");
  if (!finite_nonneg(energy_price_eur_per_kwh)) throw InvalidArgument("energy_price_eur_per_kwh must be >= 0");
  if (!finite_nonneg(per_node_network_cost_eur)) throw InvalidArgument("per_node_network_cost_eur must be >= 0");
}

std::string to_string(PowerKind k) {
  return k == PowerKind::meter_kwh_per_300s ? "meter_kwh_per_300s" : "direct_watts";
}

PowerKind parse_power_kind(const std::string& s) {
  if (s == "meter_kwh_per_300s") return PowerKind::meter_kwh_per_300s;
  if (s == "direct_watts") return PowerKind::direct_watts;
  throw InvalidArgument("unknown power reading kind '" + s + "'");
}

void PowerReading::validate() const {
  if (!finite_nonneg(value)) throw InvalidArgument("power reading must be a finite value >= 0");
  if (gpus_active > gpus_installed) throw InvalidArgument("gpus_active exceeds gpus_installed");
  if (!finite_nonneg(idle_gpu_power_w)) throw InvalidArgument("idle_gpu_power_w must be >= 0");
}

double effective_power(const PowerReading& r) {
  r.validate();
  // kWh per 300 s -> W: x 1000 Wh/kWh x 12 intervals per hour
  double w = r.kind == PowerKind::meter_kwh_per_300s ? r.value * 1000.0 * 12.0 : r.value;
  w -= static_cast<double>(r.gpus_installed - r.gpus_active) * r.idle_gpu_power_w;
  if (w < 0.0) throw InvalidArgument("inconsistent power reading: idle-card correction exceeds the draw");
  return w;
}

double energy_cost(double power_w, const EconParams& params) {
  params.validate();
  if (!finite_nonneg(power_w)) throw InvalidArgument("power must be >= 0");
  return params.lifetime_years * power_w * hours_per_year * params.energy_price_eur_per_kwh / 1000.0;
}

EconRow econ_row(double performance, double power_w, double node_cost, const EconParams& params) {
  if (!(performance > 0.0) || !std::isfinite(performance)) throw InvalidArgument("performance must be > 0");
  if (!finite_nonneg(node_cost)) throw InvalidArgument("node cost must be >= 0");
  EconRow r;
  r.performance = performance;
  r.effective_power_w = power_w;
  r.node_cost = node_cost;
  r.energy_cost = energy_cost(power_w, params);
  r.production_us = performance * 0.365 * params.lifetime_years;
  const double total = r.energy_cost + node_cost;
  r.trajectory_cost = r.production_us > 0.0 ? total / r.production_us : 0.0;
  r.yield = total > 0.0 ? r.production_us / (total / 1000.0) : std::numeric_limits<double>::infinity();
  return r;
}

EconRow econ_row_display(double performance, double power_w, double node_cost, const EconParams& params,
                         const DisplayDigits& d) {
  if (!(performance > 0.0) || !std::isfinite(performance)) throw InvalidArgument("performance must be > 0");
  if (!finite_nonneg(node_cost)) throw InvalidArgument("node cost must be >= 0");
  EconRow r;
  r.performance = performance;
  r.node_cost = node_cost;
  r.effective_power_w = round_display(power_w, d.power);
  r.energy_cost = round_display(energy_cost(r.effective_power_w, params), d.energy);
  r.production_us = round_display(performance * 0.365 * params.lifetime_years, d.production);
  const double total = r.energy_cost + node_cost;
  r.trajectory_cost = r.production_us > 0.0 ? round_display(total / r.production_us, d.trajectory_cost) : 0.0;
  r.yield = total > 0.0 ? round_display(d.yield_scale * r.production_us / (total / 1000.0), d.yield)
                        : std::numeric_limits<double>::infinity();
  return r;
}

double perf_per_price(double performance, double cost, double normalizer) {
  if (!(cost > 0.0)) throw InvalidArgument("cost must be > 0");
  if (!(normalizer > 0.0)) throw InvalidArgument("normalizer must be > 0");
  return performance / (cost / normalizer);
}

double parallel_efficiency(double p_m, std::uint32_t m, double p_1) {
  if (m < 1) throw InvalidArgument("node count must be >= 1");
  if (!(p_1 > 0.0)) throw InvalidArgument("single-node performance must be > 0");
  return p_m / (static_cast<double>(m) * p_1);
}

double multi_sim_gain(double p_single, double p_per_replica) {
  if (!(p_single > 0.0) || !(p_per_replica > 0.0)) throw InvalidArgument("performances must be > 0");
  return 100.0 * (p_per_replica / p_single - 1.0);
}

ClockFit clock_perf_fit(const std::vector<ClockPoint>& points, double default_mhz, double max_mhz) {
  if (points.size() < 2) throw InvalidArgument("clock fit needs at least two points");
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    sx += p.clock_mhz;
    sy += p.performance;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    sxx += (p.clock_mhz - mx) * (p.clock_mhz - mx);
    sxy += (p.clock_mhz - mx) * (p.performance - my);
  }
  if (sxx == 0.0) throw InvalidArgument("clock fit needs at least two distinct clock values");
  ClockFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double at_default = f.intercept + f.slope * default_mhz;
  if (!(at_default > 0.0)) throw InvalidArgument("fitted performance at the default clock is not positive");
  f.gain = (f.intercept + f.slope * max_mhz) / at_default - 1.0;
  return f;
}

double normalize_compiler(double performance, double from_ratio, double to_ratio) {
  if (!(from_ratio > 0.0) || !(to_ratio > 0.0)) throw InvalidArgument("compiler ratios must be > 0");
  return performance * to_ratio / from_ratio;
}

double compiler_speedup_pct(double mem, double rib, double base_mem, double base_rib) {
  if (!(base_mem > 0.0) || !(base_rib > 0.0)) throw InvalidArgument("baseline performances must be > 0");
  return 100.0 * ((mem / base_mem + rib / base_rib) / 2.0 - 1.0);
}

std::string to_string(Criterion c) { return "C" + std::to_string(static_cast<int>(c) + 1); }

Criterion parse_criterion(const std::string& s) {
  if (s.size() == 2 && (s[0] == 'C' || s[0] == 'c') && s[1] >= '1' && s[1] <= '5')
    return static_cast<Criterion>(s[1] - '1');
  throw InvalidArgument("unknown criterion '" + s + "' (expected C1..C5)");
}

bool higher_is_better(Criterion c) { return c != Criterion::c5_rack_space; }

std::optional<double> HardwareCandidate::value(Criterion c) const {
  switch (c) {
    case Criterion::c1_perf_per_price: return perf_per_price;
    case Criterion::c2_node_performance: return node_performance;
    case Criterion::c3_time_to_solution: return time_to_solution;
    case Criterion::c4_yield: return yield;
    case Criterion::c5_rack_space: return rack_units;
  }
  return std::nullopt;
}

CriteriaWeights parse_weights(const std::string& text) {
  if (text == "lifetime-yield") return {{Criterion::c4_yield, 1.0}};
  if (text == "perf-per-price") return {{Criterion::c1_perf_per_price, 1.0}};
  CriteriaWeights w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("weight '" + item + "' is not of the form Cn=value");
    const auto c = parse_criterion(item.substr(0, eq));
    double v = 0.0;
    if (!parse_double(item.substr(eq + 1), v) || !finite_nonneg(v))
      throw InvalidArgument("weight for " + to_string(c) + " must be a number >= 0");
    if (w.count(c)) throw InvalidArgument("weight for " + to_string(c) + " given twice");
    w[c] = v;
  }
  if (w.empty()) throw InvalidArgument("no criteria weights given");
  return w;
}

std::vector<RankedCandidate> rank_hardware(const std::vector<HardwareCandidate>& rows,
                                           const CriteriaWeights& weights) {
  double total_weight = 0.0;
  for (const auto& [c, w] : weights) {
    if (!finite_nonneg(w)) throw InvalidArgument("weight for " + to_string(c) + " must be >= 0");
    total_weight += w;
  }
  if (!(total_weight > 0.0)) throw InvalidArgument("at least one criterion needs a positive weight");

  std::vector<RankedCandidate> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i].index = i;

  for (const auto& [c, w] : weights) {
    if (w == 0.0) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : rows) {
      const auto v = r.value(c);
      if (!v || !std::isfinite(*v))
        throw MissingDatum("row '" + r.label + "' has no value for weighted criterion " + to_string(c));
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double v = *rows[i].value(c);
      double norm = hi > lo ? (v - lo) / (hi - lo) : 1.0;
      if (!higher_is_better(c)) norm = hi > lo ? (hi - v) / (hi - lo) : 1.0;
      out[i].score += w * norm;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedCandidate& a, const RankedCandidate& b) { return a.score > b.score; });
  return out;
}

}  // namespace mdtune
