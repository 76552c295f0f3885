#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mdtune {

struct EconParams {
  double lifetime_years = 5.0;
  double energy_price_eur_per_kwh = 0.2;  // including cooling
  double per_node_network_cost_eur = 0.0;

  void validate() const;
};

enum class PowerKind { meter_kwh_per_300s, direct_watts };

std::string to_string(PowerKind k);
PowerKind parse_power_kind(const std::string& s);

struct PowerReading {
  PowerKind kind = PowerKind::direct_watts;
  double value = 0.0;
  std::uint32_t gpus_installed = 0;
  std::uint32_t gpus_active = 0;
  double idle_gpu_power_w = 0.0;  // per installed but unused card

  void validate() const;
};

// Average draw in W with the idle cards that a node would not carry removed.
double effective_power(const PowerReading& r);

struct EconRow {
  double performance = 0.0;       // ns/day
  double production_us = 0.0;     // over the lifetime
  double effective_power_w = 0.0;
  double energy_cost = 0.0;       // EUR over the lifetime
  double node_cost = 0.0;         // EUR
  double trajectory_cost = 0.0;   // EUR per us
  double yield = 0.0;             // us per 1000 EUR

  bool operator==(const EconRow&) const = default;
};

double energy_cost(double power_w, const EconParams& params);

EconRow econ_row(double performance, double power_w, double node_cost, const EconParams& params);

// Rounding applied at each step of the printed tables: power, then energy
// from the rounded power, production, cost and yield from rounded inputs.
struct DisplayDigits {
  int power = 2;
  int energy = 0;
  int production = 2;
  int trajectory_cost = 0;
  int yield = 3;
  double yield_scale = 1.0;  // 1000 prints ns instead of us per 1000 EUR
};

EconRow econ_row_display(double performance, double power_w, double node_cost, const EconParams& params,
                         const DisplayDigits& digits = {});

double perf_per_price(double performance, double cost, double normalizer);

double parallel_efficiency(double p_m, std::uint32_t m, double p_1);

// Percent gain of each replica in a multi-simulation over the single run.
double multi_sim_gain(double p_single, double p_per_replica);

struct ClockPoint {
  double clock_mhz = 0.0;
  double performance = 0.0;
};

struct ClockFit {
  double slope = 0.0;      // ns/day per MHz
  double intercept = 0.0;
  double gain = 0.0;       // fit(max)/fit(default) - 1

  bool operator==(const ClockFit&) const = default;
};

ClockFit clock_perf_fit(const std::vector<ClockPoint>& points, double default_mhz, double max_mhz);

double normalize_compiler(double performance, double from_ratio, double to_ratio);

// Mean percent speedup over two benchmarks relative to a baseline compiler.
double compiler_speedup_pct(double mem, double rib, double base_mem, double base_rib);

enum class Criterion { c1_perf_per_price, c2_node_performance, c3_time_to_solution, c4_yield, c5_rack_space };

constexpr std::size_t criterion_count = 5;

std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& s);  // "C1".."C5"
bool higher_is_better(Criterion c);

struct HardwareCandidate {
  std::string label;
  std::optional<double> perf_per_price;
  std::optional<double> node_performance;   // ns/day on one node
  std::optional<double> time_to_solution;   // best ns/day at any node count
  std::optional<double> yield;              // trajectory per 1000 EUR
  std::optional<double> rack_units;         // empty for desktop chassis

  std::optional<double> value(Criterion c) const;
  bool operator==(const HardwareCandidate&) const = default;
};

using CriteriaWeights = std::map<Criterion, double>;

// "C1=0.5,C4=1" or a preset name such as "lifetime-yield".
CriteriaWeights parse_weights(const std::string& text);

struct RankedCandidate {
  std::size_t index = 0;  // position in the input
  double score = 0.0;
};

// Weighted sum of min-max normalized criteria, best first; ties keep input order.
std::vector<RankedCandidate> rank_hardware(const std::vector<HardwareCandidate>& rows,
                                           const CriteriaWeights& weights);

}  // namespace mdtune
