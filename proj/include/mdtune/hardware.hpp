#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mdtune {

struct GpuSpec {
  std::string model_name;
  std::uint32_t cuda_cores = 0;
  double base_clock_mhz = 0.0;
  std::optional<double> max_app_clock_mhz;
  double memory_gb = 0.0;
  std::optional<double> price_eur;
  std::optional<double> idle_power_w;
  bool supports_app_clocks = false;

  void validate() const;
};

struct CpuSpec {
  std::string model_name;
  std::uint32_t sockets = 1;
  std::uint32_t cores_per_socket = 1;
  std::uint32_t hardware_threads_per_core = 1;  // 1 or 2
  double base_clock_mhz = 0.0;

  std::uint32_t physical_cores() const { return sockets * cores_per_socket; }
  void validate() const;
};

enum class InterconnectKind { none, qdr_ib, fdr14_ib, other };

struct Interconnect {
  InterconnectKind kind = InterconnectKind::none;
  std::string label;  // free text for `other`

  std::string name() const;
  static Interconnect parse(const std::string& text);
};

struct NodeSpec {
  CpuSpec cpu;
  std::vector<GpuSpec> gpus;  // position defines the numeric GPU id
  double node_price_eur = 0.0;  // chassis + CPUs + RAM, without GPUs or network adapter
  Interconnect interconnect;
  std::optional<std::uint32_t> rack_units;  // empty: desktop chassis
  std::optional<double> idle_power_w;

  std::uint32_t gpu_count() const { return static_cast<std::uint32_t>(gpus.size()); }
  void validate() const;
};

struct ClusterSpec {
  NodeSpec node;
  std::uint32_t node_count = 1;
  double per_node_network_cost_eur = 0.0;

  void validate() const;
};

// Peak single-precision rate: cores x base clock x 2 flop (FMA) per cycle.
double sp_throughput_gflops(const GpuSpec& gpu);

std::uint32_t total_hw_threads(const NodeSpec& node, bool use_ht);

// Net price of the node with its first `active_gpus` cards installed.
// Throws MissingDatum when one of those cards has no price.
double node_investment(const NodeSpec& node, std::uint32_t active_gpus);

// Investment for the whole cluster; the network adapter is only paid for
// when more than one node is involved.
double cluster_investment(const ClusterSpec& cluster, std::uint32_t active_gpus);

}  // namespace mdtune
