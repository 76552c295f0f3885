#include "mdtune/hardware.hpp"

#include "mdtune/error.hpp"

namespace mdtune {

void GpuSpec::validate() const {
  if (cuda_cores == 0) throw InvalidConfig("gpu '" + model_name + "': cuda_cores must be > 0");
  if (!(base_clock_mhz > 0.0))
    throw InvalidConfig("gpu '" + model_name + "': base_clock_mhz must be > 0");
  if (max_app_clock_mhz && *max_app_clock_mhz < base_clock_mhz)
    throw InvalidConfig("gpu '" + model_name + "': max_app_clock_mhz below base clock");
  if (price_eur && *price_eur < 0.0) throw InvalidConfig("gpu '" + model_name + "': negative price");
  if (idle_power_w && *idle_power_w < 0.0)
    throw InvalidConfig("gpu '" + model_name + "': negative idle power");
}

void CpuSpec::validate() const {
  if (sockets < 1) throw InvalidConfig("cpu: sockets must be >= 1");
  if (cores_per_socket < 1) throw InvalidConfig("cpu: cores_per_socket must be >= 1");
  if (hardware_threads_per_core != 1 && hardware_threads_per_core != 2)
    throw InvalidConfig("cpu: hardware_threads_per_core must be 1 or 2");
}

std::string Interconnect::name() const {
  switch (kind) {
    case InterconnectKind::none: return "none";
    case InterconnectKind::qdr_ib: return "qdr_ib";
    case InterconnectKind::fdr14_ib: return "fdr14_ib";
    case InterconnectKind::other: return label;
  }
  return label;
}

Interconnect Interconnect::parse(const std::string& text) {
  if (text == "none" || text.empty()) return {InterconnectKind::none, ""};
  if (text == "qdr_ib") return {InterconnectKind::qdr_ib, ""};
  if (text == "fdr14_ib") return {InterconnectKind::fdr14_ib, ""};
  return {InterconnectKind::other, text};
}

void NodeSpec::validate() const {
  cpu.validate();
  for (const auto& g : gpus) g.validate();
  if (node_price_eur < 0.0) throw InvalidConfig("node_price must be >= 0");
  if (rack_units && *rack_units == 0) throw InvalidConfig("rack_units must be >= 1 or \"desktop\"");
}

void ClusterSpec::validate() const {
  node.validate();
  if (node_count < 1) throw InvalidConfig("node_count must be >= 1");
  if (per_node_network_cost_eur < 0.0) throw InvalidConfig("per_node_network_cost must be >= 0");
}

double sp_throughput_gflops(const GpuSpec& gpu) {
  return static_cast<double>(gpu.cuda_cores) * gpu.base_clock_mhz * 2.0 / 1000.0;
}

std::uint32_t total_hw_threads(const NodeSpec& node, bool use_ht) {
  return node.cpu.physical_cores() * (use_ht ? node.cpu.hardware_threads_per_core : 1U);
}

double node_investment(const NodeSpec& node, std::uint32_t active_gpus) {
  if (active_gpus > node.gpu_count())
    throw InvalidConfig("node has " + std::to_string(node.gpu_count()) + " GPUs, " +
                        std::to_string(active_gpus) + " requested");
  double total = node.node_price_eur;
  for (std::uint32_t i = 0; i < active_gpus; ++i) {
    const auto& g = node.gpus[i];
    if (!g.price_eur) throw MissingDatum("price of gpu " + std::to_string(i) + " ('" + g.model_name + "')");
    total += *g.price_eur;
  }
  return total;
}

double cluster_investment(const ClusterSpec& cluster, std::uint32_t active_gpus) {
  const double per_node = node_investment(cluster.node, active_gpus) +
                          (cluster.node_count > 1 ? cluster.per_node_network_cost_eur : 0.0);
  return per_node * cluster.node_count;
}

}  // namespace mdtune
