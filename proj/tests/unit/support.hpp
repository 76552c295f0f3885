#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mdtune/hardware.hpp"

namespace testing {

// MDTUNE_SOURCE_DIR is set by CMake to the repository root.
inline std::filesystem::path repo_path(const std::string& rel) {
  return std::filesystem::path(MDTUNE_SOURCE_DIR) / rel;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string fixture(const std::string& name) { return slurp(repo_path("tests/fixtures/" + name)); }

inline nlohmann::ordered_json oracle(const std::string& name) {
  return nlohmann::ordered_json::parse(slurp(repo_path("tests/oracles/" + name)));
}

inline mdtune::GpuSpec gpu(const std::string& name, double price, std::uint32_t cores = 2048,
                           double clock = 1126.0) {
  mdtune::GpuSpec g;
  g.model_name = name;
  g.cuda_cores = cores;
  g.base_clock_mhz = clock;
  g.memory_gb = 4;
  g.price_eur = price;
  g.idle_power_w = 24;
  return g;
}

// Dual ten-core node with SMT and `gpus` identical cards.
inline mdtune::NodeSpec node_2x10(std::uint32_t gpus, double gpu_price = 450.0) {
  mdtune::NodeSpec n;
  n.cpu.model_name = "E5-2680v2";
  n.cpu.sockets = 2;
  n.cpu.cores_per_socket = 10;
  n.cpu.hardware_threads_per_core = 2;
  n.cpu.base_clock_mhz = 2800;
  n.node_price_eur = 4400;
  n.rack_units = 2;
  for (std::uint32_t i = 0; i < gpus; ++i) n.gpus.push_back(gpu("GTX 980+", gpu_price));
  return n;
}

}  // namespace testing

#include "mdtune/workload.hpp"

namespace testing {

inline mdtune::Workload mem_workload() {
  mdtune::Workload w;
  w.name = "MEM";
  w.atoms = 81743;
  w.time_step_fs = 2;
  w.steps = 15000;
  w.reset_steps = 10000;
  w.box = {10.8, 10.2, 9.6};
  w.rcoulomb_nm = 1.0;
  w.fourier_spacing_nm = 0.12;
  w.tpr = "MEM.tpr";
  return w;
}

inline mdtune::Workload rib_workload() {
  mdtune::Workload w;
  w.name = "RIB";
  w.atoms = 2136412;
  w.time_step_fs = 4;
  w.steps = 8000;
  w.reset_steps = 4000;
  w.box = {31.2, 31.2, 31.2};
  w.rcoulomb_nm = 1.0;
  w.fourier_spacing_nm = 0.135;
  w.tpr = "RIB.tpr";
  return w;
}

}  // namespace testing
