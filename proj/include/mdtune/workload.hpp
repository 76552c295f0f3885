#pragma once

#include <cstdint>
#include <string>

namespace mdtune {

struct Box {
  double x = 0.0, y = 0.0, z = 0.0;  // nm
  bool operator==(const Box&) const = default;
};

// The benchmark input: what the engine is asked to simulate and for how long.
struct Workload {
  std::string name;
  std::uint64_t atoms = 0;
  double time_step_fs = 2.0;
  std::uint64_t steps = 5000;
  std::uint64_t reset_steps = 0;  // steps excluded from timing
  Box box;
  double rcoulomb_nm = 1.0;
  double fourier_spacing_nm = 0.12;
  std::string tpr = "in.tpr";

  void validate() const;
  bool operator==(const Workload&) const = default;
};

}  // namespace mdtune
