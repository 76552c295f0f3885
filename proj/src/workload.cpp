#include "mdtune/workload.hpp"

#include "mdtune/error.hpp"

namespace mdtune {

void Workload::validate() const {
  if (atoms == 0) throw InvalidConfig("workload.atoms must be > 0");
  if (!(time_step_fs > 0.0)) throw InvalidConfig("workload.time_step_fs must be > 0");
  if (steps <= reset_steps) throw InvalidConfig("workload.steps must exceed workload.reset_steps");
  if (!(box.x > 0.0 && box.y > 0.0 && box.z > 0.0)) throw InvalidConfig("workload.box_nm must be positive");
  if (!(rcoulomb_nm > 0.0)) throw InvalidConfig("workload.rcoulomb_nm must be > 0");
  if (!(fourier_spacing_nm > 0.0)) throw InvalidConfig("workload.fourier_spacing_nm must be > 0");
}

}  // namespace mdtune
