#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "eitstore/units.hpp"

namespace eitstore {

/// Characteristic-aligned space-time lattice: dz = c dt exactly, so the Lax
/// transport step moves the field by exactly one cell per step (CFL = 1) and
/// the advection term is dispersion-free. Grid points j = 0..nz sit at
/// z = j dz; point 0 is the entrance, point nz the exit face.
struct FieldGrid {
  int nz = 0;        // number of spatial steps (nz+1 points)
  long nt = 0;       // number of time steps
  double dz = 0.0;   // m
  double dt = 0.0;   // s
  std::vector<complexd> omega_c;  // current row, nz+1 points
  std::vector<complexd> omega_s;

  static FieldGrid make(double dt, double cell_length, double duration) {
    if (!(dt > 0.0) || !(cell_length > 0.0) || !(duration > 0.0))
      throw std::invalid_argument("FieldGrid: dt, cell_length and duration must be > 0");
    FieldGrid g;
    g.dt = dt;
    g.dz = speed_of_light * dt;
    g.nz = static_cast<int>(std::llround(cell_length / g.dz));
    if (g.nz < 2) throw std::invalid_argument("FieldGrid: fewer than 2 spatial steps; decrease dt");
    if (std::abs(g.nz * g.dz - cell_length) > g.dz)
      throw std::invalid_argument("FieldGrid: nz dz deviates from cell_length by more than one dz");
    g.nt = static_cast<long>(std::llround(duration / dt));
    g.omega_c.assign(g.nz + 1, complexd{0.0, 0.0});
    g.omega_s.assign(g.nz + 1, complexd{0.0, 0.0});
    return g;
  }
};

}  // namespace eitstore
