// Substation-level operators of the chain topology.
#pragma once

#include "dctps/line.hpp"
#include "dctps/types.hpp"

namespace dctps {

/// Dense operators relating substation voltages, branch quantities and
/// substation current injections on the N-node chain. Branch i joins
/// substations i and i+1 and carries the lumped catenary+rail resistance.
struct StructuralMatrices {
  Matrix difference;       // (N-1)xN forward difference: branch voltage from node voltages
  Matrix incidence;        // Nx(N-1): node injections from branch currents (== difference^T)
  Matrix accumulation;     // (N-1)xN running sum: branch currents from node injections
  Matrix integration;      // Nx(N-1) suffix sum: node voltages from branch voltages,
                           //   referenced to the last substation
  Vector branch_resistance_ohm;   // N-1
  Vector branch_conductance;      // N-1, exactly 1/resistance
  Vector catenary_resistance_ohm; // N-1, reporting split
  Vector rail_resistance_ohm;     // N-1
  Matrix loss_quadratic;   // NxN PSD form of the coordinated-control ohmic loss,
                           //   restricted to the zero-sum current subspace where it
                           //   equals accumulation^T R accumulation; kernel = span(1)

  int n_tss() const { return static_cast<int>(incidence.rows()); }
};

StructuralMatrices structural_matrices(const LineModel& line);

}  // namespace dctps
