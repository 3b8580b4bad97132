#include "dctps/structural.hpp"

namespace dctps {

StructuralMatrices structural_matrices(const LineModel& line) {
  const int n = line.n_tss();
  StructuralMatrices s;

  s.difference = Matrix::Zero(n - 1, n);
  for (int i = 0; i < n - 1; ++i) {
    s.difference(i, i) = 1.0;
    s.difference(i, i + 1) = -1.0;
  }
  s.incidence = s.difference.transpose();

  s.accumulation = Matrix::Zero(n - 1, n);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j <= i; ++j) s.accumulation(i, j) = 1.0;

  s.integration = Matrix::Zero(n, n - 1);
  for (int i = 0; i < n - 1; ++i)
    for (int j = i; j < n - 1; ++j) s.integration(i, j) = 1.0;

  s.catenary_resistance_ohm.resize(n - 1);
  s.rail_resistance_ohm.resize(n - 1);
  s.branch_resistance_ohm.resize(n - 1);
  s.branch_conductance.resize(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    const double gap = line.positions_km(i + 1) - line.positions_km(i);
    s.catenary_resistance_ohm(i) = line.rho_catenary_ohm_km(i) * gap;
    s.rail_resistance_ohm(i) = line.rho_rail_ohm_km(i) * gap;
    s.branch_resistance_ohm(i) = line.rho_lumped_ohm_km(i) * gap;
    s.branch_conductance(i) = 1.0 / s.branch_resistance_ohm(i);
  }

  // Quadratic loss form. The raw accumulation^T R accumulation form is only
  // meaningful on zero-sum injections; projecting out the all-ones direction
  // keeps the same values there and gives the form a clean kernel.
  const Matrix raw = s.accumulation.transpose() *
                     s.branch_resistance_ohm.asDiagonal() * s.accumulation;
  const Matrix proj =
      Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  s.loss_quadratic = proj * raw * proj;
  // Symmetrize away rounding in the projection products.
  s.loss_quadratic = 0.5 * (s.loss_quadratic + s.loss_quadratic.transpose()).eval();

  return s;
}

}  // namespace dctps
