#ifndef DRIFTLIQ_PDE_HPP
#define DRIFTLIQ_PDE_HPP

#include <vector>

#include "driftliq/filter.hpp"

namespace driftliq {

/// Uniform (t, x) grid with n_t time steps and n_x spatial intervals, so
/// the stored surface has (n_t+1) x (n_x+1) nodes.
struct GridSpec {
  double T = 1.0;
  int n_t = 2000;
  double x_lo = -3.0;
  double x_hi = 3.0;
  int n_x = 400;

  double dt() const { return T / n_t; }
  double dx() const { return (x_hi - x_lo) / n_x; }
  double t_at(int i) const { return (i == n_t) ? T : i * dt(); }
  double x_at(int j) const { return (j == n_x) ? x_hi : x_lo + j * dx(); }
};

/// Grid defaults from the model: Normal priors get mean +/- 6 gamma,
/// compact priors the support shrunk by 1e-6 of its width.
GridSpec default_grid(const FilterModel& model, double T, int n_t = 2000, int n_x = 400);

struct ValueSurface {
  GridSpec grid;
  std::vector<double> v;  // row-major, rows are time levels

  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * (grid.n_x + 1) + j]; }
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * (grid.n_x + 1) + j]; }
};

struct Boundary {
  std::vector<double> t_nodes;
  std::vector<double> h;
};

/// Linear interpolation of h(t), clamped to the end nodes.
double boundary_at(const Boundary& b, double t);

struct SolveResult {
  ValueSurface surface;
  Boundary boundary;
};

/// Backward induction for the stopping problem: Crank-Nicolson step of
/// d_t v + sigma psi d_x v + psi^2/2 d_xx v + x v = 0 followed by the
/// Bermudan projection v = max(v, 1). The boundary row h(t_i) is the top
/// of the projected (v = 1) region, refined by a secant on the first two
/// nodes above it.
SolveResult solve_value(const FilterModel& model, const GridSpec& grid);

/// Bilinear interpolation inside the grid hull; exact at nodes.
double value_at(const ValueSurface& surface, double t, double x);

/// Max over time rows of the one-sided difference quotient
/// (v(t, h(t)+dx) - 1)/dx. Smooth fit drives it to zero as dx -> 0.
double check_smooth_fit(const ValueSurface& surface, const Boundary& boundary);

/// Explicit-scheme dynamic programming on the same lattice; low-order
/// cross-check for solve_value. Requires dt <= dx^2 / max(psi^2).
ValueSurface euler_lattice_value(const FilterModel& model, const GridSpec& grid);

}  // namespace driftliq

#endif
