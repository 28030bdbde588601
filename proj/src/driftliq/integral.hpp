#ifndef DRIFTLIQ_INTEGRAL_HPP
#define DRIFTLIQ_INTEGRAL_HPP

#include <cstdint>
#include <vector>

#include "driftliq/filter.hpp"
#include "driftliq/pde.hpp"

namespace driftliq {

/// Joint law of (X_s, I_s) under Q for a Normal prior, started at
/// (t0, x0), where I_s is the running time integral of X. The dispersion
/// is deterministic, so the pair is exactly Gaussian with closed-form
/// moments.
struct GaussianLaw {
  double mean_x = 0.0;
  double var_x = 0.0;
  double mean_I = 0.0;
  double var_I = 0.0;
  double cov_xI = 0.0;
};

GaussianLaw gaussian_law(const FilterModel& model, double t0, double x0, double s);

enum class IeEngine { Auto, Gauss, MonteCarlo };

struct IeMcParams {
  long long n_paths = 200000;
  int n_steps = 2000;  // Euler steps over [0, T]
  std::uint64_t seed = 1;
};

struct IeOptions {
  IeEngine engine = IeEngine::Auto;
  int quad_nodes = 64;        // per quadrature dimension
  int report_max_nodes = 161; // residual rows are subsampled beyond this
  double bracket_lo = std::numeric_limits<double>::quiet_NaN();  // fixed-point bracket; auto if NaN
  IeMcParams mc;
};

struct ResidualReport {
  std::vector<double> t_nodes;
  std::vector<double> residuals;
  double max_abs = 0.0;
};

/// One integrand value E^Q[e^{I_s} X_s 1{X_s <= h(s)}] for the boundary
/// equation, started from (t, h(t)).
double ie_rhs_term(const FilterModel& model, double t, const Boundary& boundary, double s,
                   const IeOptions& opts = {});

/// LHS - RHS of the boundary integral equation per report node; zero for
/// the true stopping boundary. The time integral is composite Simpson on
/// the boundary grid with a midpoint first panel (the integrand is only
/// defined by continuous extension at s = t).
ResidualReport residual(const FilterModel& model, const Boundary& boundary, double T,
                        const IeOptions& opts = {});

/// Backward fixed-point construction of the boundary from the integral
/// equation alone (Normal priors; closed-form Gaussian engine). h(T) = 0,
/// then bisection in the trial value at each earlier node.
Boundary solve_fixed_point(const FilterModel& model, double T, int n_t,
                           const IeOptions& opts = {});

}  // namespace driftliq

#endif
