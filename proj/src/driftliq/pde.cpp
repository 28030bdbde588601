#include "driftliq/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "driftliq/errors.hpp"

namespace driftliq {

namespace {

constexpr double kTheta = 0.5;  // Crank-Nicolson

void check_grid(const FilterModel& model, const GridSpec& g) {
  if (!(g.T > 0.0) || !std::isfinite(g.T))
    raise(ErrorCode::InvalidArgument, "grid needs T > 0");
  if (g.n_t < 2) raise(ErrorCode::InvalidArgument, "grid needs n_t >= 2");
  if (g.n_x < 3) raise(ErrorCode::InvalidArgument, "grid needs n_x >= 3");
  if (!(g.x_lo < 0.0 && 0.0 < g.x_hi))
    raise(ErrorCode::InvalidArgument, "grid needs x_lo < 0 < x_hi");
  auto [lo, hi] = model.support();
  const double slack = 1e-12 * (g.x_hi - g.x_lo);
  if (g.x_lo < lo - slack || g.x_hi > hi + slack)
    raise(ErrorCode::OutOfSupport, "grid domain extends outside the closure of I_mu");
}

// psi(t_i, x_j) for every node; rows are filled with the row-walking
// evaluator since inversion dominates the cost for atom priors.
std::vector<double> psi_matrix(const FilterModel& model, const GridSpec& g) {
  DispersionEvaluator eval(model);
  std::vector<double> xs(g.n_x + 1);
  for (int j = 0; j <= g.n_x; ++j) xs[j] = g.x_at(j);
  std::vector<double> psi(static_cast<std::size_t>(g.n_t + 1) * (g.n_x + 1));
  for (int i = 0; i <= g.n_t; ++i) {
    std::span<double> row(psi.data() + static_cast<std::size_t>(i) * (g.n_x + 1),
                          static_cast<std::size_t>(g.n_x + 1));
    eval.psi_row(g.t_at(i), xs, row);
  }
  return psi;
}

struct OperatorRow {
  double lower;
  double diag;
  double upper;
};

// Spatial generator L v = sigma psi v_x + psi^2/2 v_xx + x v with central
// differences; edge rows use a linearity ghost (v_xx = 0), which reduces
// them to one-sided drift plus reaction.
OperatorRow operator_row(const FilterModel& model, const GridSpec& g, const double* psi_row,
                         int j, bool dirichlet_lo) {
  const double dx = g.dx();
  const double x = g.x_at(j);
  const double p = psi_row[j];
  const double drift = model.sigma * p;
  if (j == 0) {
    if (dirichlet_lo) return {0.0, 0.0, 0.0};  // not used
    return {0.0, -drift / dx + x, drift / dx};
  }
  if (j == g.n_x) {
    return {-drift / dx, drift / dx + x, 0.0};
  }
  const double diff = 0.5 * p * p / (dx * dx);
  const double adv = 0.5 * drift / dx;
  return {diff - adv, -2.0 * diff + x, diff + adv};
}

void thomas_solve(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                  std::vector<double>& rhs, const GridSpec& g) {
  const std::size_t n = diag.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double off = std::abs(k > 0 ? sub[k] : 0.0) + std::abs(k + 1 < n ? sup[k] : 0.0);
    if (std::abs(diag[k]) <= off)
      raise(ErrorCode::GridTooCoarse,
            "tridiagonal system lost diagonal dominance (dt/dx^2 = " +
                std::to_string(g.dt() / (g.dx() * g.dx())) + ")");
  }
  for (std::size_t k = 1; k < n; ++k) {
    const double w = sub[k] / diag[k - 1];
    diag[k] -= w * sup[k - 1];
    rhs[k] -= w * rhs[k - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) rhs[k] = (rhs[k] - sup[k] * rhs[k + 1]) / diag[k];
}

// Boundary node for one time row: top of the projected region, then a
// secant refinement through the first two continuation nodes.
double extract_boundary_node(const ValueSurface& s, int i, bool dirichlet_lo) {
  const GridSpec& g = s.grid;
  int j_stop = -1;
  for (int j = g.n_x; j >= 0; --j) {
    if (s.at(i, j) <= 1.0) {
      j_stop = j;
      break;
    }
  }
  if (j_stop < 0) {
    if (!dirichlet_lo)
      raise(ErrorCode::DomainTooNarrow,
            "no stopping node at t = " + std::to_string(g.t_at(i)) + "; lower the grid x_lo");
    j_stop = 0;
  }
  if (dirichlet_lo && j_stop == 0)
    raise(ErrorCode::DomainTooNarrow,
          "boundary touches x_lo at t = " + std::to_string(g.t_at(i)) + "; lower the grid x_lo");
  if (j_stop >= g.n_x) return 0.0;

  const double dx = g.dx();
  double hval = g.x_at(j_stop);
  const double v1 = s.at(i, j_stop + 1);
  if (j_stop + 2 <= g.n_x) {
    const double v2 = s.at(i, j_stop + 2);
    if (v2 > v1 && v1 > 1.0) {
      hval = g.x_at(j_stop + 1) - dx * (v1 - 1.0) / (v2 - v1);
      hval = std::clamp(hval, g.x_at(j_stop), g.x_at(j_stop + 1));
    }
  }
  return std::min(hval, 0.0);
}

}  // namespace

GridSpec default_grid(const FilterModel& model, double T, int n_t, int n_x) {
  GridSpec g;
  g.T = T;
  g.n_t = n_t;
  g.n_x = n_x;
  auto [lo, hi] = model.support();
  if (std::isfinite(lo) && std::isfinite(hi)) {
    const double delta = 1e-6 * (hi - lo);
    g.x_lo = lo + delta;
    g.x_hi = hi - delta;
  } else {
    const double m = model.prior_mean();
    const double spread = 6.0 * model.prior.gamma;
    g.x_lo = m - spread;
    g.x_hi = m + spread;
  }
  return g;
}

double boundary_at(const Boundary& b, double t) {
  if (b.t_nodes.empty()) raise(ErrorCode::InvalidArgument, "empty boundary");
  if (t <= b.t_nodes.front()) return b.h.front();
  if (t >= b.t_nodes.back()) return b.h.back();
  const auto it = std::upper_bound(b.t_nodes.begin(), b.t_nodes.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - b.t_nodes.begin());
  const double t0 = b.t_nodes[k - 1], t1 = b.t_nodes[k];
  const double w = (t - t0) / (t1 - t0);
  return (1.0 - w) * b.h[k - 1] + w * b.h[k];
}

SolveResult solve_value(const FilterModel& model, const GridSpec& grid) {
  check_grid(model, grid);
  const int nt = grid.n_t, nx = grid.n_x;
  const double dt = grid.dt();
  const bool dirichlet_lo = !std::isfinite(model.support().first);

  const std::vector<double> psi = psi_matrix(model, grid);
  auto psi_row_ptr = [&](int i) { return psi.data() + static_cast<std::size_t>(i) * (nx + 1); };

  ValueSurface surface;
  surface.grid = grid;
  surface.v.assign(static_cast<std::size_t>(nt + 1) * (nx + 1), 1.0);

  const int j0 = dirichlet_lo ? 1 : 0;  // first unknown column
  const std::size_t n_unk = static_cast<std::size_t>(nx - j0 + 1);
  std::vector<double> sub(n_unk), diag(n_unk), sup(n_unk), rhs(n_unk);

  for (int i = nt - 1; i >= 0; --i) {
    const double* psi_new = psi_row_ptr(i);      // implicit side, time t_i
    const double* psi_old = psi_row_ptr(i + 1);  // explicit side, time t_{i+1}

    for (int j = j0; j <= nx; ++j) {
      const std::size_t k = static_cast<std::size_t>(j - j0);
      const OperatorRow Lo = operator_row(model, grid, psi_old, j, dirichlet_lo);
      const double vm = (j > 0) ? surface.at(i + 1, j - 1) : 0.0;
      const double vc = surface.at(i + 1, j);
      const double vp = (j < nx) ? surface.at(i + 1, j + 1) : 0.0;
      rhs[k] = vc + (1.0 - kTheta) * dt * (Lo.lower * vm + Lo.diag * vc + Lo.upper * vp);

      const OperatorRow Ln = operator_row(model, grid, psi_new, j, dirichlet_lo);
      sub[k] = -kTheta * dt * Ln.lower;
      diag[k] = 1.0 - kTheta * dt * Ln.diag;
      sup[k] = -kTheta * dt * Ln.upper;
    }
    if (dirichlet_lo) {
      // move the implicit coupling to the known v(t_i, x_lo) = 1 into the rhs
      const OperatorRow Ln = operator_row(model, grid, psi_new, j0, dirichlet_lo);
      rhs[0] += kTheta * dt * Ln.lower * 1.0;
      sub[0] = 0.0;
    }
    thomas_solve(sub, diag, sup, rhs, grid);
    if (dirichlet_lo) surface.at(i, 0) = 1.0;
    for (int j = j0; j <= nx; ++j)
      surface.at(i, j) = std::max(1.0, rhs[static_cast<std::size_t>(j - j0)]);
  }

  Boundary boundary;
  boundary.t_nodes.resize(nt + 1);
  boundary.h.resize(nt + 1);
  for (int i = 0; i <= nt; ++i) {
    boundary.t_nodes[i] = grid.t_at(i);
    boundary.h[i] = (i == nt) ? 0.0 : extract_boundary_node(surface, i, dirichlet_lo);
  }
  return {std::move(surface), std::move(boundary)};
}

double value_at(const ValueSurface& surface, double t, double x) {
  const GridSpec& g = surface.grid;
  const double eps_t = 1e-12 * std::max(1.0, g.T);
  const double eps_x = 1e-12 * std::max(1.0, g.x_hi - g.x_lo);
  if (t < -eps_t || t > g.T + eps_t || x < g.x_lo - eps_x || x > g.x_hi + eps_x)
    raise(ErrorCode::OutOfGrid, "(t,x) outside the grid hull");
  const double ti = std::clamp(t / g.dt(), 0.0, static_cast<double>(g.n_t));
  const double xj = std::clamp((x - g.x_lo) / g.dx(), 0.0, static_cast<double>(g.n_x));
  const int i = std::min(static_cast<int>(ti), g.n_t - 1);
  const int j = std::min(static_cast<int>(xj), g.n_x - 1);
  const double wt = ti - i;
  const double wx = xj - j;
  return (1.0 - wt) * ((1.0 - wx) * surface.at(i, j) + wx * surface.at(i, j + 1)) +
         wt * ((1.0 - wx) * surface.at(i + 1, j) + wx * surface.at(i + 1, j + 1));
}

double check_smooth_fit(const ValueSurface& surface, const Boundary& boundary) {
  const GridSpec& g = surface.grid;
  const double dx = g.dx();
  double worst = 0.0;
  for (int i = 0; i < g.n_t; ++i) {
    const double t = g.t_at(i);
    const double h = boundary_at(boundary, t);
    if (h <= g.x_lo + dx || h + dx >= g.x_hi) continue;
    const double defect = (value_at(surface, t, h + dx) - 1.0) / dx;
    worst = std::max(worst, defect);
  }
  return worst;
}

ValueSurface euler_lattice_value(const FilterModel& model, const GridSpec& grid) {
  check_grid(model, grid);
  const int nt = grid.n_t, nx = grid.n_x;
  const double dt = grid.dt();
  const double dx = grid.dx();
  const bool dirichlet_lo = !std::isfinite(model.support().first);

  const std::vector<double> psi = psi_matrix(model, grid);
  double psi_max = 0.0;
  for (double p : psi) psi_max = std::max(psi_max, p);
  const double dt_max = dx * dx / (psi_max * psi_max);
  if (dt > dt_max)
    raise(ErrorCode::StabilityViolation,
          "explicit scheme needs dt <= dx^2/max(psi^2) = " + std::to_string(dt_max) +
              " (got dt = " + std::to_string(dt) + ")");

  ValueSurface surface;
  surface.grid = grid;
  surface.v.assign(static_cast<std::size_t>(nt + 1) * (nx + 1), 1.0);

  for (int i = nt - 1; i >= 0; --i) {
    const double* prow = psi.data() + static_cast<std::size_t>(i + 1) * (nx + 1);
    for (int j = 0; j <= nx; ++j) {
      const double x = grid.x_at(j);
      double avg;
      if (j == 0) {
        if (dirichlet_lo) {
          surface.at(i, 0) = 1.0;
          continue;
        }
        avg = surface.at(i + 1, 0) +
              dt * model.sigma * prow[0] * (surface.at(i + 1, 1) - surface.at(i + 1, 0)) / dx;
      } else if (j == nx) {
        avg = surface.at(i + 1, nx) +
              dt * model.sigma * prow[nx] * (surface.at(i + 1, nx) - surface.at(i + 1, nx - 1)) / dx;
      } else {
        const double p = prow[j];
        const double diff = 0.5 * dt * p * p / (dx * dx);
        const double adv = 0.5 * dt * model.sigma * p / dx;
        const double pd = diff - adv;
        const double pu = diff + adv;
        const double pm = 1.0 - 2.0 * diff;
        avg = pd * surface.at(i + 1, j - 1) + pm * surface.at(i + 1, j) +
              pu * surface.at(i + 1, j + 1);
      }
      surface.at(i, j) = std::max(1.0, (1.0 + x * dt) * avg);
    }
  }
  return surface;
}

}  // namespace driftliq
