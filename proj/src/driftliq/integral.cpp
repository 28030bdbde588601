#include "driftliq/integral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "driftliq/errors.hpp"
#include "driftliq/quadrature.hpp"
#include "driftliq/rng.hpp"

namespace driftliq {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880168872420969808;
constexpr double kInvSqrtPi = 0.564189583547756286948079451560772586;
constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934381868;

bool is_normal(const FilterModel& m) { return m.prior.kind == PriorKind::Normal; }

IeEngine resolve_engine(const FilterModel& model, const IeOptions& opts) {
  if (opts.engine == IeEngine::Gauss) {
    if (!is_normal(model))
      raise(ErrorCode::EngineUnavailable,
            "closed-form Gaussian engine needs a Normal prior; use the MC engine");
    return IeEngine::Gauss;
  }
  if (opts.engine == IeEngine::MonteCarlo) return IeEngine::MonteCarlo;
  return is_normal(model) ? IeEngine::Gauss : IeEngine::MonteCarlo;
}

// ---------------------------------------------------------------------------
// Gaussian engine
// ---------------------------------------------------------------------------

// Whitened representation at one (t, s) pair, independent of the start
// value x0: mean_x = x0 + drift_x, mean_I = x0 (s-t) + drift_I.
struct PairGeometry {
  double s = 0.0;
  double drift_x = 0.0;
  double drift_I = 0.0;
  double sx = 0.0;   // stdev of X_s
  double lam = 0.0;  // cov(X,I)/sx
  double sy = 0.0;   // residual stdev of I given X
  double mgf_w = 1.0;  // E[e^{sy W}] by Gauss-Hermite in the w dimension
};

class GaussEngine {
public:
  GaussEngine(const FilterModel& model, int quad_nodes)
      : model_(model),
        gh_(gauss_hermite(std::max(2, quad_nodes))),
        gl_(gauss_legendre(std::max(4, quad_nodes / 4))) {}

  PairGeometry geometry(double t, double s) const {
    const GaussianLaw law = gaussian_law(model_, t, 0.0, s);
    PairGeometry g;
    g.s = s;
    g.drift_x = law.mean_x;
    g.drift_I = law.mean_I;
    g.sx = std::sqrt(std::max(0.0, law.var_x));
    if (g.sx > 0.0) {
      g.lam = law.cov_xI / g.sx;
      g.sy = std::sqrt(std::max(0.0, law.var_I - g.lam * g.lam));
    } else {
      g.lam = 0.0;
      g.sy = std::sqrt(std::max(0.0, law.var_I));
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < gh_.nodes.size(); ++k)
      acc += gh_.weights[k] * std::exp(g.sy * kSqrt2 * gh_.nodes[k]);
    g.mgf_w = acc * kInvSqrtPi;
    return g;
  }

  // E[e^{I_s} X_s 1{X_s <= c}] started from (t, x0) using a precomputed
  // geometry for the (t, s) pair.
  double term(const PairGeometry& g, double t, double x0, double c) const {
    if (std::isnan(c)) raise(ErrorCode::InvalidArgument, "ie term threshold is NaN");
    if (c == -std::numeric_limits<double>::infinity()) return 0.0;
    const double a = x0 + g.drift_x;
    const double b = x0 * (g.s - t) + g.drift_I;
    if (g.sx <= 1e-13) {
      // Degenerate slice: X_s is (almost) deterministic.
      return (a <= c) ? std::exp(b) * a : 0.0;
    }
    const double uhat = (c - a) / g.sx;
    return std::exp(b) * g.mgf_w * truncated_u_integral(a, g.sx, g.lam, uhat);
  }

  // E[e^{I_s}] started from (t, x0): the MGF of a Gaussian.
  double lhs(double t, double x0, double s) const {
    const GaussianLaw law = gaussian_law(model_, t, x0, s);
    return std::exp(law.mean_I + 0.5 * law.var_I);
  }

private:
  // int_{-inf}^{uhat} e^{lam u} (a + sx u) phi(u) du by composite
  // Gauss-Legendre over the truncated whitened interval. The integrand
  // mass sits at u = lam with unit width, so the panel span below uhat is
  // fixed at 16 units around it.
  double truncated_u_integral(double a, double sx, double lam, double uhat) const {
    const double hi = std::min(uhat, lam + 16.0);
    const double lo = lam - 16.0;
    if (hi <= lo) return 0.0;
    const double width = hi - lo;
    const int n_panels = std::max(1, static_cast<int>(std::ceil(width / 2.5)));
    const double pw = width / n_panels;
    double total = 0.0;
    for (int p = 0; p < n_panels; ++p) {
      const double p_lo = lo + p * pw;
      const double half = 0.5 * pw;
      const double mid = p_lo + half;
      double acc = 0.0;
      for (std::size_t k = 0; k < gl_.nodes.size(); ++k) {
        const double u = mid + half * gl_.nodes[k];
        acc += gl_.weights[k] * std::exp(lam * u - 0.5 * u * u) * (a + sx * u);
      }
      total += half * acc;
    }
    return total * kInvSqrt2Pi;
  }

  const FilterModel& model_;
  QuadRule gh_;
  QuadRule gl_;
};

// ---------------------------------------------------------------------------
// Monte Carlo engine (general priors, loose tolerance)
// ---------------------------------------------------------------------------

std::pair<double, double> mc_domain(const FilterModel& model) {
  auto [lo, hi] = model.support();
  if (std::isfinite(lo) && std::isfinite(hi)) {
    const double delta = 1e-6 * (hi - lo);
    return {lo + delta, hi - delta};
  }
  const double m = model.prior_mean();
  const double spread = 8.0 * model.prior.gamma;
  return {m - spread, m + spread};
}

// Simulates X under Q from (t_start, x0) along the boundary sub-grid and
// accumulates the integrand sample at every boundary node plus e^{I_T}.
// Antithetic path pairs share one normal stream.
struct McRow {
  std::vector<double> terms;  // one per boundary node >= start index
  double lhs = 0.0;
};

McRow mc_row(const FilterModel& model, const Boundary& boundary, std::size_t start,
             const IeMcParams& mc, double x0) {
  const std::size_t n_nodes = boundary.t_nodes.size();
  const double T = boundary.t_nodes.back();
  const double t_start = boundary.t_nodes[start];
  if (start + 1 >= n_nodes) {
    McRow tail;
    tail.terms.assign(1, (x0 <= boundary.h[start]) ? x0 : 0.0);
    tail.lhs = 1.0;
    return tail;
  }
  const double dt_target = T / mc.n_steps;

  auto [x_lo, x_hi] = mc_domain(model);
  PsiGrid psi(model, t_start, T, x_lo, x_hi, 200, 400);

  McRow row;
  row.terms.assign(n_nodes - start, 0.0);
  double lhs_acc = 0.0;

  const long long n_pairs = (mc.n_paths + 1) / 2;
  std::vector<double> term_acc(n_nodes - start, 0.0);
  for (long long pair = 0; pair < n_pairs; ++pair) {
    CounterRng rng(mc.seed, static_cast<std::uint64_t>(pair));
    for (int anti = 0; anti < 2; ++anti) {
      CounterRng local = rng;  // replay the same stream, flip the sign
      const double sgn = anti == 0 ? 1.0 : -1.0;
      double x = x0;
      double integral = 0.0;
      std::size_t out = 0;
      // node start: s = t_start exactly, e^I = 1
      term_acc[out] += (x <= boundary.h[start]) ? x : 0.0;
      ++out;
      for (std::size_t k = start; k + 1 < n_nodes; ++k) {
        const double s0 = boundary.t_nodes[k], s1 = boundary.t_nodes[k + 1];
        const int n_sub = std::max(1, static_cast<int>(std::ceil((s1 - s0) / dt_target)));
        const double h_step = (s1 - s0) / n_sub;
        for (int sub = 0; sub < n_sub; ++sub) {
          const double u = s0 + sub * h_step;
          const double p = psi(u, x);
          const double x_new =
              std::clamp(x + model.sigma * p * h_step + p * std::sqrt(h_step) * sgn * local.next_normal(),
                         x_lo, x_hi);
          integral += 0.5 * (x + x_new) * h_step;
          x = x_new;
        }
        const double w = std::exp(integral);
        term_acc[out] += (x <= boundary.h[k + 1]) ? w * x : 0.0;
        ++out;
      }
      lhs_acc += std::exp(integral);
    }
  }
  const double n_eff = 2.0 * static_cast<double>(n_pairs);
  for (std::size_t k = 0; k < row.terms.size(); ++k) row.terms[k] = term_acc[k] / n_eff;
  row.lhs = lhs_acc / n_eff;
  return row;
}

// ---------------------------------------------------------------------------
// Time integration over the boundary grid
// ---------------------------------------------------------------------------

// Composite Simpson over nodes [k0..n-1] of (s, g) samples, with the first
// panel replaced by the midpoint rule (node-shifted away from s = t where
// the integrand is defined only by continuous extension).
double integrate_with_midpoint_head(const std::vector<double>& s, const std::vector<double>& g,
                                    double g_mid_first) {
  const std::size_t n = s.size();
  if (n < 2) return 0.0;
  double total = (s[1] - s[0]) * g_mid_first;
  // Simpson pairs over the rest; a trailing odd interval gets trapezoid.
  std::size_t k = 1;
  while (k + 2 <= n - 1) {
    const double h1 = s[k + 1] - s[k];
    const double h2 = s[k + 2] - s[k + 1];
    const double hs = h1 + h2;
    total += hs / 6.0 *
             ((2.0 - h2 / h1) * g[k] + hs * hs / (h1 * h2) * g[k + 1] + (2.0 - h1 / h2) * g[k + 2]);
    k += 2;
  }
  if (k == n - 2) total += 0.5 * (s[k + 1] - s[k]) * (g[k] + g[k + 1]);
  return total;
}

std::vector<std::size_t> report_indices(std::size_t n_nodes, int max_nodes) {
  std::vector<std::size_t> idx;
  if (max_nodes < 2 || n_nodes <= static_cast<std::size_t>(max_nodes)) {
    idx.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) idx[i] = i;
    return idx;
  }
  const std::size_t m = static_cast<std::size_t>(max_nodes);
  idx.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = (k * (n_nodes - 1)) / (m - 1);
    if (idx.empty() || idx.back() != i) idx.push_back(i);
  }
  return idx;
}

void check_boundary(const Boundary& b, double T) {
  if (b.t_nodes.size() != b.h.size() || b.t_nodes.size() < 2)
    raise(ErrorCode::InvalidArgument, "boundary needs matching t/h arrays with >= 2 nodes");
  if (std::abs(b.t_nodes.back() - T) > 1e-9 * std::max(1.0, T))
    raise(ErrorCode::InvalidArgument, "boundary must extend to the horizon T");
}

}  // namespace

GaussianLaw gaussian_law(const FilterModel& model, double t0, double x0, double s) {
  if (!is_normal(model))
    raise(ErrorCode::WrongPriorKind, "gaussian_law needs a Normal prior");
  if (!(s >= t0) || t0 < 0.0)
    raise(ErrorCode::InvalidArgument, "gaussian_law needs 0 <= t0 <= s");
  const double A = model.sigma * model.sigma;
  const double g = model.prior.gamma * model.prior.gamma;
  const double D0 = A + g * t0;
  const double Ds = A + g * s;
  const double log_ratio = std::log1p(g * (s - t0) / D0);
  const double tau = s - t0;

  GaussianLaw law;
  law.mean_x = x0 + A * log_ratio;
  law.var_x = A * g * (1.0 / D0 - 1.0 / Ds);
  law.mean_I =
      x0 * tau + A * ((s + A / g) * std::log(Ds) - (t0 + A / g) * std::log(D0) - tau -
                      tau * std::log(D0));
  law.cov_xI = A * (Ds / D0 - 1.0 - log_ratio);
  law.var_I = A * (Ds * Ds * (1.0 / D0 - 1.0 / Ds) / g - 2.0 * Ds * log_ratio / g + tau);
  return law;
}

double ie_rhs_term(const FilterModel& model, double t, const Boundary& boundary, double s,
                   const IeOptions& opts) {
  check_boundary(boundary, boundary.t_nodes.back());
  if (!(s >= t)) raise(ErrorCode::InvalidArgument, "ie_rhs_term needs s >= t");
  const double x0 = boundary_at(boundary, t);
  const IeEngine engine = resolve_engine(model, opts);
  if (engine == IeEngine::Gauss) {
    GaussEngine eng(model, opts.quad_nodes);
    const PairGeometry geo = eng.geometry(t, s);
    return eng.term(geo, t, x0, boundary_at(boundary, s));
  }
  // MC engine: integrate a single row and pick out the node nearest s.
  const auto& ts = boundary.t_nodes;
  std::size_t start = 0;
  while (start + 1 < ts.size() && ts[start] < t - 1e-12) ++start;
  McRow row = mc_row(model, boundary, start, opts.mc, x0);
  std::size_t best = start;
  for (std::size_t k = start; k < ts.size(); ++k)
    if (std::abs(ts[k] - s) < std::abs(ts[best] - s)) best = k;
  return row.terms[best - start];
}

ResidualReport residual(const FilterModel& model, const Boundary& boundary, double T,
                        const IeOptions& opts) {
  check_boundary(boundary, T);
  const IeEngine engine = resolve_engine(model, opts);
  const std::vector<std::size_t> nodes = report_indices(boundary.t_nodes.size(),
                                                        opts.report_max_nodes);
  ResidualReport report;
  report.t_nodes.reserve(nodes.size());
  report.residuals.reserve(nodes.size());

  GaussEngine* gauss = nullptr;
  GaussEngine gauss_storage(model, opts.quad_nodes);
  if (engine == IeEngine::Gauss) gauss = &gauss_storage;

  for (std::size_t idx : nodes) {
    const double t = boundary.t_nodes[idx];
    const double x0 = boundary.h[idx];
    double res = 0.0;
    if (idx + 1 >= boundary.t_nodes.size()) {
      res = 0.0;  // both sides equal 1 at t = T
    } else if (gauss) {
      std::vector<double> ss(boundary.t_nodes.begin() + idx, boundary.t_nodes.end());
      std::vector<double> gs(ss.size(), 0.0);
      for (std::size_t k = 1; k < ss.size(); ++k) {
        const PairGeometry geo = gauss->geometry(t, ss[k]);
        gs[k] = gauss->term(geo, t, x0, boundary.h[idx + k]);
      }
      const double s_mid = 0.5 * (ss[0] + ss[1]);
      const PairGeometry geo_mid = gauss->geometry(t, s_mid);
      const double g_mid = gauss->term(geo_mid, t, x0, boundary_at(boundary, s_mid));
      const double integral = integrate_with_midpoint_head(ss, gs, g_mid);
      res = gauss->lhs(t, x0, T) - 1.0 - integral;
    } else {
      McRow row = mc_row(model, boundary, idx, opts.mc, x0);
      std::vector<double> ss(boundary.t_nodes.begin() + idx, boundary.t_nodes.end());
      const double g_mid = 0.5 * (row.terms[0] + (row.terms.size() > 1 ? row.terms[1] : 0.0));
      const double integral = integrate_with_midpoint_head(ss, row.terms, g_mid);
      res = row.lhs - 1.0 - integral;
    }
    report.t_nodes.push_back(t);
    report.residuals.push_back(res);
    report.max_abs = std::max(report.max_abs, std::abs(res));
  }
  return report;
}

Boundary solve_fixed_point(const FilterModel& model, double T, int n_t, const IeOptions& opts) {
  if (!is_normal(model))
    raise(ErrorCode::WrongPriorKind, "solve_fixed_point needs a Normal prior");
  if (n_t < 50) raise(ErrorCode::InvalidArgument, "solve_fixed_point needs n_t >= 50");
  if (!(T > 0.0)) raise(ErrorCode::InvalidArgument, "solve_fixed_point needs T > 0");

  GaussEngine eng(model, opts.quad_nodes);
  const double dt = T / n_t;
  Boundary b;
  b.t_nodes.resize(n_t + 1);
  b.h.assign(n_t + 1, 0.0);
  for (int i = 0; i <= n_t; ++i) b.t_nodes[i] = (i == n_t) ? T : i * dt;

  const double bracket_lo = std::isnan(opts.bracket_lo)
                                ? model.prior.m - 8.0 * model.prior.gamma
                                : opts.bracket_lo;

  for (int i = n_t - 1; i >= 0; --i) {
    const double t = b.t_nodes[i];
    // Geometries for every s node above t are c-free; prepare once.
    std::vector<double> ss(b.t_nodes.begin() + i, b.t_nodes.end());
    std::vector<PairGeometry> geos(ss.size());
    for (std::size_t k = 1; k < ss.size(); ++k) geos[k] = eng.geometry(t, ss[k]);
    const double s_mid = 0.5 * (ss[0] + ss[1]);
    const PairGeometry geo_mid = eng.geometry(t, s_mid);

    auto G = [&](double c) {
      std::vector<double> gs(ss.size(), 0.0);
      for (std::size_t k = 1; k < ss.size(); ++k)
        gs[k] = eng.term(geos[k], t, c, b.h[i + static_cast<int>(k)]);
      const double h_mid = 0.5 * (c + b.h[i + 1]);
      const double g_mid = eng.term(geo_mid, t, c, h_mid);
      const double integral = integrate_with_midpoint_head(ss, gs, g_mid);
      return eng.lhs(t, c, T) - 1.0 - integral;
    };

    const double g_hi = G(0.0);
    if (g_hi <= 0.0) {
      b.h[i] = 0.0;
      continue;
    }
    double lo = bracket_lo;
    double g_lo = G(lo);
    if (g_lo >= 0.0)
      raise(ErrorCode::NoRootInBracket,
            "no sign change on [" + std::to_string(lo) + ", 0] at t = " + std::to_string(t));
    double hi = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double mid = 0.5 * (lo + hi);
      const double gm = G(mid);
      if (gm >= 0.0)
        hi = mid;
      else
        lo = mid;
      if (hi - lo < 1e-11 * std::max(1.0, std::abs(hi))) break;
    }
    b.h[i] = std::min(0.5 * (lo + hi), 0.0);
  }
  return b;
}

}  // namespace driftliq
