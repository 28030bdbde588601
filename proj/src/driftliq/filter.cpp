#include "driftliq/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "driftliq/errors.hpp"

namespace driftliq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBracketLimit = 1e9;
constexpr double kEdgeClamp = 1e-9;

double f_tolerance(double x) { return 1e-10 * std::max(1.0, std::abs(x)); }

struct PosteriorStats {
  double mean;
  double var;
};

void check_query(double t, double y) {
  if (!(t >= 0.0) || !std::isfinite(t))
    raise(ErrorCode::InvalidArgument, "posterior query needs finite t >= 0");
  if (!std::isfinite(y)) raise(ErrorCode::InvalidArgument, "posterior query needs finite y");
}

// Normal-prior posterior: N((s2 m + g2 y)/(s2 + t g2), s2 g2/(s2 + t g2))
void normal_posterior(const FilterModel& model, double t, double y, double& mean, double& var) {
  const double s2 = model.sigma * model.sigma;
  const double g2 = model.prior.gamma * model.prior.gamma;
  const double denom = s2 + t * g2;
  mean = (s2 * model.prior.m + g2 * y) / denom;
  var = s2 * g2 / denom;
}

double gaussian_raw_moment(double mean, double var, int k) {
  switch (k) {
    case 0: return 1.0;
    case 1: return mean;
    case 2: return mean * mean + var;
    case 3: return mean * mean * mean + 3.0 * mean * var;
    default:
      return mean * mean * mean * mean + 6.0 * mean * mean * var + 3.0 * var * var;
  }
}

// Atom view of the prior: TwoPoint participates here as its two atoms.
struct AtomView {
  const double* pts;
  const double* wts;
  std::size_t n;
  double tp_pts[2];
  double tp_wts[2];
};

AtomView atom_view(const Prior& p) {
  AtomView v{};
  if (p.kind == PriorKind::TwoPoint) {
    v.tp_pts[0] = p.l;
    v.tp_pts[1] = p.h;
    v.tp_wts[0] = 1.0 - p.pi;
    v.tp_wts[1] = p.pi;
    v.pts = v.tp_pts;
    v.wts = v.tp_wts;
    v.n = 2;
  } else {
    v.pts = p.points.data();
    v.wts = p.weights.data();
    v.n = p.points.size();
  }
  return v;
}

// One max-shifted pass over the atoms; returns normalized posterior raw
// moments up to m4 (only the first `max_k` are meaningful).
void atom_posterior_moments(const FilterModel& model, double t, double y, int max_k,
                            double out[5]) {
  const AtomView atoms = atom_view(model.prior);
  const double inv2s2 = 1.0 / (2.0 * model.sigma * model.sigma);

  double max_log = -kInf;
  for (std::size_t i = 0; i < atoms.n; ++i) {
    if (atoms.wts[i] <= 0.0) continue;
    const double u = atoms.pts[i];
    const double lg = std::log(atoms.wts[i]) + (2.0 * u * y - u * u * t) * inv2s2;
    max_log = std::max(max_log, lg);
  }
  if (!std::isfinite(max_log))
    raise(ErrorCode::NumericalUnderflow, "all posterior weights degenerate");

  double z = 0.0;
  double sums[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < atoms.n; ++i) {
    if (atoms.wts[i] <= 0.0) continue;
    const double u = atoms.pts[i];
    const double w =
        std::exp(std::log(atoms.wts[i]) + (2.0 * u * y - u * u * t) * inv2s2 - max_log);
    z += w;
    double uk = 1.0;
    for (int k = 1; k <= max_k; ++k) {
      uk *= u;
      sums[k] += w * uk;
    }
  }
  if (!(z > 0.0) || !std::isfinite(z))
    raise(ErrorCode::NumericalUnderflow, "posterior normalizer underflowed");
  out[0] = 1.0;
  for (int k = 1; k <= max_k; ++k) out[k] = sums[k] / z;
}

PosteriorStats posterior_stats(const FilterModel& model, double t, double y) {
  if (model.prior.kind == PriorKind::Normal) {
    PosteriorStats st{};
    normal_posterior(model, t, y, st.mean, st.var);
    return st;
  }
  double m[5];
  atom_posterior_moments(model, t, y, 2, m);
  return {m[1], std::max(0.0, m[2] - m[1] * m[1])};
}

void check_inside_support(const FilterModel& model, double x) {
  auto [lo, hi] = model.support();
  if (!(x > lo && x < hi))
    raise(ErrorCode::OutOfSupport, "x = " + std::to_string(x) + " is not strictly inside I_mu");
}

// Monotone root solve for f(t, y) = x on a bracket [a, b] with
// f(a) <= x <= f(b): bisection to a narrow bracket, then safeguarded
// Newton using f' = Var/sigma^2.
double solve_on_bracket(const FilterModel& model, double t, double x, double a, double b) {
  const double tol = f_tolerance(x);
  const double s2 = model.sigma * model.sigma;
  double y = 0.5 * (a + b);
  for (int iter = 0; iter < 240; ++iter) {
    const PosteriorStats st = posterior_stats(model, t, y);
    const double r = st.mean - x;
    if (std::abs(r) <= tol) return y;
    if (r < 0.0)
      a = y;
    else
      b = y;
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(y)))
      return 0.5 * (a + b);
    double y_next;
    if (st.var > 0.0) {
      y_next = y - r * s2 / st.var;  // Newton
      if (!(y_next > a && y_next < b)) y_next = 0.5 * (a + b);
    } else {
      y_next = 0.5 * (a + b);
    }
    y = y_next;
  }
  return y;
}

// Expands a bracket upward/downward geometrically from the seed until f
// straddles x. seed_y is a point with known posterior mean seed_f.
double invert_with_seed(const FilterModel& model, double t, double x, double seed_y,
                        double seed_f) {
  const double tol = f_tolerance(x);
  if (std::abs(seed_f - x) <= tol) return seed_y;
  double step = 1.0;
  if (seed_f < x) {
    double a = seed_y;
    for (;;) {
      const double b = a + step;
      if (std::abs(b) > kBracketLimit)
        raise(ErrorCode::BracketFailure,
              "bracket expansion exceeded |y| = 1e9; x too close to an endpoint of I_mu");
      const double fb = posterior_mean(model, t, b);
      if (fb >= x) return solve_on_bracket(model, t, x, a, b);
      a = b;
      step *= 2.0;
    }
  } else {
    double b = seed_y;
    for (;;) {
      const double a = b - step;
      if (std::abs(a) > kBracketLimit)
        raise(ErrorCode::BracketFailure,
              "bracket expansion exceeded |y| = 1e9; x too close to an endpoint of I_mu");
      const double fa = posterior_mean(model, t, a);
      if (fa <= x) return solve_on_bracket(model, t, x, a, b);
      b = a;
      step *= 2.0;
    }
  }
}

double psi_from_var(const FilterModel& model, double var) {
  return std::max(0.0, var) / model.sigma;
}

// Closed forms bypass the numeric inversion entirely.
bool psi_closed_form(const FilterModel& model, double t, double x, double& out) {
  if (model.prior.kind == PriorKind::TwoPoint) {
    out = (model.prior.h - x) * (x - model.prior.l) / model.sigma;
    return true;
  }
  if (model.prior.kind == PriorKind::Normal) {
    const double s2 = model.sigma * model.sigma;
    const double g2 = model.prior.gamma * model.prior.gamma;
    out = model.sigma * g2 / (s2 + t * g2);
    return true;
  }
  return false;
}

bool psi_edge_clamped(const FilterModel& model, double x, double& out) {
  auto [lo, hi] = model.support();
  if (std::isfinite(lo) && x - lo <= kEdgeClamp) {
    out = 0.0;
    return true;
  }
  if (std::isfinite(hi) && hi - x <= kEdgeClamp) {
    out = 0.0;
    return true;
  }
  return false;
}

}  // namespace

FilterModel::FilterModel(Prior p, double sigma_) : prior(std::move(p)), sigma(sigma_) {
  validate(prior);
  if (!std::isfinite(sigma) || !(sigma > 0.0))
    raise(ErrorCode::DegenerateParameter, "filter model needs sigma > 0");
}

double posterior_moment(const FilterModel& model, double t, double y, int k) {
  check_query(t, y);
  if (k < 0 || k > 4) raise(ErrorCode::InvalidArgument, "posterior_moment supports k = 0..4");
  if (model.prior.kind == PriorKind::Normal) {
    double mean, var;
    normal_posterior(model, t, y, mean, var);
    return gaussian_raw_moment(mean, var, k);
  }
  double m[5];
  atom_posterior_moments(model, t, y, std::max(k, 1), m);
  return m[k];
}

double posterior_mean(const FilterModel& model, double t, double y) {
  return posterior_moment(model, t, y, 1);
}

double invert_mean(const FilterModel& model, double t, double x) {
  check_query(t, 0.0);
  check_inside_support(model, x);
  if (model.prior.kind == PriorKind::Normal) {
    const double s2 = model.sigma * model.sigma;
    const double g2 = model.prior.gamma * model.prior.gamma;
    return (x * (s2 + t * g2) - s2 * model.prior.m) / g2;
  }
  const double f0 = posterior_mean(model, t, 0.0);
  return invert_with_seed(model, t, x, 0.0, f0);
}

double dispersion(const FilterModel& model, double t, double x) {
  check_query(t, 0.0);
  check_inside_support(model, x);
  double out;
  if (psi_edge_clamped(model, x, out)) return out;
  if (psi_closed_form(model, t, x, out)) return out;
  const double y = invert_mean(model, t, x);
  return psi_from_var(model, posterior_stats(model, t, y).var);
}

double moment_inequality_value(double m1, double m2, double m3, double m4) {
  return m4 * m2 + 2.0 * m3 * m2 * m1 - m4 * m1 * m1 - m3 * m3 - m2 * m2 * m2;
}

double DispersionEvaluator::psi(double t, double x) const { return dispersion(*model_, t, x); }

PsiGrid::PsiGrid(const FilterModel& model, double t0, double t1, double x_lo, double x_hi,
                 int n_t, int n_x)
    : t0_(t0), t1_(t1), x_lo_(x_lo), x_hi_(x_hi), n_t_(n_t), n_x_(n_x) {
  if (!(t1 > t0) || n_t < 1 || n_x < 1 || !(x_hi > x_lo))
    raise(ErrorCode::InvalidArgument, "degenerate psi grid");
  DispersionEvaluator eval(model);
  std::vector<double> xs(n_x + 1);
  const double dx = (x_hi - x_lo) / n_x;
  for (int j = 0; j <= n_x; ++j) xs[j] = (j == n_x) ? x_hi : x_lo + j * dx;
  values_.resize(static_cast<std::size_t>(n_t + 1) * (n_x + 1));
  const double dt = (t1 - t0) / n_t;
  for (int i = 0; i <= n_t; ++i) {
    std::span<double> row(values_.data() + static_cast<std::size_t>(i) * (n_x + 1),
                          static_cast<std::size_t>(n_x + 1));
    eval.psi_row((i == n_t) ? t1 : t0 + i * dt, xs, row);
  }
  for (double v : values_) max_value_ = std::max(max_value_, v);
}

double PsiGrid::operator()(double t, double x) const {
  const double dt = (t1_ - t0_) / n_t_;
  const double dx = (x_hi_ - x_lo_) / n_x_;
  const double ti = std::clamp((t - t0_) / dt, 0.0, static_cast<double>(n_t_));
  const double xj = std::clamp((x - x_lo_) / dx, 0.0, static_cast<double>(n_x_));
  const int i = std::min(static_cast<int>(ti), n_t_ - 1);
  const int j = std::min(static_cast<int>(xj), n_x_ - 1);
  const double wt = ti - i, wx = xj - j;
  auto at = [&](int a, int b) { return values_[static_cast<std::size_t>(a) * (n_x_ + 1) + b]; };
  return (1.0 - wt) * ((1.0 - wx) * at(i, j) + wx * at(i, j + 1)) +
         wt * ((1.0 - wx) * at(i + 1, j) + wx * at(i + 1, j + 1));
}

void DispersionEvaluator::psi_row(double t, std::span<const double> xs,
                                  std::span<double> out) const {
  const FilterModel& model = *model_;
  if (xs.size() != out.size()) raise(ErrorCode::InvalidArgument, "psi_row size mismatch");

  double closed;
  if (xs.empty()) return;
  if (psi_closed_form(model, t, xs[0], closed) ||
      model.prior.kind == PriorKind::Normal) {
    for (std::size_t j = 0; j < xs.size(); ++j) {
      check_inside_support(model, xs[j]);
      out[j] = dispersion(model, t, xs[j]);
    }
    return;
  }

  // Walk ascending x carrying the previous inverse as the bracket seed.
  bool have_prev = false;
  double prev_y = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double x = xs[j];
    check_inside_support(model, x);
    if (psi_edge_clamped(model, x, out[j])) continue;
    double y;
    if (!have_prev) {
      y = invert_mean(model, t, x);
    } else {
      const double prev_f = posterior_mean(model, t, prev_y);
      y = invert_with_seed(model, t, x, prev_y, prev_f);
    }
    out[j] = psi_from_var(model, posterior_stats(model, t, y).var);
    prev_y = y;
    have_prev = true;
  }
}

}  // namespace driftliq
