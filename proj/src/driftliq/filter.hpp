#ifndef DRIFTLIQ_FILTER_HPP
#define DRIFTLIQ_FILTER_HPP

#include <span>
#include <vector>

#include "driftliq/prior.hpp"

namespace driftliq {

/// Validated prior plus the known market volatility. Immutable; safe to
/// share across threads.
struct FilterModel {
  Prior prior;
  double sigma = 0.0;

  FilterModel(Prior p, double sigma_);

  std::pair<double, double> support() const { return support_interval(prior); }
  double prior_mean() const { return raw_moment(prior, 1); }
};

/// k-th raw moment of the posterior law of the drift given Y_t = y.
/// Atom weights are proportional to exp((2uy - u^2 t)/(2 sigma^2)),
/// evaluated max-shifted in log space; the Normal prior uses its
/// conjugate closed form.
double posterior_moment(const FilterModel& model, double t, double y, int k);

/// f(t,y) = E[X | Y_t = y]; strictly increasing in y with range I_mu.
double posterior_mean(const FilterModel& model, double t, double y);

/// y_x(t): the unique y with f(t,y) = x, for x strictly inside I_mu.
/// Closed form for Normal; monotone bisection after geometric bracket
/// expansion otherwise.
double invert_mean(const FilterModel& model, double t, double x);

/// psi(t,x) = Var(X | Y_t = y_x(t)) / sigma, the dispersion of the
/// conditional-mean SDE. Closed forms: TwoPoint (h-x)(x-l)/sigma,
/// Normal sigma gamma^2/(sigma^2 + t gamma^2).
double dispersion(const FilterModel& model, double t, double x);

/// m4 m2 + 2 m3 m2 m1 - m4 m1^2 - m3^2 - m2^3; nonnegative for the raw
/// moments of any distribution, zero exactly for one- and two-point laws.
double moment_inequality_value(double m1, double m2, double m3, double m4);

/// Grid-fill helper: inverts f along a row of ascending x at fixed t,
/// carrying the previous solution as the next bracket seed. Results are
/// identical to calling dispersion() pointwise; only the bracketing work
/// is amortized. No state is shared across instances or calls.
class DispersionEvaluator {
public:
  explicit DispersionEvaluator(const FilterModel& model) : model_(&model) {}

  double psi(double t, double x) const;
  void psi_row(double t, std::span<const double> xs, std::span<double> out) const;

private:
  const FilterModel* model_;
};

/// Precomputed psi table with bilinear lookup, for path engines that
/// would otherwise repeat the mean inversion at every Euler step.
class PsiGrid {
public:
  PsiGrid(const FilterModel& model, double t0, double t1, double x_lo, double x_hi, int n_t,
          int n_x);

  double operator()(double t, double x) const;
  double max_value() const { return max_value_; }

private:
  double t0_, t1_, x_lo_, x_hi_;
  int n_t_, n_x_;
  double max_value_ = 0.0;
  std::vector<double> values_;
};

}  // namespace driftliq

#endif
