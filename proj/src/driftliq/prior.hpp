#ifndef DRIFTLIQ_PRIOR_HPP
#define DRIFTLIQ_PRIOR_HPP

#include <utility>
#include <vector>

namespace driftliq {

enum class PriorKind { TwoPoint, Normal, Discrete, Quadrature };

/// Prior distribution of the unknown drift. TwoPoint and Normal are
/// parametric; Discrete and Quadrature are weighted atoms (a Quadrature
/// prior is a density sampled at nodes with integration weights — after
/// normalization the two behave identically).
struct Prior {
  PriorKind kind = PriorKind::Normal;

  // TwoPoint
  double l = 0.0;
  double h = 0.0;
  double pi = 0.0;

  // Normal
  double m = 0.0;
  double gamma = 0.0;

  // Discrete / Quadrature: atoms and normalized weights
  std::vector<double> points;
  std::vector<double> weights;

  static Prior two_point(double l, double h, double pi);
  static Prior normal(double m, double gamma);
  static Prior discrete(std::vector<double> points, std::vector<double> weights);
  static Prior quadrature(std::vector<double> nodes, std::vector<double> weights);
};

/// Throws Error{DegenerateParameter|SignMassViolation} when an invariant
/// fails. Sign-mass (mass below and above 0 both positive) rules out the
/// trivial stop-now / stop-at-T cases.
void validate(const Prior& prior);

/// \int u^k prior(du) for k in 0..4; closed forms for TwoPoint and Normal.
double raw_moment(const Prior& prior, int k);

/// Law of X - r. Throws ShiftBreaksSignMass when the shifted prior loses
/// mass on one side of zero (the discounted problem is then trivial).
Prior shift_prior(const Prior& prior, double r);

/// Endpoints of I_mu, the interior of the support hull. Unbounded sides
/// are +/-infinity.
std::pair<double, double> support_interval(const Prior& prior);

/// Reweights atoms by exp(eps*u^2/(2 sigma^2)) and renormalizes, producing
/// the prior-at-time(-eps) whose posterior at time 0 matches the original
/// prior's generalized time-0 posterior. Finite-atom kinds only.
Prior epsilon_extension(const Prior& prior, double epsilon, double sigma);

bool has_compact_support(const Prior& prior);

}  // namespace driftliq

#endif
