#include "driftliq/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "driftliq/errors.hpp"

namespace driftliq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void normalize_weights(std::vector<double>& w) {
  double total = 0.0;
  for (double wi : w) {
    if (!std::isfinite(wi) || wi < 0.0)
      raise(ErrorCode::DegenerateParameter, "weights must be finite and nonnegative");
    total += wi;
  }
  if (total <= 0.0) raise(ErrorCode::DegenerateParameter, "weights must have positive sum");
  for (double& wi : w) wi /= total;
}

void check_atoms(const std::vector<double>& pts, const std::vector<double>& wts) {
  if (pts.empty()) raise(ErrorCode::DegenerateParameter, "atom list is empty");
  if (pts.size() != wts.size())
    raise(ErrorCode::DegenerateParameter, "points and weights differ in length");
  for (double p : pts)
    if (!std::isfinite(p)) raise(ErrorCode::DegenerateParameter, "atom values must be finite");
}

double signed_mass(const Prior& p, bool positive_side) {
  switch (p.kind) {
    case PriorKind::TwoPoint: {
      double mass = 0.0;
      if (positive_side ? p.l > 0.0 : p.l < 0.0) mass += 1.0 - p.pi;
      if (positive_side ? p.h > 0.0 : p.h < 0.0) mass += p.pi;
      return mass;
    }
    case PriorKind::Normal:
      return p.gamma > 0.0 ? 0.5 : (positive_side ? (p.m > 0.0) : (p.m < 0.0));
    case PriorKind::Discrete:
    case PriorKind::Quadrature: {
      double mass = 0.0;
      for (std::size_t i = 0; i < p.points.size(); ++i)
        if (positive_side ? p.points[i] > 0.0 : p.points[i] < 0.0) mass += p.weights[i];
      return mass;
    }
  }
  return 0.0;
}

void check_sign_mass(const Prior& p, ErrorCode code) {
  if (signed_mass(p, false) <= 0.0)
    raise(code, "no prior mass on (-inf,0): optimal strategy is to stop immediately");
  if (signed_mass(p, true) <= 0.0)
    raise(code, "no prior mass on (0,inf): optimal strategy is to stop at the terminal time");
}

}  // namespace

Prior Prior::two_point(double l, double h, double pi) {
  Prior p;
  p.kind = PriorKind::TwoPoint;
  p.l = l;
  p.h = h;
  p.pi = pi;
  return p;
}

Prior Prior::normal(double m, double gamma) {
  Prior p;
  p.kind = PriorKind::Normal;
  p.m = m;
  p.gamma = gamma;
  return p;
}

Prior Prior::discrete(std::vector<double> points, std::vector<double> weights) {
  check_atoms(points, weights);
  normalize_weights(weights);
  Prior p;
  p.kind = PriorKind::Discrete;
  p.points = std::move(points);
  p.weights = std::move(weights);
  return p;
}

Prior Prior::quadrature(std::vector<double> nodes, std::vector<double> weights) {
  check_atoms(nodes, weights);
  normalize_weights(weights);
  Prior p;
  p.kind = PriorKind::Quadrature;
  p.points = std::move(nodes);
  p.weights = std::move(weights);
  return p;
}

void validate(const Prior& prior) {
  switch (prior.kind) {
    case PriorKind::TwoPoint:
      if (!std::isfinite(prior.l) || !std::isfinite(prior.h) || !std::isfinite(prior.pi))
        raise(ErrorCode::DegenerateParameter, "two-point parameters must be finite");
      if (prior.l >= prior.h)
        raise(ErrorCode::DegenerateParameter, "two-point prior needs l < h");
      if (!(prior.pi > 0.0 && prior.pi < 1.0))
        raise(ErrorCode::DegenerateParameter, "two-point prior needs 0 < pi < 1");
      break;
    case PriorKind::Normal:
      if (!std::isfinite(prior.m) || !std::isfinite(prior.gamma))
        raise(ErrorCode::DegenerateParameter, "normal parameters must be finite");
      if (!(prior.gamma > 0.0))
        raise(ErrorCode::DegenerateParameter, "normal prior needs gamma > 0");
      break;
    case PriorKind::Discrete:
    case PriorKind::Quadrature: {
      check_atoms(prior.points, prior.weights);
      double total = 0.0;
      for (double w : prior.weights) {
        if (!std::isfinite(w) || w < 0.0)
          raise(ErrorCode::DegenerateParameter, "weights must be finite and nonnegative");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-12)
        raise(ErrorCode::DegenerateParameter, "weights must sum to 1 within 1e-12");
      break;
    }
  }
  // Integrability (exp(a u^2) integrable for some a > 0) holds for every
  // finite-support kind and for Normal with a < 1/(2 gamma^2); nothing to
  // reject here once the parameter checks pass.
  check_sign_mass(prior, ErrorCode::SignMassViolation);
}

double raw_moment(const Prior& prior, int k) {
  if (k < 0 || k > 4) raise(ErrorCode::InvalidArgument, "raw_moment supports k = 0..4");
  if (k == 0) return 1.0;
  switch (prior.kind) {
    case PriorKind::TwoPoint:
      return (1.0 - prior.pi) * std::pow(prior.l, k) + prior.pi * std::pow(prior.h, k);
    case PriorKind::Normal: {
      const double m = prior.m;
      const double g2 = prior.gamma * prior.gamma;
      switch (k) {
        case 1: return m;
        case 2: return m * m + g2;
        case 3: return m * m * m + 3.0 * m * g2;
        default: return m * m * m * m + 6.0 * m * m * g2 + 3.0 * g2 * g2;
      }
    }
    case PriorKind::Discrete:
    case PriorKind::Quadrature: {
      double s = 0.0;
      for (std::size_t i = 0; i < prior.points.size(); ++i)
        s += prior.weights[i] * std::pow(prior.points[i], k);
      return s;
    }
  }
  return 0.0;
}

Prior shift_prior(const Prior& prior, double r) {
  if (!std::isfinite(r)) raise(ErrorCode::InvalidArgument, "shift rate must be finite");
  Prior shifted = prior;
  switch (prior.kind) {
    case PriorKind::TwoPoint:
      shifted.l -= r;
      shifted.h -= r;
      break;
    case PriorKind::Normal:
      shifted.m -= r;
      break;
    case PriorKind::Discrete:
    case PriorKind::Quadrature:
      for (double& p : shifted.points) p -= r;
      break;
  }
  check_sign_mass(shifted, ErrorCode::ShiftBreaksSignMass);
  return shifted;
}

std::pair<double, double> support_interval(const Prior& prior) {
  switch (prior.kind) {
    case PriorKind::TwoPoint:
      return {prior.l, prior.h};
    case PriorKind::Normal:
      return {-kInf, kInf};
    case PriorKind::Discrete:
    case PriorKind::Quadrature: {
      double lo = kInf, hi = -kInf;
      for (std::size_t i = 0; i < prior.points.size(); ++i) {
        if (prior.weights[i] <= 0.0) continue;
        lo = std::min(lo, prior.points[i]);
        hi = std::max(hi, prior.points[i]);
      }
      return {lo, hi};
    }
  }
  return {-kInf, kInf};
}

Prior epsilon_extension(const Prior& prior, double epsilon, double sigma) {
  if (prior.kind != PriorKind::Discrete && prior.kind != PriorKind::Quadrature)
    raise(ErrorCode::UnsupportedKind,
          "epsilon extension needs a finite node set (pass TwoPoint as Discrete)");
  if (!(epsilon >= 0.0)) raise(ErrorCode::InvalidArgument, "epsilon must be nonnegative");
  if (!(sigma > 0.0)) raise(ErrorCode::InvalidArgument, "sigma must be positive");
  if (epsilon == 0.0) return prior;

  Prior out = prior;
  // log-space reweighting, max-shifted before exponentiating
  const double c = epsilon / (2.0 * sigma * sigma);
  double max_log = -kInf;
  std::vector<double> logs(prior.points.size(), -kInf);
  for (std::size_t i = 0; i < prior.points.size(); ++i) {
    if (prior.weights[i] <= 0.0) continue;
    logs[i] = std::log(prior.weights[i]) + c * prior.points[i] * prior.points[i];
    max_log = std::max(max_log, logs[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    out.weights[i] = std::isfinite(logs[i]) ? std::exp(logs[i] - max_log) : 0.0;
    total += out.weights[i];
  }
  if (!(total > 0.0) || !std::isfinite(total))
    raise(ErrorCode::NumericalUnderflow, "epsilon extension weights degenerate");
  for (double& w : out.weights) w /= total;
  return out;
}

bool has_compact_support(const Prior& prior) {
  auto [lo, hi] = support_interval(prior);
  return std::isfinite(lo) && std::isfinite(hi);
}

}  // namespace driftliq
