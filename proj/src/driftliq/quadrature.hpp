#ifndef DRIFTLIQ_QUADRATURE_HPP
#define DRIFTLIQ_QUADRATURE_HPP

#include <vector>

namespace driftliq {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for \int e^{-x^2} f(x) dx (physicists' weight).
QuadRule gauss_hermite(int n);

// Gauss-Legendre rule on [-1, 1].
QuadRule gauss_legendre(int n);

}  // namespace driftliq

#endif
