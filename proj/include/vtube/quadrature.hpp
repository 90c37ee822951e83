#ifndef VTUBE_QUADRATURE_HPP
#define VTUBE_QUADRATURE_HPP

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <vector>

namespace vtube {

/// Composite 7-point Gauss-Legendre rule over [a, b], split at `breaks`
/// (points where the integrand may lose smoothness) and then into
/// `subdivisions` equal panels per piece. Exact for polynomials of degree
/// <= 13 on each piece.
template <typename F>
double integrate_piecewise(F&& f, double a, double b, std::vector<double> breaks, int subdivisions = 1) {
  if (!(b > a)) return 0.0;
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = std::max(a, breaks[k]);
    const double hi = std::min(b, breaks[k + 1]);
    if (!(hi > lo)) continue;
    const double width = (hi - lo) / subdivisions;
    for (int j = 0; j < subdivisions; ++j) {
      const double x0 = lo + j * width;
      const double x1 = j + 1 == subdivisions ? hi : x0 + width;
      total += boost::math::quadrature::gauss<double, 7>::integrate(f, x0, x1);
    }
  }
  return total;
}

}  // namespace vtube

#endif  // VTUBE_QUADRATURE_HPP
