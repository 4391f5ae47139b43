#include "precsr/quadrature.hpp"

#include <cmath>
#include <vector>

#include "precsr/errors.hpp"

namespace precsr {

Quadrature1D gauss_legendre(int n) {
  if (n < 1) throw config_error("gauss_legendre needs n >= 1");
  Eigen::ArrayXd x(n), w(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-angle start, then Newton on P_n(z).
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const double weight = 2.0 / ((1.0 - z * z) * pp * pp);
    // Map [-1,1] -> (0,1); enforce the symmetric pairing exactly.
    x[i] = 0.5 * (1.0 - z);
    x[n - 1 - i] = 0.5 * (1.0 + z);
    w[i] = 0.5 * weight;
    w[n - 1 - i] = 0.5 * weight;
  }
  return {x, w};
}

Quadrature1D graded_endpoint_rule(double eps, double ratio, int panel_nodes) {
  if (!(eps > 0.0 && eps < 0.25)) throw config_error("graded rule needs 0 < eps < 0.25");
  if (!(ratio > 1.0)) throw config_error("graded rule needs ratio > 1");
  const Quadrature1D base = gauss_legendre(panel_nodes);

  std::vector<double> bps{eps};
  while (bps.back() * ratio < 0.5) bps.push_back(bps.back() * ratio);
  bps.push_back(0.5);

  std::vector<double> xs, ws;
  xs.push_back(eps);  // left clamp strip: width eps at the clamp value
  ws.push_back(eps);
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
    const double lo = bps[k], hi = bps[k + 1], len = hi - lo;
    for (Eigen::Index i = 0; i < base.nodes.size(); ++i) {
      const double t = lo + base.nodes[i] * len;
      const double wt = base.weights[i] * len;
      xs.push_back(t);
      ws.push_back(wt);
      xs.push_back(1.0 - t);  // mirrored panel
      ws.push_back(wt);
    }
  }
  xs.push_back(1.0 - eps);  // right clamp strip
  ws.push_back(eps);

  Quadrature1D q;
  q.nodes = Eigen::Map<Eigen::ArrayXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  q.weights = Eigen::Map<Eigen::ArrayXd>(ws.data(), static_cast<Eigen::Index>(ws.size()));
  return q;
}

}  // namespace precsr
