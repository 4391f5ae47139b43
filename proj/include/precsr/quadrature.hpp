#pragma once

#include <Eigen/Core>

namespace precsr {

// Nodes and weights on (0,1); sum of weights equals the interval length.
struct Quadrature1D {
  Eigen::ArrayXd nodes;
  Eigen::ArrayXd weights;
};

// n-point Gauss-Legendre rule mapped to (0,1). Nodes from Newton iteration on
// P_n starting at the Chebyshev angles; accurate to ~1 ulp for n <= a few
// hundred.
Quadrature1D gauss_legendre(int n);

// Composite Gauss-Legendre rule graded geometrically toward both endpoints so
// integrable endpoint singularities (x^(a-1) with a > 0) converge. Panels span
// [eps*ratio^k, eps*ratio^(k+1)] up to 1/2, mirrored; the two [0,eps] strips
// are represented by a node at the clamp point with weight eps, matching how a
// clamped integrand behaves there. All nodes stay inside [eps, 1-eps].
Quadrature1D graded_endpoint_rule(double eps = 1e-9, double ratio = 4.0,
                                  int panel_nodes = 24);

template <class F>
double integrate_1d(const Quadrature1D& q, F&& f) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.nodes.size(); ++i) {
    s += q.weights[i] * f(q.nodes[i]);
  }
  return s;
}

// Tensor-product integral of f(x, y) over the unit square.
template <class F>
double integrate_unit_square(const Quadrature1D& q, F&& f) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.nodes.size(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < q.nodes.size(); ++j) {
      row += q.weights[j] * f(q.nodes[i], q.nodes[j]);
    }
    s += q.weights[i] * row;
  }
  return s;
}

}  // namespace precsr
