#include <doctest.h>

#include <cmath>
#include <set>

#include "precsr/quadrature.hpp"
#include "precsr/rng.hpp"

using namespace precsr;

TEST_CASE("splitmix64 is a deterministic bijection-like mixer") {
  CHECK(splitmix64(0) == splitmix64(0));
  CHECK(splitmix64(1) != splitmix64(2));
  // distinct outputs over a small range (collision would break substreams)
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(splitmix64(k));
  CHECK(seen.size() == 1000);
}

TEST_CASE("substreams of one master seed do not collide or echo the master") {
  const std::uint64_t master = 42;
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 512; ++k) {
    const std::uint64_t s = substream_seed(master, k);
    CHECK(s != master);
    seen.insert(s);
  }
  CHECK(seen.size() == 512);
  // different masters give different streams at the same index
  CHECK(substream_seed(1, 0) != substream_seed(2, 0));
}

TEST_CASE("uniform01 lies in [0, 1) and is reproducible") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform01());
  }
}

TEST_CASE("uniform(lo, hi) stays in range and index_below stays below") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(-2.0, 5.0);
    CHECK(v >= -2.0);
    CHECK(v < 5.0);
    CHECK(rng.index_below(7) < 7);
  }
  CHECK(rng.index_below(1) == 0);
}

TEST_CASE("poisson counts have the right mean under a fixed seed") {
  Rng rng(11);
  const double mean = 100.0;
  const int reps = 2000;
  double sum = 0.0;
  for (int i = 0; i < reps; ++i) sum += static_cast<double>(rng.poisson(mean));
  // SE = sqrt(100/2000) ~ 0.22; a +-1.5 band is ~6.7 sigma
  CHECK(sum / reps == doctest::Approx(mean).epsilon(0.015));
}

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1 exactly") {
  const Quadrature1D q = gauss_legendre(8);
  REQUIRE(q.nodes.size() == 8);
  // weights sum to the interval length
  CHECK(q.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  // all nodes interior to (0,1)
  for (Eigen::Index i = 0; i < q.nodes.size(); ++i) {
    CHECK(q.nodes[i] > 0.0);
    CHECK(q.nodes[i] < 1.0);
  }
  // x^15 has degree 2*8-1: integral over (0,1) is 1/16
  const double p15 = integrate_1d(q, [](double x) { return std::pow(x, 15); });
  CHECK(p15 == doctest::Approx(1.0 / 16.0).epsilon(1e-13));
  // degree 16 must NOT be exact for n = 8 (sanity that exactness is sharp)
  const double p16 = integrate_1d(q, [](double x) { return std::pow(x, 16); });
  CHECK(std::abs(p16 - 1.0 / 17.0) > 1e-13);
}

TEST_CASE("Gauss-Legendre nodes are symmetric about 1/2") {
  const Quadrature1D q = gauss_legendre(64);
  for (Eigen::Index i = 0; i < q.nodes.size(); ++i) {
    const Eigen::Index j = q.nodes.size() - 1 - i;
    CHECK(q.nodes[i] + q.nodes[j] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.weights[i] == doctest::Approx(q.weights[j]).epsilon(1e-13));
  }
}

TEST_CASE("GL64 integrates smooth transcendental integrands to machine precision") {
  const Quadrature1D q = gauss_legendre(64);
  const double e1 = integrate_1d(q, [](double x) { return std::exp(-2.0 * x); });
  CHECK(e1 == doctest::Approx(-std::expm1(-2.0) / 2.0).epsilon(1e-15));
  const double s1 = integrate_unit_square(
      q, [](double x, double y) { return std::sin(x) * std::cos(y); });
  CHECK(s1 == doctest::Approx((1.0 - std::cos(1.0)) * std::sin(1.0)).epsilon(1e-14));
}

TEST_CASE("the graded endpoint rule handles integrable endpoint singularities") {
  const Quadrature1D q = graded_endpoint_rule();
  // weights sum to 1 (the rule covers (0,1) including the eps strips)
  CHECK(q.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // all nodes inside the clamp range
  for (Eigen::Index i = 0; i < q.nodes.size(); ++i) {
    CHECK(q.nodes[i] >= 1e-9);
    CHECK(q.nodes[i] <= 1.0 - 1e-9);
  }
  // x^(a-1) with a = 0.7: plain GL64 misses this badly, the graded rule does
  // not. The clamp strips contribute eps * eps^(a-1) ~ eps^a, so the exact
  // target for the clamped integrand is 1 - O(eps^0.7).
  const double a = 0.7;
  const double got = integrate_1d(q, [&](double x) { return a * std::pow(x, a - 1.0); });
  CHECK(got == doctest::Approx(1.0).epsilon(5e-6));
  // shapes >= 1 are smooth at the endpoints: near machine precision
  for (const double b : {1.0, 2.5, 6.0, 10.0}) {
    const double smooth =
        integrate_1d(q, [&](double x) { return b * std::pow(x, b - 1.0); });
    CHECK(smooth == doctest::Approx(1.0).epsilon(1e-9));
  }
}
