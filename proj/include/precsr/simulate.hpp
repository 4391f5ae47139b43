#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "precsr/geometry.hpp"
#include "precsr/rng.hpp"

namespace precsr {

struct Provenance {
  std::string generator;
  nlohmann::json params;
  std::uint64_t seed = 0;
};

struct PointPattern {
  std::vector<Point> points;
  Window window;
  Provenance prov;
};

// Homogeneous Poisson pattern: count ~ Poisson(lambda * area), locations
// uniform (rejection from the bounding box for polygons).
PointPattern sim_hpp(const Window& w, double lambda, Rng& rng);

struct MaternParams {
  double kappa = 50.0;  // parent intensity
  double scale = 0.1;   // cluster (disc) radius
  double mu = 20.0;     // mean offspring per parent
};

// Matern cluster process. Parents live on the bounding box dilated by scale so
// edge clusters are unbiased (expected retained count = kappa * mu * area(w));
// parents are not emitted. Offspring are emitted parent by parent in
// generation order and discarded when they fall outside the window.
PointPattern sim_matern(const Window& w, const MaternParams& par, Rng& rng);

// Inverse CDF of the exponential density restricted to (0,1):
// -log(1 - u (1 - e^-gamma)) / gamma, continuously extended to u at gamma = 0.
// Exact at the endpoints: u = 0 -> 0, u = 1 -> 1.
double trunc_exp_quantile(double u, double gamma);

struct TruncExpParams {
  double lambda0 = 1000.0;
  double gamma1 = 2.0;
  double gamma2 = 4.0;
};

// Inhomogeneous alternative on the unit square: Poisson(lambda0) points with
// independent truncated-exponential coordinates (x drawn before y).
PointPattern sim_trunc_exp(const TruncExpParams& par, Rng& rng);

// n1 clustered points followed by n2 uniform points on the unit square. Fresh
// cluster realizations are appended until n1 points exist, then truncated.
PointPattern sim_changepoint(const MaternParams& par, std::int64_t n1,
                             std::int64_t n2, Rng& rng);

// Exactly n uniform draws inside the window.
std::vector<Point> sample_uniform_exact(const Window& w, std::int64_t n, Rng& rng);

// Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace precsr
