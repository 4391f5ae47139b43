#include "precsr/simulate.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "precsr/errors.hpp"

namespace precsr {

namespace {

Point uniform_in_window(const Window& w, const Rectangle& bb, Rng& rng) {
  if (w.is_rectangle()) {
    const double x = rng.uniform(bb.xmin, bb.xmax);
    const double y = rng.uniform(bb.ymin, bb.ymax);
    return {x, y};
  }
  for (;;) {
    const double x = rng.uniform(bb.xmin, bb.xmax);
    const double y = rng.uniform(bb.ymin, bb.ymax);
    if (contains(w, {x, y})) return {x, y};
  }
}

}  // namespace

PointPattern sim_hpp(const Window& w, double lambda, Rng& rng) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw config_error("intensity lambda must be positive and finite");
  }
  const Rectangle bb = bounding_box(w);
  const std::int64_t n = rng.poisson(lambda * area(w));
  PointPattern pat;
  pat.window = w;
  pat.points.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    pat.points.push_back(uniform_in_window(w, bb, rng));
  }
  pat.prov = {"hpp", {{"lambda", lambda}}, 0};
  return pat;
}

namespace {

void append_matern_points(const Window& w, const MaternParams& par, Rng& rng,
                          std::vector<Point>& out) {
  const Rectangle bb = bounding_box(w);
  const Rectangle dil{bb.xmin - par.scale, bb.xmax + par.scale,
                      bb.ymin - par.scale, bb.ymax + par.scale};
  const double dil_area = (dil.xmax - dil.xmin) * (dil.ymax - dil.ymin);
  const std::int64_t n_par = rng.poisson(par.kappa * dil_area);
  for (std::int64_t i = 0; i < n_par; ++i) {
    const double px = rng.uniform(dil.xmin, dil.xmax);
    const double py = rng.uniform(dil.ymin, dil.ymax);
    const std::int64_t n_off = rng.poisson(par.mu);
    for (std::int64_t k = 0; k < n_off; ++k) {
      const double r = par.scale * std::sqrt(rng.uniform01());
      const double th = 2.0 * M_PI * rng.uniform01();
      const Point q{px + r * std::cos(th), py + r * std::sin(th)};
      if (contains(w, q)) out.push_back(q);
    }
  }
}

void validate_matern(const MaternParams& par) {
  if (!(par.kappa > 0.0) || !(par.scale > 0.0) || !(par.mu > 0.0)) {
    throw config_error("cluster parameters kappa, scale, mu must be positive");
  }
}

}  // namespace

PointPattern sim_matern(const Window& w, const MaternParams& par, Rng& rng) {
  validate_matern(par);
  PointPattern pat;
  pat.window = w;
  append_matern_points(w, par, rng, pat.points);
  pat.prov = {"matern",
              {{"kappa", par.kappa}, {"scale", par.scale}, {"mu", par.mu}},
              0};
  return pat;
}

double trunc_exp_quantile(double u, double gamma) {
  if (!(u >= 0.0 && u <= 1.0)) throw config_error("quantile argument u must be in [0,1]");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw config_error("decay rate gamma must be non-negative and finite");
  }
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  if (gamma == 0.0) return u;
  const double c = -std::expm1(-gamma);  // 1 - e^-gamma, accurately
  return -std::log1p(-u * c) / gamma;
}

PointPattern sim_trunc_exp(const TruncExpParams& par, Rng& rng) {
  if (!(par.lambda0 > 0.0) || !(par.gamma1 >= 0.0) || !(par.gamma2 >= 0.0)) {
    throw config_error("truncated-exponential scenario needs lambda0 > 0 and gammas >= 0");
  }
  PointPattern pat;
  pat.window = unit_square();
  const std::int64_t n = rng.poisson(par.lambda0);
  pat.points.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = trunc_exp_quantile(rng.uniform01(), par.gamma1);
    const double y = trunc_exp_quantile(rng.uniform01(), par.gamma2);
    pat.points.push_back({x, y});
  }
  pat.prov = {"trunc_exp",
              {{"lambda0", par.lambda0}, {"gamma1", par.gamma1}, {"gamma2", par.gamma2}},
              0};
  return pat;
}

PointPattern sim_changepoint(const MaternParams& par, std::int64_t n1,
                             std::int64_t n2, Rng& rng) {
  validate_matern(par);
  if (n1 < 0 || n2 < 0) throw config_error("changepoint segment sizes must be non-negative");
  const Window w = unit_square();
  PointPattern pat;
  pat.window = w;

  std::vector<Point> clustered;
  int rounds = 0;
  while (static_cast<std::int64_t>(clustered.size()) < n1) {
    append_matern_points(w, par, rng, clustered);
    if (++rounds > 100000) {
      throw config_error("cluster phase kept coming back empty; raise kappa or mu");
    }
  }
  clustered.resize(static_cast<std::size_t>(n1));
  pat.points = std::move(clustered);

  const std::vector<Point> tail = sample_uniform_exact(w, n2, rng);
  pat.points.insert(pat.points.end(), tail.begin(), tail.end());
  pat.prov = {"changepoint",
              {{"kappa", par.kappa},
               {"scale", par.scale},
               {"mu", par.mu},
               {"n1", n1},
               {"n2", n2}},
              0};
  return pat;
}

std::vector<Point> sample_uniform_exact(const Window& w, std::int64_t n, Rng& rng) {
  if (n < 0) throw config_error("cannot sample a negative number of points");
  const Rectangle bb = bounding_box(w);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) pts.push_back(uniform_in_window(w, bb, rng));
  return pts;
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.index_below(i)]);
  }
  return idx;
}

}  // namespace precsr
