#include "precsr/kernel.hpp"

#include <cmath>
#include <string>

#include "precsr/errors.hpp"

namespace precsr {

void validate_bounds(const SupportBounds& b) {
  if (!(std::isfinite(b.lo) && std::isfinite(b.hi)) || !(0.0 < b.lo) || !(b.lo < b.hi)) {
    throw config_error("support bounds need 0 < lo < hi and finite values");
  }
}

void validate_params(const KernelParams& u, const SupportBounds& b) {
  for (double v : {u.a1, u.b1, u.a2, u.b2}) {
    if (!(b.lo <= v && v <= b.hi)) {
      throw config_error("kernel shape " + std::to_string(v) +
                         " outside support bounds [" + std::to_string(b.lo) +
                         ", " + std::to_string(b.hi) + "]");
    }
  }
}

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double clamp_unit(double x) {
  if (!(x > kClampEps)) return kClampEps;
  if (!(x < 1.0 - kClampEps)) return 1.0 - kClampEps;
  return x;
}

double log_beta1d(double x, double a, double b) {
  const double xc = clamp_unit(x);
  return (a - 1.0) * std::log(xc) + (b - 1.0) * std::log(1.0 - xc) - log_beta_fn(a, b);
}

double log_kernel(Point s, const KernelParams& u) {
  return log_beta1d(s.x, u.a1, u.b1) + log_beta1d(s.y, u.a2, u.b2);
}

std::vector<KernelParams> sample_particles(int count, const SupportBounds& b, Rng& rng) {
  validate_bounds(b);
  if (count < 1) throw config_error("sample_particles needs count >= 1");
  std::vector<KernelParams> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    KernelParams u;
    u.a1 = rng.uniform(b.lo, b.hi);
    u.b1 = rng.uniform(b.lo, b.hi);
    u.a2 = rng.uniform(b.lo, b.hi);
    u.b2 = rng.uniform(b.lo, b.hi);
    out.push_back(u);
  }
  return out;
}

}  // namespace precsr
