#pragma once

#include <vector>

#include "precsr/geometry.hpp"
#include "precsr/rng.hpp"

namespace precsr {

// Coordinates at or beyond the unit-square boundary are pulled to
// [kClampEps, 1 - kClampEps] before taking logs. The clamp bounds the evidence
// a single boundary-mapped observation can contribute; see log_beta1d.
inline constexpr double kClampEps = 1e-9;

// Compact box [lo, hi]^4 for the four shape parameters of a mixture component.
struct SupportBounds {
  double lo = 0.2;
  double hi = 10.0;
};

// One component: x ~ Beta(a1, b1), y ~ Beta(a2, b2), independent coordinates.
struct KernelParams {
  double a1 = 1.0, b1 = 1.0, a2 = 1.0, b2 = 1.0;
};

void validate_bounds(const SupportBounds& b);
void validate_params(const KernelParams& u, const SupportBounds& b);

// log B(a, b) through lgamma; relative accuracy tracks the libm lgamma (~1e-15
// over the shape box used here).
double log_beta_fn(double a, double b);

double clamp_unit(double x);

// log Beta(x; a, b) with x clamped into [kClampEps, 1 - kClampEps]. Finite for
// every finite x and positive shapes.
double log_beta1d(double x, double a, double b);

// Product structure: exactly log_beta1d(x) + log_beta1d(y).
double log_kernel(Point s, const KernelParams& u);

// count iid draws, each shape Unif(lo, hi); per particle the order is
// a1, b1, a2, b2. Fixed draw order keeps seeds meaningful across versions.
std::vector<KernelParams> sample_particles(int count, const SupportBounds& b, Rng& rng);

}  // namespace precsr
