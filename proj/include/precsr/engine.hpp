#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "precsr/geometry.hpp"
#include "precsr/kernel.hpp"
#include "precsr/rng.hpp"

namespace precsr {

// Decaying update weights w_i = (i + 1)^-gamma. The index counts observations
// consumed in the current phase; pretraining runs its own index sequence and
// the test stream restarts from zero, so the first test observation gets w_1.
struct WeightSchedule {
  double gamma = 0.67;
  std::int64_t index = 0;
};

// w_i at the schedule's current index (call after the index was advanced).
double weight(const WeightSchedule& s);

// Particle approximation of the recursively updated mixing distribution.
// Fixed cloud: particles never move, resample, or jitter; only p and d evolve.
// p is the mixing density at each particle, d = p / p0 the importance ratio
// against the flat initial guess. Invariants maintained by update():
//   mean(d) == 1, d >= 0, d == p / p0 up to accumulated rounding.
// cum_log_pred accumulates log m_{i-1}(s_i) over the current phase in
// observation order, so batch splits reproduce identical sums bit for bit.
struct ParticleSet {
  Eigen::ArrayXd a1, b1, a2, b2;  // component shapes
  Eigen::ArrayXd log_norm;        // -log B(a1,b1) - log B(a2,b2), derived
  Eigen::ArrayXd p;
  Eigen::ArrayXd d;
  WeightSchedule schedule;
  SupportBounds bounds;
  double cum_log_pred = 0.0;

  Eigen::Index size() const { return a1.size(); }
  // Flat initial guess level: 1 / volume of the 4-D shape box.
  double p0() const;
};

ParticleSet init_filter(const std::vector<KernelParams>& particles,
                        WeightSchedule schedule, SupportBounds bounds);

// Starts a new observation phase: weight index and batch accumulator to zero.
void begin_phase(ParticleSet& ps);

// One recursion step on observation s. Returns log m(s) evaluated with the
// state as it was BEFORE this call mutated it (predictive value). Throws
// degenerate_update_error if the predictive mass underflows to zero.
double update(ParticleSet& ps, Point s);

// Folds update over the pattern in order. Returns cum_log_pred after the
// batch: on a fresh phase that is the batch's own sum of log-predictives.
double run_filter(ParticleSet& ps, std::span<const Point> pts);

// log of the current mixture density estimate (1/T) sum_t k(s|u_t) d_t.
// Shares its evaluation path with update(), so the value equals the
// log-predictive update() would return for s, bit for bit.
double log_mixture_density(const ParticleSet& ps, Point s);
double mixture_density(const ParticleSet& ps, Point s);

// Streams a homogeneous Poisson pattern with intensity lambda0 over the unit
// window through a fresh filter, then resets the phase. Particle positions are
// sampled from rng first, then the pretraining pattern, in that order.
ParticleSet pretrain(const Window& unit_window, double lambda0, int particle_count,
                     WeightSchedule schedule, SupportBounds bounds, Rng& rng);

// Lossless snapshot of the full filter state; doubles survive the decimal
// round trip bit for bit. log_norm is rebuilt on load.
nlohmann::json particleset_to_json(const ParticleSet& ps);
ParticleSet particleset_from_json(const nlohmann::json& j);

}  // namespace precsr
