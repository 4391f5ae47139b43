#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "precsr/engine.hpp"
#include "precsr/geometry.hpp"

namespace precsr {

// One retained trajectory point. crossed is sticky: true from the first n at
// which log_e reached the configured threshold, regardless of later dips.
struct TrajectoryRecord {
  std::int64_t n = 0;
  double log_e = 0.0;
  bool crossed = false;
};

struct Decision {
  bool reject_null = false;
  std::int64_t at_n = -1;  // first crossing index, -1 when never crossed
  double threshold = 0.0;  // log(1/alpha)
};

// Sequential evidence state against uniformity on the unit window. log_e
// accumulates log m(s_i) + log_area per observation, where m is evaluated
// before the filter consumes the point. The true running sup and first
// crossing are tracked per observation even when history is thinned.
struct EProcessState {
  ParticleSet filter;
  Window unit_window;
  double log_area = 0.0;
  double alpha = 0.05;
  std::int64_t n = 0;
  double log_e = 0.0;
  double sup_log_e = 0.0;
  std::int64_t first_crossing = -1;
  std::int64_t outside_count = 0;
  bool keep_history = true;
  std::vector<TrajectoryRecord> history;
};

inline double crossing_threshold(double alpha) { return -std::log(alpha); }

// The filter state should come from pretrain (or an explicit initial guess
// with a fresh phase). alpha is the level used for crossed flags and the
// tracked first crossing.
EProcessState init_eprocess(ParticleSet filter, const Window& unit_window,
                            double alpha = 0.05, bool keep_history = true);

// Consumes one unit-coordinate observation. Points outside the window are
// counted, clamped by the kernel, and still consumed. Does not touch history;
// observe_batch owns thinning.
TrajectoryRecord observe(EProcessState& st, Point s);

// Feeds the pattern in order, retaining every record whose n is a multiple of
// stride. The internal state advances on every point regardless of stride.
void observe_batch(EProcessState& st, std::span<const Point> pts, std::int64_t stride);

// Verdict at level alpha. At the configured alpha this uses the per-
// observation tracking (exact even with thinned history); at any other alpha
// it recomputes from retained history and needs keep_history. First-crossing
// semantics: once crossed, permanent.
Decision decision(const EProcessState& st, double alpha);

}  // namespace precsr
