#include "precsr/eprocess.hpp"

#include <cmath>
#include <utility>

#include "precsr/errors.hpp"

namespace precsr {

EProcessState init_eprocess(ParticleSet filter, const Window& unit_window,
                            double alpha, bool keep_history) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw config_error("alpha must lie strictly between 0 and 1");
  }
  EProcessState st;
  st.filter = std::move(filter);
  st.unit_window = unit_window;
  st.log_area = std::log(area(unit_window));
  st.alpha = alpha;
  st.keep_history = keep_history;
  return st;
}

TrajectoryRecord observe(EProcessState& st, Point s) {
  if (!contains(st.unit_window, s)) ++st.outside_count;
  const double log_m = update(st.filter, s);
  const double inc = log_m + st.log_area;
  st.log_e += inc;
  ++st.n;
  if (st.log_e > st.sup_log_e) st.sup_log_e = st.log_e;
  if (st.first_crossing < 0 && st.log_e >= crossing_threshold(st.alpha)) {
    st.first_crossing = st.n;
  }
  return {st.n, st.log_e, st.first_crossing >= 0};
}

void observe_batch(EProcessState& st, std::span<const Point> pts, std::int64_t stride) {
  if (stride < 1) throw config_error("stride must be at least 1");
  for (const Point& s : pts) {
    const TrajectoryRecord rec = observe(st, s);
    if (st.keep_history && rec.n % stride == 0) st.history.push_back(rec);
  }
}

Decision decision(const EProcessState& st, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw config_error("alpha must lie strictly between 0 and 1");
  }
  const double thr = crossing_threshold(alpha);
  if (alpha == st.alpha) {
    return {st.first_crossing >= 0, st.first_crossing, thr};
  }
  if (!st.keep_history) {
    throw config_error(
        "streaming mode tracks only the configured alpha; keep history to "
        "query other levels");
  }
  for (const TrajectoryRecord& rec : st.history) {
    if (rec.log_e >= thr) return {true, rec.n, thr};
  }
  return {false, -1, thr};
}

}  // namespace precsr
