#include "precsr/engine.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "precsr/errors.hpp"
#include "precsr/simulate.hpp"

namespace precsr {

namespace {

void validate_schedule(const WeightSchedule& s) {
  if (!(s.gamma >= 2.0 / 3.0 && s.gamma < 1.0)) {
    throw config_error("weight exponent gamma must lie in [2/3, 1)");
  }
  if (s.index < 0) throw config_error("weight index must be non-negative");
}

struct Predictive {
  Eigen::ArrayXd logk;  // log k(s | u_t) for every particle
  double log_dr;        // log (1/T) sum_t k(s|u_t) d_t, may be -inf/NaN
};

// Single evaluation path for the predictive value, shared by update() and
// log_mixture_density() so the two agree bit for bit. Scaled in log space:
// the shift is the max of log k + log d, which keeps every summand <= 1.
Predictive eval_predictive(const ParticleSet& ps, Point s) {
  const double cx = clamp_unit(s.x);
  const double cy = clamp_unit(s.y);
  const double lx = std::log(cx);
  const double l1x = std::log(1.0 - cx);
  const double ly = std::log(cy);
  const double l1y = std::log(1.0 - cy);

  Predictive out;
  out.logk = ps.log_norm + (ps.a1 - 1.0) * lx + (ps.b1 - 1.0) * l1x +
             (ps.a2 - 1.0) * ly + (ps.b2 - 1.0) * l1y;
  Eigen::ArrayXd z = out.logk + ps.d.log();
  const double shift = z.maxCoeff();
  if (!std::isfinite(shift)) {
    out.log_dr = shift;  // -inf when every particle lost all mass
    return out;
  }
  const double sum_scaled = (z - shift).exp().sum();
  out.log_dr = shift + std::log(sum_scaled / static_cast<double>(ps.size()));
  return out;
}

}  // namespace

double weight(const WeightSchedule& s) {
  return std::pow(static_cast<double>(s.index) + 1.0, -s.gamma);
}

double ParticleSet::p0() const {
  const double w = bounds.hi - bounds.lo;
  const double w2 = w * w;
  return 1.0 / (w2 * w2);
}

ParticleSet init_filter(const std::vector<KernelParams>& particles,
                        WeightSchedule schedule, SupportBounds bounds) {
  validate_bounds(bounds);
  validate_schedule(schedule);
  if (particles.empty()) throw config_error("filter needs at least one particle");

  const auto n = static_cast<Eigen::Index>(particles.size());
  ParticleSet ps;
  ps.a1.resize(n);
  ps.b1.resize(n);
  ps.a2.resize(n);
  ps.b2.resize(n);
  ps.log_norm.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const KernelParams& u = particles[static_cast<std::size_t>(t)];
    validate_params(u, bounds);
    ps.a1[t] = u.a1;
    ps.b1[t] = u.b1;
    ps.a2[t] = u.a2;
    ps.b2[t] = u.b2;
    ps.log_norm[t] = -log_beta_fn(u.a1, u.b1) - log_beta_fn(u.a2, u.b2);
  }
  ps.schedule = schedule;
  ps.bounds = bounds;
  ps.p = Eigen::ArrayXd::Constant(n, ps.p0());
  ps.d = Eigen::ArrayXd::Ones(n);
  ps.cum_log_pred = 0.0;
  return ps;
}

void begin_phase(ParticleSet& ps) {
  ps.schedule.index = 0;
  ps.cum_log_pred = 0.0;
}

double update(ParticleSet& ps, Point s) {
  if (!(std::isfinite(s.x) && std::isfinite(s.y))) {
    throw numerical_domain_error("observation has a non-finite coordinate");
  }
  const Predictive pred = eval_predictive(ps, s);
  const std::int64_t i = ps.schedule.index + 1;
  if (!std::isfinite(pred.log_dr)) {
    throw degenerate_update_error(
        "predictive mass underflowed to zero at observation " + std::to_string(i), i);
  }
  ps.schedule.index = i;
  const double w = weight(ps.schedule);
  // Shared multiplicative factor 1 + w (k/Dr - 1); it preserves mean(d) = 1
  // exactly in expectation and keeps p proportional to d.
  Eigen::ArrayXd factor = 1.0 + w * ((pred.logk - pred.log_dr).exp() - 1.0);
  ps.p *= factor;
  ps.d *= factor;
  ps.cum_log_pred += pred.log_dr;
  return pred.log_dr;
}

double run_filter(ParticleSet& ps, std::span<const Point> pts) {
  for (const Point& s : pts) update(ps, s);
  return ps.cum_log_pred;
}

double log_mixture_density(const ParticleSet& ps, Point s) {
  return eval_predictive(ps, s).log_dr;
}

double mixture_density(const ParticleSet& ps, Point s) {
  return std::exp(log_mixture_density(ps, s));
}

ParticleSet pretrain(const Window& unit_window, double lambda0, int particle_count,
                     WeightSchedule schedule, SupportBounds bounds, Rng& rng) {
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) {
    throw config_error("pretraining intensity must be positive and finite");
  }
  const std::vector<KernelParams> particles =
      sample_particles(particle_count, bounds, rng);
  ParticleSet ps = init_filter(particles, schedule, bounds);
  const PointPattern pattern = sim_hpp(unit_window, lambda0, rng);
  if (pattern.points.empty()) {
    throw config_error("pretraining sample came out empty; raise the intensity");
  }
  run_filter(ps, pattern.points);
  begin_phase(ps);
  return ps;
}

namespace {

nlohmann::json array_to_json(const Eigen::ArrayXd& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

Eigen::ArrayXd array_from_json(const nlohmann::json& j, Eigen::Index expect,
                               const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expect) {
    throw parse_error(std::string("snapshot field '") + name + "' has the wrong length");
  }
  Eigen::ArrayXd a(expect);
  for (Eigen::Index i = 0; i < expect; ++i) {
    a[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return a;
}

}  // namespace

nlohmann::json particleset_to_json(const ParticleSet& ps) {
  nlohmann::json j;
  j["format"] = "precsr-particles";
  j["format_version"] = 1;
  j["bounds"] = {ps.bounds.lo, ps.bounds.hi};
  j["gamma"] = ps.schedule.gamma;
  j["index"] = ps.schedule.index;
  j["cum_log_pred"] = ps.cum_log_pred;
  j["count"] = ps.size();
  j["a1"] = array_to_json(ps.a1);
  j["b1"] = array_to_json(ps.b1);
  j["a2"] = array_to_json(ps.a2);
  j["b2"] = array_to_json(ps.b2);
  j["p"] = array_to_json(ps.p);
  j["d"] = array_to_json(ps.d);
  return j;
}

ParticleSet particleset_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "precsr-particles" || j.value("format_version", 0) != 1) {
    throw parse_error("not a version-1 particle snapshot");
  }
  const auto n = j.at("count").get<Eigen::Index>();
  if (n < 1) throw parse_error("particle snapshot has no particles");

  ParticleSet ps;
  ps.bounds = SupportBounds{j.at("bounds").at(0).get<double>(),
                            j.at("bounds").at(1).get<double>()};
  ps.schedule.gamma = j.at("gamma").get<double>();
  ps.schedule.index = j.at("index").get<std::int64_t>();
  validate_bounds(ps.bounds);
  validate_schedule(ps.schedule);
  ps.cum_log_pred = j.at("cum_log_pred").get<double>();
  ps.a1 = array_from_json(j.at("a1"), n, "a1");
  ps.b1 = array_from_json(j.at("b1"), n, "b1");
  ps.a2 = array_from_json(j.at("a2"), n, "a2");
  ps.b2 = array_from_json(j.at("b2"), n, "b2");
  ps.p = array_from_json(j.at("p"), n, "p");
  ps.d = array_from_json(j.at("d"), n, "d");
  if (!ps.p.isFinite().all() || !ps.d.isFinite().all() || ps.p.minCoeff() < 0.0 ||
      ps.d.minCoeff() < 0.0) {
    throw parse_error("particle snapshot carries non-finite or negative mass");
  }
  ps.log_norm.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const KernelParams u{ps.a1[t], ps.b1[t], ps.a2[t], ps.b2[t]};
    validate_params(u, ps.bounds);
    ps.log_norm[t] = -log_beta_fn(u.a1, u.b1) - log_beta_fn(u.a2, u.b2);
  }
  return ps;
}

}  // namespace precsr
