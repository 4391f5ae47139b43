#include "precsr/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>

#include "precsr/errors.hpp"
#include "precsr/io.hpp"
#include "precsr/quadrature.hpp"

namespace precsr {

namespace {

// Runs body(0..count-1) on up to jobs threads. Work is claimed from a shared
// counter; outputs must be keyed by index so scheduling cannot reorder them.
template <typename F>
void parallel_for(int count, int jobs, F&& body) {
  if (jobs < 1) throw config_error("jobs must be at least 1");
  const int workers = std::min(jobs, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mu;
  std::exception_ptr first_error;
  auto drain = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        {
          const std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
        stop.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(drain);
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Knobs every run shares, whatever produces the points.
void validate_analysis_params(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) throw config_error("replicate count must be at least 1");
  if (cfg.particles < 1) throw config_error("particle count must be at least 1");
  if (!(cfg.gamma >= 2.0 / 3.0 && cfg.gamma < 1.0)) {
    throw config_error("gamma must lie in [2/3, 1)");
  }
  validate_bounds(cfg.bounds);
  if (cfg.stride < 1) throw config_error("stride must be at least 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw config_error("alpha must lie strictly between 0 and 1");
  }
  if (!(std::isfinite(cfg.pretrain_lambda) && cfg.pretrain_lambda > 0.0)) {
    throw config_error("pretraining intensity must be positive and finite");
  }
}

void validate_matern_params(const MaternParams& m) {
  if (!(std::isfinite(m.kappa) && m.kappa > 0.0) ||
      !(std::isfinite(m.scale) && m.scale > 0.0) ||
      !(std::isfinite(m.mu) && m.mu > 0.0)) {
    throw config_error("cluster parameters must be positive and finite");
  }
}

// The raw-data window a replicate scenario lives on. The inhomogeneous and
// changepoint generators are defined on the unit square by construction.
Window raw_window_for(const ExperimentConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::hpp:
    case Scenario::matern:
      return cfg.window;
    case Scenario::trunc_exp:
    case Scenario::changepoint:
      return unit_square();
  }
  throw config_error("unknown scenario");
}

PointPattern simulate_scenario(const ExperimentConfig& cfg, Rng& rng) {
  switch (cfg.scenario) {
    case Scenario::hpp:
      return sim_hpp(cfg.window, cfg.hpp_lambda, rng);
    case Scenario::matern:
      return sim_matern(cfg.window, cfg.matern, rng);
    case Scenario::trunc_exp:
      return sim_trunc_exp(cfg.trunc_exp, rng);
    case Scenario::changepoint:
      return sim_changepoint(cfg.matern, cfg.change_n1, cfg.change_n2, rng);
  }
  throw config_error("unknown scenario");
}

ParticleSet make_pretrained(const ExperimentConfig& cfg, const Window& unit_window,
                            std::uint64_t seed) {
  Rng rng(seed);
  return pretrain(unit_window, cfg.pretrain_lambda, cfg.particles,
                  WeightSchedule{cfg.gamma, 0}, cfg.bounds, rng);
}

// Normalizes the pattern, runs it through the filter, and packages the
// trajectory. The filter is consumed.
ReplicateResult run_pattern(const ExperimentConfig& cfg, const PointPattern& pattern,
                            ParticleSet filter) {
  const NormalizedWindow nw = normalize_window(pattern.window);
  std::vector<Point> unit_pts;
  unit_pts.reserve(pattern.points.size());
  for (const Point& s : pattern.points) unit_pts.push_back(apply_transform(nw.transform, s));
  EProcessState st = init_eprocess(std::move(filter), nw.unit, cfg.alpha, true);
  observe_batch(st, unit_pts, cfg.stride);
  ReplicateResult out;
  out.n_total = st.n;
  out.final_log_e = st.log_e;
  out.first_crossing = st.first_crossing;
  out.records = std::move(st.history);
  return out;
}

double coordinate_rate(double gamma) {
  if (!(std::isfinite(gamma) && gamma >= 0.0)) {
    throw config_error("coordinate gamma must be finite and nonnegative");
  }
  if (gamma == 0.0) return 0.0;
  const double c = -std::expm1(-gamma);  // 1 - e^-gamma
  const double mean = 1.0 / gamma - std::exp(-gamma) / c;
  return std::log(gamma / c) - gamma * mean;
}

double coordinate_density(double x, double gamma) {
  if (gamma == 0.0) return 1.0;
  return gamma * std::exp(-gamma * x) / -std::expm1(-gamma);
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  validate_analysis_params(cfg);
  if (cfg.mode == RunMode::permutation) {
    switch (cfg.pattern.type) {
      case PatternSpec::Type::uniform_n:
        if (cfg.pattern.n < 1) throw config_error("base pattern size must be at least 1");
        return;
      case PatternSpec::Type::matern:
        validate_matern_params(cfg.matern);
        return;
      case PatternSpec::Type::file:
        if (cfg.pattern.path.empty()) throw config_error("base pattern path is empty");
        return;
    }
    throw config_error("unknown base pattern type");
  }
  switch (cfg.scenario) {
    case Scenario::hpp:
      if (!(std::isfinite(cfg.hpp_lambda) && cfg.hpp_lambda > 0.0)) {
        throw config_error("intensity must be positive and finite");
      }
      return;
    case Scenario::matern:
      validate_matern_params(cfg.matern);
      return;
    case Scenario::trunc_exp:
      if (!(std::isfinite(cfg.trunc_exp.lambda0) && cfg.trunc_exp.lambda0 > 0.0)) {
        throw config_error("intensity must be positive and finite");
      }
      if (!(std::isfinite(cfg.trunc_exp.gamma1) && cfg.trunc_exp.gamma1 >= 0.0) ||
          !(std::isfinite(cfg.trunc_exp.gamma2) && cfg.trunc_exp.gamma2 >= 0.0)) {
        throw config_error("coordinate gammas must be finite and nonnegative");
      }
      return;
    case Scenario::changepoint:
      validate_matern_params(cfg.matern);
      if (cfg.change_n1 < 0 || cfg.change_n2 < 0 || cfg.change_n1 + cfg.change_n2 < 1) {
        throw config_error("changepoint segment lengths must be nonnegative with at least one point");
      }
      return;
  }
  throw config_error("unknown scenario");
}

ExperimentReport run_replicates(const ExperimentConfig& cfg, int jobs) {
  validate_config(cfg);
  if (cfg.mode == RunMode::permutation) {
    return permutation_study(build_base_pattern(cfg), cfg.replicates, cfg, jobs);
  }
  ExperimentReport report;
  report.config = cfg;
  report.kind = RunMode::replicates;
  report.replicates.resize(static_cast<std::size_t>(cfg.replicates));

  const Window analysis_unit = normalize_window(raw_window_for(cfg)).unit;
  ParticleSet shared;
  const std::uint64_t shared_seed = substream_seed(cfg.seed, 1);
  if (cfg.share_pretrain) shared = make_pretrained(cfg, analysis_unit, shared_seed);

  parallel_for(cfg.replicates, jobs, [&](int r) {
    ReplicateResult out;
    out.index = r;
    out.pattern_seed = substream_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 2);
    out.pretrain_seed =
        cfg.share_pretrain ? shared_seed
                           : substream_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 3);
    try {
      Rng pattern_rng(out.pattern_seed);
      PointPattern pattern = simulate_scenario(cfg, pattern_rng);
      pattern.prov.seed = out.pattern_seed;
      ParticleSet filter =
          cfg.share_pretrain ? shared : make_pretrained(cfg, analysis_unit, out.pretrain_seed);
      ReplicateResult run = run_pattern(cfg, pattern, std::move(filter));
      run.index = out.index;
      run.pattern_seed = out.pattern_seed;
      run.pretrain_seed = out.pretrain_seed;
      out = std::move(run);
    } catch (const std::exception& e) {
      // one bad replicate must not sink the batch: record it and move on
      out.failed = true;
      out.error = e.what();
      out.records.clear();
    }
    report.replicates[static_cast<std::size_t>(r)] = std::move(out);
  });
  return report;
}

ExperimentReport permutation_study(const PointPattern& pattern, int n_perms,
                                   const ExperimentConfig& cfg, int jobs) {
  validate_analysis_params(cfg);
  if (n_perms < 1) throw config_error("permutation count must be at least 1");
  if (pattern.points.empty()) {
    throw insufficient_data_error("permutation study needs a nonempty pattern");
  }
  const NormalizedWindow nw = normalize_window(pattern.window);
  std::vector<Point> unit_pts;
  unit_pts.reserve(pattern.points.size());
  for (const Point& s : pattern.points) unit_pts.push_back(apply_transform(nw.transform, s));

  ParticleSet shared;
  const std::uint64_t shared_seed = substream_seed(cfg.seed, 1);
  if (cfg.share_pretrain) shared = make_pretrained(cfg, nw.unit, shared_seed);

  ExperimentReport report;
  report.config = cfg;
  report.config.mode = RunMode::permutation;
  report.config.replicates = n_perms;
  report.kind = RunMode::permutation;
  report.replicates.resize(static_cast<std::size_t>(n_perms));

  parallel_for(n_perms, jobs, [&](int r) {
    ReplicateResult out;
    out.index = r;
    out.pattern_seed = substream_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 2);
    out.pretrain_seed =
        cfg.share_pretrain ? shared_seed
                           : substream_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 3);
    try {
      Rng perm_rng(out.pattern_seed);
      const std::vector<std::size_t> order = random_permutation(unit_pts.size(), perm_rng);
      std::vector<Point> shuffled;
      shuffled.reserve(unit_pts.size());
      for (const std::size_t i : order) shuffled.push_back(unit_pts[i]);

      ParticleSet filter =
          cfg.share_pretrain ? shared : make_pretrained(cfg, nw.unit, out.pretrain_seed);
      EProcessState st = init_eprocess(std::move(filter), nw.unit, cfg.alpha, true);
      observe_batch(st, shuffled, cfg.stride);
      out.n_total = st.n;
      out.final_log_e = st.log_e;
      out.first_crossing = st.first_crossing;
      out.records = std::move(st.history);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
      out.records.clear();
    }
    report.replicates[static_cast<std::size_t>(r)] = std::move(out);
  });
  return report;
}

PointPattern build_base_pattern(const ExperimentConfig& cfg) {
  const std::uint64_t seed = substream_seed(cfg.seed, 0);
  switch (cfg.pattern.type) {
    case PatternSpec::Type::uniform_n: {
      if (cfg.pattern.n < 1) throw config_error("base pattern size must be at least 1");
      Rng rng(seed);
      PointPattern p;
      p.points = sample_uniform_exact(cfg.window, cfg.pattern.n, rng);
      p.window = cfg.window;
      p.prov.generator = "uniform_exact";
      p.prov.params = {{"n", cfg.pattern.n}};
      p.prov.seed = seed;
      return p;
    }
    case PatternSpec::Type::matern: {
      Rng rng(seed);
      PointPattern p = sim_matern(cfg.window, cfg.matern, rng);
      p.prov.seed = seed;
      return p;
    }
    case PatternSpec::Type::file: {
      if (cfg.pattern.path.empty()) throw config_error("base pattern path is empty");
      PointPattern p;
      p.points = read_points_csv(cfg.pattern.path);
      p.window = cfg.window;
      p.prov.generator = "file";
      p.prov.params = {{"path", cfg.pattern.path}};
      return p;
    }
  }
  throw config_error("unknown base pattern type");
}

std::vector<double> rejection_proportion(const ExperimentReport& report, double alpha,
                                         std::span<const std::int64_t> checkpoints) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw config_error("alpha must lie strictly between 0 and 1");
  }
  const double thr = crossing_threshold(alpha);
  const bool tracked = alpha == report.config.alpha;
  std::vector<std::int64_t> crossing;
  crossing.reserve(report.replicates.size());
  for (const ReplicateResult& rr : report.replicates) {
    if (tracked) {
      crossing.push_back(rr.first_crossing);
      continue;
    }
    std::int64_t at = -1;
    for (const TrajectoryRecord& rec : rr.records) {
      if (rec.log_e >= thr) {
        at = rec.n;
        break;
      }
    }
    crossing.push_back(at);
  }
  std::vector<double> out;
  out.reserve(checkpoints.size());
  for (const std::int64_t n : checkpoints) {
    if (report.replicates.empty()) {
      out.push_back(0.0);
      continue;
    }
    std::int64_t hits = 0;
    for (const std::int64_t c : crossing) {
      if (c >= 0 && c <= n) ++hits;
    }
    out.push_back(static_cast<double>(hits) / static_cast<double>(report.replicates.size()));
  }
  return out;
}

std::vector<double> slope_summary(const ExperimentReport& report, std::int64_t from_n,
                                  std::int64_t to_n) {
  if (!(from_n < to_n)) throw config_error("slope range must satisfy from < to");
  std::vector<double> slopes;
  slopes.reserve(report.replicates.size());
  for (const ReplicateResult& rr : report.replicates) {
    if (rr.failed) continue;  // no records, no slope
    double sx = 0.0, sy = 0.0;
    std::int64_t m = 0;
    for (const TrajectoryRecord& rec : rr.records) {
      if (rec.n > from_n && rec.n <= to_n) {
        sx += static_cast<double>(rec.n);
        sy += rec.log_e;
        ++m;
      }
    }
    if (m < 2) {
      throw insufficient_data_error(
          "slope needs at least two retained records in (from, to]");
    }
    const double xbar = sx / static_cast<double>(m);
    const double ybar = sy / static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (const TrajectoryRecord& rec : rr.records) {
      if (rec.n > from_n && rec.n <= to_n) {
        const double dx = static_cast<double>(rec.n) - xbar;
        sxx += dx * dx;
        sxy += dx * (rec.log_e - ybar);
      }
    }
    slopes.push_back(sxy / sxx);
  }
  return slopes;
}

double growth_rate_closed_form(double gamma1, double gamma2) {
  return coordinate_rate(gamma1) + coordinate_rate(gamma2);
}

double growth_rate_quadrature(double gamma1, double gamma2) {
  if (!(std::isfinite(gamma1) && gamma1 >= 0.0) ||
      !(std::isfinite(gamma2) && gamma2 >= 0.0)) {
    throw config_error("coordinate gammas must be finite and nonnegative");
  }
  const Quadrature1D q = gauss_legendre(64);
  return integrate_unit_square(q, [&](double x, double y) {
    const double m = coordinate_density(x, gamma1) * coordinate_density(y, gamma2);
    return m * std::log(m);
  });
}

double theoretical_growth_rate(double gamma1, double gamma2) {
  const double closed = growth_rate_closed_form(gamma1, gamma2);
  const double quad = growth_rate_quadrature(gamma1, gamma2);
  if (!(std::abs(closed - quad) <= 1e-8)) {
    throw numerical_domain_error("growth-rate routes disagree beyond 1e-8");
  }
  return closed;
}

std::optional<double> log_e_at_or_before(const ReplicateResult& r, std::int64_t n) {
  std::optional<double> out;
  for (const TrajectoryRecord& rec : r.records) {
    if (rec.n > n) break;
    out = rec.log_e;
  }
  return out;
}

}  // namespace precsr
