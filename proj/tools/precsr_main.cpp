#include <algorithm>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "precsr/engine.hpp"
#include "precsr/eprocess.hpp"
#include "precsr/errors.hpp"
#include "precsr/experiments.hpp"
#include "precsr/io.hpp"
#include "precsr/simulate.hpp"

namespace {

using namespace precsr;

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
}

// --window FILE and --rect xmin,xmax,ymin,ymax are alternatives; fallback is
// the subcommand's default window.
Window window_from_flags(const std::string& window_path, const std::string& rect_spec,
                         const Window& fallback) {
  if (!window_path.empty() && !rect_spec.empty()) {
    throw config_error("--window and --rect are mutually exclusive");
  }
  if (!window_path.empty()) return read_window_json(window_path);
  if (!rect_spec.empty()) {
    const std::vector<std::string> parts = split_commas(rect_spec);
    if (parts.size() != 4) throw config_error("--rect expects xmin,xmax,ymin,ymax");
    return rectangle_window(parse_double(parts[0]), parse_double(parts[1]),
                            parse_double(parts[2]), parse_double(parts[3]));
  }
  return fallback;
}

struct TestOpts {
  std::string points_path;
  std::string window_path;
  std::string rect_spec;
  double alpha = 0.05;
  int particles = 10000;
  double gamma = 0.67;
  std::string bounds_spec;
  double pretrain_lambda = 20000.0;
  std::uint64_t seed = 1;
  std::int64_t stride = 100;
  bool order_by_t = false;
  std::int64_t limit = -1;
  std::string resume_path;
  std::string snapshot_out;
  std::string trajectory_out;
  bool json = false;
};

SupportBounds bounds_from_spec(const std::string& spec) {
  SupportBounds b;
  if (spec.empty()) return b;
  const std::vector<std::string> parts = split_commas(spec);
  if (parts.size() != 2) throw config_error("--bounds expects lo,hi");
  b.lo = parse_double(parts[0]);
  b.hi = parse_double(parts[1]);
  return b;
}

int run_test(const TestOpts& o) {
  PointsFile pf = read_points_file(o.points_path);
  if (o.order_by_t) {
    if (pf.times.size() != pf.points.size()) {
      throw config_error("--order-by-t needs a time column in the points file");
    }
    std::vector<std::size_t> idx(pf.points.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return pf.times[a] < pf.times[b]; });
    std::vector<Point> ordered;
    ordered.reserve(idx.size());
    for (const std::size_t i : idx) ordered.push_back(pf.points[i]);
    pf.points = std::move(ordered);
  }
  if (o.limit >= 0 && static_cast<std::size_t>(o.limit) < pf.points.size()) {
    pf.points.resize(static_cast<std::size_t>(o.limit));
  }

  EProcessState st;
  UnitTransform transform;
  if (!o.resume_path.empty()) {
    Snapshot snap = read_snapshot(o.resume_path);
    st = std::move(snap.state);
    transform = snap.transform;
  } else {
    const Window w = window_from_flags(o.window_path, o.rect_spec, unit_square());
    const NormalizedWindow nw = normalize_window(w);
    transform = nw.transform;
    Rng rng(substream_seed(o.seed, 1));
    ParticleSet filter = pretrain(nw.unit, o.pretrain_lambda, o.particles,
                                  WeightSchedule{o.gamma, 0}, bounds_from_spec(o.bounds_spec), rng);
    st = init_eprocess(std::move(filter), nw.unit, o.alpha, true);
  }

  std::vector<Point> unit_pts;
  unit_pts.reserve(pf.points.size());
  for (const Point& p : pf.points) unit_pts.push_back(apply_transform(transform, p));
  observe_batch(st, unit_pts, o.stride);

  if (!o.snapshot_out.empty()) write_snapshot(o.snapshot_out, st, transform);

  const Decision dec = decision(st, st.alpha);
  if (!o.trajectory_out.empty()) {
    if (o.trajectory_out.ends_with(".ndjson")) {
      const nlohmann::json meta = {{"points", o.points_path}, {"alpha", st.alpha},
                                   {"threshold", dec.threshold}, {"stride", o.stride},
                                   {"n", st.n}};
      write_trajectory_ndjson(o.trajectory_out, st.history, meta);
    } else {
      write_trajectory_csv(o.trajectory_out, st.history);
    }
  }

  const char* verdict = dec.reject_null ? "reject_null" : "continue";
  if (o.json) {
    const nlohmann::json out = {
        {"n", st.n},
        {"outside_window", st.outside_count},
        {"alpha", st.alpha},
        {"threshold", dec.threshold},
        {"log_e", st.log_e},
        {"sup_log_e", st.sup_log_e},
        {"verdict", verdict},
        {"first_crossing", dec.at_n},
    };
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << "n=" << st.n << '\n'
              << "outside_window=" << st.outside_count << '\n'
              << "alpha=" << fmt_double(st.alpha) << '\n'
              << "threshold=" << fmt_double(dec.threshold) << '\n'
              << "log_e=" << fmt_double(st.log_e) << '\n'
              << "sup_log_e=" << fmt_double(st.sup_log_e) << '\n'
              << "verdict=" << verdict << '\n'
              << "first_crossing=" << dec.at_n << '\n';
  }
  return 0;
}

struct SimulateOpts {
  std::string scenario = "hpp";
  std::string window_path;
  std::string rect_spec;
  double lambda = 10.0;
  MaternParams matern;
  TruncExpParams trunc_exp;
  std::string gamma_spec;
  std::int64_t n1 = 300;
  std::int64_t n2 = 800;
  std::uint64_t seed = 1;
  std::string out = "-";
  std::string meta_path;
};

// --gamma g1,g2: per-coordinate decay pair for the truncated-exponential
// density. Non-positive values are rejected here; uniform is gamma -> 0.
std::pair<double, double> gamma_pair(const std::string& spec) {
  const std::vector<std::string> parts = split_commas(spec);
  if (parts.size() != 2) throw config_error("--gamma expects g1,g2");
  const double g1 = parse_double(parts[0]);
  const double g2 = parse_double(parts[1]);
  if (!(g1 > 0.0) || !(g2 > 0.0)) throw config_error("--gamma values must be positive");
  return {g1, g2};
}

void forbid_flags(const CLI::App* sub, std::initializer_list<const char*> names,
                  const std::string& scenario) {
  for (const char* name : names) {
    if (sub->get_option(name)->count() > 0) {
      throw config_error(std::string(name) + " does not apply to scenario " + scenario);
    }
  }
}

int run_simulate(SimulateOpts o, const CLI::App* sub) {
  Rng rng(o.seed);
  PointPattern pattern;
  if (o.scenario == "hpp") {
    forbid_flags(sub, {"--kappa", "--scale", "--mu", "--lambda0", "--gamma", "--n1", "--n2"}, o.scenario);
    const Window w =
        window_from_flags(o.window_path, o.rect_spec, rectangle_window(0.0, 10.0, 0.0, 10.0));
    pattern = sim_hpp(w, o.lambda, rng);
  } else if (o.scenario == "matern") {
    forbid_flags(sub, {"--lambda", "--lambda0", "--gamma", "--n1", "--n2"}, o.scenario);
    const Window w = window_from_flags(o.window_path, o.rect_spec, unit_square());
    pattern = sim_matern(w, o.matern, rng);
  } else if (o.scenario == "trunc-exp" || o.scenario == "trunc_exp") {
    forbid_flags(sub, {"--lambda", "--kappa", "--scale", "--mu", "--n1", "--n2", "--window", "--rect"}, o.scenario);
    if (!o.gamma_spec.empty()) {
      std::tie(o.trunc_exp.gamma1, o.trunc_exp.gamma2) = gamma_pair(o.gamma_spec);
    }
    pattern = sim_trunc_exp(o.trunc_exp, rng);
  } else if (o.scenario == "changepoint") {
    forbid_flags(sub, {"--lambda", "--lambda0", "--gamma", "--window", "--rect"}, o.scenario);
    pattern = sim_changepoint(o.matern, o.n1, o.n2, rng);
  } else {
    throw config_error("scenario must be one of hpp, matern, trunc-exp, changepoint");
  }
  pattern.prov.seed = o.seed;

  if (o.out == "-") {
    std::cout << "x,y\n";
    for (const Point& p : pattern.points) {
      std::cout << fmt_double(p.x) << ',' << fmt_double(p.y) << '\n';
    }
  } else {
    write_points_csv(o.out, pattern.points);
  }
  if (!o.meta_path.empty()) {
    const nlohmann::json meta = {
        {"generator", pattern.prov.generator},
        {"params", pattern.prov.params},
        {"seed", pattern.prov.seed},
        {"window", window_to_json(pattern.window)},
        {"n", pattern.points.size()},
    };
    write_json_file(o.meta_path, meta);
  }
  return 0;
}

struct ExperimentOpts {
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  int replicates = 0;  // 0 keeps the config's value
  std::uint64_t seed = 0;
  bool seed_set = false;
};

int run_experiment(const ExperimentOpts& o) {
  ExperimentConfig cfg = read_experiment_config(o.config_path);
  if (o.replicates > 0) cfg.replicates = o.replicates;
  if (o.seed_set) cfg.seed = o.seed;
  const ExperimentReport report = run_replicates(cfg, o.jobs);
  write_report(o.out_dir, report);

  std::int64_t rejected = 0;
  std::int64_t failed = 0;
  std::vector<double> finals;
  finals.reserve(report.replicates.size());
  for (const ReplicateResult& rr : report.replicates) {
    if (rr.failed) {
      ++failed;
      std::cerr << "replicate " << rr.index << " failed: " << rr.error << '\n';
      continue;
    }
    if (rr.first_crossing >= 0) ++rejected;
    finals.push_back(rr.final_log_e);
  }
  std::sort(finals.begin(), finals.end());
  const std::size_t m = finals.size();
  const double median =
      m == 0 ? 0.0 : (m % 2 == 1 ? finals[m / 2] : 0.5 * (finals[m / 2 - 1] + finals[m / 2]));
  std::cout << "mode=" << (report.kind == RunMode::replicates ? "replicates" : "permutation")
            << " replicates=" << report.replicates.size() << '\n'
            << "rejected=" << rejected << " failed=" << failed
            << " alpha=" << fmt_double(report.config.alpha) << '\n'
            << "median_final_log_e=" << fmt_double(median) << '\n'
            << "report=" << o.out_dir << '\n';
  return 0;
}

struct GrowthOpts {
  std::string gamma_spec;
  std::int64_t n_max = 0;
  std::int64_t stride = 100;
  bool json = false;
};

int run_growth_rate(const GrowthOpts& o) {
  const auto [g1, g2] = gamma_pair(o.gamma_spec);
  if (o.stride < 1) throw config_error("--stride must be at least 1");
  if (o.n_max < 0) throw config_error("--n-max must be nonnegative");
  const double closed = growth_rate_closed_form(g1, g2);
  const double quad = growth_rate_quadrature(g1, g2);
  const double rate = theoretical_growth_rate(g1, g2);
  if (o.json) {
    nlohmann::json out = {
        {"gamma1", g1},       {"gamma2", g2},        {"closed_form", closed},
        {"quadrature", quad}, {"growth_rate", rate},
    };
    nlohmann::json series = nlohmann::json::array();
    for (std::int64_t n = o.stride; n <= o.n_max; n += o.stride) {
      series.push_back({{"n", n}, {"expected_log_e", static_cast<double>(n) * rate}});
    }
    if (o.n_max > 0) out["series"] = std::move(series);
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << "closed_form=" << fmt_double(closed) << '\n'
              << "quadrature=" << fmt_double(quad) << '\n'
              << "growth_rate=" << fmt_double(rate) << '\n';
    if (o.n_max > 0) {
      std::cout << "n,expected_log_e\n";
      for (std::int64_t n = o.stride; n <= o.n_max; n += o.stride) {
        std::cout << n << ',' << fmt_double(static_cast<double>(n) * rate) << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Anytime-valid sequential test of complete spatial randomness for "
      "streaming planar point patterns"};
  app.require_subcommand(1);

  TestOpts to;
  CLI::App* test = app.add_subcommand("test", "Run the sequential test on a point stream");
  test->add_option("--points", to.points_path, "Points CSV (x,y or x,y,t)")->required();
  test->add_option("--window", to.window_path, "Window JSON file (default: unit square)");
  test->add_option("--rect", to.rect_spec, "Rectangle window as xmin,xmax,ymin,ymax");
  test->add_option("--alpha", to.alpha, "Test level (default 0.05)");
  test->add_option("--particles", to.particles, "Particle count (default 10000)");
  test->add_option("--gamma", to.gamma, "Weight decay exponent in [2/3,1) (default 0.67)");
  test->add_option("--bounds", to.bounds_spec, "Shape box as lo,hi (default 0.2,10)");
  test->add_option("--pretrain-lambda", to.pretrain_lambda,
                   "Pretraining intensity (default 20000)");
  test->add_option("--seed", to.seed, "Master seed (default 1)");
  test->add_option("--stride", to.stride, "Keep every stride-th trajectory record (default 100)");
  test->add_flag("--order-by-t", to.order_by_t, "Stable-sort points by the time column");
  test->add_option("--limit", to.limit, "Consume at most this many points");
  test->add_option("--resume", to.resume_path, "Continue from a snapshot file");
  test->add_option("--snapshot-out", to.snapshot_out, "Write the post-run snapshot here");
  test->add_option("--out", to.trajectory_out,
                   "Write retained records here (.ndjson for NDJSON, else CSV)");
  test->add_flag("--json", to.json, "Machine-readable result on stdout");
  for (const char* flag : {"--window", "--rect", "--alpha", "--particles", "--gamma", "--bounds",
                           "--pretrain-lambda", "--seed"}) {
    test->get_option(flag)->excludes(test->get_option("--resume"));
  }

  SimulateOpts so;
  CLI::App* sim = app.add_subcommand("simulate", "Generate a synthetic point pattern");
  sim->add_option("--scenario", so.scenario, "hpp | matern | trunc-exp | changepoint");
  sim->add_option("--window", so.window_path, "Window JSON file");
  sim->add_option("--rect", so.rect_spec, "Rectangle window as xmin,xmax,ymin,ymax");
  sim->add_option("--lambda", so.lambda, "hpp intensity (default 10)");
  sim->add_option("--kappa", so.matern.kappa, "Cluster parent intensity (default 50)");
  sim->add_option("--scale", so.matern.scale, "Cluster radius (default 0.1)");
  sim->add_option("--mu", so.matern.mu, "Mean offspring per parent (default 20)");
  sim->add_option("--lambda0", so.trunc_exp.lambda0, "Inhomogeneous intensity (default 1000)");
  sim->add_option("--gamma", so.gamma_spec, "Coordinate decay pair g1,g2 (default 2,4)");
  sim->add_option("--n1", so.n1, "Changepoint: clustered head length (default 300)");
  sim->add_option("--n2", so.n2, "Changepoint: uniform tail length (default 800)");
  sim->add_option("--seed", so.seed, "Generator seed (default 1)");
  sim->add_option("--out", so.out, "Output CSV path, '-' for stdout (default)");
  sim->add_option("--meta", so.meta_path, "Write generator provenance JSON here");

  ExperimentOpts eo;
  CLI::App* exp = app.add_subcommand("experiment", "Run a config-driven study");
  exp->add_option("--config", eo.config_path, "Experiment config JSON")->required();
  exp->add_option("--out", eo.out_dir, "Report directory")->required();
  exp->add_option("--jobs", eo.jobs, "Worker threads (default 1)");
  exp->add_option("--replicates", eo.replicates, "Override the config's replicate count");
  CLI::Option* seed_opt = exp->add_option("--seed", eo.seed, "Override the config's master seed");

  GrowthOpts go;
  CLI::App* growth = app.add_subcommand("growth-rate", "Expected log-evidence growth per point");
  growth->add_option("--gamma", go.gamma_spec, "Coordinate decay pair g1,g2")->required();
  growth->add_option("--n-max", go.n_max, "Also print the n,expected_log_e series up to here");
  growth->add_option("--stride", go.stride, "Series step (default 100)");
  growth->add_flag("--json", go.json, "Machine-readable result on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (test->parsed()) return run_test(to);
    if (sim->parsed()) return run_simulate(so, sim);
    if (exp->parsed()) {
      eo.seed_set = seed_opt->count() > 0;
      return run_experiment(eo);
    }
    if (growth->parsed()) return run_growth_rate(go);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 2;
}
