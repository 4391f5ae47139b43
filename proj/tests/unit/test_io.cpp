#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "precsr/errors.hpp"
#include "precsr/io.hpp"

using namespace precsr;

namespace {

// unique scratch directory, removed on scope exit
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("precsr_io_" + std::to_string(++counter) + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

bool same_bits(double a, double b) {
  std::uint64_t ua = 0, ub = 0;
  std::memcpy(&ua, &a, sizeof a);
  std::memcpy(&ub, &b, sizeof b);
  return ua == ub;
}

std::string thrown_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("number formatting round trips every double bit for bit") {
  const double values[] = {0.0,
                           -0.0,
                           0.1,
                           1.0 / 3.0,
                           6.02214076e23,
                           1e-300,
                           5e-324,
                           std::numeric_limits<double>::max(),
                           -std::numeric_limits<double>::min(),
                           3.141592653589793,
                           2.995732273553991,
                           0.2831095847584864};
  for (const double v : values) {
    CHECK(same_bits(parse_double(fmt_double(v)), v));
  }
  // shortest form, not padded scientific
  CHECK(fmt_double(0.5) == "0.5");
  CHECK(fmt_double(2.0) == "2");
  CHECK_THROWS_AS(parse_double(""), parse_error);
  CHECK_THROWS_AS(parse_double("abc"), parse_error);
  CHECK_THROWS_AS(parse_double("1.5junk"), parse_error);
  CHECK(parse_double("  2.5 ") == 2.5);  // surrounding whitespace tolerated
}

TEST_CASE("points CSV round trips exactly and tolerates a header") {
  TempDir tmp;
  const std::vector<Point> pts = {{0.1, 1.0 / 3.0}, {5e-324, 0.9999999999999999}, {0.0, 1.0}};
  const std::string path = tmp.file("pts.csv");
  write_points_csv(path, pts);
  const std::vector<Point> back = read_points_csv(path);
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(same_bits(back[i].x, pts[i].x));
    CHECK(same_bits(back[i].y, pts[i].y));
  }

  {
    std::ofstream f(tmp.file("hdr.csv"));
    f << "x,y\n\n0.25,0.75\n0.5,0.5\n";
  }
  CHECK(read_points_csv(tmp.file("hdr.csv")).size() == 2);

  {
    std::ofstream f(tmp.file("times.csv"));
    f << "x,y,t\n0.1,0.2,3.5\n0.3,0.4,7\n";
  }
  const PointsFile pf = read_points_file(tmp.file("times.csv"));
  REQUIRE(pf.points.size() == 2);
  REQUIRE(pf.times.size() == 2);
  CHECK(pf.times[0] == 3.5);
  CHECK(pf.times[1] == 7.0);
  // two-column files leave times empty
  CHECK(read_points_file(path).times.empty());
}

TEST_CASE("points CSV errors name the offending line") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("bad.csv"));
    f << "0.1,0.2\n0.3,oops\n";
  }
  const std::string msg =
      thrown_message([&] { read_points_csv(tmp.file("bad.csv")); });
  CHECK(msg.find(":2:") != std::string::npos);
  CHECK_THROWS_AS(read_points_csv(tmp.file("bad.csv")), parse_error);

  {
    std::ofstream f(tmp.file("arity.csv"));
    f << "0.1,0.2\n0.3,0.4,0.5\n";
  }
  CHECK(thrown_message([&] { read_points_csv(tmp.file("arity.csv")); })
            .find("inconsistent") != std::string::npos);

  {
    std::ofstream f(tmp.file("wide.csv"));
    f << "0.1,0.2,0.3,0.4\n";
  }
  CHECK_THROWS_AS(read_points_csv(tmp.file("wide.csv")), parse_error);

  {
    std::ofstream f(tmp.file("inf.csv"));
    f << "0.1,inf\n";
  }
  CHECK(thrown_message([&] { read_points_csv(tmp.file("inf.csv")); })
            .find("finite") != std::string::npos);

  CHECK_THROWS_AS(read_points_csv(tmp.file("absent.csv")), parse_error);
}

TEST_CASE("window JSON round trips both shapes and rejects typos") {
  const Window rect = rectangle_window(-2.0, 3.5, 0.25, 1.0 / 3.0);
  const Window r2 = window_from_json(window_to_json(rect));
  REQUIRE(r2.is_rectangle());
  CHECK(same_bits(r2.rect().xmin, -2.0));
  CHECK(same_bits(r2.rect().ymax, 1.0 / 3.0));

  const Window poly =
      polygon_window({{0.0, 0.0}, {1.0, 0.0}, {0.7, 0.9}, {0.1, 0.5}});
  const Window p2 = window_from_json(window_to_json(poly));
  REQUIRE_FALSE(p2.is_rectangle());
  REQUIRE(p2.poly().vertices.size() == 4);
  CHECK(p2.poly().vertices[2] == Point{0.7, 0.9});
  CHECK(area(p2) == area(poly));

  nlohmann::json j = window_to_json(rect);
  j["x_mn"] = 0.0;
  CHECK_THROWS_AS(window_from_json(j), parse_error);
  nlohmann::json t = window_to_json(rect);
  t["type"] = "circle";
  CHECK_THROWS_AS(window_from_json(t), parse_error);
  nlohmann::json missing = window_to_json(rect);
  missing.erase("ymax");
  CHECK_THROWS_AS(window_from_json(missing), parse_error);
  // a window file survives the disk trip too
  TempDir tmp;
  write_window_json(tmp.file("w.json"), poly);
  CHECK(area(read_window_json(tmp.file("w.json"))) == area(poly));
}

TEST_CASE("trajectory CSV round trips records exactly") {
  TempDir tmp;
  const std::vector<TrajectoryRecord> recs = {
      {1, -0.12345678901234567, false}, {2, 0.0, false}, {3, 2.995732273553991, true}};
  const std::string path = tmp.file("traj.csv");
  write_trajectory_csv(path, recs);
  const std::vector<TrajectoryRecord> back = read_trajectory_csv(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].n == recs[i].n);
    CHECK(same_bits(back[i].log_e, recs[i].log_e));
    CHECK(back[i].crossed == recs[i].crossed);
  }
  {
    std::ofstream f(tmp.file("badflag.csv"));
    f << "n,log_e,crossed\n1,0.5,2\n";
  }
  CHECK_THROWS_AS(read_trajectory_csv(tmp.file("badflag.csv")), parse_error);
  // n must be strictly increasing
  {
    std::ofstream f(tmp.file("backwards.csv"));
    f << "n,log_e,crossed\n5,0.5,0\n5,0.6,0\n";
  }
  CHECK_THROWS_AS(read_trajectory_csv(tmp.file("backwards.csv")), parse_error);
}

TEST_CASE("trajectory NDJSON carries records and run metadata") {
  TempDir tmp;
  const std::vector<TrajectoryRecord> recs = {
      {10, -0.12345678901234567, false}, {20, 0.25, false}, {30, 3.25, true}};
  const nlohmann::json meta = {{"alpha", 0.05}, {"stride", 10}, {"points", "run.csv"}};
  const std::string path = tmp.file("traj.ndjson");
  write_trajectory_ndjson(path, recs, meta);

  const TrajectoryStream back = read_trajectory_ndjson(path);
  REQUIRE(back.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.records[i].n == recs[i].n);
    CHECK(same_bits(back.records[i].log_e, recs[i].log_e));
    CHECK(back.records[i].crossed == recs[i].crossed);
  }
  CHECK(back.meta.at("alpha").get<double>() == 0.05);
  CHECK(back.meta.at("points").get<std::string>() == "run.csv");
  // format markers are validated, then stripped from the surfaced metadata
  CHECK(back.meta.count("format") == 0);

  {
    std::ofstream f(tmp.file("nohead.ndjson"));
    f << R"({"n":1,"log_e":0.5,"crossed":false})" << '\n';
  }
  CHECK_THROWS_AS(read_trajectory_ndjson(tmp.file("nohead.ndjson")), parse_error);
  {
    std::ofstream f(tmp.file("stale.ndjson"));
    f << R"({"format":"trajectory","format_version":1})" << '\n'
      << R"({"n":7,"log_e":0.5,"crossed":false})" << '\n'
      << R"({"n":7,"log_e":0.6,"crossed":false})" << '\n';
  }
  CHECK_THROWS_AS(read_trajectory_ndjson(tmp.file("stale.ndjson")), parse_error);
  {
    std::ofstream f(tmp.file("extra.ndjson"));
    f << R"({"format":"trajectory","format_version":1})" << '\n'
      << R"({"n":7,"log_e":0.5,"crossed":false,"spare":1})" << '\n';
  }
  CHECK_THROWS_AS(read_trajectory_ndjson(tmp.file("extra.ndjson")), parse_error);
}

TEST_CASE("experiment configs survive JSON with every field moved off its default") {
  ExperimentConfig cfg;
  cfg.mode = RunMode::permutation;
  cfg.scenario = Scenario::changepoint;
  cfg.replicates = 7;
  cfg.particles = 321;
  cfg.gamma = 0.75;
  cfg.bounds = {0.3, 8.5};
  cfg.stride = 17;
  cfg.alpha = 0.01;
  cfg.seed = 424242;
  cfg.pretrain_lambda = 1234.5;
  cfg.share_pretrain = true;
  cfg.window = polygon_window({{0.0, 0.0}, {2.0, 0.0}, {1.0, 3.0}});
  cfg.hpp_lambda = 55.5;
  cfg.matern = {7.0, 0.22, 9.0};
  cfg.trunc_exp = {500.0, 1.5, 0.0};
  cfg.change_n1 = 11;
  cfg.change_n2 = 22;
  cfg.pattern.type = PatternSpec::Type::file;
  cfg.pattern.path = "some/points.csv";

  const ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(cfg));
  CHECK(back.mode == cfg.mode);
  CHECK(back.scenario == cfg.scenario);
  CHECK(back.replicates == cfg.replicates);
  CHECK(back.particles == cfg.particles);
  CHECK(same_bits(back.gamma, cfg.gamma));
  CHECK(same_bits(back.bounds.lo, cfg.bounds.lo));
  CHECK(same_bits(back.bounds.hi, cfg.bounds.hi));
  CHECK(back.stride == cfg.stride);
  CHECK(same_bits(back.alpha, cfg.alpha));
  CHECK(back.seed == cfg.seed);
  CHECK(same_bits(back.pretrain_lambda, cfg.pretrain_lambda));
  CHECK(back.share_pretrain == cfg.share_pretrain);
  CHECK(window_to_json(back.window) == window_to_json(cfg.window));
  CHECK(same_bits(back.hpp_lambda, cfg.hpp_lambda));
  CHECK(same_bits(back.matern.kappa, cfg.matern.kappa));
  CHECK(same_bits(back.matern.scale, cfg.matern.scale));
  CHECK(same_bits(back.matern.mu, cfg.matern.mu));
  CHECK(same_bits(back.trunc_exp.lambda0, cfg.trunc_exp.lambda0));
  CHECK(same_bits(back.trunc_exp.gamma1, cfg.trunc_exp.gamma1));
  CHECK(same_bits(back.trunc_exp.gamma2, cfg.trunc_exp.gamma2));
  CHECK(back.change_n1 == cfg.change_n1);
  CHECK(back.change_n2 == cfg.change_n2);
  CHECK(back.pattern.type == cfg.pattern.type);
  CHECK(back.pattern.path == cfg.pattern.path);

  // a file trip behaves the same way
  TempDir tmp;
  write_experiment_config(tmp.file("cfg.json"), cfg);
  const ExperimentConfig fromdisk = read_experiment_config(tmp.file("cfg.json"));
  CHECK(fromdisk.seed == cfg.seed);
  CHECK(same_bits(fromdisk.gamma, cfg.gamma));
}

TEST_CASE("config JSON falls back to defaults and rejects unknown keys") {
  const ExperimentConfig def = experiment_config_from_json(nlohmann::json::object());
  const ExperimentConfig fresh;
  CHECK(def.mode == fresh.mode);
  CHECK(def.scenario == fresh.scenario);
  CHECK(def.replicates == fresh.replicates);
  CHECK(def.particles == fresh.particles);
  CHECK(same_bits(def.gamma, fresh.gamma));
  CHECK(def.stride == fresh.stride);
  CHECK(same_bits(def.pretrain_lambda, fresh.pretrain_lambda));
  CHECK(def.pattern.n == fresh.pattern.n);

  nlohmann::json top = {{"particels", 100}};
  CHECK_THROWS_AS(experiment_config_from_json(top), parse_error);
  nlohmann::json nested = {{"bounds", {{"lo", 0.2}, {"high", 10.0}}}};
  CHECK_THROWS_AS(experiment_config_from_json(nested), parse_error);
  nlohmann::json pattern = {{"pattern", {{"type", "uniform_n"}, {"path", "x"}}}};
  CHECK_THROWS_AS(experiment_config_from_json(pattern), parse_error);
  nlohmann::json badmode = {{"mode", "both"}};
  CHECK_THROWS_AS(experiment_config_from_json(badmode), parse_error);
  nlohmann::json badver = {{"format_version", 2}};
  CHECK_THROWS_AS(experiment_config_from_json(badver), parse_error);
}

TEST_CASE("report directories round trip bit for bit") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::hpp;
  cfg.replicates = 3;
  cfg.particles = 120;
  cfg.stride = 10;
  cfg.seed = 77;
  cfg.pretrain_lambda = 1200.0;
  cfg.hpp_lambda = 40.0;
  const ExperimentReport rep = run_replicates(cfg, 1);

  TempDir tmp;
  const std::string dir = tmp.file("report");
  write_report(dir, rep);
  CHECK(std::filesystem::exists(dir + "/summary.json"));
  CHECK(std::filesystem::exists(dir + "/trajectories.csv"));
  CHECK(std::filesystem::exists(dir + "/rejection.csv"));

  const ExperimentReport back = read_report(dir);
  CHECK(back.kind == rep.kind);
  CHECK(experiment_config_to_json(back.config) == experiment_config_to_json(rep.config));
  REQUIRE(back.replicates.size() == rep.replicates.size());
  for (std::size_t i = 0; i < rep.replicates.size(); ++i) {
    const ReplicateResult& a = rep.replicates[i];
    const ReplicateResult& b = back.replicates[i];
    CHECK(b.index == a.index);
    CHECK(b.pattern_seed == a.pattern_seed);
    CHECK(b.pretrain_seed == a.pretrain_seed);
    CHECK(b.n_total == a.n_total);
    CHECK(same_bits(b.final_log_e, a.final_log_e));
    CHECK(b.first_crossing == a.first_crossing);
    REQUIRE(b.records.size() == a.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      CHECK(b.records[k].n == a.records[k].n);
      CHECK(same_bits(b.records[k].log_e, a.records[k].log_e));
      CHECK(b.records[k].crossed == a.records[k].crossed);
    }
  }
  CHECK_THROWS_AS(read_report(tmp.file("nowhere")), parse_error);
}

TEST_CASE("reports keep per-replicate failures and the growth-rate series") {
  // an empty per-replicate pretraining draw fails each replicate on its own
  ExperimentConfig cfg;
  cfg.scenario = Scenario::hpp;
  cfg.replicates = 2;
  cfg.particles = 120;
  cfg.seed = 5;
  cfg.pretrain_lambda = 1e-9;
  cfg.hpp_lambda = 40.0;
  const ExperimentReport rep = run_replicates(cfg, 1);
  REQUIRE(rep.replicates.size() == 2);
  for (const ReplicateResult& rr : rep.replicates) {
    CHECK(rr.failed);
    CHECK(rr.error.find("pretraining") != std::string::npos);
    CHECK(rr.records.empty());
    CHECK(rr.first_crossing == -1);
  }
  // failures count as never crossing; slopes skip them instead of throwing
  const std::vector<std::int64_t> at{100};
  CHECK(rejection_proportion(rep, cfg.alpha, at)[0] == 0.0);
  CHECK(slope_summary(rep, 0, 1000).empty());

  TempDir tmp;
  const std::string dir = tmp.file("failing");
  write_report(dir, rep);
  const ExperimentReport back = read_report(dir);
  REQUIRE(back.replicates.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.replicates[i].failed == rep.replicates[i].failed);
    CHECK(back.replicates[i].error == rep.replicates[i].error);
    CHECK(back.replicates[i].pattern_seed == rep.replicates[i].pattern_seed);
  }

  // truncated-exponential batches also get the theoretical line on disk
  ExperimentConfig te;
  te.scenario = Scenario::trunc_exp;
  te.replicates = 2;
  te.particles = 120;
  te.stride = 10;
  te.seed = 6;
  te.pretrain_lambda = 1200.0;
  te.trunc_exp.lambda0 = 60.0;
  const ExperimentReport terep = run_replicates(te, 1);
  const std::string tedir = tmp.file("te");
  write_report(tedir, terep);
  REQUIRE(std::filesystem::exists(tedir + "/growth_rate.csv"));
  std::ifstream gr(tedir + "/growth_rate.csv");
  std::string header, first;
  REQUIRE(std::getline(gr, header));
  CHECK(header == "n,expected_log_e");
  REQUIRE(std::getline(gr, first));
  const double rate = theoretical_growth_rate(te.trunc_exp.gamma1, te.trunc_exp.gamma2);
  CHECK(first == "10," + fmt_double(10.0 * rate));
}

TEST_CASE("snapshots freeze a run mid-stream and reload exactly") {
  const Window raw = rectangle_window(2.0, 5.0, 1.0, 3.0);
  const NormalizedWindow nw = normalize_window(raw);
  Rng rng(31);
  ParticleSet filter =
      pretrain(nw.unit, 600.0, 80, WeightSchedule{0.67, 0}, SupportBounds{}, rng);
  EProcessState st = init_eprocess(std::move(filter), nw.unit, 0.05, true);
  std::vector<Point> head, tail;
  Rng data(32);
  for (int i = 0; i < 60; ++i) {
    const Point raw_pt{2.0 + 3.0 * data.uniform01(), 1.0 + 2.0 * data.uniform01()};
    (i < 30 ? head : tail).push_back(apply_transform(nw.transform, raw_pt));
  }
  observe_batch(st, head, 5);

  TempDir tmp;
  const std::string path = tmp.file("snap.json");
  write_snapshot(path, st, nw.transform);
  Snapshot snap = read_snapshot(path);
  CHECK(snap.state.n == st.n);
  CHECK(same_bits(snap.state.log_e, st.log_e));
  CHECK(same_bits(snap.state.sup_log_e, st.sup_log_e));
  CHECK(snap.state.first_crossing == st.first_crossing);
  CHECK(snap.state.outside_count == st.outside_count);
  CHECK(same_bits(snap.state.alpha, st.alpha));
  CHECK(same_bits(snap.state.log_area, st.log_area));
  CHECK(snap.state.history.size() == st.history.size());
  CHECK(same_bits(snap.transform.x_offset, nw.transform.x_offset));
  CHECK(same_bits(snap.transform.x_width, nw.transform.x_width));
  CHECK(same_bits(snap.transform.y_offset, nw.transform.y_offset));
  CHECK(same_bits(snap.transform.y_width, nw.transform.y_width));

  // continuing the restored state matches continuing the original, bitwise
  observe_batch(st, tail, 5);
  observe_batch(snap.state, tail, 5);
  CHECK(same_bits(snap.state.log_e, st.log_e));
  CHECK(same_bits(snap.state.sup_log_e, st.sup_log_e));
  CHECK(snap.state.first_crossing == st.first_crossing);

  // tampering is caught
  nlohmann::json j = read_json_file(path);
  j["format"] = "something-else";
  CHECK_THROWS_AS(snapshot_from_json(j), parse_error);
  nlohmann::json neg = read_json_file(path);
  neg["n"] = -4;
  CHECK_THROWS_AS(snapshot_from_json(neg), parse_error);
}

TEST_CASE("JSON plumbing reports the path on failure") {
  TempDir tmp;
  {
    std::ofstream f(tmp.file("broken.json"));
    f << "{\"a\": ";
  }
  const std::string msg = thrown_message([&] { read_json_file(tmp.file("broken.json")); });
  CHECK(msg.find("broken.json") != std::string::npos);
  CHECK_THROWS_AS(read_json_file(tmp.file("broken.json")), parse_error);
  CHECK_THROWS_AS(write_json_file(tmp.file("no_dir/x.json"), nlohmann::json::object()),
                  input_error);
  // nlohmann itself keeps doubles exact through dump/parse
  const double v = 0.1 + 0.2;
  const nlohmann::json round = nlohmann::json::parse(nlohmann::json(v).dump());
  CHECK(same_bits(round.get<double>(), v));
}
