#include "precsr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string_view>
#include <system_error>

#include "precsr/errors.hpp"

namespace precsr {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool try_parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool try_parse_int(std::string_view text, std::int64_t& out) {
  text = trim(text);
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string loc(const std::string& path, std::int64_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error(path + ": cannot open for writing");
  return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out.good()) throw input_error(path + ": write failed");
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& ctx) {
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw parse_error(ctx + ": unknown key '" + item.key() + "'");
  }
}

const nlohmann::json& require_key(const nlohmann::json& j, const char* key,
                                  const std::string& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) throw parse_error(ctx + ": missing key '" + key + "'");
  return *it;
}

double get_number(const nlohmann::json& j, const char* key, const std::string& ctx) {
  const nlohmann::json& v = require_key(j, key, ctx);
  if (!v.is_number()) throw parse_error(ctx + ": '" + key + "' must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const nlohmann::json& j, const char* key, const std::string& ctx) {
  const nlohmann::json& v = require_key(j, key, ctx);
  if (!v.is_number_integer()) throw parse_error(ctx + ": '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

void check_version(const nlohmann::json& j, const std::string& ctx) {
  if (!j.contains("format_version")) return;
  const nlohmann::json& v = j.at("format_version");
  if (!v.is_number_integer() || v.get<std::int64_t>() != 1) {
    throw parse_error(ctx + ": unsupported format_version");
  }
}

}  // namespace

std::string fmt_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw numerical_domain_error("double formatting failed");
  return std::string(buf, static_cast<std::size_t>(ptr - buf));
}

double parse_double(std::string_view text) {
  double v = 0.0;
  if (!try_parse_double(text, v)) {
    throw parse_error("not a number: '" + std::string(text) + "'");
  }
  return v;
}

PointsFile read_points_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path + ": cannot open");
  PointsFile out;
  std::string line;
  std::int64_t lineno = 0;
  std::size_t arity = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string_view> fields = split_fields(line);
    double x = 0.0;
    if (!seen_content) {
      seen_content = true;
      if (!try_parse_double(fields[0], x)) continue;  // header row
    }
    if (fields.size() != 2 && fields.size() != 3) {
      throw parse_error(loc(path, lineno) + "expected 2 or 3 columns, got " +
                        std::to_string(fields.size()));
    }
    if (arity == 0) {
      arity = fields.size();
    } else if (fields.size() != arity) {
      throw parse_error(loc(path, lineno) + "inconsistent column count");
    }
    double y = 0.0;
    if (!try_parse_double(fields[0], x) || !try_parse_double(fields[1], y)) {
      throw parse_error(loc(path, lineno) + "coordinates must be numbers");
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw parse_error(loc(path, lineno) + "coordinates must be finite");
    }
    out.points.push_back({x, y});
    if (arity == 3) {
      double t = 0.0;
      if (!try_parse_double(fields[2], t) || !std::isfinite(t)) {
        throw parse_error(loc(path, lineno) + "time column must be a finite number");
      }
      out.times.push_back(t);
    }
  }
  return out;
}

std::vector<Point> read_points_csv(const std::string& path) {
  return read_points_file(path).points;
}

void write_points_csv(const std::string& path, std::span<const Point> pts) {
  std::ofstream out = open_out(path);
  out << "x,y\n";
  for (const Point& p : pts) {
    out << fmt_double(p.x) << ',' << fmt_double(p.y) << '\n';
  }
  finish_out(out, path);
}

nlohmann::json window_to_json(const Window& w) {
  if (w.is_rectangle()) {
    const Rectangle& r = w.rect();
    return {{"format_version", 1}, {"type", "rectangle"}, {"xmin", r.xmin},
            {"xmax", r.xmax},      {"ymin", r.ymin},      {"ymax", r.ymax}};
  }
  nlohmann::json verts = nlohmann::json::array();
  for (const Point& v : w.poly().vertices) verts.push_back({v.x, v.y});
  return {{"format_version", 1}, {"type", "polygon"}, {"vertices", verts}};
}

Window window_from_json(const nlohmann::json& j) {
  const std::string ctx = "window";
  if (!j.is_object()) throw parse_error(ctx + ": expected an object");
  check_version(j, ctx);
  const nlohmann::json& type = require_key(j, "type", ctx);
  if (!type.is_string()) throw parse_error(ctx + ": 'type' must be a string");
  const std::string kind = type.get<std::string>();
  if (kind == "rectangle") {
    reject_unknown_keys(j, {"format_version", "type", "xmin", "xmax", "ymin", "ymax"}, ctx);
    return rectangle_window(get_number(j, "xmin", ctx), get_number(j, "xmax", ctx),
                            get_number(j, "ymin", ctx), get_number(j, "ymax", ctx));
  }
  if (kind == "polygon") {
    reject_unknown_keys(j, {"format_version", "type", "vertices"}, ctx);
    const nlohmann::json& verts = require_key(j, "vertices", ctx);
    if (!verts.is_array()) throw parse_error(ctx + ": 'vertices' must be an array");
    std::vector<Point> pts;
    pts.reserve(verts.size());
    for (const nlohmann::json& v : verts) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw parse_error(ctx + ": each vertex must be a [x, y] number pair");
      }
      pts.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    return polygon_window(std::move(pts));
  }
  throw parse_error(ctx + ": type must be 'rectangle' or 'polygon'");
}

Window read_window_json(const std::string& path) {
  try {
    return window_from_json(read_json_file(path));
  } catch (const parse_error& e) {
    throw parse_error(path + ": " + e.what());
  }
}

void write_window_json(const std::string& path, const Window& w) {
  write_json_file(path, window_to_json(w));
}

void write_trajectory_csv(const std::string& path, std::span<const TrajectoryRecord> records) {
  std::ofstream out = open_out(path);
  out << "n,log_e,crossed\n";
  for (const TrajectoryRecord& rec : records) {
    out << rec.n << ',' << fmt_double(rec.log_e) << ',' << (rec.crossed ? '1' : '0') << '\n';
  }
  finish_out(out, path);
}

std::vector<TrajectoryRecord> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path + ": cannot open");
  std::vector<TrajectoryRecord> out;
  std::string line;
  std::int64_t lineno = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string_view> fields = split_fields(line);
    std::int64_t n = 0;
    if (!seen_content) {
      seen_content = true;
      if (!try_parse_int(fields[0], n)) continue;  // header row
    }
    if (fields.size() != 3) {
      throw parse_error(loc(path, lineno) + "expected 3 columns, got " +
                        std::to_string(fields.size()));
    }
    double log_e = 0.0;
    std::int64_t crossed = 0;
    if (!try_parse_int(fields[0], n) || !try_parse_double(fields[1], log_e) ||
        !try_parse_int(fields[2], crossed) || (crossed != 0 && crossed != 1)) {
      throw parse_error(loc(path, lineno) + "expected n,log_e,crossed with crossed in {0,1}");
    }
    if (!out.empty() && n <= out.back().n) {
      throw parse_error(loc(path, lineno) + "n must be strictly increasing");
    }
    out.push_back({n, log_e, crossed == 1});
  }
  return out;
}

void write_trajectory_ndjson(const std::string& path, std::span<const TrajectoryRecord> records,
                             const nlohmann::json& meta) {
  std::ofstream out = open_out(path);
  nlohmann::json head = meta;
  head["format"] = "trajectory";
  head["format_version"] = 1;
  out << head.dump() << '\n';
  for (const TrajectoryRecord& rec : records) {
    const nlohmann::json row = {{"n", rec.n}, {"log_e", rec.log_e}, {"crossed", rec.crossed}};
    out << row.dump() << '\n';
  }
  finish_out(out, path);
}

TrajectoryStream read_trajectory_ndjson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path + ": cannot open");
  TrajectoryStream out;
  std::string line;
  std::int64_t lineno = 0;
  bool seen_head = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(loc(path, lineno) + e.what());
    }
    if (!j.is_object()) throw parse_error(loc(path, lineno) + "expected an object");
    if (!seen_head) {
      seen_head = true;
      const std::string ctx = "trajectory";
      const nlohmann::json& fmt = require_key(j, "format", ctx);
      if (!fmt.is_string() || fmt.get<std::string>() != "trajectory") {
        throw parse_error(loc(path, lineno) + "first record must have format 'trajectory'");
      }
      check_version(j, ctx);
      out.meta = j;
      out.meta.erase("format");
      out.meta.erase("format_version");
      continue;
    }
    const std::string rctx = loc(path, lineno);
    if (!j.contains("n") || !j.contains("log_e") || !j.contains("crossed") || j.size() != 3 ||
        !j.at("n").is_number_integer() || !j.at("log_e").is_number() ||
        !j.at("crossed").is_boolean()) {
      throw parse_error(rctx + "expected {\"n\":int,\"log_e\":number,\"crossed\":bool}");
    }
    const std::int64_t n = j.at("n").get<std::int64_t>();
    if (!out.records.empty() && n <= out.records.back().n) {
      throw parse_error(rctx + "n must be strictly increasing");
    }
    out.records.push_back({n, j.at("log_e").get<double>(), j.at("crossed").get<bool>()});
  }
  if (!seen_head) throw parse_error(path + ": missing metadata record");
  return out;
}

namespace {

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::hpp: return "hpp";
    case Scenario::matern: return "matern";
    case Scenario::trunc_exp: return "trunc_exp";
    case Scenario::changepoint: return "changepoint";
  }
  throw config_error("unknown scenario");
}

Scenario scenario_from(const std::string& name, const std::string& ctx) {
  if (name == "hpp") return Scenario::hpp;
  if (name == "matern") return Scenario::matern;
  if (name == "trunc_exp" || name == "trunc-exp") return Scenario::trunc_exp;
  if (name == "changepoint") return Scenario::changepoint;
  throw parse_error(ctx + ": scenario must be one of hpp, matern, trunc-exp, changepoint");
}

int get_count(const nlohmann::json& j, const char* key, const std::string& ctx) {
  const std::int64_t v = get_integer(j, key, ctx);
  if (v < 0 || v > 1000000000) throw parse_error(ctx + ": '" + key + "' out of range");
  return static_cast<int>(v);
}

}  // namespace

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json pattern;
  switch (cfg.pattern.type) {
    case PatternSpec::Type::uniform_n:
      pattern = {{"type", "uniform_n"}, {"n", cfg.pattern.n}};
      break;
    case PatternSpec::Type::matern:
      pattern = {{"type", "matern"}};
      break;
    case PatternSpec::Type::file:
      pattern = {{"type", "file"}, {"path", cfg.pattern.path}};
      break;
  }
  return {
      {"format_version", 1},
      {"mode", cfg.mode == RunMode::replicates ? "replicates" : "permutation"},
      {"scenario", scenario_name(cfg.scenario)},
      {"replicates", cfg.replicates},
      {"particles", cfg.particles},
      {"gamma", cfg.gamma},
      {"bounds", {{"lo", cfg.bounds.lo}, {"hi", cfg.bounds.hi}}},
      {"stride", cfg.stride},
      {"alpha", cfg.alpha},
      {"seed", cfg.seed},
      {"pretrain_lambda", cfg.pretrain_lambda},
      {"share_pretrain", cfg.share_pretrain},
      {"window", window_to_json(cfg.window)},
      {"hpp_lambda", cfg.hpp_lambda},
      {"matern", {{"kappa", cfg.matern.kappa}, {"scale", cfg.matern.scale}, {"mu", cfg.matern.mu}}},
      {"trunc_exp",
       {{"lambda0", cfg.trunc_exp.lambda0},
        {"gamma1", cfg.trunc_exp.gamma1},
        {"gamma2", cfg.trunc_exp.gamma2}}},
      {"changepoint", {{"n1", cfg.change_n1}, {"n2", cfg.change_n2}}},
      {"pattern", pattern},
  };
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  const std::string ctx = "config";
  if (!j.is_object()) throw parse_error(ctx + ": expected an object");
  check_version(j, ctx);
  reject_unknown_keys(j,
                      {"format_version", "mode", "scenario", "replicates", "particles", "gamma",
                       "bounds", "stride", "alpha", "seed", "pretrain_lambda", "share_pretrain",
                       "window", "hpp_lambda", "matern", "trunc_exp", "changepoint", "pattern"},
                      ctx);
  ExperimentConfig cfg;
  if (j.contains("mode")) {
    const nlohmann::json& m = j.at("mode");
    if (!m.is_string()) throw parse_error(ctx + ": 'mode' must be a string");
    const std::string mode = m.get<std::string>();
    if (mode == "replicates") {
      cfg.mode = RunMode::replicates;
    } else if (mode == "permutation") {
      cfg.mode = RunMode::permutation;
    } else {
      throw parse_error(ctx + ": mode must be 'replicates' or 'permutation'");
    }
  }
  if (j.contains("scenario")) {
    const nlohmann::json& s = j.at("scenario");
    if (!s.is_string()) throw parse_error(ctx + ": 'scenario' must be a string");
    cfg.scenario = scenario_from(s.get<std::string>(), ctx);
  }
  if (j.contains("replicates")) cfg.replicates = get_count(j, "replicates", ctx);
  if (j.contains("particles")) cfg.particles = get_count(j, "particles", ctx);
  if (j.contains("gamma")) cfg.gamma = get_number(j, "gamma", ctx);
  if (j.contains("bounds")) {
    const nlohmann::json& b = j.at("bounds");
    if (!b.is_object()) throw parse_error(ctx + ": 'bounds' must be an object");
    reject_unknown_keys(b, {"lo", "hi"}, ctx + ".bounds");
    cfg.bounds.lo = get_number(b, "lo", ctx + ".bounds");
    cfg.bounds.hi = get_number(b, "hi", ctx + ".bounds");
  }
  if (j.contains("stride")) cfg.stride = get_integer(j, "stride", ctx);
  if (j.contains("alpha")) cfg.alpha = get_number(j, "alpha", ctx);
  if (j.contains("seed")) {
    const nlohmann::json& s = j.at("seed");
    if (!s.is_number_integer() && !s.is_number_unsigned()) {
      throw parse_error(ctx + ": 'seed' must be an integer");
    }
    if (s.is_number_integer() && !s.is_number_unsigned() && s.get<std::int64_t>() < 0) {
      throw parse_error(ctx + ": 'seed' must be nonnegative");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("pretrain_lambda")) cfg.pretrain_lambda = get_number(j, "pretrain_lambda", ctx);
  if (j.contains("share_pretrain")) {
    const nlohmann::json& s = j.at("share_pretrain");
    if (!s.is_boolean()) throw parse_error(ctx + ": 'share_pretrain' must be a boolean");
    cfg.share_pretrain = s.get<bool>();
  }
  if (j.contains("window")) cfg.window = window_from_json(j.at("window"));
  if (j.contains("hpp_lambda")) cfg.hpp_lambda = get_number(j, "hpp_lambda", ctx);
  if (j.contains("matern")) {
    const nlohmann::json& m = j.at("matern");
    if (!m.is_object()) throw parse_error(ctx + ": 'matern' must be an object");
    reject_unknown_keys(m, {"kappa", "scale", "mu"}, ctx + ".matern");
    cfg.matern.kappa = get_number(m, "kappa", ctx + ".matern");
    cfg.matern.scale = get_number(m, "scale", ctx + ".matern");
    cfg.matern.mu = get_number(m, "mu", ctx + ".matern");
  }
  if (j.contains("trunc_exp")) {
    const nlohmann::json& t = j.at("trunc_exp");
    if (!t.is_object()) throw parse_error(ctx + ": 'trunc_exp' must be an object");
    reject_unknown_keys(t, {"lambda0", "gamma1", "gamma2"}, ctx + ".trunc_exp");
    cfg.trunc_exp.lambda0 = get_number(t, "lambda0", ctx + ".trunc_exp");
    cfg.trunc_exp.gamma1 = get_number(t, "gamma1", ctx + ".trunc_exp");
    cfg.trunc_exp.gamma2 = get_number(t, "gamma2", ctx + ".trunc_exp");
  }
  if (j.contains("changepoint")) {
    const nlohmann::json& c = j.at("changepoint");
    if (!c.is_object()) throw parse_error(ctx + ": 'changepoint' must be an object");
    reject_unknown_keys(c, {"n1", "n2"}, ctx + ".changepoint");
    cfg.change_n1 = get_integer(c, "n1", ctx + ".changepoint");
    cfg.change_n2 = get_integer(c, "n2", ctx + ".changepoint");
  }
  if (j.contains("pattern")) {
    const nlohmann::json& p = j.at("pattern");
    if (!p.is_object()) throw parse_error(ctx + ": 'pattern' must be an object");
    const nlohmann::json& type = require_key(p, "type", ctx + ".pattern");
    if (!type.is_string()) throw parse_error(ctx + ".pattern: 'type' must be a string");
    const std::string kind = type.get<std::string>();
    if (kind == "uniform_n") {
      reject_unknown_keys(p, {"type", "n"}, ctx + ".pattern");
      cfg.pattern.type = PatternSpec::Type::uniform_n;
      if (p.contains("n")) cfg.pattern.n = get_integer(p, "n", ctx + ".pattern");
    } else if (kind == "matern") {
      reject_unknown_keys(p, {"type"}, ctx + ".pattern");
      cfg.pattern.type = PatternSpec::Type::matern;
    } else if (kind == "file") {
      reject_unknown_keys(p, {"type", "path"}, ctx + ".pattern");
      cfg.pattern.type = PatternSpec::Type::file;
      const nlohmann::json& path = require_key(p, "path", ctx + ".pattern");
      if (!path.is_string()) throw parse_error(ctx + ".pattern: 'path' must be a string");
      cfg.pattern.path = path.get<std::string>();
    } else {
      throw parse_error(ctx + ".pattern: type must be uniform_n, matern, or file");
    }
  }
  return cfg;
}

ExperimentConfig read_experiment_config(const std::string& path) {
  try {
    return experiment_config_from_json(read_json_file(path));
  } catch (const parse_error& e) {
    throw parse_error(path + ": " + e.what());
  }
}

void write_experiment_config(const std::string& path, const ExperimentConfig& cfg) {
  write_json_file(path, experiment_config_to_json(cfg));
}

void write_report(const std::string& dir, const ExperimentReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw input_error(dir + ": cannot create directory: " + ec.message());

  nlohmann::json reps = nlohmann::json::array();
  for (const ReplicateResult& rr : report.replicates) {
    nlohmann::json r = {{"index", rr.index},
                        {"pattern_seed", rr.pattern_seed},
                        {"pretrain_seed", rr.pretrain_seed},
                        {"n_total", rr.n_total},
                        {"final_log_e", rr.final_log_e},
                        {"first_crossing", rr.first_crossing}};
    if (rr.failed) {
      r["failed"] = true;
      r["error"] = rr.error;
    }
    reps.push_back(std::move(r));
  }
  const nlohmann::json summary = {
      {"format_version", 1},
      {"kind", report.kind == RunMode::replicates ? "replicates" : "permutation"},
      {"config", experiment_config_to_json(report.config)},
      {"replicates", reps},
  };
  write_json_file(dir + "/summary.json", summary);

  {
    std::ofstream out = open_out(dir + "/trajectories.csv");
    out << "replicate,n,log_e,crossed\n";
    for (const ReplicateResult& rr : report.replicates) {
      for (const TrajectoryRecord& rec : rr.records) {
        out << rr.index << ',' << rec.n << ',' << fmt_double(rec.log_e) << ','
            << (rec.crossed ? '1' : '0') << '\n';
      }
    }
    finish_out(out, dir + "/trajectories.csv");
  }

  {
    std::set<std::int64_t> grid;
    for (const ReplicateResult& rr : report.replicates) {
      for (const TrajectoryRecord& rec : rr.records) grid.insert(rec.n);
    }
    const std::vector<std::int64_t> checkpoints(grid.begin(), grid.end());
    const std::vector<double> prop =
        rejection_proportion(report, report.config.alpha, checkpoints);
    std::ofstream out = open_out(dir + "/rejection.csv");
    out << "n,proportion\n";
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
      out << checkpoints[i] << ',' << fmt_double(prop[i]) << '\n';
    }
    finish_out(out, dir + "/rejection.csv");
  }

  // Truncated-exponential batches also get the theoretical evidence line
  // n * rate on the retained stride grid, for plotting against trajectories.
  if (report.kind == RunMode::replicates && report.config.scenario == Scenario::trunc_exp) {
    const double rate =
        theoretical_growth_rate(report.config.trunc_exp.gamma1, report.config.trunc_exp.gamma2);
    std::int64_t n_max = 0;
    for (const ReplicateResult& rr : report.replicates) {
      for (const TrajectoryRecord& rec : rr.records) n_max = std::max(n_max, rec.n);
    }
    std::ofstream out = open_out(dir + "/growth_rate.csv");
    out << "n,expected_log_e\n";
    for (std::int64_t n = report.config.stride; n <= n_max; n += report.config.stride) {
      out << n << ',' << fmt_double(static_cast<double>(n) * rate) << '\n';
    }
    finish_out(out, dir + "/growth_rate.csv");
  }
}

ExperimentReport read_report(const std::string& dir) {
  const std::string spath = dir + "/summary.json";
  const nlohmann::json j = read_json_file(spath);
  const std::string ctx = "summary";
  if (!j.is_object()) throw parse_error(spath + ": expected an object");
  check_version(j, ctx);
  reject_unknown_keys(j, {"format_version", "kind", "config", "replicates"}, ctx);

  ExperimentReport report;
  const nlohmann::json& kind = require_key(j, "kind", ctx);
  if (!kind.is_string()) throw parse_error(ctx + ": 'kind' must be a string");
  const std::string kname = kind.get<std::string>();
  if (kname == "replicates") {
    report.kind = RunMode::replicates;
  } else if (kname == "permutation") {
    report.kind = RunMode::permutation;
  } else {
    throw parse_error(ctx + ": kind must be 'replicates' or 'permutation'");
  }
  report.config = experiment_config_from_json(require_key(j, "config", ctx));

  const nlohmann::json& reps = require_key(j, "replicates", ctx);
  if (!reps.is_array()) throw parse_error(ctx + ": 'replicates' must be an array");
  report.replicates.resize(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const nlohmann::json& r = reps[i];
    const std::string rctx = ctx + ".replicates[" + std::to_string(i) + "]";
    if (!r.is_object()) throw parse_error(rctx + ": expected an object");
    reject_unknown_keys(r,
                        {"index", "pattern_seed", "pretrain_seed", "n_total", "final_log_e",
                         "first_crossing", "failed", "error"},
                        rctx);
    ReplicateResult rr;
    rr.index = get_count(r, "index", rctx);
    if (static_cast<std::size_t>(rr.index) != i) {
      throw parse_error(rctx + ": replicate indexes must be 0..n-1 in order");
    }
    rr.pattern_seed = require_key(r, "pattern_seed", rctx).get<std::uint64_t>();
    rr.pretrain_seed = require_key(r, "pretrain_seed", rctx).get<std::uint64_t>();
    rr.n_total = get_integer(r, "n_total", rctx);
    rr.final_log_e = get_number(r, "final_log_e", rctx);
    rr.first_crossing = get_integer(r, "first_crossing", rctx);
    if (r.contains("failed")) {
      const nlohmann::json& f = r.at("failed");
      if (!f.is_boolean()) throw parse_error(rctx + ": 'failed' must be a boolean");
      rr.failed = f.get<bool>();
    }
    if (r.contains("error")) {
      const nlohmann::json& e = r.at("error");
      if (!e.is_string()) throw parse_error(rctx + ": 'error' must be a string");
      rr.error = e.get<std::string>();
    }
    report.replicates[i] = std::move(rr);
  }

  const std::string tpath = dir + "/trajectories.csv";
  std::ifstream in(tpath);
  if (!in) throw parse_error(tpath + ": cannot open");
  std::string line;
  std::int64_t lineno = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string_view> fields = split_fields(line);
    std::int64_t rep = 0;
    if (!seen_content) {
      seen_content = true;
      if (!try_parse_int(fields[0], rep)) continue;  // header row
    }
    if (fields.size() != 4) {
      throw parse_error(loc(tpath, lineno) + "expected 4 columns, got " +
                        std::to_string(fields.size()));
    }
    std::int64_t n = 0;
    double log_e = 0.0;
    std::int64_t crossed = 0;
    if (!try_parse_int(fields[0], rep) || !try_parse_int(fields[1], n) ||
        !try_parse_double(fields[2], log_e) || !try_parse_int(fields[3], crossed) ||
        (crossed != 0 && crossed != 1)) {
      throw parse_error(loc(tpath, lineno) + "expected replicate,n,log_e,crossed");
    }
    if (rep < 0 || static_cast<std::size_t>(rep) >= report.replicates.size()) {
      throw parse_error(loc(tpath, lineno) + "replicate index out of range");
    }
    report.replicates[static_cast<std::size_t>(rep)].records.push_back({n, log_e, crossed == 1});
  }
  return report;
}

nlohmann::json snapshot_to_json(const EProcessState& st, const UnitTransform& t) {
  nlohmann::json hist = nlohmann::json::array();
  for (const TrajectoryRecord& rec : st.history) {
    hist.push_back({rec.n, rec.log_e, rec.crossed});
  }
  return {
      {"format", "precsr-snapshot"},
      {"version", 1},
      {"alpha", st.alpha},
      {"n", st.n},
      {"log_e", st.log_e},
      {"sup_log_e", st.sup_log_e},
      {"first_crossing", st.first_crossing},
      {"outside_count", st.outside_count},
      {"keep_history", st.keep_history},
      {"history", hist},
      {"window", window_to_json(st.unit_window)},
      {"transform",
       {{"x_offset", t.x_offset},
        {"y_offset", t.y_offset},
        {"x_width", t.x_width},
        {"y_width", t.y_width}}},
      {"particles", particleset_to_json(st.filter)},
  };
}

Snapshot snapshot_from_json(const nlohmann::json& j) {
  const std::string ctx = "snapshot";
  if (!j.is_object()) throw parse_error(ctx + ": expected an object");
  reject_unknown_keys(j,
                      {"format", "version", "alpha", "n", "log_e", "sup_log_e", "first_crossing",
                       "outside_count", "keep_history", "history", "window", "transform",
                       "particles"},
                      ctx);
  const nlohmann::json& format = require_key(j, "format", ctx);
  if (!format.is_string() || format.get<std::string>() != "precsr-snapshot") {
    throw parse_error(ctx + ": not a precsr-snapshot file");
  }
  if (get_integer(j, "version", ctx) != 1) {
    throw parse_error(ctx + ": unsupported snapshot version");
  }

  const Window window = window_from_json(require_key(j, "window", ctx));
  ParticleSet filter = particleset_from_json(require_key(j, "particles", ctx));

  const nlohmann::json& kh = require_key(j, "keep_history", ctx);
  if (!kh.is_boolean()) throw parse_error(ctx + ": 'keep_history' must be a boolean");

  Snapshot snap;
  snap.state = init_eprocess(std::move(filter), window, get_number(j, "alpha", ctx),
                             kh.get<bool>());
  snap.state.n = get_integer(j, "n", ctx);
  snap.state.log_e = get_number(j, "log_e", ctx);
  snap.state.sup_log_e = get_number(j, "sup_log_e", ctx);
  snap.state.first_crossing = get_integer(j, "first_crossing", ctx);
  snap.state.outside_count = get_integer(j, "outside_count", ctx);
  if (snap.state.n < 0 || snap.state.outside_count < 0 || snap.state.first_crossing < -1) {
    throw parse_error(ctx + ": negative counters");
  }

  const nlohmann::json& hist = require_key(j, "history", ctx);
  if (!hist.is_array()) throw parse_error(ctx + ": 'history' must be an array");
  snap.state.history.reserve(hist.size());
  for (const nlohmann::json& h : hist) {
    if (!h.is_array() || h.size() != 3 || !h[0].is_number_integer() || !h[1].is_number() ||
        !h[2].is_boolean()) {
      throw parse_error(ctx + ": each history row must be [n, log_e, crossed]");
    }
    snap.state.history.push_back(
        {h[0].get<std::int64_t>(), h[1].get<double>(), h[2].get<bool>()});
  }

  const nlohmann::json& t = require_key(j, "transform", ctx);
  if (!t.is_object()) throw parse_error(ctx + ": 'transform' must be an object");
  reject_unknown_keys(t, {"x_offset", "y_offset", "x_width", "y_width"}, ctx + ".transform");
  snap.transform.x_offset = get_number(t, "x_offset", ctx + ".transform");
  snap.transform.y_offset = get_number(t, "y_offset", ctx + ".transform");
  snap.transform.x_width = get_number(t, "x_width", ctx + ".transform");
  snap.transform.y_width = get_number(t, "y_width", ctx + ".transform");
  if (!(std::isfinite(snap.transform.x_width) && snap.transform.x_width > 0.0) ||
      !(std::isfinite(snap.transform.y_width) && snap.transform.y_width > 0.0)) {
    throw parse_error(ctx + ": transform widths must be positive");
  }
  return snap;
}

void write_snapshot(const std::string& path, const EProcessState& st, const UnitTransform& t) {
  write_json_file(path, snapshot_to_json(st, t));
}

Snapshot read_snapshot(const std::string& path) {
  try {
    return snapshot_from_json(read_json_file(path));
  } catch (const parse_error& e) {
    throw parse_error(path + ": " + e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(path + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish_out(out, path);
}

}  // namespace precsr
