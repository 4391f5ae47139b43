#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "precsr/eprocess.hpp"
#include "precsr/kernel.hpp"
#include "precsr/simulate.hpp"

namespace precsr {

enum class Scenario { hpp, matern, trunc_exp, changepoint };

enum class RunMode { replicates, permutation };

// Base pattern for a permutation study when it is not handed in directly.
struct PatternSpec {
  enum class Type { uniform_n, matern, file };
  Type type = Type::uniform_n;
  std::int64_t n = 978;  // uniform_n point count
  std::string path;      // file type: points CSV
};

struct ExperimentConfig {
  RunMode mode = RunMode::replicates;
  Scenario scenario = Scenario::hpp;
  int replicates = 100;  // permutation count in permutation mode
  int particles = 2000;
  double gamma = 0.67;
  SupportBounds bounds;
  std::int64_t stride = 100;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  double pretrain_lambda = 20000.0;
  bool share_pretrain = false;

  // raw-data window for hpp / matern / permutation base patterns
  Window window = unit_square();
  double hpp_lambda = 10.0;
  MaternParams matern;
  TruncExpParams trunc_exp;
  std::int64_t change_n1 = 300;
  std::int64_t change_n2 = 800;
  PatternSpec pattern;
};

void validate_config(const ExperimentConfig& cfg);

struct ReplicateResult {
  int index = 0;
  std::uint64_t pattern_seed = 0;   // permutation seed in permutation mode
  std::uint64_t pretrain_seed = 0;
  std::int64_t n_total = 0;
  double final_log_e = 0.0;
  std::int64_t first_crossing = -1;
  std::vector<TrajectoryRecord> records;  // thinned to the config stride
  // A replicate that throws is recorded, not fatal: failed is set, error holds
  // the message, records stay empty, and summaries treat it as never crossing.
  bool failed = false;
  std::string error;
};

struct ExperimentReport {
  ExperimentConfig config;
  RunMode kind = RunMode::replicates;
  std::vector<ReplicateResult> replicates;
};

// Seed derivation, fixed and documented: replicate r simulates its pattern (or
// permutation) from substream 2r+2 and pretrains from substream 2r+3.
// Substream 0 is the permutation-study base pattern, substream 1 the shared
// pretraining state. Results are keyed by replicate index, so the report is
// identical for any jobs value.
ExperimentReport run_replicates(const ExperimentConfig& cfg, int jobs = 1);

// Streams n_perms random reorderings of the pattern, each through a freshly
// pretrained e-process (seeds as above).
ExperimentReport permutation_study(const PointPattern& pattern, int n_perms,
                                   const ExperimentConfig& cfg, int jobs = 1);

// Builds the permutation-mode base pattern described by cfg.pattern.
PointPattern build_base_pattern(const ExperimentConfig& cfg);

// Fraction of replicates whose first crossing at level alpha is <= n, per
// checkpoint. At the configured alpha this uses the exact tracked crossings;
// otherwise it rederives crossings from the retained records. Failed
// replicates count as never crossing (denominator stays the full batch).
std::vector<double> rejection_proportion(const ExperimentReport& report, double alpha,
                                         std::span<const std::int64_t> checkpoints);

// Per-replicate OLS slope of log_e against n over records with from_n < n <= to_n.
// Failed replicates are skipped, so the result can be shorter than the batch.
std::vector<double> slope_summary(const ExperimentReport& report, std::int64_t from_n,
                                  std::int64_t to_n);

// Expected per-observation log growth of the evidence when the data follow
// independent truncated-exponential coordinates: the divergence of that
// density from uniform. Closed form per coordinate:
//   log(g / (1 - e^-g)) - g (1/g - e^-g / (1 - e^-g)).
double growth_rate_closed_form(double gamma1, double gamma2);
// Same quantity as 64x64 tensor Gauss-Legendre of m log m over the square.
double growth_rate_quadrature(double gamma1, double gamma2);
// Both routes; throws numerical_domain_error when they disagree beyond 1e-8.
double theoretical_growth_rate(double gamma1, double gamma2);

// log_e at the last retained record with record.n <= n, if any.
std::optional<double> log_e_at_or_before(const ReplicateResult& r, std::int64_t n);

}  // namespace precsr
