#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace precsr {

// Error taxonomy mirrors the CLI exit codes: input_error -> 2, numerical_error -> 3.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or self-intersecting window, degenerate bounding box, bad vertex data.
struct invalid_geometry_error : input_error {
  using input_error::input_error;
};

// File-level problems; messages carry "path:line:" where a line is known.
struct parse_error : input_error {
  using input_error::input_error;
};

// Out-of-range parameters, contradictory flags, unknown config keys.
struct config_error : input_error {
  using input_error::input_error;
};

// Slope / summary asked of fewer records than the computation needs.
struct insufficient_data_error : input_error {
  using input_error::input_error;
};

// The particle predictive mass underflowed to zero at a specific observation.
struct degenerate_update_error : numerical_error {
  degenerate_update_error(const std::string& msg, std::int64_t observation_index)
      : numerical_error(msg), index(observation_index) {}
  std::int64_t index;
};

// Non-finite value escaped a numeric routine after clamping.
struct numerical_domain_error : numerical_error {
  using numerical_error::numerical_error;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const numerical_error*>(&e) != nullptr) return 3;
  if (dynamic_cast<const input_error*>(&e) != nullptr) return 2;
  return 2;
}

}  // namespace precsr
