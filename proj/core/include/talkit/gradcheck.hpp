#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace talkit {

struct GradCheckOptions {
  int points = 50;            // random configurations per op
  double tolerance = 1e-4;    // max relative error
  double abs_floor = 1e-7;    // absolute tolerance when the gradient is ~0
  double step = 1e-5;         // central-difference step
  double kink_margin = 1e-4;  // resample while any activation is this close to a kink
  int max_coords = 40;        // coordinates checked per point on large parameter sets
  uint64_t seed = 20240601;
  bool flip_intra_gradient = false;  // fault-injection hook for the negative control
  std::vector<std::string> only;     // restrict to these op names (empty = all)
};

struct GradCheckResult {
  std::string op;
  int points = 0;
  double max_rel_err = 0.0;
  bool pass = false;
};

std::vector<std::string> gradcheck_op_names();

// Central finite differences against reverse-mode gradients for every op and
// loss, including the composite objective through the full default network.
std::vector<GradCheckResult> run_gradient_checks(const GradCheckOptions& options = {});

}  // namespace talkit
