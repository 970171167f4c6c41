#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace afda {

struct GradSuiteCase {
  std::string name;
  bool pass = false;
  double max_rel_err = 0.0;
  std::string worst_location;
};

/// Runs central finite-difference checks (h = 1e-5, tol = 1e-4) for every
/// differentiable primitive and every composite training loss against the
/// parameter groups each loss trains, over `instances` random instances per
/// case. stop-gradient is checked for exact zero gradients instead.
std::vector<GradSuiteCase> run_gradient_suite(int instances, std::uint64_t seed);

bool all_passed(const std::vector<GradSuiteCase>& results);

}  // namespace afda
