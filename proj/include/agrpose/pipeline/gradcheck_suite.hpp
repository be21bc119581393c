#pragma once

#include <string>
#include <vector>

namespace agrpose::pipeline {

struct GradCheckLine {
  std::string name;
  double max_rel_error = 0;
  std::size_t checked = 0;
  bool pass = false;
};

/// Finite-difference checks (64-bit, central differences) of every layer type
/// and every loss, including softmax -> integral decode -> L1. With
/// `corrupt` != 0 the analytic gradients are scaled by (1 + corrupt) first,
/// which must make the checks fail.
std::vector<GradCheckLine> run_gradcheck_suite(double eps = 1e-5, double tolerance = 1e-6, double corrupt = 0.0);

}  // namespace agrpose::pipeline
