#pragma once

#include <string>
#include <vector>

// The finite-difference verification suite: every primitive plus the
// end-to-end tiny model, checked against central differences in double
// precision. Used by the gradcheck CLI command and the acceptance tests.
namespace vw4c::nn {

struct SuiteCheck {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

std::vector<SuiteCheck> run_gradient_suite();

}  // namespace vw4c::nn
