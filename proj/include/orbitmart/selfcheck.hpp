#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace orbitmart::selfcheck {

/// I_x(a, b) implementation under test; defaults to numerics::reg_inc_beta.
using BetaFn = std::function<double(double x, double a, double b)>;

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast special-function and oracle-agreement checks. The special-function
/// checks go through `beta` so a corrupted implementation can be injected.
std::vector<CheckResult> run(const BetaFn& beta = {}, std::uint64_t seed = 0);

bool all_passed(const std::vector<CheckResult>& results);
void print_table(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace orbitmart::selfcheck
