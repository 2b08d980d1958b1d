#pragma once

#include <string>
#include <vector>

namespace rpi {

struct VerifyOptions {
  double tolerance = 1e-9;
  bool mutate_f_plus = false;  // shift f+ by one state index before the max+ checks
  int random_pairs = 100;
  unsigned long long seed = 7;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<Check> checks;

  std::size_t passed() const;
  bool all_passed() const { return passed() == checks.size(); }
};

// Exact-theory and reduction invariants on every tabular fixture and
// tabular oracle set. Failures are reported, never thrown.
VerifyReport verify(const VerifyOptions& options = {});

}  // namespace rpi
