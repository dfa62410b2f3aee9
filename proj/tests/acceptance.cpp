// Acceptance battery: one line per criterion, nonzero exit iff any fails.
//
// Each criterion is a bundle of quantitative checks produced by the library
// itself (coalbg/checks.hpp); this binary only formats and aggregates them,
// so `coalbg check <suite>` and this battery can never disagree.

#include <cstdio>
#include <string>

#include "coalbg/checks.hpp"
#include "coalbg/report.hpp"

int main() {
  using namespace coalbg;
  constexpr std::uint64_t kSeed = 20260819ULL;
  int failures = 0;
  for (int k = 1; k <= checks::kCriterionCount; ++k) {
    std::vector<checks::CheckRow> rows;
    try {
      rows = checks::run_criterion(k, kSeed);
    } catch (const std::exception& e) {
      std::printf("criterion %2d: FAIL (exception: %s)\n", k, e.what());
      ++failures;
      continue;
    }
    const bool ok = checks::all_pass(rows);
    if (!ok) ++failures;
    std::string detail;
    for (const auto& row : rows) {
      if (!detail.empty()) detail += ", ";
      detail += row.name + "=" + report::format_value(row.measured);
      if (!row.pass) detail += "(!)";
    }
    std::printf("criterion %2d: %s  [%s]\n", k, ok ? "pass" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
  }
  if (failures) {
    std::printf("acceptance: %d of %d criteria failing\n", failures,
                checks::kCriterionCount);
    return 1;
  }
  std::printf("acceptance: all %d criteria pass\n", checks::kCriterionCount);
  return 0;
}
