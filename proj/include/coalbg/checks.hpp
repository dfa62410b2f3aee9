#pragma once
// The eleven acceptance criteria as executable checks, and the named
// cross-validation suites the command-line tool exposes.  Every check row
// reports the measured value, the threshold it is held to, and the
// direction of the comparison, so reports are machine-readable.

#include <cstdint>
#include <string>
#include <vector>

namespace coalbg::checks {

struct CheckRow {
  int criterion = 0;       // 1..11
  std::string name;        // subcheck slug, unique within the criterion
  double measured = 0.0;
  double threshold = 0.0;
  char relation = '<';     // pass iff measured < / > threshold ('='
                           // means measured <= threshold)
  bool pass = false;
  bool timing = false;     // wall-clock gate: enforced, but excluded from
                           // the machine-readable report so that re-running
                           // with one seed reproduces the report exactly
  std::string note;        // side reports (documented reference values...)
};

// Build a row with pass derived from (measured, relation, threshold).
CheckRow make_row(int criterion, std::string name, double measured,
                  char relation, double threshold, std::string note = "");

// Run one acceptance criterion (1..11).  The seed drives the Monte Carlo
// criteria and is ignored by the deterministic ones.
std::vector<CheckRow> run_criterion(int criterion, std::uint64_t seed);

inline constexpr int kCriterionCount = 11;

// Named suites: wf_vs_ode, moran_vs_wf, mc_vs_ode, engines, neutral.
const std::vector<std::string>& suite_names();
std::vector<int> suite_criteria(const std::string& suite);  // throws if unknown
std::vector<CheckRow> run_suite(const std::string& suite, std::uint64_t seed);

bool all_pass(const std::vector<CheckRow>& rows);
// Lowest criterion number with a failing row; 0 if none fail.
int first_failing_criterion(const std::vector<CheckRow>& rows);

// criterion, check, measured, relation, threshold, pass, note
std::string report_csv(const std::vector<CheckRow>& rows);

}  // namespace coalbg::checks
