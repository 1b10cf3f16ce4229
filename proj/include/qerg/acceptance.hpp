/// @file include/qerg/acceptance.hpp
/// @brief The acceptance battery: nine criteria with pinned tolerances.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qerg::acceptance {

struct CriterionResult {
  int id = 0;
  bool pass = false;
  /// One line of measured values against their thresholds.
  std::string summary;
  double seconds = 0.0;
};

constexpr int kCriterionCount = 9;

/// Runs criterion 1..9 (ArgumentError otherwise).
CriterionResult run_criterion(int id, std::uint64_t seed = 0);

/// Criterion ids of a named group: algebra (1–3), dynamics (4–6),
/// egorov (7–9), all. ArgumentError for other names.
std::vector<int> group(const std::string& name);

/// "criterion N PASS: …" / "criterion N FAIL: …".
std::string format_line(const CriterionResult& result);

}  // namespace qerg::acceptance
