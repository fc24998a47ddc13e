#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace larope {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::size_t instances = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
};

struct SelfCheckOptions {
  std::uint64_t seed = 42;
  std::size_t instances = 200;  ///< random instances per rotation property
  /// Fault injection: perturb the last θ entry of the table used by the
  /// rotation path. Every property that compares it to an independent route
  /// must then fail.
  bool corrupt_frequency_table = false;
};

struct SelfCheckReport {
  std::vector<PropertyResult> properties;

  std::size_t passed() const noexcept;
  bool all_passed() const noexcept { return passed() == properties.size(); }
};

/// Fast invariant suite: rotation identities, complex-form agreement, and
/// cross-attention gradient checks.
SelfCheckReport run_self_check(const SelfCheckOptions& options = {});

}  // namespace larope
