#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <boost/rational.hpp>

#include "umsched/core_model.hpp"

namespace umsched {

inline constexpr std::uint64_t kDefaultOracleCap = 10'000'000;

struct WctOracleResult {
  std::int64_t value = 0;
  Schedule witness;
  std::uint64_t enumerated = 0;  // feasible assignments evaluated
};

struct LkOracleResult {
  double power_sum = 0.0;
  double norm = 0.0;
  Assignment witness;
  std::uint64_t enumerated = 0;
};

/// Number of assignments m^n, saturating at UINT64_MAX.
std::uint64_t assignment_count(const Instance& instance);

/// Minimum total weighted completion time over all assignments, each machine
/// in Smith order. Throws CapExceeded when m^n > cap.
WctOracleResult brute_force_wct(const Instance& instance, std::uint64_t cap = kDefaultOracleCap);

/// Minimum sum of load^k over all assignments.
LkOracleResult brute_force_lk(const Instance& instance, double k, std::uint64_t cap = kDefaultOracleCap);

using Rational = boost::rational<std::int64_t>;

/// A path or cycle of the split graph described only by the machine of each
/// group copy. Paths list L + 1 copies (L jobs); cycles list L copies.
struct ComponentShape {
  bool cycle = false;
  std::vector<int> machines;
};

/// Exact probability that each group copy is a segment center, obtained by
/// enumerating every outcome of the segmentation procedure.
std::vector<Rational> enumerate_segmentation(const ComponentShape& shape);

}  // namespace umsched
