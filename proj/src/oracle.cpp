#include "umsched/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "umsched/errors.hpp"
#include "umsched/snc.hpp"

namespace umsched {

std::uint64_t assignment_count(const Instance& instance) {
  std::uint64_t total = 1;
  const auto m = static_cast<std::uint64_t>(instance.machines());
  for (int j = 0; j < instance.jobs(); ++j) {
    if (total > std::numeric_limits<std::uint64_t>::max() / m) return std::numeric_limits<std::uint64_t>::max();
    total *= m;
  }
  return total;
}

namespace {

void check_cap(const Instance& instance, std::uint64_t cap) {
  const std::uint64_t count = assignment_count(instance);
  if (count > cap) {
    throw CapExceeded("oracle enumeration of " + std::to_string(count) + " assignments exceeds cap " +
                      std::to_string(cap));
  }
}

// Visits every feasible assignment in machine-radix order (job 0 is the
// least significant digit).
template <class Visit>
std::uint64_t for_each_assignment(const Instance& instance, Visit&& visit) {
  const int n = instance.jobs();
  const int m = instance.machines();
  std::vector<int> digits(static_cast<std::size_t>(n), 0);
  std::uint64_t visited = 0;
  for (;;) {
    bool feasible = true;
    for (int j = 0; j < n && feasible; ++j) feasible = instance.finite(digits[static_cast<std::size_t>(j)], j);
    if (feasible) {
      ++visited;
      visit(digits);
    }
    int j = 0;
    while (j < n && ++digits[static_cast<std::size_t>(j)] == m) {
      digits[static_cast<std::size_t>(j)] = 0;
      ++j;
    }
    if (j == n) break;
  }
  return visited;
}

}  // namespace

WctOracleResult brute_force_wct(const Instance& instance, std::uint64_t cap) {
  check_cap(instance, cap);
  const int m = instance.machines();
  // Smith order restricted to a subset equals the subset of the full order.
  std::vector<std::vector<int>> global(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    std::vector<int> feasible;
    for (int j = 0; j < instance.jobs(); ++j) {
      if (instance.finite(i, j)) feasible.push_back(j);
    }
    global[static_cast<std::size_t>(i)] = smith_order(instance, i, feasible);
  }
  WctOracleResult best;
  best.value = std::numeric_limits<std::int64_t>::max();
  std::vector<int> best_digits;
  best.enumerated = for_each_assignment(instance, [&](const std::vector<int>& digits) {
    std::int64_t total = 0;
    for (int i = 0; i < m; ++i) {
      std::int64_t clock = 0;
      for (int j : global[static_cast<std::size_t>(i)]) {
        if (digits[static_cast<std::size_t>(j)] != i) continue;
        clock += *instance.p(i, j);
        total += instance.weight(j) * clock;
      }
    }
    if (total < best.value) {
      best.value = total;
      best_digits = digits;
    }
  });
  best.witness = smith_schedule(instance, Assignment{best_digits});
  return best;
}

LkOracleResult brute_force_lk(const Instance& instance, double k, std::uint64_t cap) {
  check_cap(instance, cap);
  LkOracleResult best;
  best.power_sum = std::numeric_limits<double>::infinity();
  std::vector<int> best_digits;
  std::vector<std::int64_t> loads(static_cast<std::size_t>(instance.machines()));
  best.enumerated = for_each_assignment(instance, [&](const std::vector<int>& digits) {
    std::fill(loads.begin(), loads.end(), 0);
    for (int j = 0; j < instance.jobs(); ++j) {
      const int i = digits[static_cast<std::size_t>(j)];
      loads[static_cast<std::size_t>(i)] += *instance.p(i, j);
    }
    const double value = lk_of_loads(loads, k).power_sum;
    if (value < best.power_sum) {
      best.power_sum = value;
      best_digits = digits;
    }
  });
  best.witness = Assignment{best_digits};
  best.norm = std::pow(best.power_sum, 1.0 / k);
  return best;
}

}  // namespace umsched

namespace umsched {

std::vector<Rational> enumerate_segmentation(const ComponentShape& shape) {
  Component comp;
  comp.cycle = shape.cycle;
  const int copies = static_cast<int>(shape.machines.size());
  const int jobs = shape.cycle ? copies : copies - 1;
  if (jobs < 1) throw std::invalid_argument("component needs at least one job");
  if (jobs > 20) throw std::invalid_argument("component length above 40 is not supported");
  for (int c = 0; c < copies; ++c) comp.copies.push_back(c);
  for (int t = 0; t < jobs; ++t) comp.jobs.push_back(t);

  std::vector<Rational> prob(static_cast<std::size_t>(copies), Rational(0));
  const int count = segmentation_outcomes(comp);
  for (int outcome = 0; outcome < count; ++outcome) {
    const auto segments = segment_component(comp, shape.machines, outcome);
    validate_segments(segments, shape.machines);
    for (const Segment& seg : segments) {
      for (int c : seg.centers()) prob[static_cast<std::size_t>(c)] += Rational(1, count);
    }
  }
  return prob;
}

}  // namespace umsched
