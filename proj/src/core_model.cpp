#include "umsched/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "umsched/errors.hpp"

namespace umsched {

Instance::Instance(int machines, std::vector<std::int64_t> weights, std::vector<ProcTime> times,
                   std::string id)
    : machines_(machines), weights_(std::move(weights)), times_(std::move(times)), id_(std::move(id)) {
  validate();
}

std::int64_t Instance::finite_p(int machine, int job) const {
  const auto& v = p(machine, job);
  if (!v) {
    throw InfeasiblePlacement("infeasible placement: job " + std::to_string(job) +
                              " has infinite processing time on machine " + std::to_string(machine));
  }
  return *v;
}

std::int64_t Instance::horizon() const {
  std::int64_t total = 0;
  for (int j = 0; j < jobs(); ++j) {
    std::int64_t longest = 0;
    for (int i = 0; i < machines_; ++i) {
      if (finite(i, j)) longest = std::max(longest, *p(i, j));
    }
    total += longest;
  }
  return total;
}

void Instance::validate() const {
  if (machines_ < 1) throw std::invalid_argument("instance needs at least one machine");
  if (times_.size() != static_cast<std::size_t>(machines_) * weights_.size()) {
    throw std::invalid_argument("processing-time matrix has wrong size");
  }
  for (int j = 0; j < jobs(); ++j) {
    if (weights_[static_cast<std::size_t>(j)] < 1) {
      throw std::invalid_argument("job " + std::to_string(j) + " has weight < 1");
    }
    bool any_finite = false;
    for (int i = 0; i < machines_; ++i) {
      const auto& v = p(i, j);
      if (!v) continue;
      if (*v < 1) throw std::invalid_argument("processing times must be >= 1");
      any_finite = true;
    }
    if (!any_finite) {
      throw std::invalid_argument("job " + std::to_string(j) + " has no machine with finite time");
    }
  }
}

std::vector<int> smith_order(const Instance& instance, int machine, std::span<const int> jobs) {
  std::vector<int> out(jobs.begin(), jobs.end());
  for (int j : out) instance.finite_p(machine, j);
  // p_a / w_a < p_b / w_b  <=>  p_a * w_b < p_b * w_a  (all positive)
  std::sort(out.begin(), out.end(), [&](int a, int b) {
    const std::int64_t lhs = *instance.p(machine, a) * instance.weight(b);
    const std::int64_t rhs = *instance.p(machine, b) * instance.weight(a);
    if (lhs != rhs) return lhs < rhs;
    return a < b;
  });
  return out;
}

Schedule smith_schedule(const Instance& instance, const Assignment& assignment) {
  validate_assignment(instance, assignment);
  Schedule s;
  s.machine_of = assignment.machine_of;
  std::vector<std::vector<int>> members(static_cast<std::size_t>(instance.machines()));
  for (int j = 0; j < instance.jobs(); ++j) members[static_cast<std::size_t>(assignment.machine_of[static_cast<std::size_t>(j)])].push_back(j);
  s.order.resize(members.size());
  for (int i = 0; i < instance.machines(); ++i) {
    s.order[static_cast<std::size_t>(i)] = smith_order(instance, i, members[static_cast<std::size_t>(i)]);
  }
  return s;
}

void validate_assignment(const Instance& instance, const Assignment& assignment) {
  if (assignment.machine_of.size() != static_cast<std::size_t>(instance.jobs())) {
    throw InvariantViolation("assignment does not cover every job");
  }
  for (int j = 0; j < instance.jobs(); ++j) {
    const int i = assignment.machine_of[static_cast<std::size_t>(j)];
    if (i < 0 || i >= instance.machines()) throw InvariantViolation("assignment names an unknown machine");
    instance.finite_p(i, j);
  }
}

void validate_schedule(const Instance& instance, const Schedule& schedule) {
  validate_assignment(instance, Assignment{schedule.machine_of});
  if (schedule.order.size() != static_cast<std::size_t>(instance.machines())) {
    throw InvariantViolation("schedule needs one order per machine");
  }
  std::vector<int> seen(static_cast<std::size_t>(instance.jobs()), 0);
  for (int i = 0; i < instance.machines(); ++i) {
    for (int j : schedule.order[static_cast<std::size_t>(i)]) {
      if (j < 0 || j >= instance.jobs() || schedule.machine_of[static_cast<std::size_t>(j)] != i) {
        throw InvariantViolation("machine order lists a job not assigned to it");
      }
      ++seen[static_cast<std::size_t>(j)];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    throw InvariantViolation("machine orders must list every job exactly once");
  }
}

std::int64_t eval_wct(const Instance& instance, const Schedule& schedule) {
  validate_schedule(instance, schedule);
  std::int64_t total = 0;
  for (int i = 0; i < instance.machines(); ++i) {
    std::int64_t clock = 0;
    for (int j : schedule.order[static_cast<std::size_t>(i)]) {
      clock += *instance.p(i, j);
      total += instance.weight(j) * clock;
    }
  }
  return total;
}

std::vector<std::int64_t> machine_loads(const Instance& instance, const Assignment& assignment) {
  validate_assignment(instance, assignment);
  std::vector<std::int64_t> loads(static_cast<std::size_t>(instance.machines()), 0);
  for (int j = 0; j < instance.jobs(); ++j) {
    const int i = assignment.machine_of[static_cast<std::size_t>(j)];
    loads[static_cast<std::size_t>(i)] += *instance.p(i, j);
  }
  return loads;
}

LkValue lk_of_loads(std::span<const std::int64_t> loads, double k) {
  LkValue v;
  for (auto load : loads) v.power_sum += std::pow(static_cast<double>(load), k);
  v.norm = std::pow(v.power_sum, 1.0 / k);
  return v;
}

LkValue eval_lk(const Instance& instance, const Assignment& assignment, double k) {
  if (!(k >= 1.0)) throw std::invalid_argument("k must be >= 1");
  const auto loads = machine_loads(instance, assignment);
  return lk_of_loads(loads, k);
}

}  // namespace umsched
