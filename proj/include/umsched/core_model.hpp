#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace umsched {

/// Processing time of a job on a machine; std::nullopt means the job cannot
/// run there. Never encoded as a large sentinel: the horizon is summed from
/// finite values only.
using ProcTime = std::optional<std::int64_t>;
inline constexpr ProcTime kInfinite = std::nullopt;

/// Unrelated-machines instance: m machines, n jobs, p(i, j) and w(j).
class Instance {
 public:
  Instance() = default;
  /// `times` is machine-major: times[i * jobs + j].
  Instance(int machines, std::vector<std::int64_t> weights, std::vector<ProcTime> times,
           std::string id = {});

  int machines() const { return machines_; }
  int jobs() const { return static_cast<int>(weights_.size()); }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  const ProcTime& p(int machine, int job) const { return times_[index(machine, job)]; }
  bool finite(int machine, int job) const { return p(machine, job).has_value(); }
  /// Finite processing time; throws InfeasiblePlacement otherwise.
  std::int64_t finite_p(int machine, int job) const;
  std::int64_t weight(int job) const { return weights_[static_cast<std::size_t>(job)]; }
  const std::vector<std::int64_t>& weights() const { return weights_; }

  /// Sum over jobs of the largest finite processing time. Every schedule
  /// without idle time finishes by this point.
  std::int64_t horizon() const;

  /// Throws std::invalid_argument when an invariant fails.
  void validate() const;

  friend bool operator==(const Instance&, const Instance&) = default;

 private:
  std::size_t index(int machine, int job) const {
    return static_cast<std::size_t>(machine) * weights_.size() + static_cast<std::size_t>(job);
  }

  int machines_ = 0;
  std::vector<std::int64_t> weights_;
  std::vector<ProcTime> times_;
  std::string id_;
};

/// Job-to-machine map.
struct Assignment {
  std::vector<int> machine_of;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Assignment plus a processing order per machine.
struct Schedule {
  std::vector<int> machine_of;
  std::vector<std::vector<int>> order;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct LkValue {
  double power_sum = 0.0;  // sum_i load_i^k
  double norm = 0.0;       // power_sum^(1/k)
};

/// Jobs sorted by p/w ascending, ties by job index.
std::vector<int> smith_order(const Instance& instance, int machine, std::span<const int> jobs);

/// Builds the schedule that Smith-orders every machine of `assignment`.
Schedule smith_schedule(const Instance& instance, const Assignment& assignment);

void validate_assignment(const Instance& instance, const Assignment& assignment);
void validate_schedule(const Instance& instance, const Schedule& schedule);

/// Total weighted completion time.
std::int64_t eval_wct(const Instance& instance, const Schedule& schedule);

std::vector<std::int64_t> machine_loads(const Instance& instance, const Assignment& assignment);
LkValue eval_lk(const Instance& instance, const Assignment& assignment, double k);
LkValue lk_of_loads(std::span<const std::int64_t> loads, double k);

}  // namespace umsched
