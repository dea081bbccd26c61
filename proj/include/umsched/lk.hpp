#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "umsched/core_model.hpp"
#include "umsched/rng.hpp"
#include "umsched/time_indexed_lp.hpp"

namespace umsched {

/// Fraction x of a job with size p on one machine.
struct JobShare {
  int job = 0;
  std::int64_t p = 0;
  double x = 0.0;
};

struct BucketPiece {
  int job = 0;     // >= real job count for dummy jobs
  int bucket = 0;  // 1-based rank on the machine, or global id in BucketMatching
  double value = 0.0;
};

struct MachineBuckets {
  int buckets = 0;
  std::vector<BucketPiece> pieces;  // real jobs only, in sorted order
  std::vector<double> totals;       // per bucket, before dummy fill
};

/// Packs jobs by non-increasing p (ties by job index) into unit buckets.
/// Cumulative bounds within 1e-9 of an integer are treated as integers and
/// zero-valued pieces are dropped.
MachineBuckets bucketize(std::span<const JobShare> shares);

/// Fractional perfect matching between (real + dummy) jobs and all buckets.
struct BucketMatching {
  int real_jobs = 0;
  int dummy_jobs = 0;
  std::vector<int> bucket_machine;           // per global bucket
  std::vector<int> bucket_rank;              // 1-based rank on its machine
  std::vector<BucketPiece> pieces;           // bucket = global bucket id

  int rows() const { return real_jobs + dummy_jobs; }
  int buckets() const { return static_cast<int>(bucket_machine.size()); }
};

/// Buckets every machine of `solution` and fills deficits with dummy jobs of
/// total mass 1 each, laid across the per-machine deficits in machine order.
BucketMatching build_bucket_matching(const Instance& instance, const FractionalSolution& solution);

struct BucketCheck {
  double max_bucket_error = 0.0;   // |bucket total - 1|
  double max_job_error = 0.0;      // |real job total - 1|
  bool consecutive = true;         // each (job, machine) uses <= 2 consecutive buckets
  bool sorted = true;              // bucket q sizes >= bucket q + 1 sizes
};

BucketCheck check_bucket_matching(const Instance& instance, const BucketMatching& matching);

struct ConvexCombination {
  std::vector<double> weights;
  std::vector<std::vector<int>> matchings;  // row -> global bucket
};

/// Repeatedly extracts a perfect matching on the positive support with a
/// lexicographic augmenting-path search and subtracts its smallest entry.
/// Throws InvariantViolation when the support has no perfect matching
/// after one renormalization retry.
ConvexCombination birkhoff_decompose(int size, std::span<const BucketPiece> pieces, double tol = 1e-12);

/// Largest |sum_I lambda_I [I(row) = col] - value| over all entries.
double reconstruction_error(int size, std::span<const BucketPiece> pieces, const ConvexCombination& combo);

/// Draws a matching with probability lambda and reads off real jobs' machines.
Assignment sample_assignment(const ConvexCombination& combo, const BucketMatching& matching, Rng& rng);

/// Balanced property over every pair of matchings on every machine; dummy
/// jobs count as size 0.
bool check_balanced(const Instance& instance, const ConvexCombination& combo, const BucketMatching& matching);

/// Pipeline state after the LP: bucket matching plus its decomposition.
class LkRounder {
 public:
  LkRounder(const Instance& instance, FractionalSolution solution, double k);

  const FractionalSolution& solution() const { return solution_; }
  const BucketMatching& matching() const { return matching_; }
  const ConvexCombination& combination() const { return combo_; }
  double lp_value() const { return solution_.objective; }
  double k() const { return k_; }

  Assignment sample(Rng& rng) const;
  /// Exact E[sum_i load_i^k] over the decomposition.
  double expected_power_sum() const;

 private:
  const Instance* instance_;
  FractionalSolution solution_;
  double k_;
  BucketMatching matching_;
  ConvexCombination combo_;
};

struct LkResult {
  Assignment assignment;
  double lp_value = 0.0;
  double power_sum = 0.0;
  double ratio = 0.0;       // power_sum / lp_value
  double norm_ratio = 0.0;  // ratio^(1/k)
  double expected_ratio = 0.0;
};

LkResult lk_pipeline(const Instance& instance, double k, Rng& rng, std::int64_t horizon_cap = kDefaultHorizonCap);

}  // namespace umsched
