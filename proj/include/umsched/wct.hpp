#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "umsched/core_model.hpp"
#include "umsched/rng.hpp"
#include "umsched/snc.hpp"
#include "umsched/time_indexed_lp.hpp"

namespace umsched {

struct WindowConfig {
  double alpha = 0.3;
  double beta = 12.1;
};

/// Random grid shift rho in [1, 1 + beta) and per-pair offsets tau_ij in [0, p_ij).
struct ShiftSample {
  double rho = 1.0;
  std::vector<double> tau;  // machine-major; 0 for infinite pairs
  int jobs = 0;

  double tau_of(int machine, int job) const {
    return tau[static_cast<std::size_t>(machine) * static_cast<std::size_t>(jobs) + static_cast<std::size_t>(job)];
  }
};

/// Draws ln(rho) uniform in [0, ln(1 + beta)), then tau_ij for every finite
/// pair in machine-major order.
ShiftSample sample_shift(const Instance& instance, const WindowConfig& config, Rng& rng);

/// The unique k with s <= rho (1+beta)^(k-1) < s + tau <= rho (1+beta)^k, if any.
std::optional<int> window_of(std::int64_t start, double tau, double rho, double beta);

struct GroupedRectangles {
  SncInput snc;
  std::vector<int> group_of_rect;                // parallel to FractionalSolution::rects
  std::vector<std::optional<int>> window;        // per group; nullopt for a leftover group v_ij
  std::vector<std::vector<int>> rects_of_pair;   // (group, job) -> rect indices, group-major
  double max_group_mass = 0.0;

  const std::vector<int>& rects_in(int group, int job) const {
    return rects_of_pair[static_cast<std::size_t>(group) * static_cast<std::size_t>(snc.jobs) +
                         static_cast<std::size_t>(job)];
  }
};

/// Window groups u_ik per machine (k ascending), then leftover groups v_ij
/// (j ascending). Throws InvariantViolation when some y(u, J) > 1 + 1e-7.
GroupedRectangles build_groups(const Instance& instance, const FractionalSolution& solution,
                               const ShiftSample& shift, const WindowConfig& config);

struct Anchor {
  int machine = 0;
  int job = 0;
  std::int64_t start = 0;
  int rect = 0;  // index into FractionalSolution::rects
};

/// Anchor of job j: a rectangle of j inside group sigma(j), drawn with
/// probability x_ijs / y_{sigma(j), j}.
std::vector<Anchor> pick_anchors(std::span<const int> sigma, const GroupedRectangles& groups,
                                 const FractionalSolution& solution, Rng& rng);

/// theta = (1 + alpha) s + tau, plus 0.2 p when the anchor machine dominates the job.
double compute_theta(std::int64_t start, double tau, std::int64_t p, double x_ij, double alpha);

/// Assignment from the anchors, each machine ordered by theta (ties by job index).
Schedule build_schedule(const Instance& instance, std::span<const Anchor> anchors, std::span<const double> theta);

struct WctRun {
  Schedule theta_schedule;
  Schedule smith_schedule;
  std::int64_t theta_value = 0;
  std::int64_t smith_value = 0;
  double rho = 1.0;
  std::vector<Anchor> anchors;
  std::vector<double> theta;
  double max_group_mass = 0.0;
  int group_count = 0;
};

/// Everything after the LP: one call to run() is one rounding trial.
class WctRounder {
 public:
  WctRounder(const Instance& instance, FractionalSolution solution, WindowConfig config = {});

  const FractionalSolution& solution() const { return solution_; }
  double lp_value() const { return solution_.objective; }
  WctRun run(Rng& rng) const;

 private:
  const Instance* instance_;
  FractionalSolution solution_;
  WindowConfig config_;
};

struct WctResult {
  WctRun run;
  double lp_value = 0.0;
  double theta_ratio = 0.0;
  double smith_ratio = 0.0;
};

/// LP solve followed by a single rounding trial.
WctResult wct_pipeline(const Instance& instance, Rng& rng, const WindowConfig& config = {},
                       std::int64_t horizon_cap = kDefaultHorizonCap);

}  // namespace umsched
