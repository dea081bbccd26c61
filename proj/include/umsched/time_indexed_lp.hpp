#pragma once

#include <cstdint>
#include <vector>

#include "umsched/core_model.hpp"
#include "umsched/lp_model.hpp"

namespace umsched {

inline constexpr std::int64_t kDefaultHorizonCap = 200;

/// Rectangle of height x_ijs spanning (s, s + p_ij] on machine i.
struct Rectangle {
  int machine = 0;
  int job = 0;
  std::int64_t start = 0;
  double value = 0.0;
};

enum class LpKind { WeightedCompletion, LkNorm };

/// An LP over x_ijs together with the meaning of each column.
struct IndexedLp {
  LpKind kind = LpKind::WeightedCompletion;
  double k = 1.0;
  std::int64_t horizon = 0;
  LpModel model;
  std::vector<Rectangle> columns;  // value unused
};

/// Minimizes sum_j w_j sum_{i,s} x_ijs (s + p_ij) with exact job coverage and
/// unit capacity per machine and unit slot.
IndexedLp build_rectangle_lp(const Instance& instance, std::int64_t horizon_cap = kDefaultHorizonCap);

/// Minimizes sum x_ijs ((s + p_ij)^k - s^k) with coverage >= 1 and unit capacity.
IndexedLp build_lk_lp(const Instance& instance, double k, std::int64_t horizon_cap = kDefaultHorizonCap);

struct FractionalSolution {
  std::int64_t horizon = 0;
  int machines = 0;
  int jobs = 0;
  std::vector<Rectangle> rects;   // positive entries only
  std::vector<double> x_ij;       // machine-major aggregates
  double objective = 0.0;         // LP optimum as reported by the solver
  double max_violation = 0.0;     // row residual before cleanup
  bool certified = false;

  double aggregate(int machine, int job) const {
    return x_ij[static_cast<std::size_t>(machine) * static_cast<std::size_t>(jobs) +
                static_cast<std::size_t>(job)];
  }
};

/// Solves the LP, drops values below 1e-9 and renormalizes each job to total 1.
/// Throws LpInfeasible when the solver does not reach an optimum.
FractionalSolution solve_lp(const Instance& instance, const IndexedLp& lp, LpSolver& solver);
FractionalSolution solve_lp(const Instance& instance, const IndexedLp& lp);

/// Largest capacity excess over all (machine, unit slot) pairs.
double max_capacity_excess(const Instance& instance, const FractionalSolution& solution);

}  // namespace umsched
