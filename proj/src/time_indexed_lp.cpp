#include "umsched/time_indexed_lp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "umsched/errors.hpp"

namespace umsched {

namespace {

std::int64_t checked_horizon(const Instance& instance, std::int64_t cap) {
  const std::int64_t t = instance.horizon();
  if (t > cap) {
    throw HorizonTooLarge("horizon too large for time-indexed LP: T=" + std::to_string(t) +
                          " exceeds cap " + std::to_string(cap));
  }
  return t;
}

std::string column_name(int i, int j, std::int64_t s) {
  return "x_" + std::to_string(i) + "_" + std::to_string(j) + "_" + std::to_string(s);
}

// One column per finite (i, j) and start s in [0, T - p_ij].
void add_columns(const Instance& instance, IndexedLp& lp, auto cost_of) {
  for (int i = 0; i < instance.machines(); ++i) {
    for (int j = 0; j < instance.jobs(); ++j) {
      if (!instance.finite(i, j)) continue;
      const std::int64_t p = *instance.p(i, j);
      for (std::int64_t s = 0; s + p <= lp.horizon; ++s) {
        lp.model.add_var(cost_of(i, j, s, p), column_name(i, j, s));
        lp.columns.push_back(Rectangle{i, j, s, 0.0});
      }
    }
  }
}

void add_coverage_rows(const Instance& instance, IndexedLp& lp, Relation relation) {
  std::vector<std::vector<Term>> per_job(static_cast<std::size_t>(instance.jobs()));
  for (std::size_t c = 0; c < lp.columns.size(); ++c) {
    per_job[static_cast<std::size_t>(lp.columns[c].job)].push_back(Term{static_cast<int>(c), 1.0});
  }
  for (int j = 0; j < instance.jobs(); ++j) {
    lp.model.add_row(std::move(per_job[static_cast<std::size_t>(j)]), relation, 1.0,
                     "cover_" + std::to_string(j));
  }
}

// Unit slot `slot` = (slot, slot + 1]; rectangle (s, s + p] covers it when
// s <= slot < s + p.
void add_capacity_rows(const Instance& instance, IndexedLp& lp) {
  const auto m = static_cast<std::size_t>(instance.machines());
  const auto horizon = static_cast<std::size_t>(lp.horizon);
  std::vector<std::vector<Term>> rows(m * horizon);
  for (std::size_t c = 0; c < lp.columns.size(); ++c) {
    const Rectangle& r = lp.columns[c];
    const std::int64_t p = *instance.p(r.machine, r.job);
    for (std::int64_t slot = r.start; slot < r.start + p; ++slot) {
      rows[static_cast<std::size_t>(r.machine) * horizon + static_cast<std::size_t>(slot)].push_back(
          Term{static_cast<int>(c), 1.0});
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < horizon; ++t) {
      auto& terms = rows[i * horizon + t];
      if (terms.empty()) continue;
      lp.model.add_row(std::move(terms), Relation::LessEq, 1.0,
                       "cap_" + std::to_string(i) + "_" + std::to_string(t + 1));
    }
  }
}

}  // namespace

IndexedLp build_rectangle_lp(const Instance& instance, std::int64_t horizon_cap) {
  IndexedLp lp;
  lp.kind = LpKind::WeightedCompletion;
  lp.horizon = checked_horizon(instance, horizon_cap);
  add_columns(instance, lp, [&](int, int j, std::int64_t s, std::int64_t p) {
    return static_cast<double>(instance.weight(j) * (s + p));
  });
  add_coverage_rows(instance, lp, Relation::Equal);
  add_capacity_rows(instance, lp);
  return lp;
}

IndexedLp build_lk_lp(const Instance& instance, double k, std::int64_t horizon_cap) {
  if (!(k >= 1.0)) throw std::invalid_argument("k must be >= 1");
  IndexedLp lp;
  lp.kind = LpKind::LkNorm;
  lp.k = k;
  lp.horizon = checked_horizon(instance, horizon_cap);
  add_columns(instance, lp, [&](int, int, std::int64_t s, std::int64_t p) {
    const double hi = std::pow(static_cast<double>(s + p), k);
    if (!std::isfinite(hi)) throw std::overflow_error("L_k LP weight overflows double precision");
    return hi - std::pow(static_cast<double>(s), k);
  });
  add_coverage_rows(instance, lp, Relation::GreaterEq);
  add_capacity_rows(instance, lp);
  return lp;
}

FractionalSolution solve_lp(const Instance& instance, const IndexedLp& lp, LpSolver& solver) {
  const LpResult res = solver.solve(lp.model);
  if (res.status == LpStatus::Unbounded) {
    throw InvariantViolation("time-indexed LP reported unbounded");
  }
  if (res.status != LpStatus::Optimal) {
    throw LpInfeasible(std::string("LP solve failed: ") + to_string(res.status));
  }
  FractionalSolution sol;
  sol.horizon = lp.horizon;
  sol.machines = instance.machines();
  sol.jobs = instance.jobs();
  sol.objective = res.objective;
  sol.max_violation = res.max_violation;
  sol.certified = res.certified;

  std::vector<double> job_total(static_cast<std::size_t>(instance.jobs()), 0.0);
  for (std::size_t c = 0; c < lp.columns.size(); ++c) {
    if (res.x[c] < 1e-9) continue;
    Rectangle r = lp.columns[c];
    r.value = res.x[c];
    job_total[static_cast<std::size_t>(r.job)] += r.value;
    sol.rects.push_back(r);
  }
  sol.x_ij.assign(static_cast<std::size_t>(instance.machines()) * static_cast<std::size_t>(instance.jobs()), 0.0);
  for (Rectangle& r : sol.rects) {
    r.value /= job_total[static_cast<std::size_t>(r.job)];
    sol.x_ij[static_cast<std::size_t>(r.machine) * static_cast<std::size_t>(instance.jobs()) +
             static_cast<std::size_t>(r.job)] += r.value;
  }
  return sol;
}

FractionalSolution solve_lp(const Instance& instance, const IndexedLp& lp) {
  SimplexSolver solver;
  return solve_lp(instance, lp, solver);
}

double max_capacity_excess(const Instance& instance, const FractionalSolution& solution) {
  const auto horizon = static_cast<std::size_t>(solution.horizon);
  std::vector<double> load(static_cast<std::size_t>(instance.machines()) * horizon, 0.0);
  for (const Rectangle& r : solution.rects) {
    const std::int64_t p = *instance.p(r.machine, r.job);
    for (std::int64_t slot = r.start; slot < r.start + p; ++slot) {
      load[static_cast<std::size_t>(r.machine) * horizon + static_cast<std::size_t>(slot)] += r.value;
    }
  }
  double worst = 0.0;
  for (double v : load) worst = std::max(worst, v - 1.0);
  return worst;
}

}  // namespace umsched
