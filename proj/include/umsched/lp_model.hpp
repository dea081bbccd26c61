#pragma once

#include <string>
#include <vector>

namespace umsched {

enum class Relation { LessEq, Equal, GreaterEq };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Row {
  std::vector<Term> terms;
  Relation relation = Relation::LessEq;
  double rhs = 0.0;
  std::string name;
};

/// min c^T x subject to rows, x >= 0.
class LpModel {
 public:
  int add_var(double cost, std::string name = {});
  void add_row(std::vector<Term> terms, Relation relation, double rhs, std::string name = {});

  int num_vars() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const std::vector<double>& cost() const { return cost_; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::string& var_name(int v) const { return names_[static_cast<std::size_t>(v)]; }

  /// Throws std::invalid_argument on non-finite data or unknown variables.
  void validate() const;

  double objective_at(const std::vector<double>& x) const;
  /// Largest violation over all rows and bounds (0 when feasible).
  double max_violation(const std::vector<double>& x) const;

 private:
  std::vector<double> cost_;
  std::vector<std::string> names_;
  std::vector<Row> rows_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  double max_violation = 0.0;
  /// True when the final basis passed the dual feasibility check.
  bool certified = false;
  int iterations = 0;
};

class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual LpResult solve(const LpModel& model) = 0;
};

struct SimplexOptions {
  double pivot_tol = 1e-9;
  double optimality_tol = 1e-9;
  double feasibility_tol = 1e-7;
  int max_iterations = 200000;
  /// Columns scanned per pricing pass; 0 picks a size from the model.
  int pricing_block = 0;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int stall_limit = 50;
};

/// Dense two-phase primal simplex on a full tableau.
class SimplexSolver final : public LpSolver {
 public:
  explicit SimplexSolver(SimplexOptions options = {}) : options_(options) {}
  LpResult solve(const LpModel& model) override;

 private:
  SimplexOptions options_;
};

/// CPLEX LP text format.
std::string write_lp_format(const LpModel& model);

}  // namespace umsched
