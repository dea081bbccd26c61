#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "umsched/lp_model.hpp"

namespace umsched {

namespace {

// Solves M z = rhs in place by Gaussian elimination with partial pivoting.
// M is dense row-major size x size; returns false when M is numerically singular.
bool dense_solve(std::vector<double> m, std::vector<double>& rhs, std::size_t size) {
  for (std::size_t col = 0; col < size; ++col) {
    std::size_t best = col;
    for (std::size_t r = col + 1; r < size; ++r) {
      if (std::abs(m[r * size + col]) > std::abs(m[best * size + col])) best = r;
    }
    if (std::abs(m[best * size + col]) < 1e-12) return false;
    if (best != col) {
      for (std::size_t c = 0; c < size; ++c) std::swap(m[best * size + c], m[col * size + c]);
      std::swap(rhs[best], rhs[col]);
    }
    const double pivot = m[col * size + col];
    for (std::size_t r = col + 1; r < size; ++r) {
      const double f = m[r * size + col] / pivot;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < size; ++c) m[r * size + c] -= f * m[col * size + c];
      rhs[r] -= f * rhs[col];
    }
  }
  for (std::size_t r = size; r-- > 0;) {
    double v = rhs[r];
    for (std::size_t c = r + 1; c < size; ++c) v -= m[r * size + c] * rhs[c];
    rhs[r] = v / m[r * size + r];
  }
  return true;
}

class Tableau {
 public:
  Tableau(const LpModel& model, const SimplexOptions& options) : options_(options) {
    rows_ = static_cast<std::size_t>(model.num_rows());
    structural_ = static_cast<std::size_t>(model.num_vars());

    // Normalize every row to a non-negative right-hand side.
    std::vector<Relation> rel(rows_);
    std::vector<double> sign(rows_, 1.0);
    std::size_t slack_count = 0;
    std::size_t art_count = 0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const Row& row = model.rows()[r];
      rel[r] = row.relation;
      if (row.rhs < 0) {
        sign[r] = -1.0;
        if (rel[r] == Relation::LessEq) {
          rel[r] = Relation::GreaterEq;
        } else if (rel[r] == Relation::GreaterEq) {
          rel[r] = Relation::LessEq;
        }
      }
      if (rel[r] != Relation::Equal) ++slack_count;
      if (rel[r] != Relation::LessEq) ++art_count;
    }
    real_cols_ = structural_ + slack_count;
    cols_ = real_cols_ + art_count;
    width_ = cols_ + 1;
    data_.assign((rows_ + 1) * width_, 0.0);
    std_a_.assign(rows_ * real_cols_, 0.0);
    b_.assign(rows_, 0.0);
    basis_.assign(rows_, 0);
    active_.assign(rows_, true);

    std::size_t next_slack = structural_;
    std::size_t next_art = real_cols_;
    for (std::size_t r = 0; r < rows_; ++r) {
      const Row& row = model.rows()[r];
      for (const Term& t : row.terms) {
        const double v = sign[r] * t.coef;
        at(r, static_cast<std::size_t>(t.var)) += v;
        std_a_[r * real_cols_ + static_cast<std::size_t>(t.var)] += v;
      }
      b_[r] = sign[r] * row.rhs;
      at(r, cols_) = b_[r];
      if (rel[r] == Relation::LessEq) {
        at(r, next_slack) = 1.0;
        std_a_[r * real_cols_ + next_slack] = 1.0;
        basis_[r] = next_slack++;
      } else {
        if (rel[r] == Relation::GreaterEq) {
          at(r, next_slack) = -1.0;
          std_a_[r * real_cols_ + next_slack] = -1.0;
          ++next_slack;
        }
        at(r, next_art) = 1.0;
        basis_[r] = next_art++;
      }
    }

    double cmax = 0.0;
    for (double c : model.cost()) cmax = std::max(cmax, std::abs(c));
    scale_ = cmax > 0 ? 1.0 / cmax : 1.0;
    cost_.assign(real_cols_, 0.0);
    for (std::size_t v = 0; v < structural_; ++v) cost_[v] = model.cost()[v] * scale_;
  }

  LpResult run() {
    LpResult result;
    // Phase 1: minimize the sum of artificials.
    {
      double* obj = row_ptr(rows_);
      std::fill(obj, obj + width_, 0.0);
      for (std::size_t r = 0; r < rows_; ++r) {
        if (!is_artificial(basis_[r])) continue;
        const double* row = row_ptr(r);
        for (std::size_t c = 0; c < width_; ++c) obj[c] -= row[c];
      }
      for (std::size_t r = 0; r < rows_; ++r) {
        if (is_artificial(basis_[r])) obj[basis_[r]] = 0.0;
      }
      const auto status = iterate(cols_, result.iterations);
      if (status != LpStatus::Optimal) {
        result.status = status == LpStatus::Unbounded ? LpStatus::Infeasible : status;
        return result;
      }
      if (-at(rows_, cols_) > options_.feasibility_tol * std::max(1.0, max_b())) {
        result.status = LpStatus::Infeasible;
        return result;
      }
      drive_out_artificials();
    }

    // Phase 2 over real columns only.
    {
      double* obj = row_ptr(rows_);
      std::fill(obj, obj + width_, 0.0);
      for (std::size_t c = 0; c < real_cols_; ++c) obj[c] = cost_[c];
      for (std::size_t r = 0; r < rows_; ++r) {
        if (!active_[r]) continue;
        const double cb = cost_[basis_[r]];
        if (cb == 0.0) continue;
        const double* row = row_ptr(r);
        for (std::size_t c = 0; c < width_; ++c) obj[c] -= cb * row[c];
      }
      for (std::size_t c = real_cols_; c < cols_; ++c) obj[c] = 0.0;
      const auto status = iterate(real_cols_, result.iterations);
      if (status != LpStatus::Optimal) {
        result.status = status;
        return result;
      }
    }

    std::vector<double> full(real_cols_, 0.0);
    result.certified = polish(full);
    result.status = LpStatus::Optimal;
    result.x.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(structural_));
    return result;
  }

 private:
  double& at(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double* row_ptr(std::size_t r) { return data_.data() + r * width_; }
  bool is_artificial(std::size_t c) const { return c >= real_cols_; }

  double max_b() const {
    double m = 0.0;
    for (double v : b_) m = std::max(m, std::abs(v));
    return m;
  }

  std::optional<std::size_t> choose_entering(std::size_t limit, bool bland) {
    const double* obj = row_ptr(rows_);
    const double tol = options_.optimality_tol;
    if (bland) {
      for (std::size_t c = 0; c < limit; ++c) {
        if (obj[c] < -tol) return c;
      }
      return std::nullopt;
    }
    const std::size_t block = options_.pricing_block > 0
                                  ? static_cast<std::size_t>(options_.pricing_block)
                                  : std::max<std::size_t>(64, limit / 8);
    const std::size_t blocks = (limit + block - 1) / block;
    if (price_start_ >= blocks) price_start_ = 0;
    for (std::size_t k = 0; k < blocks; ++k) {
      const std::size_t b = (price_start_ + k) % blocks;
      const std::size_t lo = b * block;
      const std::size_t hi = std::min(limit, lo + block);
      std::optional<std::size_t> best;
      double best_d = -tol;
      for (std::size_t c = lo; c < hi; ++c) {
        if (obj[c] < best_d) {
          best_d = obj[c];
          best = c;
        }
      }
      if (best) {
        price_start_ = b;
        return best;
      }
    }
    return std::nullopt;
  }

  std::optional<std::size_t> choose_leaving(std::size_t q, bool bland) {
    std::optional<std::size_t> best;
    double best_ratio = std::numeric_limits<double>::infinity();
    double best_a = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (!active_[r]) continue;
      const double a = at(r, q);
      if (a <= options_.pivot_tol) continue;
      const double ratio = std::max(0.0, at(r, cols_)) / a;
      const double slack = 1e-12 * std::max(1.0, best_ratio);
      bool take = false;
      if (!best || ratio < best_ratio - slack) {
        take = true;
      } else if (ratio <= best_ratio + slack) {
        take = bland ? basis_[r] < basis_[*best] : a > best_a;
      }
      if (take) {
        best = r;
        best_ratio = std::min(ratio, best_ratio);
        best_a = a;
      }
    }
    return best;
  }

  void pivot(std::size_t p, std::size_t q) {
    double* prow = row_ptr(p);
    const double inv = 1.0 / prow[q];
    nz_.clear();
    for (std::size_t c = 0; c < width_; ++c) {
      if (prow[c] == 0.0) continue;
      prow[c] *= inv;
      if (std::abs(prow[c]) < 1e-14) {
        prow[c] = 0.0;
      } else {
        nz_.push_back(c);
      }
    }
    prow[q] = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == p) continue;
      double* row = row_ptr(r);
      const double f = row[q];
      if (f == 0.0) continue;
      for (std::size_t c : nz_) {
        double v = row[c] - f * prow[c];
        row[c] = std::abs(v) < 1e-14 ? 0.0 : v;
      }
      row[q] = 0.0;
    }
    basis_[p] = q;
  }

  LpStatus iterate(std::size_t limit, int& iterations) {
    int stalled = 0;
    bool bland = false;
    for (;;) {
      if (iterations >= options_.max_iterations) return LpStatus::IterationLimit;
      const auto q = choose_entering(limit, bland);
      if (!q) return LpStatus::Optimal;
      const auto p = choose_leaving(*q, bland);
      if (!p) return LpStatus::Unbounded;
      const bool degenerate = at(*p, cols_) <= 1e-12;
      pivot(*p, *q);
      ++iterations;
      if (degenerate) {
        if (++stalled > options_.stall_limit) bland = true;
      } else {
        stalled = 0;
        bland = false;
      }
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < rows_; ++r) {
      if (!is_artificial(basis_[r])) continue;
      std::optional<std::size_t> best;
      double best_a = 1e-9;
      for (std::size_t c = 0; c < real_cols_; ++c) {
        if (std::abs(at(r, c)) > best_a) {
          best_a = std::abs(at(r, c));
          best = c;
        }
      }
      if (best) {
        pivot(r, *best);
      } else {
        active_[r] = false;  // redundant row
      }
    }
  }

  // Recomputes the basic solution from the original data and checks dual
  // feasibility of the final basis. Returns the certification flag.
  bool polish(std::vector<double>& full) {
    std::vector<std::size_t> act;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (active_[r]) act.push_back(r);
    }
    const std::size_t size = act.size();
    std::vector<double> bm(size * size);
    std::vector<double> xb(size);
    for (std::size_t i = 0; i < size; ++i) {
      xb[i] = b_[act[i]];
      for (std::size_t k = 0; k < size; ++k) bm[i * size + k] = std_a_[act[i] * real_cols_ + basis_[act[k]]];
    }
    std::vector<double> y(size);
    std::vector<double> bt(size * size);
    for (std::size_t k = 0; k < size; ++k) {
      y[k] = cost_[basis_[act[k]]];
      for (std::size_t i = 0; i < size; ++i) bt[k * size + i] = bm[i * size + k];
    }
    const bool solved = dense_solve(bm, xb, size) && dense_solve(bt, y, size);

    if (!solved) {
      for (std::size_t i = 0; i < size; ++i) full[basis_[act[i]]] = std::max(0.0, at(act[i], cols_));
      const double* obj = row_ptr(rows_);
      for (std::size_t c = 0; c < real_cols_; ++c) {
        if (obj[c] < -1e-7) return false;
      }
      return true;
    }
    bool ok = true;
    for (std::size_t i = 0; i < size; ++i) {
      if (xb[i] < -options_.feasibility_tol) ok = false;
      full[basis_[act[i]]] = std::max(0.0, xb[i]);
    }
    for (std::size_t c = 0; c < real_cols_; ++c) {
      double d = cost_[c];
      for (std::size_t i = 0; i < size; ++i) d -= y[i] * std_a_[act[i] * real_cols_ + c];
      if (d < -1e-7) ok = false;
    }
    return ok;
  }

  SimplexOptions options_;
  std::size_t rows_ = 0, structural_ = 0, real_cols_ = 0, cols_ = 0, width_ = 0;
  std::vector<double> data_;
  std::vector<double> std_a_;
  std::vector<double> b_;
  std::vector<double> cost_;
  std::vector<std::size_t> basis_;
  std::vector<bool> active_;
  std::vector<std::size_t> nz_;
  std::size_t price_start_ = 0;
  double scale_ = 1.0;
};

}  // namespace

LpResult SimplexSolver::solve(const LpModel& model) {
  model.validate();
  Tableau tableau(model, options_);
  LpResult result = tableau.run();
  if (result.status == LpStatus::Optimal) {
    result.objective = model.objective_at(result.x);
    result.max_violation = model.max_violation(result.x);
  }
  return result;
}

}  // namespace umsched
