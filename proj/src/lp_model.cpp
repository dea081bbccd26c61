#include "umsched/lp_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace umsched {

int LpModel::add_var(double cost, std::string name) {
  if (name.empty()) name = "x" + std::to_string(cost_.size());
  cost_.push_back(cost);
  names_.push_back(std::move(name));
  return num_vars() - 1;
}

void LpModel::add_row(std::vector<Term> terms, Relation relation, double rhs, std::string name) {
  if (name.empty()) name = "r" + std::to_string(rows_.size());
  rows_.push_back(Row{std::move(terms), relation, rhs, std::move(name)});
}

void LpModel::validate() const {
  for (double c : cost_) {
    if (!std::isfinite(c)) throw std::invalid_argument("non-finite objective coefficient");
  }
  for (const Row& row : rows_) {
    if (!std::isfinite(row.rhs)) throw std::invalid_argument("non-finite right-hand side in " + row.name);
    for (const Term& t : row.terms) {
      if (t.var < 0 || t.var >= num_vars()) throw std::invalid_argument("unknown variable in " + row.name);
      if (!std::isfinite(t.coef)) throw std::invalid_argument("non-finite coefficient in " + row.name);
    }
  }
}

double LpModel::objective_at(const std::vector<double>& x) const {
  double total = 0.0;
  for (std::size_t v = 0; v < cost_.size(); ++v) total += cost_[v] * x[v];
  return total;
}

double LpModel::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  for (const Row& row : rows_) {
    double lhs = 0.0;
    for (const Term& t : row.terms) lhs += t.coef * x[static_cast<std::size_t>(t.var)];
    switch (row.relation) {
      case Relation::LessEq: worst = std::max(worst, lhs - row.rhs); break;
      case Relation::GreaterEq: worst = std::max(worst, row.rhs - lhs); break;
      case Relation::Equal: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration limit";
  }
  return "unknown";
}

namespace {

void write_linear(std::ostringstream& out, const std::vector<std::pair<int, double>>& terms,
                  const LpModel& model) {
  bool first = true;
  int on_line = 0;
  for (const auto& [var, coef] : terms) {
    if (coef == 0.0) continue;
    if (!first || coef < 0) out << (coef < 0 ? " - " : " + ");
    out << std::abs(coef) << ' ' << model.var_name(var);
    first = false;
    if (++on_line == 8) {
      out << "\n   ";
      on_line = 0;
    }
  }
  if (first) out << "0 " << (model.num_vars() > 0 ? model.var_name(0) : "x0");
}

}  // namespace

std::string write_lp_format(const LpModel& model) {
  std::ostringstream out;
  out.precision(17);
  out << "Minimize\n obj: ";
  std::vector<std::pair<int, double>> terms;
  for (int v = 0; v < model.num_vars(); ++v) terms.emplace_back(v, model.cost()[static_cast<std::size_t>(v)]);
  write_linear(out, terms, model);
  out << "\nSubject To\n";
  for (const Row& row : model.rows()) {
    terms.clear();
    for (const Term& t : row.terms) terms.emplace_back(t.var, t.coef);
    out << ' ' << row.name << ": ";
    write_linear(out, terms, model);
    switch (row.relation) {
      case Relation::LessEq: out << " <= "; break;
      case Relation::GreaterEq: out << " >= "; break;
      case Relation::Equal: out << " = "; break;
    }
    out << row.rhs << '\n';
  }
  // Variables default to [0, +inf) in this format, so no Bounds section.
  out << "End\n";
  return out.str();
}

}  // namespace umsched
