#include "umsched/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "umsched/lp_model.hpp"

namespace umsched {

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol);
}

// Refines a grid minimum of f on [lo, hi] with Brent's method.
Extremum refine_min(const std::function<double(double)>& f, double lo, double hi, double guess, double step) {
  const double a = std::max(lo, guess - step);
  const double b = std::min(hi, guess + step);
  auto [x, v] = boost::math::tools::brent_find_minima(f, a, b, 50);
  if (f(guess) < v) return {guess, f(guess)};
  return {x, v};
}

Extremum grid_min(const std::function<double(double)>& f, double lo, double hi, double step) {
  Extremum best{lo, f(lo)};
  const auto n = static_cast<long>(std::ceil((hi - lo) / step));
  for (long i = 1; i <= n; ++i) {
    const double x = std::min(hi, lo + static_cast<double>(i) * step);
    const double v = f(x);
    if (v < best.value) best = {x, v};
  }
  return refine_min(f, lo, hi, best.arg, step);
}

double log_growth(const AnalysisConfig& c) { return std::log1p(c.beta); }

}  // namespace

double pair_prob(double rho) {
  const double x = 2.0 * rho;
  if (x < 0.05) {
    // sum_{n >= 2} (-2)^n x^{n-2} / (2 n!)
    double total = 0.0;
    double term = 1.0;  // n = 2
    for (int n = 2; n < 30; ++n) {
      total += term;
      term *= -2.0 * x / static_cast<double>(n + 1);
    }
    return total;
  }
  return 1.0 / x + std::expm1(-2.0 * x) / (2.0 * x * x);
}

double pair_prob_series(double rho) {
  const double x = 2.0 * rho;
  double total = 0.0;
  double power = 1.0;  // x^t / t!
  for (int t = 0; t < 400; ++t) {
    const double term = power / static_cast<double>(t % 2 == 0 ? t + 1 : t + 2);
    total += term;
    if (t > x && term < 1e-18 * total) break;
    power *= x / static_cast<double>(t + 1);
  }
  return std::exp(-x) * total;
}

double snc_rate(double rho) {
  const double d = 1.0 - rho;
  const double mark = d == 0.0 ? 1.0 : -std::expm1(-d) / d;
  return (4.0 / 9.0) * mark * mark * pair_prob(rho);
}

Extremum snc_rate_min(double step) { return grid_min(snc_rate, 0.0, 1.0, step); }

double log_mark_ratio(double x) {
  if (x == 0.0) return 0.0;
  return std::log(-std::expm1(-x) / x);
}

double min_second_difference(double upper, double h) {
  double worst = INFINITY;
  const auto n = static_cast<long>(std::floor(upper / h));
  for (long i = 1; i <= n; ++i) {
    const double x = static_cast<double>(i) * h;
    const double d = log_mark_ratio(x - h) - 2.0 * log_mark_ratio(x) + log_mark_ratio(x + h);
    worst = std::min(worst, d);
  }
  return worst;
}

double q_circ(double r, const AnalysisConfig& c) {
  const double scale = c.eta / log_growth(c);
  const double span = 1.0 + c.alpha + r;
  if (r <= c.beta - c.alpha) return scale * (span * std::log1p(r) - r);
  const double lg = std::log((1.0 + c.beta) * (1.0 + r) / span);
  if (r <= c.beta) return scale * (span * lg - (c.beta - c.alpha));
  return scale * (c.alpha - c.beta * (1.0 + r) / (1.0 + c.beta) + span * lg);
}

double q_circ_numeric(double r, const AnalysisConfig& c) {
  const double len = log_growth(c);
  const double span = 1.0 + c.alpha + r;
  const double target = std::log1p(r);
  // With ln(rho) = u, the grid point h_rho(1 + r) is e^{u + kL} for the
  // smallest k reaching 1 + r; the integrand is the length of
  // (max(1, h / (1+beta)), min(span, h)).
  auto inner = [&](double u) {
    const double k = std::ceil((target - u) / len);
    const double h = std::exp(u + k * len);
    const double prev = h / (1.0 + c.beta);
    if (!(prev > 1.0)) return 0.0;
    return std::max(0.0, std::min(span, h) - prev);
  };
  auto wrap = [&](double v) {
    double w = std::fmod(v, len);
    return w < 0 ? w + len : w;
  };
  std::array<double, 4> cuts{0.0, wrap(target), wrap(std::log(span)), len};
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate(inner, cuts[i], cuts[i + 1], c.quad_tol * 1e-3);
  return c.eta / len * total;
}

double q_fn(double r, const AnalysisConfig& c) { return std::min(q_circ(r, c), 0.102 * (1.0 + c.alpha + r)); }

double q_prime(double r, const AnalysisConfig& c) {
  if (r <= c.beta - c.alpha) return q_circ(r, c);
  return 0.1 * r;
}

double q_prime_integral(double o, const AnalysisConfig& c) {
  const double scale = c.eta / log_growth(c);
  auto head = [&](double v) {
    return scale * (2.0 * (v + 1.0) * (v + 2.0 * c.alpha + 1.0) * std::log1p(v) - v * (3.0 * v + 4.0 * c.alpha + 2.0)) / 4.0;
  };
  const double knee = c.beta - c.alpha;
  if (o <= knee) return head(o);
  return head(knee) + 0.05 * (o * o - knee * knee);
}

double charge_fn(double x, const AnalysisConfig& c) {
  const double scale = c.eta / log_growth(c);
  const double rest = 1.0 - c.alpha * x;
  return c.alpha * x + scale * (rest * std::log(rest / x) - 1.0 + (1.0 + c.alpha) * x);
}

Extremum charge_fn_min(const AnalysisConfig& c) {
  return grid_min([&](double x) { return charge_fn(x, c); }, c.grid_step, 1.0, c.grid_step);
}

namespace {

double ratio_from_integral(double o, double integral, const AnalysisConfig& c) {
  return (1.0 + c.alpha + 1.5 * o - integral / o) / (1.0 + o);
}

}  // namespace

double ratio_bound(double o, const AnalysisConfig& c) {
  if (o <= 0.0) return 1.0 + c.alpha;
  if (o < 1e-6) return (1.0 + c.alpha + 1.5 * o) / (1.0 + o);
  return ratio_from_integral(o, q_prime_integral(o, c), c);
}

double ratio_bound_numeric(double o, const AnalysisConfig& c) {
  if (o <= 0.0) return 1.0 + c.alpha;
  const double knee = c.beta - c.alpha;
  auto qp = [&](double r) { return q_prime(r, c); };
  const double integral = integrate(qp, 0.0, std::min(o, knee), c.quad_tol * 1e-3) +
                          integrate(qp, std::min(o, knee), o, c.quad_tol * 1e-3);
  return ratio_from_integral(o, integral, c);
}

Extremum ratio_bound_max(double lo, double hi, const AnalysisConfig& c) {
  const double step = std::max(c.grid_step, (hi - lo) / 200000.0);
  Extremum m = grid_min([&](double o) { return -ratio_bound(o, c); }, lo, hi, step);
  return {m.arg, -m.value};
}

double ratio_bound_limit(const AnalysisConfig&) { return 1.5 - 0.05; }

double g_fn(double m, double y, double k) {
  const double num = m * std::pow(1.0 + (1.0 - m) * y, k) + (1.0 - m) * std::pow((1.0 - m) * y, k);
  const double den = m + (1.0 - m) * std::pow(y, k);
  return num / den;
}

double AlphaK::root() const { return std::pow(alpha, 1.0 / k); }

namespace {

// Nelder-Mead maximization of g over the box (0, 1] x [0, 1], clamping
// trial points into the box.
std::array<double, 3> nelder_mead_max(double k, double m0, double y0, double size) {
  auto clamp_pt = [](std::array<double, 2> p) {
    p[0] = std::clamp(p[0], 1e-12, 1.0);
    p[1] = std::clamp(p[1], 0.0, 1.0);
    return p;
  };
  auto value = [&](const std::array<double, 2>& p) { return -g_fn(p[0], p[1], k); };
  std::array<std::array<double, 2>, 3> pts{clamp_pt({m0, y0}), clamp_pt({m0 + size, y0}), clamp_pt({m0, y0 + size})};
  std::array<double, 3> vals{};
  for (int i = 0; i < 3; ++i) vals[static_cast<std::size_t>(i)] = value(pts[static_cast<std::size_t>(i)]);
  for (int iter = 0; iter < 5000; ++iter) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[static_cast<std::size_t>(a)] < vals[static_cast<std::size_t>(b)]; });
    auto& best = pts[static_cast<std::size_t>(idx[0])];
    auto& worst = pts[static_cast<std::size_t>(idx[2])];
    const auto& mid = pts[static_cast<std::size_t>(idx[1])];
    const double spread = std::max(std::abs(worst[0] - best[0]) + std::abs(worst[1] - best[1]),
                                   std::abs(mid[0] - best[0]) + std::abs(mid[1] - best[1]));
    if (spread < 1e-13) break;
    const std::array<double, 2> centroid{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
    auto along = [&](double t) {
      return clamp_pt({centroid[0] + t * (worst[0] - centroid[0]), centroid[1] + t * (worst[1] - centroid[1])});
    };
    const auto reflected = along(-1.0);
    const double fr = value(reflected);
    double& fworst = vals[static_cast<std::size_t>(idx[2])];
    const double fbest = vals[static_cast<std::size_t>(idx[0])];
    const double fmid = vals[static_cast<std::size_t>(idx[1])];
    if (fr < fbest) {
      const auto expanded = along(-2.0);
      const double fe = value(expanded);
      if (fe < fr) {
        worst = expanded;
        fworst = fe;
      } else {
        worst = reflected;
        fworst = fr;
      }
    } else if (fr < fmid) {
      worst = reflected;
      fworst = fr;
    } else {
      const auto contracted = along(0.5);
      const double fc = value(contracted);
      if (fc < fworst) {
        worst = contracted;
        fworst = fc;
      } else {
        for (int i : {idx[1], idx[2]}) {
          auto& p = pts[static_cast<std::size_t>(i)];
          p = clamp_pt({best[0] + 0.5 * (p[0] - best[0]), best[1] + 0.5 * (p[1] - best[1])});
          vals[static_cast<std::size_t>(i)] = value(p);
        }
      }
    }
  }
  std::size_t b = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (vals[i] < vals[b]) b = i;
  }
  return {pts[b][0], pts[b][1], -vals[b]};
}

}  // namespace

AlphaK alpha_k(double k, double grid_step) {
  AlphaK best{k, 1.0, 1.0, 0.0};
  const auto steps = static_cast<int>(std::round(1.0 / grid_step));
  for (int a = 1; a <= steps; ++a) {
    const double m = static_cast<double>(a) / steps;
    for (int b = 0; b <= steps; ++b) {
      const double y = static_cast<double>(b) / steps;
      const double v = g_fn(m, y, k);
      if (v > best.alpha) best = {k, v, m, y};
    }
  }
  const auto refined = nelder_mead_max(k, best.m, best.y, grid_step);
  if (refined[2] > best.alpha) best = {k, refined[2], refined[0], refined[1]};
  return best;
}

std::vector<AlphaK> ratio_table(const std::vector<double>& ks) {
  std::vector<AlphaK> out;
  for (double k : ks) out.push_back(alpha_k(k));
  return out;
}

const std::vector<std::pair<double, double>>& reference_lk_ratios() {
  static const std::vector<std::pair<double, double>> table{
      {1.5, 1.085}, {2.0, 1.155}, {2.5, 1.214}, {3.0, 1.265}, {3.5, 1.309}, {4.0, 1.349}, {4.5, 1.384}, {5.0, 1.415}};
  return table;
}

double srp_cost(const std::vector<PackingItem>& packing, double k) {
  double lambda = 0.0;
  double cost = 0.0;
  for (const PackingItem& item : packing) {
    double height = 0.0;
    for (double h : item.heights) height += h;
    lambda += item.lambda;
    cost += item.lambda * std::pow(height, k);
  }
  if (std::abs(lambda - 1.0) > 1e-9) throw std::invalid_argument("packing weights must sum to 1");
  return cost;
}

double srp_opt(const std::vector<double>& widths, const std::vector<long long>& heights, double k) {
  if (widths.size() != heights.size()) throw std::invalid_argument("widths and heights differ in length");
  long long horizon = 0;
  for (long long h : heights) horizon += h;
  LpModel model;
  std::vector<std::vector<Term>> slots(static_cast<std::size_t>(horizon));
  for (std::size_t j = 0; j < widths.size(); ++j) {
    std::vector<Term> cover;
    const long long p = heights[j];
    for (long long s = 0; s + p <= horizon; ++s) {
      const int v = model.add_var(std::pow(static_cast<double>(s + p), k) - std::pow(static_cast<double>(s), k));
      cover.push_back(Term{v, 1.0});
      for (long long t = s; t < s + p; ++t) slots[static_cast<std::size_t>(t)].push_back(Term{v, 1.0});
    }
    model.add_row(std::move(cover), Relation::Equal, widths[j]);
  }
  for (auto& slot : slots) {
    if (!slot.empty()) model.add_row(std::move(slot), Relation::LessEq, 1.0);
  }
  SimplexSolver solver;
  const LpResult res = solver.solve(model);
  if (res.status != LpStatus::Optimal) throw std::runtime_error("packing LP did not reach an optimum");
  return res.objective;
}

std::vector<CheckResult> verify_analysis(const AnalysisConfig& c) {
  std::vector<CheckResult> out;
  auto add = [&](std::string name, bool pass, std::string detail) {
    out.push_back(CheckResult{std::move(name), pass, std::move(detail)});
  };
  const double knee = c.beta - c.alpha;

  {
    double worst = 0.0;
    for (int i = 1; i <= 100; ++i) {
      const double rho = 0.01 * i;
      worst = std::max(worst, std::abs(pair_prob(rho) - pair_prob_series(rho)));
    }
    add("pair_prob closed form vs series", worst <= 1e-10, "max diff " + std::to_string(worst));
  }
  {
    const Extremum e = snc_rate_min(c.grid_step);
    add("snc_rate min >= eta", e.value >= c.eta,
        "min " + fmt(e.value) + " at rho=" + fmt(e.arg, 5) + ", eta=" + fmt(c.eta, 4));
    const double end = snc_rate(1.0);
    add("snc_rate(1) = (4/9) pair_prob(1)", std::abs(end - 4.0 / 9.0 * pair_prob(1.0)) <= 1e-12, "value " + fmt(end));
  }
  {
    const double d = min_second_difference();
    add("log((1-e^-x)/x) convex on (0,10]", d >= -1e-9, "min second difference " + std::to_string(d));
  }
  {
    double worst = 0.0;
    for (int i = 0; i <= 60; ++i) worst = std::max(worst, std::abs(q_circ(0.5 * i, c) - q_circ_numeric(0.5 * i, c)));
    add("Q_circ closed form vs quadrature", worst <= 1e-6, "max diff " + std::to_string(worst));
  }
  {
    double slack = INFINITY;
    for (double r = knee; r <= 1000.0; r += 0.01) slack = std::min(slack, q_circ(r, c) - 0.1 * r);
    const double limit = c.eta * (1.0 - c.beta / ((1.0 + c.beta) * log_growth(c)));
    add("Q_circ(r) >= 0.1 r on [beta-alpha, 1000]", slack >= 0.0, "min slack " + fmt(slack));
    add("Q_circ(r)/r limit >= 0.1", limit >= 0.1, "limit " + fmt(limit));
  }
  {
    double slack = INFINITY;
    double qp_excess = -INFINITY;
    for (double r = 0.0; r <= knee; r += 0.001) slack = std::min(slack, 0.102 * (1.0 + c.alpha + r) - q_circ(r, c));
    for (double r = 0.0; r <= 100.0; r += 0.01) qp_excess = std::max(qp_excess, q_prime(r, c) - q_fn(r, c));
    add("Q_circ(r) <= 0.102(1+alpha+r) on [0, beta-alpha]", slack >= 0.0, "min slack " + fmt(slack));
    add("Q'(r) <= Q(r)", qp_excess <= 1e-12, "max excess " + std::to_string(qp_excess));
  }
  {
    const Extremum e = charge_fn_min(c);
    add("charge_fn min >= 0.102", e.value >= 0.102, "min " + fmt(e.value) + " at x=" + fmt(e.arg, 5));
  }
  {
    const Extremum e = ratio_bound_max(c.grid_step, knee, c);
    add("ratio_bound max on (0, beta-alpha] <= 1.445", e.value <= 1.445,
        "max " + fmt(e.value) + " at o=" + fmt(e.arg, 4));
    const Extremum g = ratio_bound_max(c.grid_step, 1000.0, c);
    const double sup = std::max(g.value, ratio_bound_limit(c));
    add("ratio_bound over all o <= 1.45", sup <= 1.45 + 1e-9,
        "grid max " + fmt(g.value) + " at o=" + fmt(g.arg, 4) + ", limit " + fmt(ratio_bound_limit(c), 4));
    double worst = 0.0;
    for (double o : {0.5, 2.0, 8.162, 11.0, 15.0, 40.0}) worst = std::max(worst, std::abs(ratio_bound(o, c) - ratio_bound_numeric(o, c)));
    add("ratio_bound closed form vs quadrature", worst <= 1e-7, "max diff " + std::to_string(worst));
  }
  {
    const AlphaK a2 = alpha_k(2.0);
    add("alpha_k(2) = 4/3 at (1/3, 1/2)",
        std::abs(a2.alpha - 4.0 / 3.0) <= 1e-6 && std::abs(a2.m - 1.0 / 3.0) <= 1e-3 && std::abs(a2.y - 0.5) <= 1e-3,
        "alpha " + fmt(a2.alpha, 8) + " at m=" + fmt(a2.m, 5) + " y=" + fmt(a2.y, 5));
    // On y = 1, g = m(2-m)^2 + (1-m)^3, maximized at m = 1/2 with value 5/4.
    double edge = 0.0;
    for (int i = 1; i <= 1000; ++i) edge = std::max(edge, g_fn(i / 1000.0, 1.0, 2.0));
    add("k=2 edge y=1: max g = g(1/2, 1) = 5/4 < 4/3",
        std::abs(g_fn(0.5, 1.0, 2.0) - 1.25) <= 1e-12 && std::abs(edge - 1.25) <= 1e-12,
        "value " + fmt(g_fn(0.5, 1.0, 2.0), 8) + ", edge max " + fmt(edge, 8));
    for (const auto& [k, ref] : reference_lk_ratios()) {
      const AlphaK a = alpha_k(k);
      add("table k=" + fmt(k, 1) + ": alpha^(1/k) = " + fmt(ref, 3), std::abs(a.root() - ref) <= 1e-3,
          "computed " + fmt(a.root(), 5) + " (alpha " + fmt(a.alpha, 5) + " at m=" + fmt(a.m, 4) + " y=" + fmt(a.y, 4) + ")");
    }
  }
  {
    const double cost = srp_cost({{0.5, {2, 2}}, {0.25, {2, 3}}, {0.25, {3}}}, 2.0);
    const double opt = srp_opt({0.75, 0.5, 0.5}, {2, 2, 3}, 2.0);
    add("packing cost = LP optimum = 16.5 at k=2", std::abs(cost - 16.5) <= 1e-6 && std::abs(opt - 16.5) <= 1e-6,
        "cost " + fmt(cost) + ", LP " + fmt(opt));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> analysis_samples(const AnalysisConfig& c) {
  std::vector<std::pair<std::string, std::string>> files;
  {
    std::ostringstream out;
    out << "rho,snc_rate\n";
    for (int i = 0; i <= 1000; ++i) out << fmt(0.001 * i, 3) << ',' << fmt(snc_rate(0.001 * i), 9) << '\n';
    files.emplace_back("snc_rate.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "r,q_circ,q,q_prime,cap_0102,line_01\n";
    for (int i = 0; i <= 600; ++i) {
      const double r = 0.05 * i;
      out << fmt(r, 2) << ',' << fmt(q_circ(r, c), 9) << ',' << fmt(q_fn(r, c), 9) << ',' << fmt(q_prime(r, c), 9) << ','
          << fmt(0.102 * (1 + c.alpha + r), 9) << ',' << fmt(0.1 * r, 9) << '\n';
    }
    files.emplace_back("q_functions.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "x,charge_fn\n";
    for (int i = 1; i <= 1000; ++i) out << fmt(0.001 * i, 3) << ',' << fmt(charge_fn(0.001 * i, c), 9) << '\n';
    files.emplace_back("charge_fn.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "o,ratio_bound\n";
    for (int i = 1; i <= 3000; ++i) out << fmt(0.01 * i, 2) << ',' << fmt(ratio_bound(0.01 * i, c), 9) << '\n';
    files.emplace_back("ratio_bound.csv", out.str());
  }
  return files;
}

}  // namespace umsched
