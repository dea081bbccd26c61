#pragma once

#include <string>
#include <utility>
#include <vector>

namespace umsched {

struct AnalysisConfig {
  double alpha = 0.3;
  double beta = 12.1;
  double eta = 0.1561;
  double grid_step = 1e-4;
  double quad_tol = 1e-8;
};

/// Arg and value of a numerically located extremum.
struct Extremum {
  double arg = 0.0;
  double value = 0.0;
};

/// Probability that two fixed marked edges of a group end up paired, for
/// Poisson(2 rho) other marked edges: 1/(2 rho) - (1 - e^{-4 rho}) / (8 rho^2).
double pair_prob(double rho);
/// Same quantity summed term by term from its defining series.
double pair_prob_series(double rho);

/// (4/9) ((1 - e^{rho-1}) / (1 - rho))^2 pair_prob(rho) on [0, 1].
double snc_rate(double rho);
Extremum snc_rate_min(double step = 1e-4);

/// ln((1 - e^{-x}) / x), with its removable singularity at 0.
double log_mark_ratio(double x);
/// Smallest centered second difference of log_mark_ratio on (0, upper].
double min_second_difference(double upper = 10.0, double h = 1e-3);

double q_circ(double r, const AnalysisConfig& c = {});
double q_circ_numeric(double r, const AnalysisConfig& c = {});
double q_fn(double r, const AnalysisConfig& c = {});
double q_prime(double r, const AnalysisConfig& c = {});
/// Integral of q_prime over [0, o], closed form.
double q_prime_integral(double o, const AnalysisConfig& c = {});

double charge_fn(double x, const AnalysisConfig& c = {});
Extremum charge_fn_min(const AnalysisConfig& c = {});

/// (1/(1+o)) (1 + alpha + 3o/2 - (1/o) int_0^o Q'(r) dr); 1 + alpha at o = 0.
double ratio_bound(double o, const AnalysisConfig& c = {});
/// Same bound with the integral evaluated by quadrature.
double ratio_bound_numeric(double o, const AnalysisConfig& c = {});
Extremum ratio_bound_max(double lo, double hi, const AnalysisConfig& c = {});
/// Value of ratio_bound as o grows without bound.
double ratio_bound_limit(const AnalysisConfig& c = {});

double g_fn(double m, double y, double k);

struct AlphaK {
  double k = 0.0;
  double alpha = 0.0;
  double m = 0.0;
  double y = 0.0;
  double root() const;  // alpha^(1/k)
};

/// sup of g over m in (0, 1], y in [0, 1]: grid scan then Nelder-Mead.
AlphaK alpha_k(double k, double grid_step = 1e-3);
std::vector<AlphaK> ratio_table(const std::vector<double>& ks = {1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0});

/// Published approximation ratios for the L_k norm, k = 1.5, 2, ..., 5.
const std::vector<std::pair<double, double>>& reference_lk_ratios();

struct PackingItem {
  double lambda = 0.0;
  std::vector<double> heights;
};

/// sum lambda (sum heights)^k; throws std::invalid_argument unless sum lambda = 1.
double srp_cost(const std::vector<PackingItem>& packing, double k);

/// Optimum of the single-machine L_k LP where job j needs total width x_j.
double srp_opt(const std::vector<double>& widths, const std::vector<long long>& heights, double k);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Runs every analysis check with the configured constants.
std::vector<CheckResult> verify_analysis(const AnalysisConfig& c = {});

/// Samples of the analysis functions as CSV text, one file per function.
std::vector<std::pair<std::string, std::string>> analysis_samples(const AnalysisConfig& c = {});

}  // namespace umsched
