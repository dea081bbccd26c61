#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "umsched/core_model.hpp"
#include "umsched/rng.hpp"
#include "umsched/snc.hpp"
#include "umsched/time_indexed_lp.hpp"

namespace umsched {

enum class Family { Uniform, Restricted, Correlated };

Family parse_family(const std::string& name);
const char* to_string(Family family);

struct FamilyParams {
  Family family = Family::Uniform;
  int machines = 2;
  int jobs = 4;
  std::int64_t p_lo = 1;
  std::int64_t p_hi = 5;
  std::int64_t w_lo = 1;
  std::int64_t w_hi = 5;
  double infinite_density = 0.0;  // chance that a pair is infinite
  double speed_lo = 0.5;          // machine factors of the correlated family
  double speed_hi = 2.0;
};

/// uniform: p_ij uniform in [p_lo, p_hi]; restricted: p_ij in {q_j, inf};
/// correlated: p_ij = max(1, round(s_i q_j)). Each pair is then made
/// infinite with probability infinite_density, keeping at least one finite
/// machine per job. Throws std::invalid_argument on impossible parameters.
Instance gen_instance(const FamilyParams& params, std::uint64_t seed);

/// Random (U, g, y) with y a convex combination of 1-4 injective job -> group
/// maps, so both marginal constraints hold by construction.
SncInput random_snc_input(Rng& rng, int max_machines = 4, int max_groups = 8, int max_jobs = 6);

/// Runs fn(index) for index in [0, count) on `threads` workers (0 = all cores).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

struct SncCounts {
  int trials = 0;
  int groups = 0;
  int jobs = 0;
  std::vector<std::uint32_t> marginal;  // jobs x groups
  std::vector<std::uint32_t> joint;     // (j, j', u, u') for j < j'

  std::uint32_t marginal_at(int job, int group) const;
  std::uint32_t joint_at(int j, int jp, int u, int up) const;
};

/// Trial t uses the seed derive_seed(seed, t).
SncCounts collect_snc_counts(const SncRounder& rounder, int trials, std::uint64_t seed, unsigned threads = 0);

struct PropertySummary {
  int checked = 0;
  int violations = 0;
  double worst_z = -1e300;  // largest (estimate - bound) / standard error
};

struct SncStatsReport {
  PropertySummary marginals;      // property (a)
  PropertySummary same_machine;   // property (b)
  PropertySummary same_group;     // property (c)
};

/// Compares counts with y using 4 binomial standard errors of the reference.
SncStatsReport evaluate_snc_counts(const SncRounder& rounder, const SncCounts& counts, double eta = 0.1561,
                                   double z = 4.0);

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 1;
  int trials = 200;
  int instances = 1;
  FamilyParams family;
  double k = 2.0;
  double alpha = 0.3;
  double beta = 12.1;
  double eta = 0.1561;
  std::int64_t horizon_cap = kDefaultHorizonCap;
  std::uint64_t oracle_cap = 1'000'000;
  unsigned threads = 0;
  std::string out;  // CSV path; empty for none
};

void validate_config(const ExperimentConfig& config);

struct Aggregate {
  double mean = 0.0;
  double max = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

Aggregate aggregate(const std::vector<double>& values);

struct WctTrialRow {
  std::string instance;
  int trial = 0;
  std::uint64_t seed = 0;
  double lp_value = 0.0;
  double opt_value = -1.0;  // -1 when the oracle was skipped
  std::int64_t theta_value = 0;
  std::int64_t smith_value = 0;
  bool done = false;
};

struct LkTrialRow {
  std::string instance;
  double k = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double lp_value = 0.0;
  double opt_power_sum = -1.0;
  double power_sum = 0.0;
  double expected_power_sum = 0.0;
  bool done = false;
};

struct WctInstanceSummary {
  std::string instance;
  double lp_value = 0.0;
  double opt_value = -1.0;
  Aggregate theta_ratio;   // ALG(theta) / LP
  Aggregate smith_ratio;
  std::int64_t min_theta_value = 0;
  bool smith_never_worse = true;
  double max_lp_violation = 0.0;
  bool certified = false;
};

struct LkInstanceSummary {
  std::string instance;
  double k = 0.0;
  double lp_value = 0.0;
  double opt_power_sum = -1.0;
  Aggregate ratio;       // sum load^k / LP
  Aggregate opt_ratio;   // (sum load^k / OPT)^(1/k)
  double expected_ratio = 0.0;
  double min_power_sum = 0.0;
  double max_bucket_error = 0.0;
  bool consecutive = true;
  bool sorted = true;
  bool balanced = true;
  double reconstruction_error = 0.0;
  std::size_t matchings = 0;
  std::size_t support = 0;
};

struct WctExperiment {
  std::vector<WctTrialRow> rows;
  std::vector<WctInstanceSummary> summaries;
};

struct LkExperiment {
  std::vector<LkTrialRow> rows;
  std::vector<LkInstanceSummary> summaries;
};

/// Fills `out` as trials finish; on an exception the rows completed so far
/// stay in `out` (marked done) before the exception propagates.
void run_wct_experiment(const std::vector<Instance>& instances, const ExperimentConfig& config, WctExperiment& out);
void run_lk_experiment(const std::vector<Instance>& instances, const ExperimentConfig& config, LkExperiment& out);

/// Generates config.instances instances; instance t uses derive_seed(seed, t).
std::vector<Instance> generate_instances(const ExperimentConfig& config);

/// "# key=value" header lines describing the configuration.
std::string config_header(const ExperimentConfig& config);
std::string wct_csv(const WctExperiment& experiment, const ExperimentConfig& config);
std::string lk_csv(const LkExperiment& experiment, const ExperimentConfig& config);

/// Writes text to path, creating parent directories.
void write_text(const std::string& path, const std::string& text);

}  // namespace umsched
