#include "umsched/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "umsched/errors.hpp"
#include "umsched/lk.hpp"
#include "umsched/oracle.hpp"
#include "umsched/wct.hpp"

namespace umsched {

Family parse_family(const std::string& name) {
  if (name == "uniform") return Family::Uniform;
  if (name == "restricted") return Family::Restricted;
  if (name == "correlated") return Family::Correlated;
  throw std::invalid_argument("unknown instance family: " + name);
}

const char* to_string(Family family) {
  switch (family) {
    case Family::Uniform: return "uniform";
    case Family::Restricted: return "restricted";
    case Family::Correlated: return "correlated";
  }
  return "unknown";
}

namespace {

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

Instance gen_instance(const FamilyParams& params, std::uint64_t seed) {
  if (params.machines < 1 || params.jobs < 0 || params.p_lo < 1 || params.p_lo > params.p_hi || params.w_lo < 1 ||
      params.w_lo > params.w_hi || !(params.infinite_density >= 0.0 && params.infinite_density < 1.0) ||
      !(params.speed_lo > 0.0 && params.speed_lo <= params.speed_hi)) {
    throw std::invalid_argument("impossible family constraints");
  }
  Rng rng(seed);
  const int m = params.machines;
  const int n = params.jobs;
  std::vector<std::int64_t> weights(static_cast<std::size_t>(n));
  for (auto& w : weights) w = uniform_int(rng, params.w_lo, params.w_hi);
  std::vector<ProcTime> times(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
  auto at = [&](int i, int j) -> ProcTime& { return times[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; };

  std::vector<std::int64_t> base(static_cast<std::size_t>(n));
  for (auto& q : base) q = uniform_int(rng, params.p_lo, params.p_hi);
  std::vector<double> speed(static_cast<std::size_t>(m));
  for (auto& s : speed) s = rng.uniform(params.speed_lo, params.speed_hi);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      switch (params.family) {
        case Family::Uniform: at(i, j) = uniform_int(rng, params.p_lo, params.p_hi); break;
        case Family::Restricted: at(i, j) = base[static_cast<std::size_t>(j)]; break;
        case Family::Correlated:
          at(i, j) = std::max<std::int64_t>(1, std::llround(speed[static_cast<std::size_t>(i)] *
                                                             static_cast<double>(base[static_cast<std::size_t>(j)])));
          break;
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    bool any = false;
    for (int i = 0; i < m; ++i) {
      if (rng.bernoulli(params.infinite_density)) {
        at(i, j) = kInfinite;
      } else {
        any = true;
      }
    }
    if (!any) {
      const int keep = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
      switch (params.family) {
        case Family::Uniform: at(keep, j) = uniform_int(rng, params.p_lo, params.p_hi); break;
        case Family::Restricted: at(keep, j) = base[static_cast<std::size_t>(j)]; break;
        case Family::Correlated:
          at(keep, j) = std::max<std::int64_t>(1, std::llround(speed[static_cast<std::size_t>(keep)] *
                                                                static_cast<double>(base[static_cast<std::size_t>(j)])));
          break;
      }
    }
  }
  return Instance(m, std::move(weights), std::move(times), std::string(to_string(params.family)) + "-" + std::to_string(seed));
}

SncInput random_snc_input(Rng& rng, int max_machines, int max_groups, int max_jobs) {
  if (max_machines < 1 || max_groups < 2 || max_jobs < 2) throw std::invalid_argument("snc input bounds too small");
  max_jobs = std::min(max_jobs, max_groups);
  SncInput input;
  input.machines = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_machines)));
  input.jobs = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_jobs - 1)));
  const int groups = input.jobs + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_groups - input.jobs + 1)));
  for (int u = 0; u < groups; ++u) input.group_machine.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(input.machines))));
  const int maps = 1 + static_cast<int>(rng.below(4));
  std::vector<double> weight(static_cast<std::size_t>(maps));
  double total = 0.0;
  for (auto& w : weight) {
    w = 0.05 + rng.uniform01();
    total += w;
  }
  std::vector<double> y(static_cast<std::size_t>(groups) * static_cast<std::size_t>(input.jobs), 0.0);
  std::vector<int> perm(static_cast<std::size_t>(groups));
  for (int k = 0; k < maps; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (int j = 0; j < input.jobs; ++j) {
      y[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)]) * static_cast<std::size_t>(input.jobs) + static_cast<std::size_t>(j)] +=
          weight[static_cast<std::size_t>(k)] / total;
    }
  }
  for (int u = 0; u < groups; ++u) {
    for (int j = 0; j < input.jobs; ++j) {
      const double v = y[static_cast<std::size_t>(u) * static_cast<std::size_t>(input.jobs) + static_cast<std::size_t>(j)];
      if (v > 0.0) input.entries.push_back(SncEntry{u, j, v});
    }
  }
  input.validate();
  return input;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::uint32_t SncCounts::marginal_at(int job, int group) const {
  return marginal[static_cast<std::size_t>(job) * static_cast<std::size_t>(groups) + static_cast<std::size_t>(group)];
}

std::uint32_t SncCounts::joint_at(int j, int jp, int u, int up) const {
  const auto g = static_cast<std::size_t>(groups);
  const auto n = static_cast<std::size_t>(jobs);
  return joint[((static_cast<std::size_t>(j) * n + static_cast<std::size_t>(jp)) * g + static_cast<std::size_t>(u)) * g +
               static_cast<std::size_t>(up)];
}

SncCounts collect_snc_counts(const SncRounder& rounder, int trials, std::uint64_t seed, unsigned threads) {
  SncCounts counts;
  counts.trials = trials;
  counts.groups = rounder.input().groups();
  counts.jobs = rounder.input().jobs;
  const auto g = static_cast<std::size_t>(counts.groups);
  const auto n = static_cast<std::size_t>(counts.jobs);
  counts.marginal.assign(n * g, 0);
  counts.joint.assign(n * n * g * g, 0);

  // Fixed-size chunks keep the merge order independent of scheduling.
  const std::size_t chunk = 4096;
  const std::size_t chunks = (static_cast<std::size_t>(trials) + chunk - 1) / chunk;
  std::vector<SncCounts> partial(chunks, counts);
  parallel_for(chunks, threads, [&](std::size_t c) {
    SncCounts& local = partial[c];
    const std::size_t end = std::min(static_cast<std::size_t>(trials), (c + 1) * chunk);
    for (std::size_t t = c * chunk; t < end; ++t) {
      Rng rng(derive_seed(seed, t));
      const std::vector<int> sigma = rounder.round(rng);
      for (std::size_t j = 0; j < n; ++j) {
        ++local.marginal[j * g + static_cast<std::size_t>(sigma[j])];
        for (std::size_t jp = j + 1; jp < n; ++jp) {
          ++local.joint[((j * n + jp) * g + static_cast<std::size_t>(sigma[j])) * g + static_cast<std::size_t>(sigma[jp])];
        }
      }
    }
  });
  for (const SncCounts& local : partial) {
    for (std::size_t k = 0; k < counts.marginal.size(); ++k) counts.marginal[k] += local.marginal[k];
    for (std::size_t k = 0; k < counts.joint.size(); ++k) counts.joint[k] += local.joint[k];
  }
  return counts;
}

namespace {

void record(PropertySummary& s, double estimate, double bound, int trials, double z) {
  const double p = std::clamp(bound, 0.0, 1.0);
  const double se = std::sqrt(p * (1.0 - p) / trials);
  const double excess = estimate - bound;
  ++s.checked;
  if (excess > z * se + 1e-12) ++s.violations;
  if (se > 0) {
    s.worst_z = std::max(s.worst_z, excess / se);
  } else if (excess > 1e-12) {
    s.worst_z = std::max(s.worst_z, 1e300);
  }
}

}  // namespace

SncStatsReport evaluate_snc_counts(const SncRounder& rounder, const SncCounts& counts, double eta, double z) {
  SncStatsReport report;
  const SncInput& in = rounder.input();
  const double trials = counts.trials;
  for (int j = 0; j < in.jobs; ++j) {
    for (int u = 0; u < in.groups(); ++u) {
      const double y = rounder.y(u, j);
      const double est = counts.marginal_at(j, u) / trials;
      // Two-sided: check both est <= y + z se and y <= est + z se.
      record(report.marginals, std::abs(est - y) + y, y, counts.trials, z);
    }
  }
  for (int j = 0; j < in.jobs; ++j) {
    for (int jp = j + 1; jp < in.jobs; ++jp) {
      for (int u = 0; u < in.groups(); ++u) {
        for (int up = 0; up < in.groups(); ++up) {
          if (in.group_machine[static_cast<std::size_t>(u)] != in.group_machine[static_cast<std::size_t>(up)]) continue;
          const double prod = rounder.y(u, j) * rounder.y(up, jp);
          const double est = counts.joint_at(j, jp, u, up) / trials;
          record(report.same_machine, est, prod, counts.trials, z);
          if (u == up && prod > 0 && !rounder.dominated(u, j) && !rounder.dominated(u, jp)) {
            record(report.same_group, est, (1.0 - eta) * prod, counts.trials, z);
          }
        }
      }
    }
  }
  return report;
}

void validate_config(const ExperimentConfig& config) {
  if (config.trials < 1) throw std::invalid_argument("trial count must be >= 1");
  if (config.instances < 1) throw std::invalid_argument("instance count must be >= 1");
  if (!(config.k >= 1.0)) throw std::invalid_argument("k must be >= 1");
  if (!(config.alpha > 0.0) || !(config.beta > config.alpha)) throw std::invalid_argument("need 0 < alpha < beta");
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.count = values.size();
  if (values.empty()) return a;
  a.max = *std::max_element(values.begin(), values.end());
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stderr_ = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return a;
}

std::vector<Instance> generate_instances(const ExperimentConfig& config) {
  std::vector<Instance> out;
  for (int t = 0; t < config.instances; ++t) {
    out.push_back(gen_instance(config.family, derive_seed(config.seed, static_cast<std::uint64_t>(t))));
  }
  return out;
}

void run_wct_experiment(const std::vector<Instance>& instances, const ExperimentConfig& config, WctExperiment& out) {
  validate_config(config);
  const WindowConfig window{config.alpha, config.beta};
  const std::size_t count = instances.size();
  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<std::unique_ptr<WctRounder>> rounders(count);
  out.summaries.assign(count, {});
  out.rows.assign(count * trials, {});
  parallel_for(count, config.threads, [&](std::size_t i) {
    const Instance& inst = instances[i];
    const IndexedLp lp = build_rectangle_lp(inst, config.horizon_cap);
    FractionalSolution sol = solve_lp(inst, lp);
    WctInstanceSummary& s = out.summaries[i];
    s.instance = inst.id().empty() ? "instance-" + std::to_string(i) : inst.id();
    s.lp_value = sol.objective;
    s.max_lp_violation = sol.max_violation;
    s.certified = sol.certified;
    if (assignment_count(inst) <= config.oracle_cap) {
      s.opt_value = static_cast<double>(brute_force_wct(inst, config.oracle_cap).value);
    }
    rounders[i] = std::make_unique<WctRounder>(inst, std::move(sol), window);
  });
  parallel_for(count * trials, config.threads, [&](std::size_t k) {
    const std::size_t i = k / trials;
    const std::size_t t = k % trials;
    const std::uint64_t seed = derive_seed(derive_seed(config.seed, i), t);
    Rng rng(seed);
    const WctRun run = rounders[i]->run(rng);
    WctTrialRow& row = out.rows[k];
    row.instance = out.summaries[i].instance;
    row.trial = static_cast<int>(t);
    row.seed = seed;
    row.lp_value = out.summaries[i].lp_value;
    row.opt_value = out.summaries[i].opt_value;
    row.theta_value = run.theta_value;
    row.smith_value = run.smith_value;
    row.done = true;
  });
  for (std::size_t i = 0; i < count; ++i) {
    WctInstanceSummary& s = out.summaries[i];
    std::vector<double> theta;
    std::vector<double> smith;
    s.min_theta_value = INT64_MAX;
    for (std::size_t t = 0; t < trials; ++t) {
      const WctTrialRow& row = out.rows[i * trials + t];
      theta.push_back(static_cast<double>(row.theta_value) / s.lp_value);
      smith.push_back(static_cast<double>(row.smith_value) / s.lp_value);
      s.min_theta_value = std::min(s.min_theta_value, row.theta_value);
      if (row.smith_value > row.theta_value) s.smith_never_worse = false;
    }
    s.theta_ratio = aggregate(theta);
    s.smith_ratio = aggregate(smith);
  }
}

void run_lk_experiment(const std::vector<Instance>& instances, const ExperimentConfig& config, LkExperiment& out) {
  validate_config(config);
  const std::size_t count = instances.size();
  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<std::unique_ptr<LkRounder>> rounders(count);
  out.summaries.assign(count, {});
  out.rows.assign(count * trials, {});
  parallel_for(count, config.threads, [&](std::size_t i) {
    const Instance& inst = instances[i];
    const IndexedLp lp = build_lk_lp(inst, config.k, config.horizon_cap);
    rounders[i] = std::make_unique<LkRounder>(inst, solve_lp(inst, lp), config.k);
    const LkRounder& r = *rounders[i];
    LkInstanceSummary& s = out.summaries[i];
    s.instance = inst.id().empty() ? "instance-" + std::to_string(i) : inst.id();
    s.k = config.k;
    s.lp_value = r.lp_value();
    s.expected_ratio = r.expected_power_sum() / r.lp_value();
    if (assignment_count(inst) <= config.oracle_cap) s.opt_power_sum = brute_force_lk(inst, config.k, config.oracle_cap).power_sum;
    const BucketCheck check = check_bucket_matching(inst, r.matching());
    s.max_bucket_error = check.max_bucket_error;
    s.consecutive = check.consecutive;
    s.sorted = check.sorted;
    s.balanced = check_balanced(inst, r.combination(), r.matching());
    s.reconstruction_error = reconstruction_error(r.matching().rows(), r.matching().pieces, r.combination());
    s.matchings = r.combination().weights.size();
    s.support = r.matching().pieces.size();
  });
  parallel_for(count * trials, config.threads, [&](std::size_t k) {
    const std::size_t i = k / trials;
    const std::size_t t = k % trials;
    const std::uint64_t seed = derive_seed(derive_seed(config.seed, i), t);
    Rng rng(seed);
    const Assignment a = rounders[i]->sample(rng);
    LkTrialRow& row = out.rows[k];
    row.instance = out.summaries[i].instance;
    row.k = config.k;
    row.trial = static_cast<int>(t);
    row.seed = seed;
    row.lp_value = out.summaries[i].lp_value;
    row.opt_power_sum = out.summaries[i].opt_power_sum;
    row.power_sum = eval_lk(instances[i], a, config.k).power_sum;
    row.expected_power_sum = out.summaries[i].expected_ratio * out.summaries[i].lp_value;
    row.done = true;
  });
  for (std::size_t i = 0; i < count; ++i) {
    LkInstanceSummary& s = out.summaries[i];
    std::vector<double> ratio;
    std::vector<double> opt_ratio;
    s.min_power_sum = INFINITY;
    for (std::size_t t = 0; t < trials; ++t) {
      const LkTrialRow& row = out.rows[i * trials + t];
      ratio.push_back(row.power_sum / s.lp_value);
      if (s.opt_power_sum > 0) opt_ratio.push_back(std::pow(row.power_sum / s.opt_power_sum, 1.0 / s.k));
      s.min_power_sum = std::min(s.min_power_sum, row.power_sum);
    }
    s.ratio = aggregate(ratio);
    s.opt_ratio = aggregate(opt_ratio);
  }
}

std::string config_header(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "# command=" << c.command << '\n'
      << "# seed=" << c.seed << '\n'
      << "# trials=" << c.trials << '\n'
      << "# instances=" << c.instances << '\n'
      << "# family=" << to_string(c.family.family) << '\n'
      << "# m=" << c.family.machines << '\n'
      << "# n=" << c.family.jobs << '\n'
      << "# p_range=" << c.family.p_lo << ".." << c.family.p_hi << '\n'
      << "# w_range=" << c.family.w_lo << ".." << c.family.w_hi << '\n'
      << "# infinite_density=" << num(c.family.infinite_density) << '\n'
      << "# k=" << num(c.k) << '\n'
      << "# alpha=" << num(c.alpha) << '\n'
      << "# beta=" << num(c.beta) << '\n'
      << "# eta=" << num(c.eta) << '\n'
      << "# horizon_cap=" << c.horizon_cap << '\n'
      << "# oracle_cap=" << c.oracle_cap << '\n';
  return out.str();
}

std::string wct_csv(const WctExperiment& e, const ExperimentConfig& config) {
  std::ostringstream out;
  out << config_header(config);
  out << "instance,trial,seed,lp_value,opt_value,theta_value,smith_value,theta_ratio,smith_ratio,opt_ratio\n";
  for (const WctTrialRow& r : e.rows) {
    if (!r.done) continue;
    out << r.instance << ',' << r.trial << ',' << r.seed << ',' << num(r.lp_value) << ','
        << (r.opt_value >= 0 ? num(r.opt_value) : "") << ',' << r.theta_value << ',' << r.smith_value << ','
        << num(static_cast<double>(r.theta_value) / r.lp_value) << ','
        << num(static_cast<double>(r.smith_value) / r.lp_value) << ','
        << (r.opt_value > 0 ? num(static_cast<double>(r.theta_value) / r.opt_value) : "") << '\n';
  }
  return out.str();
}

std::string lk_csv(const LkExperiment& e, const ExperimentConfig& config) {
  std::ostringstream out;
  out << config_header(config);
  out << "instance,k,trial,seed,lp_value,opt_power_sum,power_sum,ratio,norm_ratio,expected_ratio\n";
  for (const LkTrialRow& r : e.rows) {
    if (!r.done) continue;
    const double ratio = r.power_sum / r.lp_value;
    out << r.instance << ',' << num(r.k) << ',' << r.trial << ',' << r.seed << ',' << num(r.lp_value) << ','
        << (r.opt_power_sum >= 0 ? num(r.opt_power_sum) : "") << ',' << num(r.power_sum) << ',' << num(ratio) << ','
        << num(std::pow(ratio, 1.0 / r.k)) << ',' << num(r.expected_power_sum / r.lp_value) << '\n';
  }
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace umsched
