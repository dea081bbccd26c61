#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "umsched/analysis.hpp"
#include "umsched/errors.hpp"
#include "umsched/experiment.hpp"
#include "umsched/instance_io.hpp"
#include "umsched/lk.hpp"
#include "umsched/lp_model.hpp"
#include "umsched/oracle.hpp"
#include "umsched/snc.hpp"
#include "umsched/time_indexed_lp.hpp"
#include "umsched/wct.hpp"

using namespace umsched;

namespace {

struct Options {
  ExperimentConfig config;
  std::string family = "uniform";
  std::vector<std::string> instance_files;
  std::string dump_lp;
  std::string csv_dir;
  int inputs = 20;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.config.seed, "master seed")->required();
  cmd->add_option("--out", o.config.out, "output path");
}

void add_family(CLI::App* cmd, Options& o) {
  FamilyParams& f = o.config.family;
  cmd->add_option("--family", o.family, "uniform | restricted | correlated");
  cmd->add_option("--m", f.machines, "machine count");
  cmd->add_option("--n", f.jobs, "job count");
  cmd->add_option("--p-lo", f.p_lo, "smallest processing time");
  cmd->add_option("--p-hi", f.p_hi, "largest processing time");
  cmd->add_option("--w-lo", f.w_lo, "smallest weight");
  cmd->add_option("--w-hi", f.w_hi, "largest weight");
  cmd->add_option("--inf-density", f.infinite_density, "chance that a pair is infinite");
}

void add_experiment(CLI::App* cmd, Options& o) {
  add_common(cmd, o);
  add_family(cmd, o);
  cmd->add_option("--trials", o.config.trials, "rounding trials per instance");
  cmd->add_option("--instances", o.config.instances, "generated instance count");
  cmd->add_option("--instance", o.instance_files, "instance JSON files (replaces generation)");
  cmd->add_option("--horizon-cap", o.config.horizon_cap, "largest allowed LP horizon");
  cmd->add_option("--oracle-cap", o.config.oracle_cap, "largest assignment count for brute force");
  cmd->add_option("--threads", o.config.threads, "worker threads (0 = all cores)");
  cmd->add_option("--dump-lp", o.dump_lp, "write the first instance's LP in LP format");
}

std::vector<Instance> load_instances(Options& o) {
  o.config.family.family = parse_family(o.family);
  if (o.instance_files.empty()) return generate_instances(o.config);
  std::vector<Instance> out;
  for (const std::string& path : o.instance_files) {
    out.push_back(read_instance(path));
    if (out.back().id().empty()) out.back().set_id(path);
  }
  o.config.instances = static_cast<int>(out.size());
  return out;
}

void print_aggregate(const char* label, const Aggregate& a) {
  std::printf("  %-12s mean %.6f  max %.6f  stderr %.6f\n", label, a.mean, a.max, a.stderr_);
}

int solve_wct(Options& o) {
  o.config.command = "solve-wct";
  validate_config(o.config);
  const std::vector<Instance> instances = load_instances(o);
  if (!o.dump_lp.empty()) write_text(o.dump_lp, write_lp_format(build_rectangle_lp(instances.front(), o.config.horizon_cap).model));
  WctExperiment e;
  try {
    run_wct_experiment(instances, o.config, e);
  } catch (...) {
    if (!o.config.out.empty()) write_text(o.config.out, wct_csv(e, o.config));
    throw;
  }
  if (!o.config.out.empty()) write_text(o.config.out, wct_csv(e, o.config));
  std::vector<double> means;
  for (const WctInstanceSummary& s : e.summaries) {
    std::printf("%s  LP %.6f", s.instance.c_str(), s.lp_value);
    if (s.opt_value >= 0) std::printf("  OPT %.0f", s.opt_value);
    std::printf("  best ALG %lld\n", static_cast<long long>(s.min_theta_value));
    print_aggregate("theta/LP", s.theta_ratio);
    print_aggregate("smith/LP", s.smith_ratio);
    means.push_back(s.theta_ratio.mean);
  }
  const Aggregate all = aggregate(means);
  std::printf("overall theta/LP mean %.6f  max %.6f  stderr %.6f over %zu instances\n", all.mean, all.max, all.stderr_,
              all.count);
  return 0;
}

int solve_lk(Options& o) {
  o.config.command = "solve-lk";
  validate_config(o.config);
  const std::vector<Instance> instances = load_instances(o);
  if (!o.dump_lp.empty()) write_text(o.dump_lp, write_lp_format(build_lk_lp(instances.front(), o.config.k, o.config.horizon_cap).model));
  LkExperiment e;
  try {
    run_lk_experiment(instances, o.config, e);
  } catch (...) {
    if (!o.config.out.empty()) write_text(o.config.out, lk_csv(e, o.config));
    throw;
  }
  if (!o.config.out.empty()) write_text(o.config.out, lk_csv(e, o.config));
  std::vector<double> means;
  for (const LkInstanceSummary& s : e.summaries) {
    std::printf("%s  LP %.6f", s.instance.c_str(), s.lp_value);
    if (s.opt_power_sum >= 0) std::printf("  OPT %.6f", s.opt_power_sum);
    std::printf("  E[ratio] %.6f  matchings %zu\n", s.expected_ratio, s.matchings);
    print_aggregate("sum^k/LP", s.ratio);
    if (s.opt_ratio.count > 0) print_aggregate("norm/OPT", s.opt_ratio);
    means.push_back(s.ratio.mean);
  }
  const Aggregate all = aggregate(means);
  std::printf("overall sum^k/LP mean %.6f  max %.6f  stderr %.6f over %zu instances\n", all.mean, all.max, all.stderr_,
              all.count);
  return 0;
}

int snc_stats(Options& o) {
  o.config.command = "snc-stats";
  validate_config(o.config);
  std::string csv = config_header(o.config);
  csv += "input,property,checked,violations,worst_z\n";
  int violations = 0;
  for (int t = 0; t < o.inputs; ++t) {
    Rng rng(derive_seed(o.config.seed, static_cast<std::uint64_t>(t)));
    const SncRounder rounder(random_snc_input(rng));
    const SncCounts counts =
        collect_snc_counts(rounder, o.config.trials, derive_seed(o.config.seed ^ 0x5bd1e995ULL, t), o.config.threads);
    const SncStatsReport r = evaluate_snc_counts(rounder, counts, o.config.eta);
    const std::pair<const char*, const PropertySummary*> props[] = {
        {"a", &r.marginals}, {"b", &r.same_machine}, {"c", &r.same_group}};
    for (const auto& [name, s] : props) {
      std::printf("input %d  property (%s): %d checked, %d violations, worst z %.3f\n", t, name, s->checked,
                  s->violations, s->checked > 0 ? s->worst_z : 0.0);
      char line[160];
      std::snprintf(line, sizeof line, "%d,%s,%d,%d,%.6g\n", t, name, s->checked, s->violations,
                    s->checked > 0 ? s->worst_z : 0.0);
      csv += line;
      violations += s->violations;
    }
  }
  if (!o.config.out.empty()) write_text(o.config.out, csv);
  std::printf("total violations: %d\n", violations);
  return violations == 0 ? 0 : 1;
}

int verify(Options& o) {
  AnalysisConfig c;
  c.alpha = o.config.alpha;
  c.beta = o.config.beta;
  c.eta = o.config.eta;
  bool ok = true;
  for (const CheckResult& r : verify_analysis(c)) {
    std::printf("%s  %s  (%s)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    ok = ok && r.pass;
  }
  if (!o.csv_dir.empty()) {
    for (const auto& [name, text] : analysis_samples(c)) write_text(o.csv_dir + "/" + name, text);
  }
  return ok ? 0 : 1;
}

int gen(Options& o) {
  o.config.family.family = parse_family(o.family);
  const Instance inst = gen_instance(o.config.family, o.config.seed);
  const std::string text = instance_to_json(inst).dump(2) + "\n";
  if (o.config.out.empty()) {
    std::cout << text;
  } else {
    write_text(o.config.out, text);
  }
  return 0;
}

int bench(Options& o) {
  using Clock = std::chrono::steady_clock;
  o.config.command = "bench";
  validate_config(o.config);
  const std::vector<Instance> instances = load_instances(o);
  double lp_ms = 0.0;
  double wct_ms = 0.0;
  double lk_ms = 0.0;
  double oracle_ms = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    auto t0 = Clock::now();
    FractionalSolution wsol = solve_lp(inst, build_rectangle_lp(inst, o.config.horizon_cap));
    FractionalSolution lsol = solve_lp(inst, build_lk_lp(inst, o.config.k, o.config.horizon_cap));
    auto t1 = Clock::now();
    const WctRounder wr(inst, std::move(wsol), WindowConfig{o.config.alpha, o.config.beta});
    const LkRounder lr(inst, std::move(lsol), o.config.k);
    auto t2 = Clock::now();
    for (int t = 0; t < o.config.trials; ++t) {
      Rng rng(derive_seed(derive_seed(o.config.seed, i), static_cast<std::uint64_t>(t)));
      (void)wr.run(rng);
    }
    auto t3 = Clock::now();
    for (int t = 0; t < o.config.trials; ++t) {
      Rng rng(derive_seed(derive_seed(o.config.seed, i), static_cast<std::uint64_t>(t)));
      (void)lr.sample(rng);
    }
    auto t4 = Clock::now();
    if (assignment_count(inst) <= o.config.oracle_cap) (void)brute_force_wct(inst, o.config.oracle_cap);
    auto t5 = Clock::now();
    auto ms = [](auto a, auto b) { return std::chrono::duration<double, std::milli>(b - a).count(); };
    lp_ms += ms(t0, t1);
    wct_ms += ms(t2, t3);
    lk_ms += ms(t1, t2) + ms(t3, t4);
    oracle_ms += ms(t4, t5);
  }
  const double n = static_cast<double>(instances.size());
  std::printf("instances %zu, trials %d\n", instances.size(), o.config.trials);
  std::printf("  LP solves (both)     %10.3f ms/instance\n", lp_ms / n);
  std::printf("  wct rounding         %10.3f ms/instance\n", wct_ms / n);
  std::printf("  lk setup + sampling  %10.3f ms/instance\n", lk_ms / n);
  std::printf("  wct oracle           %10.3f ms/instance\n", oracle_ms / n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rounding algorithms for scheduling on unrelated machines"};
  app.require_subcommand(1);
  Options o;

  CLI::App* wct = app.add_subcommand("solve-wct", "weighted completion time: LP, rounding, oracle");
  add_experiment(wct, o);
  wct->add_option("--alpha", o.config.alpha, "window shift parameter");
  wct->add_option("--beta", o.config.beta, "window growth parameter");

  CLI::App* lk = app.add_subcommand("solve-lk", "L_k norm of machine loads: LP, rounding, oracle");
  add_experiment(lk, o);
  lk->add_option("--k", o.config.k, "norm exponent (>= 1)");

  CLI::App* snc = app.add_subcommand("snc-stats", "Monte-Carlo check of the rounding properties");
  add_common(snc, o);
  snc->add_option("--trials", o.config.trials, "trials per input");
  snc->add_option("--inputs", o.inputs, "random input count");
  snc->add_option("--eta", o.config.eta, "same-group correlation constant");
  snc->add_option("--threads", o.config.threads, "worker threads (0 = all cores)");

  CLI::App* ver = app.add_subcommand("verify-analysis", "numeric checks of the analysis constants");
  ver->add_option("--alpha", o.config.alpha, "window shift parameter");
  ver->add_option("--beta", o.config.beta, "window growth parameter");
  ver->add_option("--eta", o.config.eta, "same-group correlation constant");
  ver->add_option("--csv-dir", o.csv_dir, "write function samples as CSV here");

  CLI::App* gi = app.add_subcommand("gen-instance", "write a generated instance as JSON");
  add_common(gi, o);
  add_family(gi, o);

  CLI::App* be = app.add_subcommand("bench", "time the pipeline stages");
  add_experiment(be, o);
  be->add_option("--k", o.config.k, "norm exponent (>= 1)");
  be->add_option("--alpha", o.config.alpha, "window shift parameter");
  be->add_option("--beta", o.config.beta, "window growth parameter");

  CLI11_PARSE(app, argc, argv);
  try {
    if (wct->parsed()) return solve_wct(o);
    if (lk->parsed()) return solve_lk(o);
    if (snc->parsed()) return snc_stats(o);
    if (ver->parsed()) return verify(o);
    if (gi->parsed()) return gen(o);
    if (be->parsed()) return bench(o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
