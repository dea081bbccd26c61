// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "umsched/analysis.hpp"
#include "umsched/errors.hpp"
#include "umsched/experiment.hpp"
#include "umsched/lk.hpp"
#include "umsched/oracle.hpp"
#include "umsched/rng.hpp"
#include "umsched/snc.hpp"
#include "umsched/time_indexed_lp.hpp"
#include "umsched/wct.hpp"

using namespace umsched;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr int kInstances = 60;
constexpr int kTrials = 200;

int failures = 0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0, double e = 0) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, a, b, c, d, e);
  return buf;
}

bool fractional(const FractionalSolution& sol) {
  return std::any_of(sol.x_ij.begin(), sol.x_ij.end(), [](double x) { return x > 1e-6 && x < 1.0 - 1e-6; });
}

// Small instances mixing all three families: m <= 3, n <= 7, p <= 5, w <= 5.
// Most such instances have integral LPs, so only those where the wct LP or
// the k = 2 LP is fractional are kept; integral ones make the rounding moot.
std::vector<Instance> corpus() {
  std::vector<Instance> out;
  const Family families[] = {Family::Uniform, Family::Restricted, Family::Correlated};
  for (std::uint64_t t = 0; static_cast<int>(out.size()) < kInstances; ++t) {
    FamilyParams p;
    p.family = families[t % 3];
    p.machines = 2 + static_cast<int>((t / 3) % 2);
    p.jobs = 5 + static_cast<int>((t / 6) % 3);
    p.p_lo = 1;
    p.p_hi = 5;
    p.w_lo = 1;
    p.w_hi = 5;
    p.infinite_density = p.family == Family::Restricted ? 0.35 : 0.1;
    Instance inst = gen_instance(p, derive_seed(kSeed, t));
    if (fractional(solve_lp(inst, build_rectangle_lp(inst))) || fractional(solve_lp(inst, build_lk_lp(inst, 2.0)))) {
      out.push_back(std::move(inst));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void ac1() {
  const auto start = Clock::now();
  constexpr int kInputs = 100;
  constexpr int kSncTrials = 100000;
  PropertySummary a;
  PropertySummary b;
  PropertySummary c;
  for (int t = 0; t < kInputs; ++t) {
    Rng rng(derive_seed(kSeed ^ 0x51u, static_cast<std::uint64_t>(t)));
    const SncRounder rounder(random_snc_input(rng, 4, 8, 6));
    const SncCounts counts = collect_snc_counts(rounder, kSncTrials, derive_seed(kSeed, 1000 + t));
    const SncStatsReport r = evaluate_snc_counts(rounder, counts, 0.1561, 4.0);
    for (auto [dst, src] : {std::pair{&a, &r.marginals}, std::pair{&b, &r.same_machine}, std::pair{&c, &r.same_group}}) {
      dst->checked += src->checked;
      dst->violations += src->violations;
      dst->worst_z = std::max(dst->worst_z, src->worst_z);
    }
  }
  const double secs = seconds_since(start);
  const bool pass = a.violations == 0 && b.violations == 0 && c.violations == 0 && a.checked > 0 && b.checked > 0 &&
                    c.checked > 0 && secs <= 300.0;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "snc properties over %d inputs x %d trials: (a) %d/%d viol, worst z %.2f; (b) %d/%d viol, worst z %.2f; "
                "(c) %d/%d viol, worst z %.2f; %.1fs (limit 300s)",
                kInputs, kSncTrials, a.violations, a.checked, a.worst_z, b.violations, b.checked, b.worst_z,
                c.violations, c.checked, c.worst_z, secs);
  report("AC1", pass, buf);
}

// ---------------------------------------------------------------------------

bool all_equal(const std::vector<Rational>& v, Rational want) {
  return std::all_of(v.begin(), v.end(), [&](const Rational& r) { return r == want; });
}

std::vector<int> pattern(int len, int machines) {
  std::vector<int> v(static_cast<std::size_t>(len));
  for (int k = 0; k < len; ++k) v[static_cast<std::size_t>(k)] = k % machines;
  return v;
}

void ac2() {
  int bad = 0;
  int shapes = 0;
  // Path-internal groups: center probability 1/2, endpoints 0.
  for (int jobs = 2; jobs <= 16; ++jobs) {
    const auto p = enumerate_segmentation(ComponentShape{false, pattern(jobs + 1, 2)});
    ++shapes;
    for (int k = 1; k < jobs; ++k) bad += p[static_cast<std::size_t>(k)] != Rational(1, 2);
  }
  // Cycles of length 4 and 6 form a single segment.
  for (int jobs : {2, 3}) {
    ++shapes;
    bad += !all_equal(enumerate_segmentation(ComponentShape{true, pattern(jobs, jobs)}), Rational(1));
  }
  // Longer cycles of length 0 mod 4.
  for (int len = 8; len <= 40; len += 4) {
    ++shapes;
    bad += !all_equal(enumerate_segmentation(ComponentShape{true, pattern(len / 2, 2)}), Rational(1, 2));
  }
  // Length 10 and 14 cycles: every adjacent-distinct labelling with <= 4 machines.
  for (int jobs : {5, 7}) {
    std::vector<int> labels(static_cast<std::size_t>(jobs), 0);
    for (;;) {
      bool ok = true;
      for (int k = 0; k < jobs; ++k) ok = ok && labels[static_cast<std::size_t>(k)] != labels[static_cast<std::size_t>((k + 1) % jobs)];
      // Canonical first label keeps the count down.
      if (ok && labels[0] == 0) {
        ++shapes;
        bad += !all_equal(enumerate_segmentation(ComponentShape{true, labels}), Rational(1, 2));
      }
      int d = 0;
      while (d < jobs && ++labels[static_cast<std::size_t>(d)] == 4) labels[static_cast<std::size_t>(d++)] = 0;
      if (d == jobs) break;
    }
  }
  // Length >= 18 cycles with length 2 mod 4: z / (2z + 1) >= 4/9.
  Rational lowest(1);
  for (int jobs = 9; jobs <= 19; jobs += 2) {
    const int z = (jobs - 1) / 2;
    for (int machines : {3, 4}) {
      if (jobs % machines == 1) continue;  // wrap-around would repeat a machine
      const auto p = enumerate_segmentation(ComponentShape{true, pattern(jobs, machines)});
      ++shapes;
      bad += !all_equal(p, Rational(z, 2 * z + 1));
      for (const Rational& r : p) lowest = std::min(lowest, r);
    }
  }
  bad += lowest < Rational(4, 9);

  // Pairing law: two fixed edges plus Q others at one group.
  constexpr int kN = 100000;
  double worst_z = 0.0;
  int pairing_bad = 0;
  for (int q = 0; q <= 6; ++q) {
    const double want = q % 2 == 0 ? 1.0 / (q + 1) : 1.0 / (q + 2);
    std::vector<int> edges(static_cast<std::size_t>(q + 2));
    for (int e = 0; e < q + 2; ++e) edges[static_cast<std::size_t>(e)] = e;
    Rng rng(derive_seed(kSeed ^ 0x9au, static_cast<std::uint64_t>(q)));
    int hits = 0;
    for (int t = 0; t < kN; ++t) {
      const Pairing p = pair_edges(edges, rng);
      for (auto [x, y] : p.pairs) hits += (std::min(x, y) == 0 && std::max(x, y) == 1);
    }
    const double est = static_cast<double>(hits) / kN;
    const double se = std::sqrt(want * (1.0 - want) / kN);
    if (se == 0.0) {
      pairing_bad += est != want;
    } else {
      worst_z = std::max(worst_z, std::abs(est - want) / se);
      pairing_bad += std::abs(est - want) > 4.0 * se;
    }
  }
  report("AC2", bad == 0 && pairing_bad == 0,
         fmt("segmentation: %g shapes, %g mismatches, min center prob %.6f; pairing Q=0..6 at N=1e5: %g off, worst z %.2f",
             shapes, bad, boost::rational_cast<double>(lowest), pairing_bad, worst_z));
}

// ---------------------------------------------------------------------------

struct Structural {
  double max_group_mass = 0.0;
  int group_violations = 0;
  int group_samples = 0;
  double max_bucket_error = 0.0;
  int bucket_violations = 0;
  int matchings_checked = 0;
};

struct Sandwich {
  int instances = 0;
  int violations = 0;
  int witness_mismatch = 0;
};

void ac3(const std::vector<Instance>& instances, Structural& st, Sandwich& sw) {
  const auto start = Clock::now();
  const WindowConfig window{};
  double ratio_sum = 0.0;
  long long runs = 0;
  int order_violations = 0;
  int smith_violations = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    const WctRounder rounder(inst, solve_lp(inst, build_rectangle_lp(inst)), window);
    const double lp = rounder.lp_value();
    const WctOracleResult opt = brute_force_wct(inst);
    ++sw.instances;
    if (lp > static_cast<double>(opt.value) + 1e-6) ++sw.violations;
    try {
      validate_schedule(inst, opt.witness);
      if (eval_wct(inst, opt.witness) != opt.value) ++sw.witness_mismatch;
    } catch (const Error&) {
      ++sw.witness_mismatch;
    }
    for (int t = 0; t < kTrials; ++t) {
      Rng rng(derive_seed(derive_seed(kSeed, i), static_cast<std::uint64_t>(t)));
      ++st.group_samples;
      WctRun run;
      try {
        run = rounder.run(rng);
      } catch (const InvariantViolation&) {
        ++st.group_violations;
        continue;
      }
      st.max_group_mass = std::max(st.max_group_mass, run.max_group_mass);
      if (run.max_group_mass > 1.0 + 1e-7) ++st.group_violations;
      validate_schedule(inst, run.theta_schedule);
      validate_schedule(inst, run.smith_schedule);
      ratio_sum += static_cast<double>(run.theta_value) / lp;
      ++runs;
      if (run.theta_value < opt.value || run.smith_value < opt.value) ++order_violations;
      if (run.smith_value > run.theta_value) ++smith_violations;
    }
  }
  const double mean = ratio_sum / static_cast<double>(runs);
  const double secs = seconds_since(start);
  const bool pass = static_cast<int>(instances.size()) >= 50 && mean <= 1.45 + 0.03 && order_violations == 0 &&
                    smith_violations == 0 && sw.violations == 0 && secs <= 600.0;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "wct over %zu instances x %d trials: mean ALG/LP %.4f (limit 1.48); OPT > ALG in %d runs; "
                "Smith > theta in %d runs; %.1fs (limit 600s)",
                instances.size(), kTrials, mean, order_violations, smith_violations, secs);
  report("AC3", pass, buf);
}

// ---------------------------------------------------------------------------

void ac4(const std::vector<Instance>& instances, Structural& st, Sandwich& sw) {
  const auto start = Clock::now();
  bool pass = true;
  std::string detail;
  for (double k : {2.0, 3.0, 4.0}) {
    const double alpha = k == 2.0 ? 4.0 / 3.0 : alpha_k(k).alpha;
    double ratio_sum = 0.0;
    double norm_sum = 0.0;
    long long runs = 0;
    int below_opt = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const Instance& inst = instances[i];
      const LkRounder rounder(inst, solve_lp(inst, build_lk_lp(inst, k)), k);
      const double lp = rounder.lp_value();
      const LkOracleResult opt = brute_force_lk(inst, k);
      ++sw.instances;
      if (lp > opt.power_sum * (1.0 + 1e-7) + 1e-7) ++sw.violations;
      try {
        validate_assignment(inst, opt.witness);
        if (eval_lk(inst, opt.witness, k).power_sum != opt.power_sum) ++sw.witness_mismatch;
      } catch (const Error&) {
        ++sw.witness_mismatch;
      }

      const BucketCheck check = check_bucket_matching(inst, rounder.matching());
      st.max_bucket_error = std::max(st.max_bucket_error, check.max_bucket_error);
      st.matchings_checked += static_cast<int>(rounder.combination().matchings.size());
      if (check.max_bucket_error > 1e-9 || check.max_job_error > 1e-9 || !check.consecutive || !check.sorted ||
          !check_balanced(inst, rounder.combination(), rounder.matching())) {
        ++st.bucket_violations;
      }

      for (int t = 0; t < kTrials; ++t) {
        Rng rng(derive_seed(derive_seed(kSeed ^ static_cast<std::uint64_t>(k), i), static_cast<std::uint64_t>(t)));
        const Assignment a = rounder.sample(rng);
        validate_assignment(inst, a);
        const double ps = eval_lk(inst, a, k).power_sum;
        if (ps < opt.power_sum * (1.0 - 1e-12)) ++below_opt;
        ratio_sum += ps / lp;
        norm_sum += std::pow(ps / opt.power_sum, 1.0 / k);
        ++runs;
      }
    }
    const double mean = ratio_sum / static_cast<double>(runs);
    const double mean_norm = norm_sum / static_cast<double>(runs);
    bool ok = mean <= alpha + 0.03 && below_opt == 0;
    char buf[256];
    if (k == 2.0) {
      ok = ok && mean_norm <= std::sqrt(4.0 / 3.0) + 0.02;
      std::snprintf(buf, sizeof buf, "k=2 mean load^2/LP %.4f (limit %.4f), mean L2/OPT %.4f (limit %.4f)", mean,
                    alpha + 0.03, mean_norm, std::sqrt(4.0 / 3.0) + 0.02);
    } else {
      std::snprintf(buf, sizeof buf, "k=%g mean load^k/LP %.4f (limit %.4f)", k, mean, alpha + 0.03);
    }
    if (below_opt > 0) std::snprintf(buf + std::strlen(buf), sizeof buf - std::strlen(buf), " [%d runs below OPT]", below_opt);
    detail += (detail.empty() ? "" : "; ") + std::string(buf);
    pass = pass && ok;
  }
  const double secs = seconds_since(start);
  pass = pass && secs <= 600.0;
  report("AC4", pass, detail + fmt("; %.1fs (limit 600s)", secs));
}

// ---------------------------------------------------------------------------

void ac5(const Structural& st) {
  const bool pass = st.group_violations == 0 && st.bucket_violations == 0 && st.group_samples > 0;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "group mass max %.9f over %d shift samples (%d > 1+1e-7); bucket matchings: max total error %.2e, "
                "%d instances failing, %d decomposition matchings checked",
                st.max_group_mass, st.group_samples, st.group_violations, st.max_bucket_error, st.bucket_violations,
                st.matchings_checked);
  report("AC5", pass, buf);
}

void ac6() {
  const auto start = Clock::now();
  const auto checks = verify_analysis();
  int bad = 0;
  for (const CheckResult& c : checks) {
    if (!c.pass) {
      ++bad;
      std::printf("  failed: %s (%s)\n", c.name.c_str(), c.detail.c_str());
    }
  }
  const double secs = seconds_since(start);
  report("AC6", bad == 0 && !checks.empty() && secs <= 120.0,
         fmt("analysis checks: %g of %g pass; %.1fs (limit 120s)", static_cast<double>(checks.size()) - bad,
             static_cast<double>(checks.size()), secs));
}

void ac7(const Sandwich& sw) {
  report("AC7", sw.violations == 0 && sw.witness_mismatch == 0 && sw.instances > 0,
         fmt("LP <= OPT on %g instance/objective pairs: %g violations; witness mismatches: %g", sw.instances,
             sw.violations, sw.witness_mismatch));
}

}  // namespace

int main() {
  const auto start = Clock::now();
  Structural structural;
  Sandwich sandwich;
  const std::vector<Instance> instances = corpus();
  for (const Instance& inst : instances) {
    if (assignment_count(inst) > 1'000'000) {
      std::printf("corpus instance %s exceeds the oracle cap\n", inst.id().c_str());
      return 1;
    }
  }
  ac1();
  ac2();
  ac3(instances, structural, sandwich);
  ac4(instances, structural, sandwich);
  ac5(structural);
  ac6();
  ac7(sandwich);
  std::printf("%s: %d failing criteria, %.1fs total\n", failures == 0 ? "ALL PASS" : "FAILURES", failures,
              seconds_since(start));
  return failures == 0 ? 0 : 1;
}
