#include <doctest.h>

#include <cmath>
#include <map>

#include "umsched/errors.hpp"
#include "umsched/experiment.hpp"
#include "umsched/oracle.hpp"
#include "umsched/wct.hpp"

using namespace umsched;

namespace {

bool within(double estimate, double p, int n, double z = 4.0) {
  return std::abs(estimate - p) <= z * std::sqrt(p * (1.0 - p) / n) + 1e-12;
}

// Direct evaluation of the window membership predicate for one k.
bool in_window(double s, double tau, double rho, double beta, int k) {
  const double lo = rho * std::pow(1.0 + beta, k - 1);
  const double hi = rho * std::pow(1.0 + beta, k);
  return s <= lo && lo < s + tau && s + tau <= hi;
}

// First generated instance whose rectangle LP has two jobs with fractional,
// non-dominated mass on a common machine.
struct Fixture {
  Instance instance;
  FractionalSolution solution;
};

Fixture fractional_fixture() {
  FamilyParams params;
  params.family = Family::Restricted;
  params.machines = 2;
  params.jobs = 5;
  params.p_hi = 4;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    Instance inst = gen_instance(params, seed);
    FractionalSolution sol = solve_lp(inst, build_rectangle_lp(inst));
    for (int i = 0; i < inst.machines(); ++i) {
      int light = 0;
      for (int j = 0; j < inst.jobs(); ++j) {
        const double x = sol.aggregate(i, j);
        if (x > 0.05 && x <= 0.5) ++light;
      }
      if (light >= 2) return Fixture{std::move(inst), std::move(sol)};
    }
  }
  FAIL("no fractional instance found");
  return {};
}

}  // namespace

TEST_CASE("window membership examples") {
  CHECK(window_of(0, 0.5, 1.0, 12.1) == std::optional<int>(0));
  CHECK_FALSE(window_of(2, 0.5, 1.0, 12.1).has_value());
  CHECK_FALSE(window_of(3, 0.0, 1.0, 12.1).has_value());
  CHECK(window_of(10, 4.0, 1.0, 12.1) == std::optional<int>(2));
}

TEST_CASE("window_of agrees with the membership predicate") {
  Rng rng(21);
  for (int rep = 0; rep < 20000; ++rep) {
    const double beta = 12.1;
    const double rho = std::exp(rng.uniform01() * std::log(1.0 + beta));
    const std::int64_t s = static_cast<std::int64_t>(rng.below(60));
    const std::int64_t p = 1 + static_cast<std::int64_t>(rng.below(8));
    const double tau = rng.uniform(0.0, static_cast<double>(p));
    const auto k = window_of(s, tau, rho, beta);
    int matches = 0;
    int found = 0;
    for (int cand = -30; cand <= 5; ++cand) {
      if (in_window(static_cast<double>(s), tau, rho, beta, cand)) {
        ++matches;
        found = cand;
      }
    }
    CHECK(matches <= 1);
    if (matches == 1) {
      REQUIRE(k.has_value());
      CHECK(*k == found);
    } else {
      CHECK_FALSE(k.has_value());
    }
  }
}

TEST_CASE("shift sample ranges") {
  const Instance inst(2, {1, 1}, {ProcTime{3}, kInfinite, ProcTime{1}, ProcTime{5}});
  Rng rng(3);
  for (int rep = 0; rep < 2000; ++rep) {
    const ShiftSample s = sample_shift(inst, WindowConfig{}, rng);
    CHECK(s.rho >= 1.0);
    CHECK(s.rho < 13.1);
    CHECK(s.tau_of(0, 0) >= 0.0);
    CHECK(s.tau_of(0, 0) < 3.0);
    CHECK(s.tau_of(0, 1) == 0.0);
    CHECK(s.tau_of(1, 1) < 5.0);
  }
}

TEST_CASE("ln rho is uniform") {
  const Instance inst(1, {1}, {ProcTime{1}});
  Rng rng(4);
  const int n = 50000;
  int low = 0;
  for (int rep = 0; rep < n; ++rep) {
    if (std::log(sample_shift(inst, WindowConfig{}, rng).rho) < 0.25 * std::log(13.1)) ++low;
  }
  CHECK(within(static_cast<double>(low) / n, 0.25, n));
}

TEST_CASE("groups: single rectangle and leftover groups") {
  const Instance inst(1, {1}, {ProcTime{2}});
  const FractionalSolution sol = solve_lp(inst, build_rectangle_lp(inst));
  ShiftSample shift;
  shift.jobs = 1;
  shift.rho = 1.0;
  shift.tau = {0.5};
  GroupedRectangles g = build_groups(inst, sol, shift, WindowConfig{});
  REQUIRE(g.snc.groups() == 1);
  CHECK(g.window[0] == std::optional<int>(0));
  REQUIRE(g.snc.entries.size() == 1);
  CHECK(g.snc.entries[0].y == doctest::Approx(1.0));

  // Two jobs on one machine; a start beyond the grid point leaves a v_ij group.
  const Instance two(1, {1, 1}, {ProcTime{1}, ProcTime{1}});
  FractionalSolution manual;
  manual.horizon = 3;
  manual.machines = 1;
  manual.jobs = 2;
  manual.rects = {Rectangle{0, 0, 0, 1.0}, Rectangle{0, 1, 2, 1.0}};
  manual.x_ij = {1.0, 1.0};
  shift.jobs = 2;
  shift.rho = 1.0;
  shift.tau = {0.5, 0.5};
  g = build_groups(two, manual, shift, WindowConfig{});
  REQUIRE(g.snc.groups() == 2);
  CHECK(g.window[0] == std::optional<int>(0));
  CHECK_FALSE(g.window[1].has_value());
  for (const SncEntry& e : g.snc.entries) {
    if (e.group == 1) CHECK(e.job == 1);
  }
}

TEST_CASE("group masses never exceed one") {
  for (Family f : {Family::Uniform, Family::Restricted, Family::Correlated}) {
    FamilyParams params;
    params.family = f;
    params.machines = 3;
    params.jobs = 7;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const Instance inst = gen_instance(params, seed);
      const FractionalSolution sol = solve_lp(inst, build_rectangle_lp(inst));
      Rng rng(seed);
      for (int rep = 0; rep < 300; ++rep) {
        const ShiftSample shift = sample_shift(inst, WindowConfig{}, rng);
        GroupedRectangles g;
        REQUIRE_NOTHROW(g = build_groups(inst, sol, shift, WindowConfig{}));
        CHECK(g.max_group_mass <= 1.0 + 1e-7);
        CHECK_NOTHROW(g.snc.validate());
        CHECK(g.group_of_rect.size() == sol.rects.size());
        std::vector<int> seen(sol.rects.size(), 0);
        for (int u = 0; u < g.snc.groups(); ++u) {
          for (int j = 0; j < inst.jobs(); ++j) {
            for (int r : g.rects_in(u, j)) {
              ++seen[static_cast<std::size_t>(r)];
              CHECK(g.group_of_rect[static_cast<std::size_t>(r)] == u);
              CHECK(sol.rects[static_cast<std::size_t>(r)].machine == g.snc.group_machine[static_cast<std::size_t>(u)]);
            }
          }
        }
        for (int s : seen) CHECK(s == 1);
      }
    }
  }
}

TEST_CASE("anchors are drawn proportionally to height") {
  const Instance inst(1, {1}, {ProcTime{1}});
  FractionalSolution sol;
  sol.horizon = 3;
  sol.machines = 1;
  sol.jobs = 1;
  sol.rects = {Rectangle{0, 0, 0, 0.2}, Rectangle{0, 0, 2, 0.1}};
  GroupedRectangles g;
  g.snc.machines = 1;
  g.snc.jobs = 1;
  g.snc.group_machine = {0};
  g.rects_of_pair = {{0, 1}};
  const std::vector<int> sigma{0};
  Rng rng(7);
  const int n = 60000;
  int first = 0;
  for (int rep = 0; rep < n; ++rep) first += pick_anchors(sigma, g, sol, rng)[0].rect == 0;
  CHECK(within(static_cast<double>(first) / n, 2.0 / 3.0, n));

  g.rects_of_pair = {{1}};
  for (int rep = 0; rep < 100; ++rep) CHECK(pick_anchors(sigma, g, sol, rng)[0].start == 2);
  g.rects_of_pair = {{}};
  CHECK_THROWS_AS(pick_anchors(sigma, g, sol, rng), InvariantViolation);
}

TEST_CASE("theta values") {
  CHECK(compute_theta(2, 0.7, 5, 0.4, 0.3) == doctest::Approx(3.3));
  CHECK(compute_theta(0, 0.5, 4, 0.8, 0.3) == doctest::Approx(1.3));
  CHECK(compute_theta(0, 1e-12, 4, 0.5, 0.3) == doctest::Approx(0.0));
}

TEST_CASE("schedule follows theta with index ties") {
  const Instance inst(1, {1, 1, 1}, {ProcTime{1}, ProcTime{1}, ProcTime{1}});
  const std::vector<Anchor> anchors{{0, 0, 0, 0}, {0, 1, 0, 1}, {0, 2, 0, 2}};
  CHECK(build_schedule(inst, anchors, std::vector<double>{1.0, 2.0, 0.5}).order[0] == std::vector<int>{2, 0, 1});
  CHECK(build_schedule(inst, anchors, std::vector<double>{1.0, 1.0, 1.0}).order[0] == std::vector<int>{0, 1, 2});
  const Instance one(1, {1}, {ProcTime{2}});
  const std::vector<Anchor> single{{0, 0, 0, 0}};
  const Schedule s = build_schedule(one, single, std::vector<double>{0.3});
  CHECK(s.order[0] == std::vector<int>{0});
}

TEST_CASE("pipeline on a single job") {
  const Instance one(1, {1}, {ProcTime{2}});
  Rng rng(1);
  const WctResult r = wct_pipeline(one, rng);
  CHECK(r.run.theta_value == 2);
  CHECK(r.theta_ratio == doctest::Approx(1.0));
  CHECK(r.smith_ratio == doctest::Approx(1.0));
}

TEST_CASE("runs are feasible, above OPT, and Smith never hurts") {
  for (Family f : {Family::Uniform, Family::Restricted, Family::Correlated}) {
    FamilyParams params;
    params.family = f;
    params.machines = 3;
    params.jobs = 6;
    params.infinite_density = 0.2;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Instance inst = gen_instance(params, seed);
      const std::int64_t opt = brute_force_wct(inst).value;
      const WctRounder rounder(inst, solve_lp(inst, build_rectangle_lp(inst)));
      CHECK(rounder.lp_value() <= static_cast<double>(opt) + 1e-6);
      for (int t = 0; t < 100; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        const WctRun run = rounder.run(rng);
        CHECK_NOTHROW(validate_schedule(inst, run.theta_schedule));
        CHECK_NOTHROW(validate_schedule(inst, run.smith_schedule));
        CHECK(run.theta_value >= opt);
        CHECK(run.smith_value >= opt);
        CHECK(run.smith_value <= run.theta_value);
        CHECK(run.theta_schedule.machine_of == run.smith_schedule.machine_of);
      }
    }
  }
}

TEST_CASE("same seed gives the same run") {
  FamilyParams params;
  params.machines = 2;
  params.jobs = 5;
  const Instance inst = gen_instance(params, 3);
  const WctRounder rounder(inst, solve_lp(inst, build_rectangle_lp(inst)));
  Rng a(55);
  Rng b(55);
  const WctRun ra = rounder.run(a);
  const WctRun rb = rounder.run(b);
  CHECK(ra.theta_schedule == rb.theta_schedule);
  CHECK(ra.theta == rb.theta);
}

TEST_CASE("anchor probabilities and correlations") {
  const Fixture fx = fractional_fixture();
  const Instance& inst = fx.instance;
  const FractionalSolution& sol = fx.solution;
  const WctRounder rounder(inst, sol);
  const std::size_t rects = sol.rects.size();
  const int n = 40000;
  std::vector<int> hit(rects, 0);
  std::map<std::pair<int, int>, int> joint;
  std::map<std::pair<int, int>, int> same_group_runs;
  std::map<std::pair<int, int>, int> same_group_joint;
  const WindowConfig config;
  for (int t = 0; t < n; ++t) {
    Rng rng(derive_seed(42, static_cast<std::uint64_t>(t)));
    // Replays the run's draws to recover the grouping that produced it.
    Rng replay = rng;
    const ShiftSample shift = sample_shift(inst, config, replay);
    const GroupedRectangles groups = build_groups(inst, sol, shift, config);
    const WctRun run = rounder.run(rng);
    std::vector<int> chosen;
    for (const Anchor& a : run.anchors) {
      ++hit[static_cast<std::size_t>(a.rect)];
      chosen.push_back(a.rect);
    }
    for (std::size_t a = 0; a < rects; ++a) {
      for (std::size_t b = a + 1; b < rects; ++b) {
        const Rectangle& ra = sol.rects[a];
        const Rectangle& rb = sol.rects[b];
        if (ra.machine != rb.machine || ra.job == rb.job) continue;
        const bool both = chosen[static_cast<std::size_t>(ra.job)] == static_cast<int>(a) &&
                          chosen[static_cast<std::size_t>(rb.job)] == static_cast<int>(b);
        const auto key = std::make_pair(static_cast<int>(a), static_cast<int>(b));
        if (both) ++joint[key];
        const int ga = groups.group_of_rect[a];
        if (ga == groups.group_of_rect[b] && groups.window[static_cast<std::size_t>(ga)].has_value()) {
          ++same_group_runs[key];
          if (both) ++same_group_joint[key];
        }
      }
    }
  }
  for (std::size_t r = 0; r < rects; ++r) {
    CHECK(within(static_cast<double>(hit[r]) / n, sol.rects[r].value, n));
  }
  int conditioned = 0;
  for (std::size_t a = 0; a < rects; ++a) {
    for (std::size_t b = a + 1; b < rects; ++b) {
      const Rectangle& ra = sol.rects[a];
      const Rectangle& rb = sol.rects[b];
      if (ra.machine != rb.machine || ra.job == rb.job) continue;
      const auto key = std::make_pair(static_cast<int>(a), static_cast<int>(b));
      const double prod = ra.value * rb.value;
      const double est = static_cast<double>(joint[key]) / n;
      CHECK(est <= prod + 4.0 * std::sqrt(prod * (1 - prod) / n) + 1e-12);
      const bool light = !dominates(sol.aggregate(ra.machine, ra.job)) && !dominates(sol.aggregate(rb.machine, rb.job));
      const int runs = same_group_runs[key];
      if (light && runs >= 2000) {
        ++conditioned;
        const double bound = (1.0 - 0.1561) * prod;
        const double cond = static_cast<double>(same_group_joint[key]) / runs;
        CHECK(cond <= bound + 4.0 * std::sqrt(bound * (1 - bound) / runs) + 1e-12);
      }
    }
  }
  CHECK(conditioned > 0);
}
