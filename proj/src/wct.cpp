#include "umsched/wct.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "umsched/errors.hpp"

namespace umsched {

ShiftSample sample_shift(const Instance& instance, const WindowConfig& config, Rng& rng) {
  ShiftSample shift;
  shift.jobs = instance.jobs();
  const double top = 1.0 + config.beta;
  shift.rho = std::exp(rng.uniform01() * std::log(top));
  if (shift.rho >= top) shift.rho = std::nextafter(top, 1.0);
  shift.tau.assign(static_cast<std::size_t>(instance.machines()) * static_cast<std::size_t>(instance.jobs()), 0.0);
  for (int i = 0; i < instance.machines(); ++i) {
    for (int j = 0; j < instance.jobs(); ++j) {
      if (!instance.finite(i, j)) continue;
      shift.tau[static_cast<std::size_t>(i) * static_cast<std::size_t>(instance.jobs()) + static_cast<std::size_t>(j)] =
          rng.uniform(0.0, static_cast<double>(*instance.p(i, j)));
    }
  }
  return shift;
}

std::optional<int> window_of(std::int64_t start, double tau, double rho, double beta) {
  if (!(tau > 0.0)) return std::nullopt;
  const double s = static_cast<double>(start);
  const double end = s + tau;
  const double base = 1.0 + beta;
  auto grid = [&](int k) { return rho * std::pow(base, k); };
  // Smallest k with grid(k) >= end; the log estimate is corrected exactly.
  int k = static_cast<int>(std::ceil(std::log(end / rho) / std::log(base)));
  while (grid(k) < end) ++k;
  while (grid(k - 1) >= end) --k;
  if (grid(k - 1) >= s) return k;
  return std::nullopt;
}

GroupedRectangles build_groups(const Instance& instance, const FractionalSolution& solution,
                               const ShiftSample& shift, const WindowConfig& config) {
  const int m = instance.machines();
  const int n = instance.jobs();
  std::vector<std::optional<int>> rect_window(solution.rects.size());
  std::vector<std::map<int, int>> window_groups(static_cast<std::size_t>(m));
  std::vector<std::vector<char>> has_leftover(static_cast<std::size_t>(m), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (std::size_t r = 0; r < solution.rects.size(); ++r) {
    const Rectangle& rect = solution.rects[r];
    rect_window[r] = window_of(rect.start, shift.tau_of(rect.machine, rect.job), shift.rho, config.beta);
    if (rect_window[r]) {
      window_groups[static_cast<std::size_t>(rect.machine)][*rect_window[r]] = 0;
    } else {
      has_leftover[static_cast<std::size_t>(rect.machine)][static_cast<std::size_t>(rect.job)] = 1;
    }
  }

  GroupedRectangles out;
  out.snc.machines = m;
  out.snc.jobs = n;
  out.snc.group_tol = 1e-7;
  std::vector<std::vector<int>> leftover_id(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(n), -1));
  for (int i = 0; i < m; ++i) {
    for (auto& [k, id] : window_groups[static_cast<std::size_t>(i)]) {
      id = out.snc.groups();
      out.snc.group_machine.push_back(i);
      out.window.push_back(k);
    }
    for (int j = 0; j < n; ++j) {
      if (!has_leftover[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
      leftover_id[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = out.snc.groups();
      out.snc.group_machine.push_back(i);
      out.window.push_back(std::nullopt);
    }
  }

  const auto groups = static_cast<std::size_t>(out.snc.groups());
  out.rects_of_pair.assign(groups * static_cast<std::size_t>(n), {});
  std::vector<double> y(groups * static_cast<std::size_t>(n), 0.0);
  out.group_of_rect.resize(solution.rects.size());
  for (std::size_t r = 0; r < solution.rects.size(); ++r) {
    const Rectangle& rect = solution.rects[r];
    const int g = rect_window[r] ? window_groups[static_cast<std::size_t>(rect.machine)].at(*rect_window[r])
                                 : leftover_id[static_cast<std::size_t>(rect.machine)][static_cast<std::size_t>(rect.job)];
    out.group_of_rect[r] = g;
    const std::size_t cell = static_cast<std::size_t>(g) * static_cast<std::size_t>(n) + static_cast<std::size_t>(rect.job);
    y[cell] += rect.value;
    out.rects_of_pair[cell].push_back(static_cast<int>(r));
  }
  for (std::size_t g = 0; g < groups; ++g) {
    double mass = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = y[g * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
      if (v <= 0.0) continue;
      mass += v;
      out.snc.entries.push_back(SncEntry{static_cast<int>(g), j, v});
    }
    out.max_group_mass = std::max(out.max_group_mass, mass);
    if (mass > 1.0 + 1e-7) {
      throw InvariantViolation("group " + std::to_string(g) + " has total mass " + std::to_string(mass) + " > 1");
    }
  }
  return out;
}

std::vector<Anchor> pick_anchors(std::span<const int> sigma, const GroupedRectangles& groups,
                                 const FractionalSolution& solution, Rng& rng) {
  std::vector<Anchor> anchors;
  anchors.reserve(sigma.size());
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    const auto& rects = groups.rects_in(sigma[j], static_cast<int>(j));
    if (rects.empty()) throw InvariantViolation("job assigned to a group holding none of its rectangles");
    double total = 0.0;
    for (int r : rects) total += solution.rects[static_cast<std::size_t>(r)].value;
    const double target = rng.uniform01() * total;
    int chosen = rects.back();
    double c = 0.0;
    for (int r : rects) {
      c += solution.rects[static_cast<std::size_t>(r)].value;
      if (target < c) {
        chosen = r;
        break;
      }
    }
    const Rectangle& rect = solution.rects[static_cast<std::size_t>(chosen)];
    anchors.push_back(Anchor{rect.machine, rect.job, rect.start, chosen});
  }
  return anchors;
}

double compute_theta(std::int64_t start, double tau, std::int64_t p, double x_ij, double alpha) {
  double theta = (1.0 + alpha) * static_cast<double>(start) + tau;
  if (dominates(x_ij)) theta += 0.2 * static_cast<double>(p);
  return theta;
}

Schedule build_schedule(const Instance& instance, std::span<const Anchor> anchors, std::span<const double> theta) {
  Schedule s;
  s.machine_of.resize(anchors.size());
  s.order.assign(static_cast<std::size_t>(instance.machines()), {});
  for (std::size_t j = 0; j < anchors.size(); ++j) {
    s.machine_of[j] = anchors[j].machine;
    s.order[static_cast<std::size_t>(anchors[j].machine)].push_back(static_cast<int>(j));
  }
  for (auto& order : s.order) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double ta = theta[static_cast<std::size_t>(a)];
      const double tb = theta[static_cast<std::size_t>(b)];
      return ta != tb ? ta < tb : a < b;
    });
  }
  validate_schedule(instance, s);
  return s;
}

WctRounder::WctRounder(const Instance& instance, FractionalSolution solution, WindowConfig config)
    : instance_(&instance), solution_(std::move(solution)), config_(config) {}

WctRun WctRounder::run(Rng& rng) const {
  const Instance& instance = *instance_;
  const ShiftSample shift = sample_shift(instance, config_, rng);
  const GroupedRectangles groups = build_groups(instance, solution_, shift, config_);
  const SncRounder rounder(groups.snc);
  const std::vector<int> sigma = rounder.round(rng);

  WctRun run;
  run.rho = shift.rho;
  run.max_group_mass = groups.max_group_mass;
  run.group_count = groups.snc.groups();
  run.anchors = pick_anchors(sigma, groups, solution_, rng);
  run.theta.resize(run.anchors.size());
  for (std::size_t j = 0; j < run.anchors.size(); ++j) {
    const Anchor& a = run.anchors[j];
    run.theta[j] = compute_theta(a.start, shift.tau_of(a.machine, a.job), *instance.p(a.machine, a.job),
                                 solution_.aggregate(a.machine, a.job), config_.alpha);
  }
  run.theta_schedule = build_schedule(instance, run.anchors, run.theta);
  run.smith_schedule = smith_schedule(instance, Assignment{run.theta_schedule.machine_of});
  run.theta_value = eval_wct(instance, run.theta_schedule);
  run.smith_value = eval_wct(instance, run.smith_schedule);
  return run;
}

WctResult wct_pipeline(const Instance& instance, Rng& rng, const WindowConfig& config, std::int64_t horizon_cap) {
  const IndexedLp lp = build_rectangle_lp(instance, horizon_cap);
  WctRounder rounder(instance, solve_lp(instance, lp), config);
  WctResult result;
  result.lp_value = rounder.lp_value();
  result.run = rounder.run(rng);
  result.theta_ratio = static_cast<double>(result.run.theta_value) / result.lp_value;
  result.smith_ratio = static_cast<double>(result.run.smith_value) / result.lp_value;
  return result;
}

}  // namespace umsched
