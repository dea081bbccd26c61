#include "umsched/snc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "umsched/errors.hpp"

namespace umsched {

void SncInput::validate() const {
  if (machines < 1) throw std::invalid_argument("SNC input needs at least one machine");
  for (int g : group_machine) {
    if (g < 0 || g >= machines) throw std::invalid_argument("group mapped to unknown machine");
  }
  std::vector<double> group_sum(group_machine.size(), 0.0);
  std::vector<double> job_sum(static_cast<std::size_t>(jobs), 0.0);
  std::vector<char> seen(group_machine.size() * static_cast<std::size_t>(jobs), 0);
  for (const SncEntry& e : entries) {
    if (e.group < 0 || e.group >= groups() || e.job < 0 || e.job >= jobs) {
      throw std::invalid_argument("SNC entry out of range");
    }
    if (!std::isfinite(e.y) || e.y < 0.0) throw std::invalid_argument("SNC entry must be a finite non-negative value");
    char& flag = seen[static_cast<std::size_t>(e.job) * group_machine.size() + static_cast<std::size_t>(e.group)];
    if (flag) throw std::invalid_argument("duplicate SNC entry");
    flag = 1;
    group_sum[static_cast<std::size_t>(e.group)] += e.y;
    job_sum[static_cast<std::size_t>(e.job)] += e.y;
  }
  for (std::size_t u = 0; u < group_sum.size(); ++u) {
    if (group_sum[u] > 1.0 + group_tol) throw std::invalid_argument("group " + std::to_string(u) + " has y(u, J) > 1");
  }
  for (std::size_t j = 0; j < job_sum.size(); ++j) {
    if (std::abs(job_sum[j] - 1.0) > 1e-9) throw std::invalid_argument("job " + std::to_string(j) + " has y(U, j) != 1");
  }
}

bool dominates(double machine_mass) {
  if (std::abs(machine_mass - 0.5) <= 1e-12) machine_mass = 0.5;
  return machine_mass > 0.5;
}

std::vector<std::vector<GroupMass>> job_rows(const SncInput& input) {
  std::vector<std::vector<GroupMass>> rows(static_cast<std::size_t>(input.jobs));
  for (const SncEntry& e : input.entries) {
    if (e.y <= 0.0) continue;
    rows[static_cast<std::size_t>(e.job)].push_back(
        GroupMass{e.group, input.group_machine[static_cast<std::size_t>(e.group)], e.y});
  }
  for (auto& row : rows) {
    std::sort(row.begin(), row.end(), [](const GroupMass& a, const GroupMass& b) {
      return a.machine != b.machine ? a.machine < b.machine : a.group < b.group;
    });
  }
  return rows;
}

std::pair<int, int> choose_candidates_at(std::span<const GroupMass> row, double t) {
  if (row.empty()) throw InvariantViolation("job has an empty y-row");
  double sum = 0.0;
  for (const GroupMass& g : row) sum += g.y;
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("y-row must sum to 1");
  auto locate = [&](double x) {
    double c = 0.0;
    for (const GroupMass& g : row) {
      if (x < c + g.y) return g.group;
      c += g.y;
    }
    return row.back().group;
  };
  const double a = t * sum;
  double b = a + 0.5 * sum;
  if (b >= sum) b -= sum;
  return {locate(a), locate(b)};
}

std::pair<int, int> choose_candidates(std::span<const GroupMass> row, Rng& rng) {
  return choose_candidates_at(row, rng.uniform01());
}

double mark_probability(double y) {
  if (y <= 0.0) return 1.0;
  return -std::expm1(-2.0 * y) / (2.0 * y);
}

void mark_edges(CandidateGraph& graph, const SncInput& input, Rng& rng) {
  std::vector<double> dense(static_cast<std::size_t>(input.jobs) * static_cast<std::size_t>(input.groups()), 0.0);
  for (const SncEntry& e : input.entries) {
    dense[static_cast<std::size_t>(e.job) * static_cast<std::size_t>(input.groups()) + static_cast<std::size_t>(e.group)] = e.y;
  }
  const int edges = 2 * graph.jobs();
  graph.marked.assign(static_cast<std::size_t>(edges), 0);
  for (int e = 0; e < edges; ++e) {
    if (graph.dominated[static_cast<std::size_t>(e)]) continue;
    const double y = dense[static_cast<std::size_t>(e >> 1) * static_cast<std::size_t>(input.groups()) +
                           static_cast<std::size_t>(graph.group_of_edge(e))];
    graph.marked[static_cast<std::size_t>(e)] = rng.bernoulli(mark_probability(y));
  }
}

Pairing pair_edges(std::vector<int> edges, Rng& rng) {
  for (std::size_t i = edges.size(); i > 1; --i) {
    std::swap(edges[i - 1], edges[rng.below(i)]);
  }
  Pairing out;
  std::size_t i = 0;
  for (; i + 1 < edges.size(); i += 2) out.pairs.emplace_back(edges[i], edges[i + 1]);
  if (i < edges.size()) out.leftover = edges[i];
  return out;
}

SplitGraph build_split_graph(const CandidateGraph& graph, std::span<const Pairing> pairings,
                             std::span<const int> group_machine) {
  const int edges = 2 * graph.jobs();
  const auto groups = group_machine.size();
  if (pairings.size() != groups) throw InvariantViolation("need one pairing per group");
  std::vector<std::vector<int>> incident(groups);
  for (int e = 0; e < edges; ++e) incident[static_cast<std::size_t>(graph.group_of_edge(e))].push_back(e);

  SplitGraph split;
  split.copy_of_edge.assign(static_cast<std::size_t>(edges), -1);
  auto claim = [&](int e, int u, int copy) {
    if (e < 0 || e >= edges || graph.group_of_edge(e) != u || !graph.marked[static_cast<std::size_t>(e)]) {
      throw InvariantViolation("pairing uses an edge that is not a marked edge of its group");
    }
    if (split.copy_of_edge[static_cast<std::size_t>(e)] != -1) throw InvariantViolation("edge paired twice");
    split.copy_of_edge[static_cast<std::size_t>(e)] = copy;
  };
  for (std::size_t u = 0; u < groups; ++u) {
    const int group = static_cast<int>(u);
    for (const auto& [a, b] : pairings[u].pairs) {
      const int id = static_cast<int>(split.copies.size());
      claim(a, group, id);
      claim(b, group, id);
      split.copies.push_back(GroupCopy{group, {a, b}, 2});
    }
    if (pairings[u].leftover) {
      const int e = *pairings[u].leftover;
      claim(e, group, -2);
      split.copy_of_edge[static_cast<std::size_t>(e)] = -1;
    }
    for (int e : incident[u]) {
      if (split.copy_of_edge[static_cast<std::size_t>(e)] != -1) continue;
      if (graph.marked[static_cast<std::size_t>(e)] && (!pairings[u].leftover || *pairings[u].leftover != e)) {
        throw InvariantViolation("marked edge missing from its group's pairing");
      }
      split.copy_of_edge[static_cast<std::size_t>(e)] = static_cast<int>(split.copies.size());
      split.copies.push_back(GroupCopy{group, {e, -1}, 1});
    }
  }

  auto machine_of_copy = [&](int c) {
    return group_machine[static_cast<std::size_t>(split.copies[static_cast<std::size_t>(c)].group)];
  };
  auto other_edge = [&](int c, int in_edge) {
    const GroupCopy& copy = split.copies[static_cast<std::size_t>(c)];
    return copy.edges[0] != in_edge ? copy.edges[0] : copy.edges[1];
  };

  std::vector<char> visited(split.copies.size(), 0);
  auto walk = [&](int start, bool cycle) {
    Component comp;
    comp.cycle = cycle;
    comp.copies.push_back(start);
    visited[static_cast<std::size_t>(start)] = 1;
    int cur = start;
    int in_edge = -1;
    for (;;) {
      const int out = other_edge(cur, in_edge);
      const int back = out ^ 1;
      const int next = split.copy_of_edge[static_cast<std::size_t>(back)];
      comp.jobs.push_back(out >> 1);
      if (cycle && next == start) break;
      if (visited[static_cast<std::size_t>(next)]) throw InvariantViolation("split graph walk revisited a copy");
      visited[static_cast<std::size_t>(next)] = 1;
      comp.copies.push_back(next);
      if (!cycle && split.copies[static_cast<std::size_t>(next)].degree == 1) break;
      cur = next;
      in_edge = back;
    }
    if (cycle && comp.jobs.size() < 2) throw InvariantViolation("split graph contains a cycle of length 2");
    if (comp.length() >= 4) {
      const std::size_t len = comp.jobs.size();
      for (std::size_t t = 0; t < len; ++t) {
        const int left = comp.copies[t];
        const int right = comp.copies[(t + 1) % comp.copies.size()];
        if (machine_of_copy(left) == machine_of_copy(right)) {
          throw InvariantViolation("job adjacent to two groups of one machine in a long component");
        }
      }
    }
    split.components.push_back(std::move(comp));
  };
  for (std::size_t c = 0; c < split.copies.size(); ++c) {
    if (!visited[c] && split.copies[c].degree == 1) walk(static_cast<int>(c), false);
  }
  for (std::size_t c = 0; c < split.copies.size(); ++c) {
    if (!visited[c]) walk(static_cast<int>(c), true);
  }
  return split;
}

std::vector<int> Segment::centers() const {
  if (cycle) return {copies.begin(), copies.end() - 1};
  if (copies.size() < 3) return {};
  return {copies.begin() + 1, copies.end() - 1};
}

int segmentation_outcomes(const Component& component) {
  const int len = static_cast<int>(component.jobs.size());
  if (!component.cycle) return len >= 2 ? 2 : 1;
  if (len <= 3) return 1;
  if (len % 2 == 0) return 2;
  if (len >= 9) return len;
  return 2;
}

namespace {

// Sub-path of `jobs` jobs starting at copy position `start`, positions taken
// modulo the component size for cycles.
Segment make_segment(const Component& comp, int start, int jobs) {
  Segment seg;
  const int ncopies = static_cast<int>(comp.copies.size());
  const int njobs = static_cast<int>(comp.jobs.size());
  for (int k = 0; k <= jobs; ++k) seg.copies.push_back(comp.copies[static_cast<std::size_t>((start + k) % ncopies)]);
  for (int k = 0; k < jobs; ++k) seg.jobs.push_back(comp.jobs[static_cast<std::size_t>((start + k) % njobs)]);
  return seg;
}

bool valid_long_segment(int g0, int g1, int g2, int g3) { return g0 != g2 && g3 != g1; }

}  // namespace

std::vector<Segment> segment_component(const Component& comp, std::span<const int> copy_machine, int outcome) {
  const int count = segmentation_outcomes(comp);
  if (outcome < 0 || outcome >= count) throw std::invalid_argument("segmentation outcome out of range");
  const int len = static_cast<int>(comp.jobs.size());
  std::vector<Segment> out;
  if (!comp.cycle) {
    for (int t = outcome; t + 2 <= len; t += 2) out.push_back(make_segment(comp, t, 2));
    return out;
  }
  if (len <= 3) {
    Segment seg = make_segment(comp, 0, len);
    seg.cycle = true;
    out.push_back(std::move(seg));
    return out;
  }
  if (len % 2 == 0) {
    for (int k = 0; k < len / 2; ++k) out.push_back(make_segment(comp, outcome + 2 * k, 2));
    return out;
  }
  if (len >= 9) {
    // Job `outcome` is deleted; the remaining path starts at the copy after it.
    for (int k = 0; k < (len - 1) / 2; ++k) out.push_back(make_segment(comp, outcome + 1 + 2 * k, 2));
    return out;
  }
  auto machine = [&](int pos) {
    return copy_machine[static_cast<std::size_t>(comp.copies[static_cast<std::size_t>(pos % len)])];
  };
  int a = -1;
  for (int r = 0; r < len; ++r) {
    if (valid_long_segment(machine(r), machine(r + 1), machine(r + 2), machine(r + 3))) {
      a = r;
      break;
    }
  }
  if (a < 0) throw InvariantViolation("no valid length-6 segment in a cycle of length " + std::to_string(2 * len));
  if (outcome == 0) {
    out.push_back(make_segment(comp, a, 3));
    for (int k = 0; k < (len - 3) / 2; ++k) out.push_back(make_segment(comp, a + 3 + 2 * k, 2));
  } else {
    // Job between the two centers of the long segment is deleted.
    for (int k = 0; k < (len - 1) / 2; ++k) out.push_back(make_segment(comp, a + 2 + 2 * k, 2));
  }
  return out;
}

std::vector<Segment> segment_path(const Component& path, Rng& rng) {
  const int count = segmentation_outcomes(path);
  const int outcome = count > 1 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(count))) : 0;
  return segment_component(path, {}, outcome);
}

std::vector<Segment> segment_cycle(const Component& cycle, std::span<const int> copy_machine, Rng& rng) {
  const int count = segmentation_outcomes(cycle);
  const int outcome = count > 1 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(count))) : 0;
  return segment_component(cycle, copy_machine, outcome);
}

std::vector<int> round_segments(std::span<const Segment> segments, const SplitGraph& split,
                                const CandidateGraph& graph, Rng& rng) {
  std::vector<int> sigma(static_cast<std::size_t>(graph.jobs()), -1);
  for (const Segment& seg : segments) {
    const bool following = rng.coin();
    for (std::size_t t = 0; t < seg.jobs.size(); ++t) {
      const int copy = following ? seg.copies[t + 1] : seg.copies[t];
      sigma[static_cast<std::size_t>(seg.jobs[t])] = split.copies[static_cast<std::size_t>(copy)].group;
    }
  }
  for (int j = 0; j < graph.jobs(); ++j) {
    if (sigma[static_cast<std::size_t>(j)] != -1) continue;
    sigma[static_cast<std::size_t>(j)] = rng.coin() ? graph.v2[static_cast<std::size_t>(j)] : graph.v1[static_cast<std::size_t>(j)];
  }
  return sigma;
}

void validate_segments(std::span<const Segment> segments, std::span<const int> copy_machine) {
  std::vector<int> used_jobs;
  for (const Segment& seg : segments) {
    if (seg.copies.size() != seg.jobs.size() + 1) throw InvariantViolation("segment copy/job count mismatch");
    if (seg.cycle) {
      if (seg.copies.front() != seg.copies.back()) throw InvariantViolation("cycle segment must close");
      if (seg.jobs.size() != 2 && seg.jobs.size() != 3) throw InvariantViolation("cycle segment length must be 4 or 6");
    } else if (seg.jobs.size() != 2 && seg.jobs.size() != 3) {
      throw InvariantViolation("path segment length must be 4 or 6");
    }
    auto m = [&](std::size_t k) { return copy_machine[static_cast<std::size_t>(seg.copies[k])]; };
    if (!seg.cycle && seg.jobs.size() == 3 && !valid_long_segment(m(0), m(1), m(2), m(3))) {
      throw InvariantViolation("length-6 segment violates its endpoint condition");
    }
    const auto centers = seg.centers();
    for (std::size_t a = 0; a < centers.size(); ++a) {
      for (std::size_t b = a + 1; b < centers.size(); ++b) {
        if (copy_machine[static_cast<std::size_t>(centers[a])] == copy_machine[static_cast<std::size_t>(centers[b])]) {
          throw InvariantViolation("segment centers share a machine");
        }
      }
    }
    used_jobs.insert(used_jobs.end(), seg.jobs.begin(), seg.jobs.end());
  }
  std::sort(used_jobs.begin(), used_jobs.end());
  if (std::adjacent_find(used_jobs.begin(), used_jobs.end()) != used_jobs.end()) {
    throw InvariantViolation("segments share a job");
  }
}

nlohmann::json trace_to_json(const SncTrace& trace) {
  using nlohmann::json;
  json doc;
  const CandidateGraph& cand = trace.candidates;
  json jobs = json::array();
  for (int j = 0; j < cand.jobs(); ++j) {
    const auto e = static_cast<std::size_t>(2 * j);
    jobs.push_back(json{{"v1", cand.v1[static_cast<std::size_t>(j)]},
                        {"v2", cand.v2[static_cast<std::size_t>(j)]},
                        {"marked", {cand.marked[e] != 0, cand.marked[e + 1] != 0}},
                        {"dominated", {cand.dominated[e] != 0, cand.dominated[e + 1] != 0}}});
  }
  doc["candidates"] = std::move(jobs);
  json pairings = json::array();
  for (const Pairing& p : trace.pairings) {
    json entry{{"pairs", p.pairs}};
    entry["leftover"] = p.leftover ? json(*p.leftover) : json(nullptr);
    pairings.push_back(std::move(entry));
  }
  doc["pairings"] = std::move(pairings);
  json copies = json::array();
  for (const GroupCopy& c : trace.split.copies) {
    json edges = json::array();
    for (int k = 0; k < c.degree; ++k) edges.push_back(c.edges[k]);
    copies.push_back(json{{"group", c.group}, {"edges", std::move(edges)}});
  }
  doc["copies"] = std::move(copies);
  json comps = json::array();
  for (std::size_t k = 0; k < trace.split.components.size(); ++k) {
    const Component& c = trace.split.components[k];
    comps.push_back(json{{"cycle", c.cycle}, {"copies", c.copies}, {"jobs", c.jobs},
                         {"outcome", k < trace.outcomes.size() ? trace.outcomes[k] : 0}});
  }
  doc["components"] = std::move(comps);
  json segs = json::array();
  for (const Segment& s : trace.segments) {
    segs.push_back(json{{"copies", s.copies}, {"jobs", s.jobs}, {"cycle", s.cycle}});
  }
  doc["segments"] = std::move(segs);
  doc["assignment"] = trace.assignment;
  return doc;
}

SncRounder::SncRounder(SncInput input) : input_(std::move(input)) {
  input_.validate();
  rows_ = job_rows(input_);
  const auto n = static_cast<std::size_t>(input_.jobs);
  const auto m = static_cast<std::size_t>(input_.machines);
  const auto groups = static_cast<std::size_t>(input_.groups());
  machine_mass_.assign(n * m, 0.0);
  dense_y_.assign(n * groups, 0.0);
  for (const SncEntry& e : input_.entries) {
    const auto j = static_cast<std::size_t>(e.job);
    dense_y_[j * groups + static_cast<std::size_t>(e.group)] = e.y;
    machine_mass_[j * m + static_cast<std::size_t>(input_.group_machine[static_cast<std::size_t>(e.group)])] += e.y;
  }
}

bool SncRounder::dominated(int group, int job) const {
  const auto m = static_cast<std::size_t>(input_.machines);
  const int machine = input_.group_machine[static_cast<std::size_t>(group)];
  return dominates(machine_mass_[static_cast<std::size_t>(job) * m + static_cast<std::size_t>(machine)]);
}

double SncRounder::y(int group, int job) const {
  return dense_y_[static_cast<std::size_t>(job) * static_cast<std::size_t>(input_.groups()) + static_cast<std::size_t>(group)];
}

std::vector<int> SncRounder::round(Rng& rng, SncTrace* trace) const {
  const int n = input_.jobs;
  const auto groups = static_cast<std::size_t>(input_.groups());
  CandidateGraph cand;
  cand.v1.resize(static_cast<std::size_t>(n));
  cand.v2.resize(static_cast<std::size_t>(n));
  cand.dominated.resize(static_cast<std::size_t>(2 * n));
  cand.marked.assign(static_cast<std::size_t>(2 * n), 0);
  for (int j = 0; j < n; ++j) {
    const auto [a, b] = choose_candidates(rows_[static_cast<std::size_t>(j)], rng);
    cand.v1[static_cast<std::size_t>(j)] = a;
    cand.v2[static_cast<std::size_t>(j)] = b;
    cand.dominated[static_cast<std::size_t>(2 * j)] = dominated(a, j);
    cand.dominated[static_cast<std::size_t>(2 * j + 1)] = dominated(b, j);
  }
  for (int e = 0; e < 2 * n; ++e) {
    if (cand.dominated[static_cast<std::size_t>(e)]) continue;
    cand.marked[static_cast<std::size_t>(e)] = rng.bernoulli(mark_probability(y(cand.group_of_edge(e), e >> 1)));
  }

  std::vector<std::vector<int>> marked_at(groups);
  for (int e = 0; e < 2 * n; ++e) {
    if (cand.marked[static_cast<std::size_t>(e)]) marked_at[static_cast<std::size_t>(cand.group_of_edge(e))].push_back(e);
  }
  std::vector<Pairing> pairings(groups);
  for (std::size_t u = 0; u < groups; ++u) pairings[u] = pair_edges(std::move(marked_at[u]), rng);

  SplitGraph split = build_split_graph(cand, pairings, input_.group_machine);
  std::vector<int> copy_machine(split.copies.size());
  for (std::size_t c = 0; c < split.copies.size(); ++c) {
    copy_machine[c] = input_.group_machine[static_cast<std::size_t>(split.copies[c].group)];
  }
  std::vector<Segment> segments;
  std::vector<int> outcomes;
  for (const Component& comp : split.components) {
    const int count = segmentation_outcomes(comp);
    const int outcome = count > 1 ? static_cast<int>(rng.below(static_cast<std::uint64_t>(count))) : 0;
    outcomes.push_back(outcome);
    auto segs = segment_component(comp, copy_machine, outcome);
    segments.insert(segments.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
  }
  std::vector<int> sigma = round_segments(segments, split, cand, rng);

  if (trace) {
    validate_segments(segments, copy_machine);
    trace->candidates = std::move(cand);
    trace->pairings = std::move(pairings);
    trace->split = std::move(split);
    trace->outcomes = std::move(outcomes);
    trace->segments = std::move(segments);
    trace->assignment = sigma;
  }
  return sigma;
}

std::vector<int> snc_round(const SncInput& input, Rng& rng, SncTrace* trace) {
  return SncRounder(input).round(rng, trace);
}

}  // namespace umsched
