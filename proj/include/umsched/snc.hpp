#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "umsched/rng.hpp"

namespace umsched {

struct SncEntry {
  int group = 0;
  int job = 0;
  double y = 0.0;
};

/// Groups U with machine map g and a fractional matching y over U x J.
struct SncInput {
  int machines = 0;
  int jobs = 0;
  std::vector<int> group_machine;  // g(u)
  std::vector<SncEntry> entries;   // sparse y; zero entries may be omitted
  double group_tol = 1e-9;         // allowed excess of y(u, J) over 1

  int groups() const { return static_cast<int>(group_machine.size()); }
  /// Checks y(u, J) <= 1 + group_tol and |y(U, j) - 1| <= 1e-9; throws std::invalid_argument.
  void validate() const;
};

/// One group's share of a job's row, in circle order.
struct GroupMass {
  int group = 0;
  int machine = 0;
  double y = 0.0;
};

/// Machine mass strictly above 1/2, after snapping values within 1e-12 of 1/2.
bool dominates(double machine_mass);

/// Row of job j sorted by (machine, group), zero entries removed.
std::vector<std::vector<GroupMass>> job_rows(const SncInput& input);

/// Candidate pair for point t in [0, 1): v1 covers t * sum, v2 covers the
/// antipodal point, with groups laid contiguously along the circle.
std::pair<int, int> choose_candidates_at(std::span<const GroupMass> row, double t);
std::pair<int, int> choose_candidates(std::span<const GroupMass> row, Rng& rng);

/// (1 - e^{-2y}) / (2y), evaluated stably; 1 at y = 0.
double mark_probability(double y);

/// Edge e = 2j + c joins job j to its candidate v^{c+1}_j.
struct CandidateGraph {
  std::vector<int> v1;
  std::vector<int> v2;
  std::vector<char> dominated;  // per edge: g(group) dominates the job
  std::vector<char> marked;     // per edge

  int jobs() const { return static_cast<int>(v1.size()); }
  int group_of_edge(int e) const { return (e & 1) ? v2[static_cast<std::size_t>(e >> 1)] : v1[static_cast<std::size_t>(e >> 1)]; }
};

/// Marks every non-dominated edge independently with mark_probability(y).
void mark_edges(CandidateGraph& graph, const SncInput& input, Rng& rng);

struct Pairing {
  std::vector<std::pair<int, int>> pairs;
  std::optional<int> leftover;
};

/// Uniform near-perfect pairing: shuffle, then pair consecutive entries.
Pairing pair_edges(std::vector<int> edges, Rng& rng);

struct GroupCopy {
  int group = 0;
  int edges[2] = {-1, -1};
  int degree = 0;
};

/// A path (copies.size() == jobs.size() + 1) or cycle (equal sizes) of the
/// split graph; job t sits between copies[t] and copies[t + 1] (mod size).
struct Component {
  bool cycle = false;
  std::vector<int> copies;
  std::vector<int> jobs;
  int length() const { return 2 * static_cast<int>(jobs.size()); }
};

struct SplitGraph {
  std::vector<GroupCopy> copies;
  std::vector<int> copy_of_edge;
  std::vector<Component> components;
};

/// Splits each group into one copy per pair and one per unpaired edge, then
/// lists components (paths first, then cycles). Throws InvariantViolation
/// on a 2-cycle or when a component with >= 4 edges has a job whose two
/// neighbouring groups share a machine.
SplitGraph build_split_graph(const CandidateGraph& graph, std::span<const Pairing> pairings,
                             std::span<const int> group_machine);

/// Sub-path copies[0] - jobs[0] - copies[1] - ... ; for a whole-cycle segment
/// the copy list closes with copies.front() == copies.back().
struct Segment {
  std::vector<int> copies;
  std::vector<int> jobs;
  bool cycle = false;

  std::vector<int> centers() const;
};

/// Number of equally likely segmentation outcomes of a component.
int segmentation_outcomes(const Component& component);

/// Segments of outcome `outcome` in [0, segmentation_outcomes). `copy_machine`
/// maps a copy id to its machine.
std::vector<Segment> segment_component(const Component& component, std::span<const int> copy_machine,
                                       int outcome);

std::vector<Segment> segment_path(const Component& path, Rng& rng);
std::vector<Segment> segment_cycle(const Component& cycle, std::span<const int> copy_machine, Rng& rng);

/// One fair coin per segment (all jobs take the preceding or all take the
/// following copy), then one coin per uncovered job between v1 and v2.
std::vector<int> round_segments(std::span<const Segment> segments, const SplitGraph& split,
                                const CandidateGraph& graph, Rng& rng);

/// Checks segment shapes, distinct center machines and edge-disjointness.
void validate_segments(std::span<const Segment> segments, std::span<const int> copy_machine);

struct SncTrace {
  CandidateGraph candidates;
  std::vector<Pairing> pairings;  // per group
  SplitGraph split;
  std::vector<int> outcomes;      // per component
  std::vector<Segment> segments;
  std::vector<int> assignment;
};

nlohmann::json trace_to_json(const SncTrace& trace);

/// Reusable rounding procedure for one input.
class SncRounder {
 public:
  explicit SncRounder(SncInput input);

  const SncInput& input() const { return input_; }
  const std::vector<std::vector<GroupMass>>& rows() const { return rows_; }
  /// True when g(u)'s total mass on job j exceeds 1/2.
  bool dominated(int group, int job) const;
  double y(int group, int job) const;

  /// sigma: job -> group. Fills `trace` when given.
  std::vector<int> round(Rng& rng, SncTrace* trace = nullptr) const;

 private:
  SncInput input_;
  std::vector<std::vector<GroupMass>> rows_;
  std::vector<double> machine_mass_;  // job-major, jobs x machines
  std::vector<double> dense_y_;       // job-major, jobs x groups
};

std::vector<int> snc_round(const SncInput& input, Rng& rng, SncTrace* trace = nullptr);

}  // namespace umsched
