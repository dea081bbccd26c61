#include "umsched/lk.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "umsched/errors.hpp"

namespace umsched {

namespace {

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) <= 1e-9 ? r : v;
}

int ceil_int(double v) { return static_cast<int>(std::ceil(snap(v))); }

}  // namespace

MachineBuckets bucketize(std::span<const JobShare> shares) {
  std::vector<JobShare> sorted;
  for (const JobShare& s : shares) {
    if (s.x > 0.0) sorted.push_back(s);
  }
  std::sort(sorted.begin(), sorted.end(), [](const JobShare& a, const JobShare& b) {
    return a.p != b.p ? a.p > b.p : a.job < b.job;
  });
  MachineBuckets out;
  double cumulative = 0.0;
  auto add = [&](int job, int bucket, double value) {
    if (value <= 0.0) return;
    out.pieces.push_back(BucketPiece{job, bucket, value});
    if (static_cast<int>(out.totals.size()) < bucket) out.totals.resize(static_cast<std::size_t>(bucket), 0.0);
    out.totals[static_cast<std::size_t>(bucket - 1)] += value;
  };
  for (const JobShare& s : sorted) {
    const double lo = snap(cumulative);
    cumulative += s.x;
    const double hi = snap(cumulative);
    const int lo_bucket = ceil_int(lo);
    const int hi_bucket = ceil_int(hi);
    const bool both_integral = lo == std::round(lo) && hi == std::round(hi);
    if (both_integral) {
      add(s.job, hi_bucket, s.x);
    } else if (lo_bucket == hi_bucket) {
      add(s.job, hi_bucket, s.x);
    } else {
      add(s.job, lo_bucket, static_cast<double>(lo_bucket) - lo);
      add(s.job, hi_bucket, hi - std::floor(hi));
    }
  }
  out.buckets = static_cast<int>(out.totals.size());
  return out;
}

BucketMatching build_bucket_matching(const Instance& instance, const FractionalSolution& solution) {
  BucketMatching out;
  out.real_jobs = instance.jobs();
  std::vector<double> deficits;
  for (int i = 0; i < instance.machines(); ++i) {
    std::vector<JobShare> shares;
    for (int j = 0; j < instance.jobs(); ++j) {
      const double x = solution.aggregate(i, j);
      if (x > 0.0) shares.push_back(JobShare{j, *instance.p(i, j), x});
    }
    const MachineBuckets mb = bucketize(shares);
    const int first = out.buckets();
    for (int q = 1; q <= mb.buckets; ++q) {
      out.bucket_machine.push_back(i);
      out.bucket_rank.push_back(q);
      deficits.push_back(std::max(0.0, 1.0 - mb.totals[static_cast<std::size_t>(q - 1)]));
    }
    for (const BucketPiece& piece : mb.pieces) {
      out.pieces.push_back(BucketPiece{piece.job, first + piece.bucket - 1, piece.value});
    }
  }
  // Water-fill dummy rows of unit mass over the deficits in bucket order.
  double total_deficit = 0.0;
  for (double d : deficits) total_deficit += d;
  out.dummy_jobs = static_cast<int>(std::llround(total_deficit));
  if (std::abs(total_deficit - out.dummy_jobs) > 1e-6) {
    throw InvariantViolation("bucket deficits do not sum to an integer");
  }
  int row = out.real_jobs;
  double room = 1.0;
  for (int b = 0; b < out.buckets(); ++b) {
    double need = deficits[static_cast<std::size_t>(b)];
    while (need > 1e-12 && row < out.rows()) {
      const double take = std::min(need, room);
      out.pieces.push_back(BucketPiece{row, b, take});
      need -= take;
      room -= take;
      if (room <= 1e-12) {
        ++row;
        room = 1.0;
      }
    }
  }
  return out;
}

BucketCheck check_bucket_matching(const Instance& instance, const BucketMatching& matching) {
  BucketCheck check;
  std::vector<double> bucket_total(static_cast<std::size_t>(matching.buckets()), 0.0);
  std::vector<double> job_total(static_cast<std::size_t>(matching.real_jobs), 0.0);
  // per (job, machine): ranks used
  std::vector<std::vector<int>> ranks(static_cast<std::size_t>(matching.real_jobs) * static_cast<std::size_t>(instance.machines()));
  for (const BucketPiece& piece : matching.pieces) {
    bucket_total[static_cast<std::size_t>(piece.bucket)] += piece.value;
    if (piece.job >= matching.real_jobs) continue;
    job_total[static_cast<std::size_t>(piece.job)] += piece.value;
    const int machine = matching.bucket_machine[static_cast<std::size_t>(piece.bucket)];
    ranks[static_cast<std::size_t>(piece.job) * static_cast<std::size_t>(instance.machines()) + static_cast<std::size_t>(machine)]
        .push_back(matching.bucket_rank[static_cast<std::size_t>(piece.bucket)]);
  }
  for (double t : bucket_total) check.max_bucket_error = std::max(check.max_bucket_error, std::abs(t - 1.0));
  for (double t : job_total) check.max_job_error = std::max(check.max_job_error, std::abs(t - 1.0));
  for (auto& r : ranks) {
    std::sort(r.begin(), r.end());
    if (r.size() > 2 || (r.size() == 2 && r[1] != r[0] + 1)) check.consecutive = false;
  }
  // Sizes in bucket q must dominate sizes in bucket q + 1 on the same machine.
  const int b = matching.buckets();
  std::vector<std::int64_t> min_size(static_cast<std::size_t>(b), INT64_MAX);
  std::vector<std::int64_t> max_size(static_cast<std::size_t>(b), 0);
  for (const BucketPiece& piece : matching.pieces) {
    if (piece.job >= matching.real_jobs) continue;
    const int machine = matching.bucket_machine[static_cast<std::size_t>(piece.bucket)];
    const std::int64_t p = *instance.p(machine, piece.job);
    min_size[static_cast<std::size_t>(piece.bucket)] = std::min(min_size[static_cast<std::size_t>(piece.bucket)], p);
    max_size[static_cast<std::size_t>(piece.bucket)] = std::max(max_size[static_cast<std::size_t>(piece.bucket)], p);
  }
  for (int q = 0; q + 1 < b; ++q) {
    if (matching.bucket_machine[static_cast<std::size_t>(q)] != matching.bucket_machine[static_cast<std::size_t>(q + 1)]) continue;
    if (min_size[static_cast<std::size_t>(q)] < max_size[static_cast<std::size_t>(q + 1)]) check.sorted = false;
  }
  return check;
}

namespace {

// Kuhn's algorithm; rows and their adjacency are scanned in ascending order.
bool perfect_matching(int size, const std::vector<std::vector<int>>& adj, std::vector<int>& match_of_row) {
  std::vector<int> row_of_col(static_cast<std::size_t>(size), -1);
  std::vector<int> seen(static_cast<std::size_t>(size), -1);
  std::function<bool(int, int)> augment = [&](int row, int stamp) {
    for (int col : adj[static_cast<std::size_t>(row)]) {
      if (seen[static_cast<std::size_t>(col)] == stamp) continue;
      seen[static_cast<std::size_t>(col)] = stamp;
      const int other = row_of_col[static_cast<std::size_t>(col)];
      if (other == -1 || augment(other, stamp)) {
        row_of_col[static_cast<std::size_t>(col)] = row;
        return true;
      }
    }
    return false;
  };
  for (int row = 0; row < size; ++row) {
    if (!augment(row, row)) return false;
  }
  match_of_row.assign(static_cast<std::size_t>(size), -1);
  for (int col = 0; col < size; ++col) match_of_row[static_cast<std::size_t>(row_of_col[static_cast<std::size_t>(col)])] = col;
  return true;
}

}  // namespace

ConvexCombination birkhoff_decompose(int size, std::span<const BucketPiece> pieces, double tol) {
  // value[row][col], kept sparse through per-row sorted column lists.
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(size));
  for (const BucketPiece& piece : pieces) {
    if (piece.job < 0 || piece.job >= size || piece.bucket < 0 || piece.bucket >= size) {
      throw std::invalid_argument("matching entry out of range");
    }
    auto& row = rows[static_cast<std::size_t>(piece.job)];
    auto it = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.first == piece.bucket; });
    if (it == row.end()) {
      row.emplace_back(piece.bucket, piece.value);
    } else {
      it->second += piece.value;
    }
  }
  for (auto& row : rows) std::sort(row.begin(), row.end());

  ConvexCombination combo;
  double extracted = 0.0;
  bool retried = false;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(size));
  std::vector<int> match;
  while (extracted < 1.0 - 1e-9) {
    for (int r = 0; r < size; ++r) {
      auto& row = rows[static_cast<std::size_t>(r)];
      row.erase(std::remove_if(row.begin(), row.end(), [&](const auto& e) { return e.second <= tol; }), row.end());
      adj[static_cast<std::size_t>(r)].clear();
      for (const auto& e : row) adj[static_cast<std::size_t>(r)].push_back(e.first);
    }
    if (!perfect_matching(size, adj, match)) {
      if (retried) throw InvariantViolation("fractional matching support has no perfect matching");
      retried = true;
      // Rescale every row to the remaining mass and try once more.
      const double remaining = 1.0 - extracted;
      for (auto& row : rows) {
        double s = 0.0;
        for (const auto& e : row) s += e.second;
        if (s <= 0.0) continue;
        for (auto& e : row) e.second *= remaining / s;
      }
      continue;
    }
    double lambda = 1.0 - extracted;
    for (int r = 0; r < size; ++r) {
      for (const auto& e : rows[static_cast<std::size_t>(r)]) {
        if (e.first == match[static_cast<std::size_t>(r)]) lambda = std::min(lambda, e.second);
      }
    }
    for (int r = 0; r < size; ++r) {
      for (auto& e : rows[static_cast<std::size_t>(r)]) {
        if (e.first == match[static_cast<std::size_t>(r)]) e.second -= lambda;
      }
    }
    combo.weights.push_back(lambda);
    combo.matchings.push_back(match);
    extracted += lambda;
  }
  return combo;
}

double reconstruction_error(int size, std::span<const BucketPiece> pieces, const ConvexCombination& combo) {
  const auto n = static_cast<std::size_t>(size);
  std::vector<double> diff(n * n, 0.0);
  for (const BucketPiece& piece : pieces) diff[static_cast<std::size_t>(piece.job) * n + static_cast<std::size_t>(piece.bucket)] += piece.value;
  for (std::size_t k = 0; k < combo.weights.size(); ++k) {
    for (std::size_t r = 0; r < n; ++r) diff[r * n + static_cast<std::size_t>(combo.matchings[k][r])] -= combo.weights[k];
  }
  double worst = 0.0;
  for (double d : diff) worst = std::max(worst, std::abs(d));
  return worst;
}

Assignment sample_assignment(const ConvexCombination& combo, const BucketMatching& matching, Rng& rng) {
  double total = 0.0;
  for (double w : combo.weights) total += w;
  const double target = rng.uniform01() * total;
  std::size_t pick = combo.weights.size() - 1;
  double c = 0.0;
  for (std::size_t k = 0; k < combo.weights.size(); ++k) {
    c += combo.weights[k];
    if (target < c) {
      pick = k;
      break;
    }
  }
  Assignment a;
  a.machine_of.resize(static_cast<std::size_t>(matching.real_jobs));
  for (int j = 0; j < matching.real_jobs; ++j) {
    a.machine_of[static_cast<std::size_t>(j)] =
        matching.bucket_machine[static_cast<std::size_t>(combo.matchings[pick][static_cast<std::size_t>(j)])];
  }
  return a;
}

bool check_balanced(const Instance& instance, const ConvexCombination& combo, const BucketMatching& matching) {
  const int m = instance.machines();
  std::vector<int> bucket_count(static_cast<std::size_t>(m), 0);
  for (int b = 0; b < matching.buckets(); ++b) ++bucket_count[static_cast<std::size_t>(matching.bucket_machine[static_cast<std::size_t>(b)])];
  // sizes[k][i]: sizes on machine i under matching k, descending, zero padded.
  std::vector<std::vector<std::vector<std::int64_t>>> sizes(combo.matchings.size());
  for (std::size_t k = 0; k < combo.matchings.size(); ++k) {
    sizes[k].resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) sizes[k][static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(bucket_count[static_cast<std::size_t>(i)]), 0);
    std::vector<int> fill(static_cast<std::size_t>(m), 0);
    for (int j = 0; j < matching.real_jobs; ++j) {
      const int i = matching.bucket_machine[static_cast<std::size_t>(combo.matchings[k][static_cast<std::size_t>(j)])];
      sizes[k][static_cast<std::size_t>(i)][static_cast<std::size_t>(fill[static_cast<std::size_t>(i)]++)] = *instance.p(i, j);
    }
    for (auto& v : sizes[k]) std::sort(v.begin(), v.end(), std::greater<>());
  }
  for (int i = 0; i < m; ++i) {
    for (std::size_t a = 0; a < sizes.size(); ++a) {
      for (std::size_t b = 0; b < sizes.size(); ++b) {
        const auto& va = sizes[a][static_cast<std::size_t>(i)];
        const auto& vb = sizes[b][static_cast<std::size_t>(i)];
        for (std::size_t q = 0; q + 1 < vb.size(); ++q) {
          if (va[q] < vb[q + 1]) return false;
        }
      }
    }
  }
  return true;
}

LkRounder::LkRounder(const Instance& instance, FractionalSolution solution, double k)
    : instance_(&instance), solution_(std::move(solution)), k_(k) {
  matching_ = build_bucket_matching(instance, solution_);
  combo_ = birkhoff_decompose(matching_.rows(), matching_.pieces);
}

Assignment LkRounder::sample(Rng& rng) const { return sample_assignment(combo_, matching_, rng); }

double LkRounder::expected_power_sum() const {
  double total = 0.0;
  double weight = 0.0;
  std::vector<std::int64_t> loads(static_cast<std::size_t>(instance_->machines()));
  for (std::size_t k = 0; k < combo_.weights.size(); ++k) {
    std::fill(loads.begin(), loads.end(), 0);
    for (int j = 0; j < matching_.real_jobs; ++j) {
      const int i = matching_.bucket_machine[static_cast<std::size_t>(combo_.matchings[k][static_cast<std::size_t>(j)])];
      loads[static_cast<std::size_t>(i)] += *instance_->p(i, j);
    }
    total += combo_.weights[k] * lk_of_loads(loads, k_).power_sum;
    weight += combo_.weights[k];
  }
  return total / weight;
}

LkResult lk_pipeline(const Instance& instance, double k, Rng& rng, std::int64_t horizon_cap) {
  const IndexedLp lp = build_lk_lp(instance, k, horizon_cap);
  LkRounder rounder(instance, solve_lp(instance, lp), k);
  LkResult result;
  result.lp_value = rounder.lp_value();
  result.assignment = rounder.sample(rng);
  result.power_sum = eval_lk(instance, result.assignment, k).power_sum;
  result.ratio = result.power_sum / result.lp_value;
  result.norm_ratio = std::pow(result.ratio, 1.0 / k);
  result.expected_ratio = rounder.expected_power_sum() / result.lp_value;
  return result;
}

}  // namespace umsched
