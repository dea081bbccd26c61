#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "umsched/experiment.hpp"
#include "umsched/lk.hpp"
#include "umsched/oracle.hpp"

using namespace umsched;

namespace {

bool within(double estimate, double p, int n, double z = 4.0) {
  return std::abs(estimate - p) <= z * std::sqrt(p * (1.0 - p) / n) + 1e-12;
}

// Interval oracle: job j occupies [X_j - x_j, X_j] on the sorted line and
// bucket q is [q - 1, q]; the piece is the length of their intersection.
std::map<std::pair<int, int>, double> interval_pieces(std::vector<JobShare> shares) {
  std::sort(shares.begin(), shares.end(), [](const JobShare& a, const JobShare& b) {
    return a.p != b.p ? a.p > b.p : a.job < b.job;
  });
  std::map<std::pair<int, int>, double> out;
  double cum = 0.0;
  for (const JobShare& s : shares) {
    const double lo = cum;
    const double hi = cum + s.x;
    cum = hi;
    for (int q = 1; q <= static_cast<int>(std::ceil(hi)) + 1; ++q) {
      const double len = std::min(hi, static_cast<double>(q)) - std::max(lo, static_cast<double>(q - 1));
      if (len > 1e-9) out[{s.job, q}] += len;
    }
  }
  return out;
}

std::vector<std::vector<double>> dense(int size, std::span<const BucketPiece> pieces) {
  std::vector<std::vector<double>> m(static_cast<std::size_t>(size), std::vector<double>(static_cast<std::size_t>(size), 0.0));
  for (const BucketPiece& p : pieces) m[static_cast<std::size_t>(p.job)][static_cast<std::size_t>(p.bucket)] += p.value;
  return m;
}

void check_combination(int size, std::span<const BucketPiece> pieces, const ConvexCombination& c) {
  double total = 0.0;
  for (double w : c.weights) {
    CHECK(w > 0.0);
    CHECK(w <= 1.0 + 1e-12);
    total += w;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c.weights.size() <= pieces.size());
  for (const auto& m : c.matchings) {
    REQUIRE(m.size() == static_cast<std::size_t>(size));
    std::vector<int> sorted = m;
    std::sort(sorted.begin(), sorted.end());
    for (int b = 0; b < size; ++b) CHECK(sorted[static_cast<std::size_t>(b)] == b);
  }
  std::vector<std::vector<double>> rebuilt(static_cast<std::size_t>(size), std::vector<double>(static_cast<std::size_t>(size), 0.0));
  for (std::size_t k = 0; k < c.weights.size(); ++k) {
    for (int r = 0; r < size; ++r) {
      rebuilt[static_cast<std::size_t>(r)][static_cast<std::size_t>(c.matchings[k][static_cast<std::size_t>(r)])] += c.weights[k];
    }
  }
  const auto target = dense(size, pieces);
  double worst = 0.0;
  for (int r = 0; r < size; ++r) {
    for (int b = 0; b < size; ++b) {
      worst = std::max(worst, std::abs(rebuilt[static_cast<std::size_t>(r)][static_cast<std::size_t>(b)] -
                                       target[static_cast<std::size_t>(r)][static_cast<std::size_t>(b)]));
    }
  }
  CHECK(worst <= 1e-7);
  CHECK(reconstruction_error(size, pieces, c) <= 1e-7);
}

// Balanced oracle: within each machine, the q-th largest real job of one
// outcome is at least the (q+1)-th largest of any other outcome.
bool balanced_oracle(const Instance& inst, const ConvexCombination& c, const BucketMatching& bm) {
  for (int i = 0; i < inst.machines(); ++i) {
    std::vector<std::vector<std::int64_t>> outcomes;
    for (const auto& m : c.matchings) {
      std::vector<std::int64_t> sizes;
      for (int r = 0; r < bm.real_jobs; ++r) {
        const int b = m[static_cast<std::size_t>(r)];
        if (bm.bucket_machine[static_cast<std::size_t>(b)] == i) sizes.push_back(*inst.p(i, r));
      }
      std::sort(sizes.rbegin(), sizes.rend());
      outcomes.push_back(sizes);
    }
    for (const auto& a : outcomes) {
      for (const auto& b : outcomes) {
        for (std::size_t q = 0; q + 1 < b.size(); ++q) {
          const std::int64_t aq = q < a.size() ? a[q] : 0;
          if (aq < b[q + 1]) return false;
        }
      }
    }
  }
  return true;
}

Instance identical(int m, std::vector<std::int64_t> p) {
  std::vector<ProcTime> times;
  for (int i = 0; i < m; ++i) {
    for (auto q : p) times.push_back(q);
  }
  return Instance(m, std::vector<std::int64_t>(p.size(), 1), std::move(times));
}

}  // namespace

TEST_CASE("bucketize: worked example with a dummy fill") {
  const std::vector<JobShare> shares{{0, 3, 0.5}, {1, 2, 0.75}, {2, 2, 0.5}};
  const MachineBuckets b = bucketize(shares);
  REQUIRE(b.buckets == 2);
  std::map<std::pair<int, int>, double> got;
  for (const BucketPiece& p : b.pieces) got[{p.job, p.bucket}] += p.value;
  CHECK(got.size() == 4);
  CHECK(got[{0, 1}] == doctest::Approx(0.5));
  CHECK(got[{1, 1}] == doctest::Approx(0.5));
  CHECK(got[{1, 2}] == doctest::Approx(0.25));
  CHECK(got[{2, 2}] == doctest::Approx(0.5));
  CHECK(b.totals[0] == doctest::Approx(1.0));
  CHECK(b.totals[1] == doctest::Approx(0.75));
}

TEST_CASE("bucketize: single job and integral boundaries") {
  const std::vector<JobShare> one{{4, 2, 1.0}};
  const MachineBuckets b1 = bucketize(one);
  REQUIRE(b1.pieces.size() == 1);
  CHECK(b1.pieces[0].bucket == 1);
  CHECK(b1.pieces[0].value == doctest::Approx(1.0));

  // Second job starts exactly at a full boundary and ends on the next one.
  const std::vector<JobShare> two{{0, 5, 1.0}, {1, 3, 1.0}};
  const MachineBuckets b2 = bucketize(two);
  REQUIRE(b2.pieces.size() == 2);
  CHECK(b2.pieces[1].job == 1);
  CHECK(b2.pieces[1].bucket == 2);
  CHECK(b2.pieces[1].value == doctest::Approx(1.0));

  // Cumulative sums that land on an integer only up to rounding.
  const std::vector<JobShare> drift{{0, 5, 0.1}, {1, 5, 0.2}, {2, 5, 0.7}, {3, 4, 0.3}};
  const MachineBuckets b3 = bucketize(drift);
  for (const BucketPiece& p : b3.pieces) {
    if (p.job == 3) CHECK(p.bucket == 2);
    CHECK(p.value > 1e-9);
  }
}

TEST_CASE("bucketize matches the interval oracle") {
  Rng rng(13);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<JobShare> shares;
    const int n = 1 + static_cast<int>(rng.below(8));
    for (int j = 0; j < n; ++j) {
      const double x = rng.below(4) == 0 ? 1.0 : std::round(rng.uniform01() * 8.0) / 8.0;
      shares.push_back({j, 1 + static_cast<std::int64_t>(rng.below(4)), x});
    }
    const auto expected = interval_pieces(shares);
    std::map<std::pair<int, int>, double> got;
    for (const BucketPiece& p : bucketize(shares).pieces) got[{p.job, p.bucket}] += p.value;
    REQUIRE(got.size() == expected.size());
    for (const auto& [key, v] : expected) CHECK(got[key] == doctest::Approx(v).epsilon(1e-9));
  }
}

TEST_CASE("birkhoff: integral, symmetric and uniform inputs") {
  const std::vector<BucketPiece> ident{{0, 1, 1.0}, {1, 0, 1.0}};
  const ConvexCombination c1 = birkhoff_decompose(2, ident);
  REQUIRE(c1.weights.size() == 1);
  CHECK(c1.weights[0] == doctest::Approx(1.0));
  CHECK(c1.matchings[0] == std::vector<int>{1, 0});

  const std::vector<BucketPiece> halves{{0, 0, 0.5}, {0, 1, 0.5}, {1, 0, 0.5}, {1, 1, 0.5}};
  const ConvexCombination c2 = birkhoff_decompose(2, halves);
  REQUIRE(c2.weights.size() == 2);
  CHECK(c2.weights[0] == doctest::Approx(0.5));
  CHECK(c2.weights[1] == doctest::Approx(0.5));
  check_combination(2, halves, c2);

  std::vector<BucketPiece> third;
  for (int r = 0; r < 3; ++r) {
    for (int b = 0; b < 3; ++b) third.push_back({r, b, 1.0 / 3.0});
  }
  const ConvexCombination c3 = birkhoff_decompose(3, third);
  CHECK(c3.weights.size() <= 7);
  check_combination(3, third, c3);
}

TEST_CASE("birkhoff on random doubly stochastic matrices") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const int size = 1 + static_cast<int>(rng.below(7));
    const int perms = 1 + static_cast<int>(rng.below(5));
    std::vector<std::vector<double>> m(static_cast<std::size_t>(size), std::vector<double>(static_cast<std::size_t>(size), 0.0));
    std::vector<double> w(static_cast<std::size_t>(perms));
    double total = 0;
    for (auto& x : w) {
      x = 0.01 + rng.uniform01();
      total += x;
    }
    std::vector<int> perm(static_cast<std::size_t>(size));
    for (int k = 0; k < perms; ++k) {
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
      for (int r = 0; r < size; ++r) m[static_cast<std::size_t>(r)][static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] += w[static_cast<std::size_t>(k)] / total;
    }
    std::vector<BucketPiece> pieces;
    for (int r = 0; r < size; ++r) {
      for (int b = 0; b < size; ++b) {
        if (m[static_cast<std::size_t>(r)][static_cast<std::size_t>(b)] > 0) pieces.push_back({r, b, m[static_cast<std::size_t>(r)][static_cast<std::size_t>(b)]});
      }
    }
    check_combination(size, pieces, birkhoff_decompose(size, pieces));
  }
}

TEST_CASE("birkhoff rejects inputs without a perfect matching") {
  const std::vector<BucketPiece> broken{{0, 0, 1.0}, {1, 0, 1.0}};
  CHECK_THROWS(birkhoff_decompose(2, broken));
}

TEST_CASE("bucket matchings of solved LPs are well formed") {
  for (Family f : {Family::Uniform, Family::Restricted, Family::Correlated}) {
    FamilyParams params;
    params.family = f;
    params.machines = 3;
    params.jobs = 7;
    params.infinite_density = 0.2;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const Instance inst = gen_instance(params, seed);
      for (double k : {1.5, 2.0, 3.0}) {
        const LkRounder r(inst, solve_lp(inst, build_lk_lp(inst, k)), k);
        const BucketMatching& bm = r.matching();
        CHECK(bm.rows() == bm.buckets());
        const BucketCheck c = check_bucket_matching(inst, bm);
        CHECK(c.max_bucket_error <= 1e-9);
        CHECK(c.max_job_error <= 1e-9);
        CHECK(c.consecutive);
        CHECK(c.sorted);

        // Independent totals per row and bucket.
        std::vector<double> row(static_cast<std::size_t>(bm.rows()), 0.0);
        std::vector<double> col(static_cast<std::size_t>(bm.buckets()), 0.0);
        for (const BucketPiece& p : bm.pieces) {
          row[static_cast<std::size_t>(p.job)] += p.value;
          col[static_cast<std::size_t>(p.bucket)] += p.value;
        }
        for (double v : row) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
        for (double v : col) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

        check_combination(bm.rows(), bm.pieces, r.combination());
        CHECK(check_balanced(inst, r.combination(), bm));
        CHECK(balanced_oracle(inst, r.combination(), bm));
      }
    }
  }
}

TEST_CASE("sampling: single matching is deterministic") {
  const Instance inst = identical(2, {1, 1});
  BucketMatching bm;
  bm.real_jobs = 2;
  bm.bucket_machine = {0, 1};
  bm.bucket_rank = {1, 1};
  ConvexCombination c;
  c.weights = {1.0};
  c.matchings = {{1, 0}};
  Rng rng(1);
  for (int k = 0; k < 50; ++k) CHECK(sample_assignment(c, bm, rng).machine_of == std::vector<int>{1, 0});
}

TEST_CASE("sampled marginals match the LP") {
  FamilyParams params;
  params.family = Family::Correlated;
  params.machines = 3;
  params.jobs = 6;
  const int n = 100000;
  int fractional = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Instance inst = gen_instance(params, 40 + seed);
    const LkRounder r(inst, solve_lp(inst, build_lk_lp(inst, 2.0)), 2.0);
    std::vector<int> count(static_cast<std::size_t>(inst.machines() * inst.jobs()), 0);
    Rng rng(seed);
    for (int t = 0; t < n; ++t) {
      const Assignment a = r.sample(rng);
      for (int j = 0; j < inst.jobs(); ++j) ++count[static_cast<std::size_t>(a.machine_of[static_cast<std::size_t>(j)] * inst.jobs() + j)];
    }
    for (int i = 0; i < inst.machines(); ++i) {
      for (int j = 0; j < inst.jobs(); ++j) {
        const double x = r.solution().aggregate(i, j);
        if (x > 1e-6 && x < 1 - 1e-6) ++fractional;
        CHECK(within(static_cast<double>(count[static_cast<std::size_t>(i * inst.jobs() + j)]) / n, std::clamp(x, 0.0, 1.0), n));
      }
    }
  }
  CHECK(fractional > 0);
}

TEST_CASE("expected power sum equals the weighted average over matchings") {
  FamilyParams params;
  params.machines = 3;
  params.jobs = 6;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Instance inst = gen_instance(params, seed);
    const LkRounder r(inst, solve_lp(inst, build_lk_lp(inst, 2.0)), 2.0);
    double expected = 0.0;
    const ConvexCombination& c = r.combination();
    for (std::size_t k = 0; k < c.weights.size(); ++k) {
      Assignment a;
      for (int j = 0; j < inst.jobs(); ++j) {
        a.machine_of.push_back(r.matching().bucket_machine[static_cast<std::size_t>(c.matchings[k][static_cast<std::size_t>(j)])]);
      }
      expected += c.weights[k] * eval_lk(inst, a, 2.0).power_sum;
    }
    CHECK(r.expected_power_sum() == doctest::Approx(expected).epsilon(1e-9));
    CHECK(r.expected_power_sum() >= brute_force_lk(inst, 2.0).power_sum - 1e-9);
  }
}

TEST_CASE("pipeline examples") {
  const Instance twin = identical(2, {1, 1});
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const LkResult r = lk_pipeline(twin, 2.0, rng);
    CHECK(r.assignment.machine_of[0] != r.assignment.machine_of[1]);
    CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-6));
  }

  FamilyParams params;
  params.machines = 3;
  params.jobs = 6;
  params.infinite_density = 0.3;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Instance inst = gen_instance(params, seed);
    for (int t = 0; t < 20; ++t) {
      const LkResult r = lk_pipeline(inst, 1.0, rng);
      CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(r.expected_ratio == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}
