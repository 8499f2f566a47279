#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glyphlab/eda.hpp"
#include "glyphlab/error.hpp"
#include "glyphlab/rng.hpp"
#include "oracles.hpp"

using namespace glyphlab;

namespace {

Tensor random_points(Rng& rng, std::size_t n, std::size_t d, double scale = 1.0) {
  Tensor t({n, d});
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

DistanceMatrix random_distances(Rng& rng, std::size_t n) {
  DistanceMatrix d{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d.d[i * n + j] = d.d[j * n + i] = rng.uniform(0.1, 10.0);
  return d;
}

}  // namespace

TEST_CASE("pairwise_euclidean") {
  const auto d = pairwise_euclidean(Tensor({2, 2}, std::vector<double>{0, 0, 3, 4}));
  CHECK(d(0, 1) == 5.0);
  CHECK(pairwise_euclidean(Tensor({2, 3}, std::vector<double>{1, 2, 3, 1, 2, 3}))(0, 1) == 0.0);
  Rng rng(1);
  const auto r = pairwise_euclidean(random_points(rng, 9, 4));
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(r(i, i) == 0.0);
    for (std::size_t j = 0; j < 9; ++j) CHECK(r(i, j) == r(j, i));
  }
  CHECK_THROWS_AS(pairwise_euclidean(Tensor({1, 3})), Error);
}

TEST_CASE("calibrate_row hits the target perplexity") {
  const std::vector<double> equal(7, 2.5);
  const RowCalibration u = calibrate_row(equal, 3.0);
  for (double p : u.p) CHECK(p == doctest::Approx(1.0 / 7).epsilon(1e-12));

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 10 + rng.below(60);
    std::vector<double> dist(m);
    for (auto& v : dist) v = rng.uniform(0.5, 20.0);
    const double target = rng.uniform(2.0, static_cast<double>(m) / 3.0);
    const RowCalibration c = calibrate_row(dist, target);
    const double sum = std::accumulate(c.p.begin(), c.p.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    const double perp = std::exp2(oracle::entropy_bits(c.p));
    CHECK(std::abs(perp - target) <= 1e-5 * target);
    CHECK(std::abs(row_perplexity(c.p) - perp) <= 1e-9 * perp);
  }

  std::vector<double> near{0.01, 5, 6, 7, 8};
  const RowCalibration n = calibrate_row(near, 1.0);
  CHECK(n.p[0] > 0.999);
}

TEST_CASE("joint P is symmetric and normalized") {
  Rng rng(5);
  const Tensor p = tsne_joint_p(random_points(rng, 12, 3), 4.0);
  double sum = 0;
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) {
      sum += p[i * 12 + j];
      CHECK(p[i * 12 + j] == p[j * 12 + i]);
    }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Q sums to one and gradient vanishes at a perfect two-point fit") {
  Rng rng(6);
  const Tensor q = tsne_joint_q(random_points(rng, 10, 3));
  double sum = 0;
  for (double v : q.values()) sum += v;
  CHECK(std::abs(sum - 1.0) <= 1e-9);

  const Tensor p({2, 2}, std::vector<double>{0, 0.5, 0.5, 0});
  const Tensor y({2, 3}, std::vector<double>{0, 0, 0, 1, 2, 3});
  const Tensor g0 = tsne_gradient(p, y);
  for (double g : g0.values()) CHECK(std::abs(g) <= 1e-9);
}

TEST_CASE("tSNE gradient matches finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 6; ++trial) {
    const Tensor p = tsne_joint_p(random_points(rng, 6, 4), 1.5);
    Tensor y = random_points(rng, 6, 3);
    const Tensor g = tsne_gradient(p, y);
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double num = oracle::central_diff(y[k], [&] { return tsne_kl(p, y); });
      CHECK(oracle::rel_err(g[k], num) <= 1e-5);
    }
  }
}

TEST_CASE("tsne reduces KL and is deterministic") {
  const Tensor simplex({4, 3}, std::vector<double>{1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, 1});
  TsneConfig cfg;
  const Embedding e = tsne(simplex, cfg);
  CHECK(e.kl_history.size() == cfg.iters + 1);
  // P is uniform here, so the near-coincident start is already optimal.
  CHECK(std::abs(e.kl_history.front()) < 1e-9);
  CHECK(e.kl_history.back() < 0.05);
  CHECK(e.y.all_finite());

  Rng rng(9);
  const Tensor x = random_points(rng, 30, 5);
  TsneConfig small;
  std::size_t steps = 0;
  bool q_ok = true;
  const Embedding a = tsne(x, small, [&](const TsneStep& s) {
    ++steps;
    q_ok = q_ok && std::isfinite(s.kl) && s.q_sum > 0;
  });
  CHECK(steps == small.iters + 1);
  CHECK(q_ok);
  const Embedding b = tsne(x, small);
  CHECK(a.y == b.y);
  CHECK(a.kl_history == b.kl_history);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    small.seed = seed;
    const Embedding e2 = tsne(x, small);
    CHECK(e2.kl_history.back() < e2.kl_history.front());
  }
}

TEST_CASE("tsne rejects tiny inputs") {
  CHECK_THROWS_AS(tsne(Tensor({3, 2}), TsneConfig{}), Error);
}

TEST_CASE("hcluster_average simple cases") {
  DistanceMatrix d{3, {0, 1, 10, 1, 0, 10, 10, 10, 0}};
  const Dendrogram dg = hcluster_average(d);
  REQUIRE(dg.merges.size() == 2);
  CHECK(dg.merges[0] == Merge{0, 1, 1.0, 2});
  CHECK(dg.merges[1] == Merge{2, 3, 10.0, 3});
  CHECK(dg.leaf_order == std::vector<std::size_t>{2, 0, 1});

  DistanceMatrix ties{4, std::vector<double>(16, 1.0)};
  for (std::size_t i = 0; i < 4; ++i) ties.d[i * 5] = 0;
  const Dendrogram t = hcluster_average(ties);
  CHECK(t.merges[0].left == 0);
  CHECK(t.merges[0].right == 1);
  CHECK(t.merges[1].left == 2);
  CHECK(t.merges[1].right == 3);
}

TEST_CASE("hcluster_average equals brute-force UPGMA") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(11);
    const DistanceMatrix d = random_distances(rng, n);
    const Dendrogram dg = hcluster_average(d);
    const auto ref = oracle::upgma(d);
    REQUIRE(dg.merges.size() == ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) {
      CHECK(dg.merges[k].left == ref[k].left);
      CHECK(dg.merges[k].right == ref[k].right);
      CHECK(dg.merges[k].size == ref[k].size);
      CHECK(std::abs(dg.merges[k].height - ref[k].height) <= 1e-9);
    }
    for (std::size_t k = 1; k < dg.merges.size(); ++k) CHECK(dg.merges[k].height >= dg.merges[k - 1].height - 1e-12);
    auto order = dg.leaf_order;
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(order[i] == i);
  }
}

TEST_CASE("merge heights are invariant under point permutation") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_points(rng, 10, 3);
    const auto perm = permutation(rng, 10);
    Tensor xp({10, 3});
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t k = 0; k < 3; ++k) xp[i * 3 + k] = x[perm[i] * 3 + k];
    auto heights = [](const Dendrogram& dg) {
      std::vector<double> h;
      for (const auto& m : dg.merges) h.push_back(m.height);
      std::sort(h.begin(), h.end());
      return h;
    };
    const auto a = heights(hcluster_average(pairwise_euclidean(x)));
    const auto b = heights(hcluster_average(pairwise_euclidean(xp)));
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-9);
  }
}

TEST_CASE("clustered_map reorders symmetrically") {
  Rng rng(19);
  const DistanceMatrix d = pairwise_euclidean(random_points(rng, 8, 2));
  Dendrogram ident;
  ident.leaf_order = {0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<std::uint32_t> labels{0, 1, 0, 1, 0, 1, 0, 1};
  const ClusteredMap same = clustered_map(d, ident, labels);
  CHECK(same.reordered == d.d);
  CHECK(same.ribbon == labels);

  const ClusteredMap m = clustered_map(d, hcluster_average(d), labels);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(m.reordered[i * 8 + i] == 0.0);
    for (std::size_t j = 0; j < 8; ++j) CHECK(m.reordered[i * 8 + j] == m.reordered[j * 8 + i]);
  }
}

TEST_CASE("separated clusters give a two-run ribbon") {
  Rng rng(23);
  Tensor x({20, 2});
  std::vector<std::uint32_t> labels(20);
  for (std::size_t i = 0; i < 20; ++i) {
    labels[i] = static_cast<std::uint32_t>(i % 2);
    x[i * 2] = rng.normal() * 0.1 + (labels[i] ? 50.0 : 0.0);
    x[i * 2 + 1] = rng.normal() * 0.1;
  }
  const DistanceMatrix d = pairwise_euclidean(x);
  const ClusteredMap m = clustered_map(d, hcluster_average(d), labels);
  std::size_t runs = 1;
  for (std::size_t i = 1; i < 20; ++i) runs += m.ribbon[i] != m.ribbon[i - 1];
  CHECK(runs == 2);
}
