#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "glyphlab/tensor.hpp"

namespace glyphlab {

/// Symmetric, zero-diagonal, non-negative n x n matrix.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> d;

  double operator()(std::size_t i, std::size_t j) const noexcept { return d[i * n + j]; }
};

DistanceMatrix pairwise_euclidean(const Tensor& x);

struct RowCalibration {
  double sigma = 0.0;
  std::vector<double> p;
};

/// Gaussian bandwidth for one point (self excluded) so that 2^H(p) matches
/// `perplexity`. A row of all-zero distances yields the uniform distribution.
RowCalibration calibrate_row(std::span<const double> distances, double perplexity);

/// Perplexity 2^H of a probability row, H in bits.
double row_perplexity(std::span<const double> p);

struct TsneConfig {
  std::size_t out_dims = 3;
  double perplexity = 30.0;
  std::size_t iters = 1000;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  std::size_t exaggeration_iters = 250;
  double momentum_early = 0.5;
  double momentum_late = 0.8;
  std::uint64_t seed = 0;
};

struct TsneStep {
  std::size_t iteration;
  double kl;
  double q_sum;
};

struct Embedding {
  Tensor y;
  /// Entry 0 is the KL of the initial layout, entry t the KL after iteration t.
  std::vector<double> kl_history;
};

/// Symmetrized joint affinities p_ij = (p_j|i + p_i|j) / 2n, floored at 1e-12.
Tensor tsne_joint_p(const Tensor& x, double perplexity);
/// Student-t affinities q_ij for an embedding [n, dims]; zero diagonal, sums to 1.
Tensor tsne_joint_q(const Tensor& y);
/// KL(P || Q(y)).
double tsne_kl(const Tensor& p, const Tensor& y);
/// dC/dy_i = 4 sum_j (p_ij - q_ij)(y_i - y_j) / (1 + |y_i - y_j|^2).
Tensor tsne_gradient(const Tensor& p, const Tensor& y);

Embedding tsne(const Tensor& x, const TsneConfig& cfg,
               const std::function<void(const TsneStep&)>& observer = {});

struct Merge {
  std::size_t left;   // node ids: leaves 0..n-1, merge k creates node n+k
  std::size_t right;
  double height;
  std::size_t size;

  friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
  std::vector<Merge> merges;
  std::vector<std::size_t> leaf_order;
};

/// Average-linkage (UPGMA) agglomeration. Equal distances are resolved by the
/// smallest (left, right) node-id pair.
Dendrogram hcluster_average(const DistanceMatrix& d);

struct ClusteredMap {
  std::vector<double> reordered;  // n x n
  std::vector<std::uint32_t> ribbon;
  std::vector<std::size_t> order;
};

ClusteredMap clustered_map(const DistanceMatrix& d, const Dendrogram& dg, std::span<const std::uint32_t> labels);

}  // namespace glyphlab
