#include "glyphlab/eda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glyphlab/error.hpp"
#include "glyphlab/rng.hpp"

namespace glyphlab {

namespace {

// Rows of x flattened to [n, d] regardless of trailing shape.
std::pair<std::size_t, std::size_t> rows_and_cols(const Tensor& x) {
  require(x.rank() >= 2, ErrorCode::Dimension, "expected at least [n, d]");
  const std::size_t n = x.extent(0);
  return {n, n == 0 ? 0 : x.size() / n};
}

}  // namespace

DistanceMatrix pairwise_euclidean(const Tensor& x) {
  const auto [n, dim] = rows_and_cols(x);
  require(n >= 2, ErrorCode::Argument, "pairwise distances need n >= 2");
  DistanceMatrix out{n, std::vector<double>(n * n, 0.0)};
  const double* p = x.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = p[i * dim + k] - p[j * dim + k];
        s += diff * diff;
      }
      out.d[i * n + j] = out.d[j * n + i] = std::sqrt(s);
    }
  }
  return out;
}

double row_perplexity(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0) h -= v * std::log2(v);
  return std::exp2(h);
}

RowCalibration calibrate_row(std::span<const double> distances, double perplexity) {
  require(perplexity >= 1.0, ErrorCode::Argument, "perplexity must be >= 1");
  const std::size_t m = distances.size();
  require(m >= 1, ErrorCode::Argument, "calibrate_row needs at least one neighbour");
  RowCalibration out;
  out.p.assign(m, 1.0 / static_cast<double>(m));

  std::vector<double> excess(m);  // d^2 - min d^2 keeps the largest weight at exp(0)
  double dmin2 = std::numeric_limits<double>::infinity(), dmax2 = 0.0;
  for (double d : distances) {
    dmin2 = std::min(dmin2, d * d);
    dmax2 = std::max(dmax2, d * d);
  }
  if (dmax2 == 0.0) {
    out.sigma = 1e20;
    return out;
  }
  for (std::size_t j = 0; j < m; ++j) excess[j] = distances[j] * distances[j] - dmin2;

  std::vector<double> w(m);
  auto evaluate = [&](double sigma) {
    const double beta = 1.0 / (2.0 * sigma * sigma);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      w[j] = std::exp(-beta * excess[j]);
      z += w[j];
    }
    double weighted = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      w[j] /= z;
      weighted += w[j] * excess[j];
    }
    // Entropy in nats; perplexity = e^H = 2^(H / ln 2).
    return std::exp(std::log(z) + beta * weighted);
  };

  // Bisection on log(sigma); perplexity is monotone in sigma.
  double lo = std::log(1e-20), hi = std::log(1e20);
  double sigma = 1.0;
  for (int step = 0; step < 64; ++step) {
    const double mid = 0.5 * (lo + hi);
    sigma = std::exp(mid);
    const double perp = evaluate(sigma);
    if (std::abs(perp - perplexity) <= 1e-5 * perplexity) break;
    if (perp > perplexity)
      hi = mid;
    else
      lo = mid;
  }
  out.sigma = sigma;
  out.p = w;
  return out;
}

Tensor tsne_joint_p(const Tensor& x, double perplexity) {
  const DistanceMatrix d = pairwise_euclidean(x);
  const std::size_t n = d.n;
  const double perp =
      std::max(1.0, std::min(perplexity, static_cast<double>(n - 1) / 3.0));
  Tensor cond({n, n});
  std::vector<double> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0, k = 0; j < n; ++j)
      if (j != i) row[k++] = d(i, j);
    const auto cal = calibrate_row(row, perp);
    for (std::size_t j = 0, k = 0; j < n; ++j)
      if (j != i) cond[i * n + j] = cal.p[k++];
  }
  Tensor p({n, n});
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) p[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) / denom, 1e-12);
  return p;
}

namespace {

// Unnormalized Student-t kernel and its total.
double student_kernel(const Tensor& y, std::vector<double>& num) {
  const std::size_t n = y.extent(0), dims = y.extent(1);
  num.assign(n * n, 0.0);
  const double* py = y.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dims; ++k) {
        const double diff = py[i * dims + k] - py[j * dims + k];
        s += diff * diff;
      }
      num[i * n + j] = num[j * n + i] = 1.0 / (1.0 + s);
    }
  }
  double z = 0.0;
  for (double v : num) z += v;
  return z;
}

double kl_from_kernel(const Tensor& p, const std::vector<double>& num, double z) {
  double kl = 0.0;
  const std::size_t nn = num.size();
  for (std::size_t k = 0; k < nn; ++k) {
    const double pij = p[k];
    if (pij > 0) kl += pij * std::log(pij / (num[k] / z));
  }
  return kl;
}

void check_pair(const Tensor& p, const Tensor& y) {
  require(y.rank() == 2 && p.rank() == 2, ErrorCode::Dimension, "tsne expects P [n,n] and Y [n,dims]");
  require(p.extent(0) == y.extent(0) && p.extent(1) == y.extent(0), ErrorCode::Dimension,
          "P and Y disagree on n");
}

}  // namespace

Tensor tsne_joint_q(const Tensor& y) {
  require(y.rank() == 2, ErrorCode::Dimension, "Y must be [n, dims]");
  std::vector<double> num;
  const double z = student_kernel(y, num);
  const std::size_t n = y.extent(0);
  Tensor q({n, n});
  for (std::size_t k = 0; k < n * n; ++k) q[k] = num[k] / z;
  return q;
}

double tsne_kl(const Tensor& p, const Tensor& y) {
  check_pair(p, y);
  std::vector<double> num;
  const double z = student_kernel(y, num);
  return kl_from_kernel(p, num, z);
}

namespace {

void gradient_into(const Tensor& p, double p_scale, const Tensor& y, const std::vector<double>& num, double z,
                   Tensor& grad) {
  const std::size_t n = y.extent(0), dims = y.extent(1);
  const double* py = y.data().data();
  grad.fill(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* g = grad.data().data() + i * dims;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double k = num[i * n + j];
      const double mult = 4.0 * (p_scale * p[i * n + j] - k / z) * k;
      for (std::size_t d = 0; d < dims; ++d) g[d] += mult * (py[i * dims + d] - py[j * dims + d]);
    }
  }
}

}  // namespace

Tensor tsne_gradient(const Tensor& p, const Tensor& y) {
  check_pair(p, y);
  std::vector<double> num;
  const double z = student_kernel(y, num);
  Tensor grad(y.shape());
  gradient_into(p, 1.0, y, num, z, grad);
  return grad;
}

Embedding tsne(const Tensor& x, const TsneConfig& cfg, const std::function<void(const TsneStep&)>& observer) {
  const auto [n, dim] = rows_and_cols(x);
  require(n >= 4, ErrorCode::Argument, "tsne needs at least 4 points");
  require(dim >= 1, ErrorCode::Argument, "tsne needs at least one feature");
  require(cfg.out_dims >= 1, ErrorCode::Argument, "out_dims must be >= 1");
  require(cfg.perplexity >= 1.0, ErrorCode::Argument, "perplexity must be >= 1");
  require(cfg.iters >= cfg.exaggeration_iters, ErrorCode::Argument, "iters must be >= exaggeration_iters");
  require(cfg.learning_rate > 0, ErrorCode::Argument, "learning rate must be positive");

  const Tensor p = tsne_joint_p(x.reshaped({n, dim}), cfg.perplexity);
  const std::size_t dims = cfg.out_dims;

  Rng rng(cfg.seed);
  Embedding out;
  out.y = Tensor({n, dims});
  for (auto& v : out.y.values()) v = 1e-4 * rng.normal();

  Tensor update({n, dims});
  Tensor grad({n, dims});
  std::vector<double> num;
  out.kl_history.reserve(cfg.iters + 1);

  for (std::size_t it = 0; it <= cfg.iters; ++it) {
    const double z = student_kernel(out.y, num);
    const double kl = kl_from_kernel(p, num, z);
    out.kl_history.push_back(kl);
    if (observer) {
      double q_sum = 0.0;
      for (double v : num) q_sum += v / z;
      observer(TsneStep{it, kl, q_sum});
    }
    if (it == cfg.iters) break;

    const bool early = it < cfg.exaggeration_iters;
    gradient_into(p, early ? cfg.exaggeration : 1.0, out.y, num, z, grad);
    const double momentum = early ? cfg.momentum_early : cfg.momentum_late;
    for (std::size_t k = 0; k < update.size(); ++k) {
      update[k] = momentum * update[k] - cfg.learning_rate * grad[k];
      out.y[k] += update[k];
    }
    // Recentre; KL is translation invariant.
    for (std::size_t d = 0; d < dims; ++d) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += out.y[i * dims + d];
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) out.y[i * dims + d] -= mean;
    }
  }
  return out;
}

namespace {

struct PairKey {
  double dist;
  std::size_t lo;
  std::size_t hi;
};

bool before(const PairKey& a, const PairKey& b) {
  if (a.dist != b.dist) return a.dist < b.dist;
  if (a.lo != b.lo) return a.lo < b.lo;
  return a.hi < b.hi;
}

}  // namespace

Dendrogram hcluster_average(const DistanceMatrix& dm) {
  const std::size_t n = dm.n;
  require(n >= 2, ErrorCode::Argument, "clustering needs n >= 2");
  require(dm.d.size() == n * n, ErrorCode::Dimension, "distance matrix size mismatch");

  std::vector<double> d = dm.d;
  std::vector<std::size_t> id(n), size(n, 1);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i) id[i] = i;

  auto key = [&](std::size_t a, std::size_t b) {
    return PairKey{d[a * n + b], std::min(id[a], id[b]), std::max(id[a], id[b])};
  };
  // Cached nearest partner per slot, ordered by (distance, id pair).
  std::vector<std::size_t> best(n, n);
  auto refresh = [&](std::size_t i) {
    best[i] = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (best[i] == n || before(key(i, j), key(i, best[i]))) best[i] = j;
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  Dendrogram dg;
  dg.merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || best[i] == n) continue;
      if (a == n || before(key(i, best[i]), key(a, best[a]))) a = i;
    }
    const std::size_t b = best[a];
    const PairKey k = key(a, b);
    dg.merges.push_back(Merge{k.lo, k.hi, k.dist, size[a] + size[b]});

    const double wa = static_cast<double>(size[a]), wb = static_cast<double>(size[b]);
    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == a || j == b) continue;
      const double v = (wa * d[a * n + j] + wb * d[b * n + j]) / (wa + wb);
      d[a * n + j] = d[j * n + a] = v;
    }
    active[b] = false;
    size[a] += size[b];
    id[a] = n + step;

    for (std::size_t j = 0; j < n; ++j) {
      if (!active[j] || j == a) continue;
      if (best[j] == a || best[j] == b)
        refresh(j);
      else if (before(key(j, a), key(j, best[j])))
        best[j] = a;
    }
    refresh(a);
  }

  // Depth-first, left child first.
  std::vector<std::size_t> stack{2 * n - 2};
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    if (node < n) {
      dg.leaf_order.push_back(node);
    } else {
      const Merge& m = dg.merges[node - n];
      stack.push_back(m.right);
      stack.push_back(m.left);
    }
  }
  return dg;
}

ClusteredMap clustered_map(const DistanceMatrix& d, const Dendrogram& dg, std::span<const std::uint32_t> labels) {
  const std::size_t n = d.n;
  require(labels.size() == n, ErrorCode::Argument, "label count differs from matrix size");
  require(dg.leaf_order.size() == n, ErrorCode::Argument, "dendrogram does not match matrix size");
  ClusteredMap out;
  out.order = dg.leaf_order;
  out.reordered.resize(n * n);
  out.ribbon.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pi = out.order[i];
    require(pi < n, ErrorCode::Argument, "leaf order is not a permutation");
    out.ribbon[i] = labels[pi];
    for (std::size_t j = 0; j < n; ++j) out.reordered[i * n + j] = d(pi, out.order[j]);
  }
  return out;
}

}  // namespace glyphlab
