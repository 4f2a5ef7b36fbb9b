#include "gensamplets/ctree.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gensamplets/errors.hpp"
#include "gensamplets/lanczos.hpp"

namespace gensamplets {

namespace {

void normalize_sign(Eigen::VectorXd &v) {
  const double peak = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) >= peak * (1.0 - 1e-12)) {
      if (v[i] < 0.0) v = -v;
      return;
    }
}

std::vector<Index> iota_vector(Index n) {
  std::vector<Index> v(n);
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

Bisection median_split(const Eigen::VectorXd &v) {
  std::vector<Index> order = iota_vector(v.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return v[a] > v[b]; });
  const Index half = (v.size() + 1) / 2;
  std::vector<bool> in_first(v.size(), false);
  for (Index p = 0; p < half; ++p) in_first[order[p]] = true;
  // values tied with the median follow it into the first part
  const double median = v[order[half - 1]];
  for (Index p = half; p < v.size(); ++p)
    if (v[order[p]] == median) in_first[order[p]] = true;
  Bisection b;
  b.rule = SplitRule::kMedian;
  for (Index i = 0; i < v.size(); ++i)
    (in_first[i] ? b.first : b.second).push_back(i);
  if (b.second.empty()) {  // everything tied: split by position
    b.first.resize(half);
    std::iota(b.first.begin(), b.first.end(), Index{0});
    b.second.resize(v.size() - half);
    std::iota(b.second.begin(), b.second.end(), half);
  }
  return b;
}

// Positional split by descending value, lower index first among ties.
Bisection ranked_split(const Eigen::VectorXd &v) {
  std::vector<Index> order = iota_vector(v.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return v[a] > v[b]; });
  const Index half = (v.size() + 1) / 2;
  Bisection b;
  b.rule = SplitRule::kMedian;
  b.first.assign(order.begin(), order.begin() + half);
  b.second.assign(order.begin() + half, order.end());
  std::sort(b.first.begin(), b.first.end());
  std::sort(b.second.begin(), b.second.end());
  return b;
}

Bisection sign_split(const Eigen::VectorXd &v) {
  Bisection b;
  for (Index i = 0; i < v.size(); ++i)
    (v[i] >= 0.0 ? b.first : b.second).push_back(i);
  return b;
}

bool too_small(const Bisection &b, Index min_part, Index n) {
  if (b.first.empty() || b.second.empty()) return true;
  if (min_part <= 0 || n < 2 * (min_part + 1)) return false;
  return static_cast<Index>(std::min(b.first.size(), b.second.size())) <= min_part;
}

Bisection connected_split(const SimilarityGraph &graph, Index min_part,
                          const FiedlerOptions &opts) {
  const Eigen::VectorXd v = fiedler_vector(graph, opts).vector;
  Bisection b = sign_split(v);
  if (too_small(b, min_part, graph.size())) b = median_split(v);
  // ties at the median can still leave an undersized part
  if (too_small(b, min_part, graph.size())) b = ranked_split(v);
  return b;
}

}  // namespace

ClusterTree::ClusterTree(std::vector<ClusterNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InputError("cluster tree has no nodes");
  for (const auto &n : nodes_)
    for (Index c : n.children)
      if (c <= 0 || c >= num_nodes())
        throw InputError("cluster tree child id out of range");
  // breadth-first level lists
  std::vector<Index> frontier{0};
  while (!frontier.empty()) {
    levels_.push_back(frontier);
    std::vector<Index> next;
    for (Index id : frontier)
      for (Index c : nodes_[id].children) next.push_back(c);
    frontier = std::move(next);
  }
  depth_ = static_cast<int>(levels_.size()) - 1;
  if (const std::string err = check_invariants(); !err.empty())
    throw InputError("invalid cluster tree: " + err);
}

ClusterTree ClusterTree::single_cluster(std::span<const Functional> functionals) {
  ClusterNode root;
  root.indices = iota_vector(static_cast<Index>(functionals.size()));
  root.box = support_box(functionals, root.indices);
  return ClusterTree({std::move(root)});
}

std::vector<Index> ClusterTree::leaves() const {
  std::vector<Index> out;
  for (Index id = 0; id < num_nodes(); ++id)
    if (nodes_[id].is_leaf()) out.push_back(id);
  return out;
}

std::string ClusterTree::check_invariants() const {
  const ClusterNode &r = root();
  if (r.level != 0 || r.parent != -1) return "root must have level 0 and no parent";
  const Index n = r.size();
  std::vector<Index> sorted = r.indices;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < n; ++i)
    if (sorted[i] != i) return "root indices are not a permutation of 0..N-1";

  std::vector<int> leaf_hits(n, 0);
  for (Index id = 0; id < num_nodes(); ++id) {
    const ClusterNode &node = nodes_[id];
    if (node.indices.empty()) return "empty cluster";
    if (node.children.empty()) {
      for (Index i : node.indices) ++leaf_hits[i];
      continue;
    }
    if (node.children.size() != 2) return "inner node without exactly two children";
    std::vector<Index> joined;
    for (Index c : node.children) {
      const ClusterNode &child = nodes_[c];
      if (child.parent != id) return "child/parent links disagree";
      if (child.level != node.level + 1) return "child level is not parent level + 1";
      if (child.indices.empty()) return "empty child";
      joined.insert(joined.end(), child.indices.begin(), child.indices.end());
    }
    if (joined != node.indices)
      return "parent indices are not the concatenation of its children";
  }
  for (Index i = 0; i < n; ++i)
    if (leaf_hits[i] != 1) return "functional not in exactly one leaf";
  // each level's clusters are disjoint
  for (const auto &lvl : levels_) {
    std::vector<int> hits(n, 0);
    for (Index id : lvl)
      for (Index i : nodes_[id].indices)
        if (++hits[i] > 1) return "clusters on one level overlap";
  }
  Index reachable = 0;
  for (const auto &lvl : levels_) reachable += static_cast<Index>(lvl.size());
  if (reachable != num_nodes()) return "unreachable nodes";
  return {};
}

bool ClusterTree::operator==(const ClusterTree &other) const {
  if (num_nodes() != other.num_nodes()) return false;
  for (Index id = 0; id < num_nodes(); ++id) {
    const auto &a = nodes_[id];
    const auto &b = other.nodes_[id];
    if (a.indices != b.indices || a.level != b.level ||
        a.children != b.children || a.parent != b.parent || !(a.box == b.box))
      return false;
  }
  return true;
}

FiedlerVector fiedler_vector(const Eigen::MatrixXd &laplacian) {
  const Index n = laplacian.rows();
  if (n < 2) throw InputError("Fiedler vector needs at least two vertices");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian);
  if (es.info() != Eigen::Success)
    throw NumericalError("dense eigensolver failed on a cluster of size " +
                         std::to_string(n));
  FiedlerVector out{es.eigenvalues()[1], es.eigenvectors().col(1)};
  // A numerically double zero eigenvalue leaves the solver free to mix the
  // null space; take the member orthogonal to the constants instead.
  const double scale = std::max(std::abs(es.eigenvalues()[n - 1]), 1e-300);
  if (out.eigenvalue <= 1e-10 * scale) {
    const double a = es.eigenvectors().col(0).sum(), b = es.eigenvectors().col(1).sum();
    const Eigen::VectorXd w = b * es.eigenvectors().col(0) - a * es.eigenvectors().col(1);
    if (w.norm() > 0.0) out.vector = w;
  }
  out.vector.normalize();
  normalize_sign(out.vector);
  return out;
}

FiedlerVector fiedler_vector(const SimilarityGraph &graph,
                             const FiedlerOptions &opts) {
  const Index n = graph.size();
  if (n < 2) throw InputError("Fiedler vector needs at least two vertices");
  if (n <= opts.dense_limit) return fiedler_vector(graph.dense_laplacian());

  // Shift-and-invert Lanczos on (L + sigma I)^{-1} restricted to 1-perp.
  const SparseMatrix L = graph.laplacian();
  const double norm_L = 2.0 * graph.degrees().maxCoeff();  // Gershgorin bound
  if (!(norm_L > 0.0))
    throw NumericalError("Laplacian of an edgeless graph has no Fiedler vector");
  const double sigma = 1e-6 * norm_L;
  const Eigen::MatrixXd ones = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));

  LinearOperator apply;
  Eigen::LLT<Eigen::MatrixXd> dense_fact;
  Eigen::SimplicialLDLT<SparseMatrix> sparse_fact;
  if (L.nonZeros() > n * n / 4) {
    Eigen::MatrixXd A = Eigen::MatrixXd(L);
    A.diagonal().array() += sigma;
    dense_fact.compute(A);
    if (dense_fact.info() != Eigen::Success)
      throw NumericalError("shifted Laplacian factorization failed");
    apply = [&](const Eigen::VectorXd &x, Eigen::VectorXd &y) { y = dense_fact.solve(x); };
  } else {
    SparseMatrix A = L;
    for (Index i = 0; i < n; ++i) A.coeffRef(i, i) += sigma;
    sparse_fact.compute(A);
    if (sparse_fact.info() != Eigen::Success)
      throw NumericalError("shifted Laplacian factorization failed");
    apply = [&](const Eigen::VectorXd &x, Eigen::VectorXd &y) { y = sparse_fact.solve(x); };
  }
  LanczosOptions lo;
  lo.rel_tol = 0.1 * opts.residual_tol;
  const RitzPair rp = lanczos_largest(apply, n, ones, lo);

  FiedlerVector out{1.0 / rp.value - sigma, rp.vector};
  const double residual = (L * out.vector - out.eigenvalue * out.vector).norm();
  if (residual > opts.residual_tol * norm_L)
    throw NumericalError("Fiedler vector residual " + std::to_string(residual) +
                         " above tolerance on a cluster of size " + std::to_string(n));
  normalize_sign(out.vector);
  return out;
}

Bisection spectral_bisection(const SimilarityGraph &graph, Index min_part,
                             const FiedlerOptions &opts) {
  const Index n = graph.size();
  if (n < 2) throw InputError("bisection needs a cluster of size >= 2");

  Index ncomp = 0;
  const std::vector<Index> label = graph.components(&ncomp);
  if (ncomp == 1) return connected_split(graph, min_part, opts);

  std::vector<std::vector<Index>> comps(ncomp);
  for (Index i = 0; i < n; ++i) comps[label[i]].push_back(i);
  std::vector<Index> order = iota_vector(ncomp);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return comps[a].size() > comps[b].size();
  });

  // Greedy balanced grouping of whole components.
  std::vector<int> side(ncomp, 0);
  Index size0 = 0, size1 = 0;
  for (Index c : order) {
    if (size0 <= size1) {
      side[c] = 0;
      size0 += static_cast<Index>(comps[c].size());
    } else {
      side[c] = 1;
      size1 += static_cast<Index>(comps[c].size());
    }
  }
  Bisection b;
  b.rule = SplitRule::kComponents;
  for (Index i = 0; i < n; ++i) (side[label[i]] == 0 ? b.first : b.second).push_back(i);
  if (!too_small(b, min_part, n)) return b;

  // Small components would produce an undersized part: split the largest
  // component spectrally and attach the rest to the smaller side.
  const std::vector<Index> &big = comps[order.front()];
  if (static_cast<Index>(big.size()) < 2) return b;
  const Bisection inner = connected_split(graph.induced(big), 0, opts);
  std::vector<int> part(n, -1);
  Index s0 = 0, s1 = 0;
  for (Index p : inner.first) part[big[p]] = 0, ++s0;
  for (Index p : inner.second) part[big[p]] = 1, ++s1;
  for (Index k = 1; k < ncomp; ++k) {
    const auto &comp = comps[order[k]];
    const int s = s0 <= s1 ? 0 : 1;
    for (Index i : comp) part[i] = s;
    (s == 0 ? s0 : s1) += static_cast<Index>(comp.size());
  }
  Bisection attached;
  attached.rule = SplitRule::kComponentsAttached;
  for (Index i = 0; i < n; ++i) (part[i] == 0 ? attached.first : attached.second).push_back(i);
  return attached;
}

Bisection spectral_bisection(std::span<const Index> cluster,
                             const SimilarityGraph &graph, Index min_part,
                             const FiedlerOptions &opts) {
  if (cluster.size() < 2) throw InputError("bisection needs a cluster of size >= 2");
  Bisection local = spectral_bisection(graph.induced(cluster), min_part, opts);
  for (auto &i : local.first) i = cluster[i];
  for (auto &i : local.second) i = cluster[i];
  return local;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(std::span<const Functional> fs, const TreeOptions &opts)
      : fs_(fs), opts_(opts) {}

  Index build(std::vector<Index> indices, const SimilarityGraph &graph,
              int level, Index parent) {
    const Index id = static_cast<Index>(nodes_.size());
    nodes_.emplace_back();
    nodes_[id].level = level;
    nodes_[id].parent = parent;

    if (static_cast<Index>(indices.size()) > opts_.leaf_max) {
      Bisection split;
      try {
        split = spectral_bisection(graph, opts_.primitive_count, opts_.fiedler);
      } catch (const NumericalError &e) {
        throw NumericalError(std::string(e.what()) + " (cluster " +
                             std::to_string(id) + ", level " +
                             std::to_string(level) + ")");
      }
      const Index smaller = static_cast<Index>(std::min(split.first.size(), split.second.size()));
      if (smaller > opts_.primitive_count) {
        std::vector<Index> joined;
        for (const auto *part : {&split.first, &split.second}) {
          std::vector<Index> child_idx;
          child_idx.reserve(part->size());
          for (Index p : *part) child_idx.push_back(indices[p]);
          const SimilarityGraph sub = graph.induced(*part);
          const Index c = build(std::move(child_idx), sub, level + 1, id);
          nodes_[id].children.push_back(c);
          joined.insert(joined.end(), nodes_[c].indices.begin(), nodes_[c].indices.end());
        }
        indices = std::move(joined);
      }
    }
    nodes_[id].box = support_box(fs_, indices);
    nodes_[id].indices = std::move(indices);
    return id;
  }

  std::vector<ClusterNode> release() { return std::move(nodes_); }

 private:
  std::span<const Functional> fs_;
  const TreeOptions &opts_;
  std::vector<ClusterNode> nodes_;
};

}  // namespace

ClusterTree build_cluster_tree(std::span<const Functional> functionals,
                               const SimilarityScheme &scheme,
                               const TreeOptions &opts) {
  const Index n = static_cast<Index>(functionals.size());
  common_dimension(functionals);
  if (n <= opts.primitive_count)
    throw InputError("no samplets constructible: N = " + std::to_string(n) +
                     " does not exceed the number of primitives " +
                     std::to_string(opts.primitive_count));
  if (opts.leaf_max <= opts.primitive_count)
    throw InputError("leaf_max must exceed the number of primitives");
  const SimilarityGraph graph = build_graph(functionals, scheme);
  TreeBuilder builder(functionals, opts);
  builder.build(iota_vector(n), graph, 0, -1);
  return ClusterTree(builder.release());
}

}  // namespace gensamplets
