#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gensamplets/measures.hpp"
#include "gensamplets/simgraph.hpp"

namespace gensamplets {

struct ClusterNode {
  /// Functional positions (0-based); for inner nodes the concatenation of
  /// the children's lists.
  std::vector<Index> indices;
  int level = 0;
  /// Node ids of the children, empty for leaves, otherwise exactly two.
  std::vector<Index> children;
  Index parent = -1;
  SupportBox box;

  bool is_leaf() const { return children.empty(); }
  Index size() const { return static_cast<Index>(indices.size()); }
};

/// Binary cluster tree stored flat in preorder (node 0 is the root).
class ClusterTree {
 public:
  /// Takes ownership of preorder nodes and validates the partition and
  /// level invariants; throws InputError if they fail.
  explicit ClusterTree(std::vector<ClusterNode> nodes);

  /// Root-only tree holding every functional.
  static ClusterTree single_cluster(std::span<const Functional> functionals);

  const std::vector<ClusterNode> &nodes() const { return nodes_; }
  const ClusterNode &node(Index id) const { return nodes_.at(id); }
  const ClusterNode &root() const { return nodes_.front(); }
  Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
  /// Number of functionals N.
  Index size() const { return root().size(); }
  /// Maximum level J.
  int depth() const { return depth_; }

  std::vector<Index> leaves() const;
  /// Node ids per level, each level in breadth-first (left to right) order.
  const std::vector<std::vector<Index>> &levels() const { return levels_; }

  /// Empty string when partition/level/coverage invariants hold.
  std::string check_invariants() const;

  bool operator==(const ClusterTree &other) const;

 private:
  std::vector<ClusterNode> nodes_;
  std::vector<std::vector<Index>> levels_;
  int depth_ = 0;
};

struct FiedlerVector {
  double eigenvalue = 0.0;
  Eigen::VectorXd vector;
};

struct FiedlerOptions {
  /// Clusters up to this size use a dense symmetric eigensolver.
  Index dense_limit = 512;
  /// Residual tolerance relative to ||L|| for the iterative path.
  double residual_tol = 1e-8;
};

/// Unit eigenvector of the second smallest Laplacian eigenvalue, signed so
/// that its first entry of largest magnitude is positive.
FiedlerVector fiedler_vector(const Eigen::MatrixXd &laplacian);
FiedlerVector fiedler_vector(const SimilarityGraph &graph,
                             const FiedlerOptions &opts = {});

enum class SplitRule { kSign, kMedian, kComponents, kComponentsAttached };

struct Bisection {
  std::vector<Index> first;
  std::vector<Index> second;
  SplitRule rule = SplitRule::kSign;
};

/// Two-way split of a graph's vertices (local positions). `min_part` > 0
/// asks for both parts to exceed `min_part` whenever the size allows it; see
/// the README for the fallback ladder.
Bisection spectral_bisection(const SimilarityGraph &graph, Index min_part = 0,
                             const FiedlerOptions &opts = {});

/// Split of `cluster` (functional positions) on the subgraph induced by it.
Bisection spectral_bisection(std::span<const Index> cluster,
                             const SimilarityGraph &graph, Index min_part = 0,
                             const FiedlerOptions &opts = {});

struct TreeOptions {
  Index leaf_max = 0;
  /// m_P; no child may have this many members or fewer.
  Index primitive_count = 1;
  FiedlerOptions fiedler;
};

/// Recursive spectral bisection until clusters hold at most leaf_max
/// functionals.
ClusterTree build_cluster_tree(std::span<const Functional> functionals,
                               const SimilarityScheme &scheme,
                               const TreeOptions &opts);

}  // namespace gensamplets
