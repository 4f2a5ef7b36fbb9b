#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gensamplets/measures.hpp"

namespace gensamplets {

struct EpsilonNeighborhood {
  double epsilon;
};
struct MutualKNN {
  int k;
};
struct Gaussian {
  double length;
};

/// Similarity rule s(f_i, f_j) on top of the support distance.
class SimilarityScheme {
 public:
  using Variant = std::variant<EpsilonNeighborhood, MutualKNN, Gaussian>;

  SimilarityScheme(Variant v);  // NOLINT: implicit from the alternatives
  const Variant &variant() const { return v_; }
  std::string describe() const;

  static SimilarityScheme epsilon(double eps) { return Variant{EpsilonNeighborhood{eps}}; }
  static SimilarityScheme knn(int k) { return Variant{MutualKNN{k}}; }
  static SimilarityScheme gaussian(double ell) { return Variant{Gaussian{ell}}; }

 private:
  Variant v_;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Weighted undirected similarity graph with its unnormalized Laplacian.
class SimilarityGraph {
 public:
  /// `W` must be symmetric with nonnegative entries.
  explicit SimilarityGraph(SparseMatrix W);

  Index size() const { return W_.rows(); }
  const SparseMatrix &weights() const { return W_; }
  const Eigen::VectorXd &degrees() const { return degrees_; }

  /// L = D - W; the diagonal of W cancels.
  SparseMatrix laplacian() const;
  Eigen::MatrixXd dense_laplacian() const;

  /// Graph on the vertices `indices` keeping only edges between them.
  SimilarityGraph induced(std::span<const Index> indices) const;

  /// Component label per vertex, labels numbered by first occurrence.
  std::vector<Index> components(Index *count = nullptr) const;

 private:
  SparseMatrix W_;
  Eigen::VectorXd degrees_;
};

/// Euclidean distance between two axis-aligned boxes (0 if they intersect).
double box_distance(const SupportBox &a, const SupportBox &b);
double support_distance(const Functional &fi, const Functional &fj);

/// Pairwise similarity for the distance-only schemes (epsilon, Gaussian).
/// The k-NN rule depends on the whole functional set; use build_graph.
double similarity(double distance, const SimilarityScheme &scheme);
double similarity(const Functional &fi, const Functional &fj,
                  const SimilarityScheme &scheme);

/// Indices of the k nearest boxes to box i (excluding i), ties broken by
/// ascending index. Exact, accelerated by a bounding volume hierarchy.
std::vector<std::vector<Index>> k_nearest(std::span<const SupportBox> boxes,
                                          int k);

SimilarityGraph build_graph(std::span<const Functional> functionals,
                            const SimilarityScheme &scheme);
SimilarityGraph build_graph(std::span<const SupportBox> boxes,
                            const SimilarityScheme &scheme);

}  // namespace gensamplets
