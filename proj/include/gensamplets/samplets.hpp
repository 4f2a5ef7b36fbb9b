#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>
#include <vector>

#include "gensamplets/ctree.hpp"
#include "gensamplets/measures.hpp"

namespace gensamplets {

/// Pairings of the primitives (rows) with a cluster's child scaling
/// functionals (columns).
struct MomentMatrix {
  Eigen::MatrixXd values;
  Index cluster = -1;
};

/// Two-scale filter of one cluster: Q = [Q_phi, Q_psi] orthogonal and
/// M Q = R^T padded with zero columns.
struct ClusterFilters {
  Eigen::MatrixXd Q;  // n x n
  Eigen::MatrixXd R;  // min(m_P, n) x m_P, upper triangular, diag >= 0
  Index m_phi = 0;

  Index n() const { return Q.rows(); }
  Index num_samplets() const { return Q.rows() - m_phi; }
  auto Q_phi() const { return Q.leftCols(m_phi); }
  auto Q_psi() const { return Q.rightCols(Q.cols() - m_phi); }
  /// Moments of the cluster's own scaling functionals, (R^T) restricted to
  /// the first m_phi columns.
  Eigen::MatrixXd scaling_moments() const { return R.topRows(m_phi).transpose(); }

  bool operator==(const ClusterFilters &o) const {
    return m_phi == o.m_phi && Q == o.Q && R == o.R;
  }
};

/// One row of the global transform U.
struct SampletInfo {
  Index node = -1;
  int level = 0;
  /// True for the root scaling functionals kept as the last rows of U.
  bool scaling = false;
  /// Column of the cluster filter that produced this row.
  Index column = 0;
  SupportBox box;
  double diameter = 0.0;
  /// Coefficients aligned with tree().node(node).indices.
  Eigen::VectorXd coefficients;
};

/// Orthogonal samplet transform over N functionals. Rows of U are ordered by
/// level (coarse to fine, clusters left to right, filter column order) and
/// end with the root scaling functionals.
class SampletBasis {
 public:
  /// Assembles rows and metadata from a tree and per-node filters. `boxes`,
  /// when given, supplies the per-row support boxes in row order; otherwise
  /// cluster boxes are used.
  SampletBasis(ClusterTree tree, int dim, int degree,
               std::vector<ClusterFilters> filters,
               std::vector<SupportBox> boxes = {});

  const ClusterTree &tree() const { return tree_; }
  int dimension() const { return dim_; }
  int degree() const { return degree_; }
  Index primitive_count() const { return m_p_; }
  Index size() const { return tree_.size(); }
  Index num_samplets() const { return size() - filters_.front().m_phi; }

  const std::vector<ClusterFilters> &filters() const { return filters_; }
  const std::vector<SampletInfo> &samplets() const { return rows_; }
  const SampletInfo &samplet(Index i) const { return rows_.at(i); }
  /// Row position of the first samplet of a node.
  Index offset(Index node) const { return offsets_.at(node); }
  std::span<const Index> support(Index i) const {
    return tree_.node(rows_.at(i).node).indices;
  }

  Eigen::VectorXd forward(const Eigen::VectorXd &x) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd &c) const;

  Eigen::MatrixXd dense() const;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse() const;

 private:
  void build_plan();
  void assemble_rows(std::vector<SupportBox> boxes);

  ClusterTree tree_;
  int dim_;
  int degree_;
  Index m_p_;
  std::vector<ClusterFilters> filters_;
  std::vector<Index> offsets_;
  // Flat transform plan, one step per node in bottom-up order. Inner nodes
  // read their stacked child scaling values from the workspace at `in`,
  // leaves gather x through leaf_perm_ starting at `in`.
  struct Step {
    Index n, m_phi, q_at, in, scal, out;
    bool leaf;
  };
  std::vector<Step> plan_;
  std::vector<double> packed_;  // Q matrices back to back, column-major
  std::vector<Index> leaf_perm_;
  Index workspace_ = 0;
  Index max_n_ = 0;
  std::vector<SampletInfo> rows_;
};

/// Direct moment matrix: `scaling_rows` (k x |cluster|) applied to the
/// pairings of every functional in `cluster` with every primitive.
MomentMatrix moment_matrix(std::span<const Functional> functionals,
                           std::span<const Index> cluster,
                           const Eigen::MatrixXd &scaling_rows,
                           const PrimitiveBasis &primitives);

/// Leaf moment matrix: the raw functionals are the scaling functionals.
MomentMatrix moment_matrix(std::span<const Functional> functionals,
                           std::span<const Index> cluster,
                           const PrimitiveBasis &primitives);

/// Householder QR of M^T with nonnegative diagonal of R.
ClusterFilters cluster_filters(const Eigen::MatrixXd &M);

/// Bottom-up construction over `tree`. Parent moment matrices are obtained
/// by re-expanding the children's scaling moments in the parent's primitive
/// basis, never by revisiting the raw functionals.
SampletBasis build_samplet_basis(std::span<const Functional> functionals,
                                 ClusterTree tree, int degree);

Eigen::VectorXd forward_transform(const SampletBasis &basis,
                                  const Eigen::VectorXd &x);
Eigen::VectorXd inverse_transform(const SampletBasis &basis,
                                  const Eigen::VectorXd &c);

/// Largest normalized moment |u_i . [(f_j, p)]_j| / ||[(f_j, p)]_j|| over all
/// samplets and all primitives of `degree` on each samplet's cluster box.
double verify_vanishing_moments(const SampletBasis &basis,
                                std::span<const Functional> functionals,
                                int degree);

/// U A U^T via the transform cascade on columns, then rows.
Eigen::MatrixXd transform_matrix(const SampletBasis &basis,
                                 const Eigen::MatrixXd &A);

/// U^T C U, the inverse of transform_matrix.
Eigen::MatrixXd inverse_transform_matrix(const SampletBasis &basis,
                                         const Eigen::MatrixXd &C);

struct CompressedMatrix {
  Eigen::SparseMatrix<double> values;
  Index kept = 0;
  Index total = 0;
  double threshold = 0.0;  // absolute
  double dropped_norm = 0.0;
};

/// Zeroes entries with |c| < sigma * max|c|.
CompressedMatrix threshold_compress(const Eigen::MatrixXd &C, double sigma);
CompressedMatrix threshold_compress(const Eigen::VectorXd &c, double sigma);

}  // namespace gensamplets
