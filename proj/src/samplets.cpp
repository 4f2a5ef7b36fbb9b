#include "gensamplets/samplets.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "gensamplets/errors.hpp"

namespace gensamplets {

namespace {

// Number of child scaling functionals feeding a node.
Index input_count(const ClusterTree &tree,
                  const std::vector<ClusterFilters> &filters, Index id) {
  const ClusterNode &node = tree.node(id);
  if (node.is_leaf()) return node.size();
  Index n = 0;
  for (Index c : node.children) n += filters[c].m_phi;
  return n;
}

}  // namespace

SampletBasis::SampletBasis(ClusterTree tree, int dim, int degree,
                           std::vector<ClusterFilters> filters,
                           std::vector<SupportBox> boxes)
    : tree_(std::move(tree)),
      dim_(dim),
      degree_(degree),
      m_p_(gensamplets::primitive_count(dim, degree)),
      filters_(std::move(filters)) {
  if (static_cast<Index>(filters_.size()) != tree_.num_nodes())
    throw InputError("one filter per cluster required");
  for (Index id = tree_.num_nodes() - 1; id >= 0; --id) {
    const ClusterFilters &f = filters_[id];
    const Index n = input_count(tree_, filters_, id);
    if (f.Q.rows() != n || f.Q.cols() != n)
      throw InputError("filter of cluster " + std::to_string(id) + " has wrong shape");
    if (f.m_phi != std::min(m_p_, n))
      throw InputError("filter of cluster " + std::to_string(id) +
                       " has inconsistent scaling count");
  }
  // level-ordered offsets, root scaling rows last
  offsets_.assign(tree_.num_nodes(), 0);
  Index pos = 0;
  for (const auto &level : tree_.levels())
    for (Index id : level) {
      offsets_[id] = pos;
      pos += filters_[id].num_samplets();
    }
  if (pos + filters_.front().m_phi != size())
    throw InputError("filters do not produce N rows");
  build_plan();
  assemble_rows(std::move(boxes));
}

void SampletBasis::build_plan() {
  const Index nodes = tree_.num_nodes();
  std::vector<Index> scal(nodes, 0), in(nodes, 0);
  Index ws = filters_.front().m_phi;  // root scaling values first
  for (Index id = 0; id < nodes; ++id) {
    const ClusterNode &node = tree_.node(id);
    if (node.is_leaf()) continue;
    in[id] = ws;
    for (Index c : node.children) {
      scal[c] = ws;
      ws += filters_[c].m_phi;
    }
  }
  workspace_ = ws;
  Index total = 0;
  for (const auto &f : filters_) total += f.Q.size();
  packed_.resize(total);
  leaf_perm_.clear();
  leaf_perm_.reserve(size());
  plan_.clear();
  plan_.reserve(nodes);
  Index at = 0;
  for (Index id = nodes - 1; id >= 0; --id) {
    const ClusterNode &node = tree_.node(id);
    const ClusterFilters &f = filters_[id];
    Step step{f.n(), f.m_phi, at, in[id], scal[id], offsets_[id], node.is_leaf()};
    if (step.leaf) {
      step.in = static_cast<Index>(leaf_perm_.size());
      leaf_perm_.insert(leaf_perm_.end(), node.indices.begin(), node.indices.end());
    }
    std::copy(f.Q.data(), f.Q.data() + f.Q.size(), packed_.data() + at);
    at += f.Q.size();
    max_n_ = std::max(max_n_, step.n);
    plan_.push_back(step);
  }
}

void SampletBasis::assemble_rows(std::vector<SupportBox> boxes) {
  const Index N = size();
  rows_.assign(N, {});
  // scaling rows per node, aligned with node.indices
  std::vector<Eigen::MatrixXd> scal(tree_.num_nodes());
  auto emit = [&](Index id, Index row, Index column, bool scaling,
                  Eigen::VectorXd coeffs) {
    SampletInfo &info = rows_[row];
    info.node = id;
    info.level = tree_.node(id).level;
    info.scaling = scaling;
    info.column = column;
    info.box = tree_.node(id).box;
    info.coefficients = std::move(coeffs);
  };
  for (Index id = tree_.num_nodes() - 1; id >= 0; --id) {
    const ClusterNode &node = tree_.node(id);
    const ClusterFilters &f = filters_[id];
    Eigen::MatrixXd rows;  // n x |node|: Q^T applied to the child scaling rows
    if (node.is_leaf()) {
      rows = f.Q.transpose();
    } else {
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(f.n(), node.size());
      Index r = 0, c = 0;
      for (Index ch : node.children) {
        B.block(r, c, scal[ch].rows(), scal[ch].cols()) = scal[ch];
        r += scal[ch].rows();
        c += scal[ch].cols();
        scal[ch].resize(0, 0);
      }
      rows = f.Q.transpose() * B;
    }
    for (Index k = f.m_phi; k < f.n(); ++k)
      emit(id, offsets_[id] + (k - f.m_phi), k, false, rows.row(k).transpose());
    scal[id] = rows.topRows(f.m_phi);
  }
  const Index mphi = filters_.front().m_phi;
  for (Index k = 0; k < mphi; ++k)
    emit(0, N - mphi + k, k, true, scal[0].row(k).transpose());

  if (!boxes.empty()) {
    if (static_cast<Index>(boxes.size()) != N)
      throw InputError("one support box per row required");
    for (Index i = 0; i < N; ++i) rows_[i].box = std::move(boxes[i]);
  }
  for (auto &info : rows_) info.diameter = info.box.diameter();
}

Eigen::VectorXd SampletBasis::forward(const Eigen::VectorXd &x) const {
  if (x.size() != size())
    throw InputError("forward transform: expected length " + std::to_string(size()));
  Eigen::VectorXd out(size());
  Eigen::VectorXd ws(workspace_), leaf(max_n_), t(max_n_);
  for (const Step &st : plan_) {
    const Eigen::Map<const Eigen::MatrixXd> Q(packed_.data() + st.q_at, st.n, st.n);
    if (st.leaf) {
      const Index *perm = leaf_perm_.data() + st.in;
      for (Index p = 0; p < st.n; ++p) leaf[p] = x[perm[p]];
      t.head(st.n).noalias() = Q.transpose() * leaf.head(st.n);
    } else {
      t.head(st.n).noalias() = Q.transpose() * ws.segment(st.in, st.n);
    }
    out.segment(st.out, st.n - st.m_phi) = t.segment(st.m_phi, st.n - st.m_phi);
    ws.segment(st.scal, st.m_phi) = t.head(st.m_phi);
  }
  const Index mphi = filters_.front().m_phi;
  out.tail(mphi) = ws.head(mphi);
  return out;
}

Eigen::VectorXd SampletBasis::inverse(const Eigen::VectorXd &c) const {
  if (c.size() != size())
    throw InputError("inverse transform: expected length " + std::to_string(size()));
  Eigen::VectorXd x(size());
  Eigen::VectorXd ws(workspace_), t(max_n_), s(max_n_);
  const Index mphi = filters_.front().m_phi;
  ws.head(mphi) = c.tail(mphi);
  for (auto it = plan_.rbegin(); it != plan_.rend(); ++it) {
    const Step &st = *it;
    const Eigen::Map<const Eigen::MatrixXd> Q(packed_.data() + st.q_at, st.n, st.n);
    t.head(st.m_phi) = ws.segment(st.scal, st.m_phi);
    t.segment(st.m_phi, st.n - st.m_phi) = c.segment(st.out, st.n - st.m_phi);
    if (st.leaf) {
      s.head(st.n).noalias() = Q * t.head(st.n);
      const Index *perm = leaf_perm_.data() + st.in;
      for (Index p = 0; p < st.n; ++p) x[perm[p]] = s[p];
    } else {
      ws.segment(st.in, st.n).noalias() = Q * t.head(st.n);
    }
  }
  return x;
}

Eigen::MatrixXd SampletBasis::dense() const {
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(size(), size());
  for (Index i = 0; i < size(); ++i) {
    const auto idx = support(i);
    for (Index p = 0; p < static_cast<Index>(idx.size()); ++p)
      U(i, idx[p]) = rows_[i].coefficients[p];
  }
  return U;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> SampletBasis::sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (Index i = 0; i < size(); ++i) {
    const auto idx = support(i);
    for (Index p = 0; p < static_cast<Index>(idx.size()); ++p)
      if (rows_[i].coefficients[p] != 0.0)
        trips.emplace_back(i, idx[p], rows_[i].coefficients[p]);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> U(size(), size());
  U.setFromTriplets(trips.begin(), trips.end());
  return U;
}

MomentMatrix moment_matrix(std::span<const Functional> functionals,
                           std::span<const Index> cluster,
                           const Eigen::MatrixXd &scaling_rows,
                           const PrimitiveBasis &primitives) {
  const Index n = static_cast<Index>(cluster.size());
  if (scaling_rows.cols() != n)
    throw InputError("scaling rows do not match the cluster size");
  Eigen::MatrixXd pairings(primitives.size(), n);
  for (Index p = 0; p < n; ++p) pairings.col(p) = primitives.moments(functionals[cluster[p]]);
  return {pairings * scaling_rows.transpose(), -1};
}

MomentMatrix moment_matrix(std::span<const Functional> functionals,
                           std::span<const Index> cluster,
                           const PrimitiveBasis &primitives) {
  Eigen::MatrixXd M(primitives.size(), static_cast<Index>(cluster.size()));
  for (Index p = 0; p < M.cols(); ++p) M.col(p) = primitives.moments(functionals[cluster[p]]);
  return {std::move(M), -1};
}

ClusterFilters cluster_filters(const Eigen::MatrixXd &M) {
  const Index m_p = M.rows();
  const Index n = M.cols();
  if (n < 1) throw InputError("moment matrix without columns");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M.transpose());
  ClusterFilters f;
  f.Q = qr.householderQ();
  const Index r = std::min(m_p, n);
  f.R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (Index k = 0; k < r; ++k)
    if (f.R(k, k) < 0.0) {
      f.R.row(k) *= -1.0;
      f.Q.col(k) *= -1.0;
    }
  f.m_phi = r;
  return f;
}

SampletBasis build_samplet_basis(std::span<const Functional> functionals,
                                 ClusterTree tree, int degree) {
  const Index N = static_cast<Index>(functionals.size());
  if (tree.size() != N) throw InputError("tree does not match the functional count");
  const int dim = static_cast<int>(common_dimension(functionals));
  const Index m_p = primitive_count(dim, degree);
  if (tree.num_nodes() > 1)
    for (Index id : tree.leaves())
      if (tree.node(id).size() <= m_p)
        throw InputError("leaf cluster " + std::to_string(id) + " has " +
                         std::to_string(tree.node(id).size()) +
                         " functionals, needs more than " + std::to_string(m_p));

  std::vector<ClusterFilters> filters(tree.num_nodes());
  std::vector<PrimitiveBasis> prims;
  prims.reserve(tree.num_nodes());
  for (const auto &node : tree.nodes()) prims.emplace_back(dim, degree, node.box);

  std::vector<Eigen::MatrixXd> child_moments(tree.num_nodes());
  for (Index id = tree.num_nodes() - 1; id >= 0; --id) {
    const ClusterNode &node = tree.node(id);
    Eigen::MatrixXd M;
    if (node.is_leaf()) {
      M = moment_matrix(functionals, node.indices, prims[id]).values;
    } else {
      Index cols = 0;
      for (Index c : node.children) cols += filters[c].m_phi;
      M.resize(m_p, cols);
      Index at = 0;
      for (Index c : node.children) {
        const Eigen::MatrixXd T = prims[id].expansion_in(prims[c]);
        M.middleCols(at, filters[c].m_phi) = T * filters[c].scaling_moments();
        at += filters[c].m_phi;
      }
    }
    filters[id] = cluster_filters(M);
  }

  // Per-row support boxes from the functionals actually carrying weight.
  SampletBasis staged(std::move(tree), dim, degree, std::move(filters));
  std::vector<SupportBox> boxes;
  boxes.reserve(N);
  for (Index i = 0; i < N; ++i) {
    const SampletInfo &info = staged.samplet(i);
    const auto idx = staged.support(i);
    std::optional<SupportBox> box;
    for (Index p = 0; p < static_cast<Index>(idx.size()); ++p) {
      if (info.coefficients[p] == 0.0) continue;
      const SupportBox b = support_box(functionals[idx[p]]);
      if (box) box->expand(b); else box = b;
    }
    boxes.push_back(box ? *box : info.box);
  }
  ClusterTree t = staged.tree();
  std::vector<ClusterFilters> fl = staged.filters();
  return SampletBasis(std::move(t), dim, degree, std::move(fl), std::move(boxes));
}

Eigen::VectorXd forward_transform(const SampletBasis &basis, const Eigen::VectorXd &x) {
  return basis.forward(x);
}

Eigen::VectorXd inverse_transform(const SampletBasis &basis, const Eigen::VectorXd &c) {
  return basis.inverse(c);
}

double verify_vanishing_moments(const SampletBasis &basis,
                                std::span<const Functional> functionals,
                                int degree) {
  if (static_cast<Index>(functionals.size()) != basis.size())
    throw InputError("functional count differs from the basis size");
  const ClusterTree &tree = basis.tree();
  double worst = 0.0;
  for (Index id = 0; id < tree.num_nodes(); ++id) {
    const ClusterFilters &f = basis.filters()[id];
    if (f.num_samplets() == 0) continue;
    const ClusterNode &node = tree.node(id);
    const PrimitiveBasis prims(basis.dimension(), degree, node.box);
    const Eigen::MatrixXd pairings =
        moment_matrix(functionals, node.indices, prims).values;  // m x |node|
    const Eigen::VectorXd norms = pairings.rowwise().norm();
    for (Index k = 0; k < f.num_samplets(); ++k) {
      const Eigen::VectorXd r = pairings * basis.samplet(basis.offset(id) + k).coefficients;
      for (Index a = 0; a < r.size(); ++a)
        if (norms[a] > 0.0) worst = std::max(worst, std::abs(r[a]) / norms[a]);
    }
  }
  return worst;
}

Eigen::MatrixXd transform_matrix(const SampletBasis &basis, const Eigen::MatrixXd &A) {
  if (A.rows() != basis.size() || A.cols() != basis.size())
    throw InputError("transform_matrix: matrix must be N x N");
  Eigen::MatrixXd B(A.rows(), A.cols());
  for (Index j = 0; j < A.cols(); ++j) B.col(j) = basis.forward(A.col(j));
  Eigen::MatrixXd C(A.rows(), A.cols());
  for (Index i = 0; i < B.rows(); ++i) C.row(i) = basis.forward(B.row(i).transpose()).transpose();
  return C;
}

Eigen::MatrixXd inverse_transform_matrix(const SampletBasis &basis,
                                         const Eigen::MatrixXd &C) {
  if (C.rows() != basis.size() || C.cols() != basis.size())
    throw InputError("inverse_transform_matrix: matrix must be N x N");
  Eigen::MatrixXd B(C.rows(), C.cols());
  for (Index j = 0; j < C.cols(); ++j) B.col(j) = basis.inverse(C.col(j));
  Eigen::MatrixXd A(C.rows(), C.cols());
  for (Index i = 0; i < B.rows(); ++i) A.row(i) = basis.inverse(B.row(i).transpose()).transpose();
  return A;
}

CompressedMatrix threshold_compress(const Eigen::MatrixXd &C, double sigma) {
  if (!(sigma >= 0.0)) throw InputError("threshold sigma must be >= 0");
  CompressedMatrix out;
  out.total = C.size();
  out.threshold = C.size() ? sigma * C.cwiseAbs().maxCoeff() : 0.0;
  std::vector<Eigen::Triplet<double>> trips;
  double dropped = 0.0;
  for (Index j = 0; j < C.cols(); ++j)
    for (Index i = 0; i < C.rows(); ++i) {
      const double v = C(i, j);
      if (std::abs(v) < out.threshold) {
        dropped += v * v;
      } else {
        trips.emplace_back(i, j, v);
      }
    }
  out.kept = static_cast<Index>(trips.size());
  out.dropped_norm = std::sqrt(dropped);
  out.values.resize(C.rows(), C.cols());
  out.values.setFromTriplets(trips.begin(), trips.end());
  return out;
}

CompressedMatrix threshold_compress(const Eigen::VectorXd &c, double sigma) {
  return threshold_compress(Eigen::MatrixXd(c), sigma);
}

}  // namespace gensamplets
