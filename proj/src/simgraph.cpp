#include "gensamplets/simgraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "gensamplets/errors.hpp"

namespace gensamplets {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Bounding volume hierarchy over boxes for exact range and k-NN queries.
class BoxHierarchy {
 public:
  explicit BoxHierarchy(std::span<const SupportBox> boxes) : boxes_(boxes) {
    order_.resize(boxes.size());
    std::iota(order_.begin(), order_.end(), Index{0});
    if (!boxes.empty()) build(0, static_cast<Index>(boxes.size()));
  }

  template <class Visit>
  void within(const SupportBox &q, double radius, Visit &&visit) const {
    if (nodes_.empty()) return;
    std::vector<Index> stack{0};
    while (!stack.empty()) {
      const Node &n = nodes_[stack.back()];
      stack.pop_back();
      if (box_distance(q, n.bound) >= radius) continue;
      if (n.left < 0) {
        for (Index p = n.begin; p < n.end; ++p) {
          const Index i = order_[p];
          const double d = box_distance(q, boxes_[i]);
          if (d < radius) visit(i, d);
        }
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
  }

  std::vector<Index> nearest(Index self, int k) const {
    using Entry = std::pair<double, Index>;
    std::priority_queue<Entry> best;  // max-heap on (distance, index)
    const SupportBox &q = boxes_[self];
    auto worse_than_worst = [&](double d) {
      return static_cast<int>(best.size()) == k && d > best.top().first;
    };
    std::vector<Index> stack{0};
    while (!stack.empty()) {
      const Node &n = nodes_[stack.back()];
      stack.pop_back();
      if (worse_than_worst(box_distance(q, n.bound))) continue;
      if (n.left < 0) {
        for (Index p = n.begin; p < n.end; ++p) {
          const Index i = order_[p];
          if (i == self) continue;
          const Entry e{box_distance(q, boxes_[i]), i};
          if (static_cast<int>(best.size()) < k) {
            best.push(e);
          } else if (e < best.top()) {
            best.pop();
            best.push(e);
          }
        }
      } else {
        const double dl = box_distance(q, nodes_[n.left].bound);
        const double dr = box_distance(q, nodes_[n.right].bound);
        // nearer child on top of the stack
        if (dl <= dr) {
          stack.push_back(n.right);
          stack.push_back(n.left);
        } else {
          stack.push_back(n.left);
          stack.push_back(n.right);
        }
      }
    }
    std::vector<Index> out;
    out.reserve(best.size());
    while (!best.empty()) {
      out.push_back(best.top().second);
      best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    SupportBox bound;
    Index begin, end;
    Index left = -1, right = -1;
  };

  Index build(Index begin, Index end) {
    SupportBox bound = boxes_[order_[begin]];
    for (Index p = begin; p < end; ++p) bound.expand(boxes_[order_[p]]);
    const Index id = static_cast<Index>(nodes_.size());
    nodes_.push_back({bound, begin, end});
    if (end - begin <= 8) return id;
    Index axis;
    (bound.upper - bound.lower).maxCoeff(&axis);
    const Index mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](Index a, Index b) {
                       const double ca = boxes_[a].lower[axis] + boxes_[a].upper[axis];
                       const double cb = boxes_[b].lower[axis] + boxes_[b].upper[axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    const Index l = build(begin, mid);
    const Index r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::span<const SupportBox> boxes_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
};

}  // namespace

SimilarityScheme::SimilarityScheme(Variant v) : v_(v) {
  std::visit(overloaded{
                 [](const EpsilonNeighborhood &s) {
                   if (!(s.epsilon > 0.0))
                     throw InputError("epsilon must be positive");
                 },
                 [](const MutualKNN &s) {
                   if (s.k < 1) throw InputError("k must be >= 1");
                 },
                 [](const Gaussian &s) {
                   if (!(s.length > 0.0))
                     throw InputError("Gaussian length scale must be positive");
                 }},
             v_);
}

std::string SimilarityScheme::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const EpsilonNeighborhood &s) { os << "epsilon(" << s.epsilon << ")"; },
                 [&](const MutualKNN &s) { os << "knn(" << s.k << ")"; },
                 [&](const Gaussian &s) { os << "gaussian(" << s.length << ")"; }},
             v_);
  return os.str();
}

SimilarityGraph::SimilarityGraph(SparseMatrix W) : W_(std::move(W)) {
  if (W_.rows() != W_.cols()) throw InputError("similarity matrix not square");
  W_.makeCompressed();
  degrees_ = Eigen::VectorXd::Zero(W_.rows());
  for (Index j = 0; j < W_.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(W_, j); it; ++it) {
      if (it.value() < 0.0) throw InputError("negative similarity weight");
      degrees_[it.row()] += it.value();
    }
}

SparseMatrix SimilarityGraph::laplacian() const {
  SparseMatrix L = -W_;
  SparseMatrix D(size(), size());
  D.reserve(Eigen::VectorXi::Ones(size()));
  for (Index i = 0; i < size(); ++i) D.insert(i, i) = degrees_[i];
  L += D;
  L.prune(0.0);
  return L;
}

Eigen::MatrixXd SimilarityGraph::dense_laplacian() const {
  Eigen::MatrixXd L = -Eigen::MatrixXd(W_);
  L.diagonal() += degrees_;
  return L;
}

SimilarityGraph SimilarityGraph::induced(std::span<const Index> indices) const {
  std::vector<Index> local(size(), -1);
  for (Index p = 0; p < static_cast<Index>(indices.size()); ++p)
    local[indices[p]] = p;
  std::vector<Eigen::Triplet<double>> trips;
  for (Index p = 0; p < static_cast<Index>(indices.size()); ++p)
    for (SparseMatrix::InnerIterator it(W_, indices[p]); it; ++it)
      if (const Index r = local[it.row()]; r >= 0)
        trips.emplace_back(r, p, it.value());
  const Index n = static_cast<Index>(indices.size());
  SparseMatrix W(n, n);
  W.setFromTriplets(trips.begin(), trips.end());
  return SimilarityGraph(std::move(W));
}

std::vector<Index> SimilarityGraph::components(Index *count) const {
  std::vector<Index> label(size(), -1);
  Index next = 0;
  std::vector<Index> stack;
  for (Index s = 0; s < size(); ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      for (SparseMatrix::InnerIterator it(W_, v); it; ++it)
        if (it.value() > 0.0 && label[it.row()] < 0) {
          label[it.row()] = next;
          stack.push_back(it.row());
        }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

double box_distance(const SupportBox &a, const SupportBox &b) {
  if (a.dimension() != b.dimension())
    throw InputError("support boxes differ in dimension");
  const Eigen::ArrayXd gap =
      (a.lower.array() - b.upper.array())
          .max(b.lower.array() - a.upper.array())
          .max(0.0);
  return std::sqrt((gap * gap).sum());
}

double support_distance(const Functional &fi, const Functional &fj) {
  if (fi.dimension() != fj.dimension())
    throw InputError("functionals differ in dimension");
  return box_distance(support_box(fi), support_box(fj));
}

double similarity(double distance, const SimilarityScheme &scheme) {
  return std::visit(
      overloaded{
          [&](const EpsilonNeighborhood &s) { return distance < s.epsilon ? 1.0 : 0.0; },
          [&](const Gaussian &s) {
            return std::exp(-distance * distance / (2.0 * s.length * s.length));
          },
          [](const MutualKNN &) -> double {
            throw InputError("k-NN similarity needs the full functional set");
          }},
      scheme.variant());
}

double similarity(const Functional &fi, const Functional &fj,
                  const SimilarityScheme &scheme) {
  return similarity(support_distance(fi, fj), scheme);
}

std::vector<std::vector<Index>> k_nearest(std::span<const SupportBox> boxes,
                                          int k) {
  const BoxHierarchy bvh(boxes);
  std::vector<std::vector<Index>> out(boxes.size());
  for (Index i = 0; i < static_cast<Index>(boxes.size()); ++i)
    out[i] = bvh.nearest(i, k);
  return out;
}

SimilarityGraph build_graph(std::span<const SupportBox> boxes,
                            const SimilarityScheme &scheme) {
  const Index n = static_cast<Index>(boxes.size());
  if (n < 1) throw InputError("graph needs at least one functional");
  std::vector<Eigen::Triplet<double>> trips;

  std::visit(
      overloaded{
          [&](const EpsilonNeighborhood &s) {
            const BoxHierarchy bvh(boxes);
            for (Index i = 0; i < n; ++i)
              bvh.within(boxes[i], s.epsilon,
                         [&](Index j, double) { trips.emplace_back(i, j, 1.0); });
          },
          [&](const MutualKNN &s) {
            const auto nn = k_nearest(boxes, s.k);
            for (Index i = 0; i < n; ++i)
              for (Index j : nn[i]) {
                trips.emplace_back(i, j, 1.0);
                trips.emplace_back(j, i, 1.0);
              }
          },
          [&](const Gaussian &) {
            for (Index j = 0; j < n; ++j)
              for (Index i = 0; i < n; ++i) {
                const double w = similarity(box_distance(boxes[i], boxes[j]), scheme);
                if (w > 0.0) trips.emplace_back(i, j, w);
              }
          }},
      scheme.variant());

  SparseMatrix W(n, n);
  // duplicate k-NN edges collapse to weight 1
  W.setFromTriplets(trips.begin(), trips.end(),
                    [](double a, double b) { return std::max(a, b); });
  return SimilarityGraph(std::move(W));
}

SimilarityGraph build_graph(std::span<const Functional> functionals,
                            const SimilarityScheme &scheme) {
  common_dimension(functionals);
  std::vector<SupportBox> boxes;
  boxes.reserve(functionals.size());
  for (const auto &f : functionals) boxes.push_back(support_box(f));
  return build_graph(boxes, scheme);
}

}  // namespace gensamplets
