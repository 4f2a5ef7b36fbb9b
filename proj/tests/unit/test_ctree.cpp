#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "gensamplets/ctree.hpp"
#include "gensamplets/errors.hpp"
#include "support.hpp"

using namespace gensamplets;

namespace {

Eigen::MatrixXd path_weights(Index n) {
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) W(i, i + 1) = W(i + 1, i) = 1.0;
  return W;
}

std::vector<Index> sorted(std::vector<Index> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Partition, nesting and level checks written against the raw node list.
void check_tree(const ClusterTree &t, Index n, Index m_p, Index leaf_max) {
  const auto &nodes = t.nodes();
  CHECK(sorted(t.root().indices) == [&] {
    std::vector<Index> all(n);
    std::iota(all.begin(), all.end(), Index{0});
    return all;
  }());
  std::vector<int> hits(n, 0);
  for (const auto &node : nodes) {
    if (node.is_leaf()) {
      CHECK(node.size() > m_p);
      CHECK(node.size() <= std::max(leaf_max, 2 * m_p + 1));
      for (Index i : node.indices) ++hits[i];
    } else {
      REQUIRE(node.children.size() == 2);
      const auto &a = t.node(node.children[0]);
      const auto &b = t.node(node.children[1]);
      CHECK(a.level == node.level + 1);
      CHECK(b.level == node.level + 1);
      std::vector<Index> joined = a.indices;
      joined.insert(joined.end(), b.indices.begin(), b.indices.end());
      CHECK(joined == node.indices);
      CHECK(node.size() > leaf_max);
    }
  }
  for (int h : hits) CHECK(h == 1);
  // every level list covers its nodes exactly
  Index listed = 0;
  for (std::size_t j = 0; j < t.levels().size(); ++j)
    for (Index id : t.levels()[j]) {
      CHECK(t.node(id).level == static_cast<int>(j));
      ++listed;
    }
  CHECK(listed == t.num_nodes());
}

}  // namespace

TEST_SUITE("ctree") {

TEST_CASE("fiedler vector of a single edge") {
  const auto f = fiedler_vector(testing::dense_graph(path_weights(2)));
  CHECK(f.eigenvalue == doctest::Approx(2.0));
  CHECK(f.vector[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(f.vector[1] == doctest::Approx(-1.0 / std::sqrt(2.0)));
}

TEST_CASE("fiedler vector of the path on four vertices") {
  const auto f = fiedler_vector(testing::dense_graph(path_weights(4)));
  // eigenpair 2 - 2 cos(pi/4), cos(pi (k + 1/2) / 4)
  CHECK(f.eigenvalue == doctest::Approx(2.0 - std::sqrt(2.0)));
  Eigen::VectorXd expect(4);
  for (int k = 0; k < 4; ++k) expect[k] = std::cos(std::numbers::pi * (k + 0.5) / 4.0);
  expect.normalize();
  CHECK((f.vector - expect).norm() < 1e-12);
  CHECK(f.vector[0] > 0);
  CHECK(f.vector[1] > 0);
  CHECK(f.vector[2] < 0);
  CHECK(f.vector[3] < 0);
}

TEST_CASE("complete graph on three vertices") {
  Eigen::MatrixXd W = Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3);
  const auto g = testing::dense_graph(W);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.dense_laplacian());
  CHECK(std::abs(es.eigenvalues()[0]) < 1e-14);
  CHECK(es.eigenvalues()[1] == doctest::Approx(3.0));
  CHECK(es.eigenvalues()[2] == doctest::Approx(3.0));
  const auto f = fiedler_vector(g);
  CHECK(f.eigenvalue == doctest::Approx(3.0));
  CHECK(std::abs(f.vector.sum()) < 1e-12);
}

TEST_CASE("iterative fiedler vector matches the dense solver") {
  SUBCASE("sparse path") {
    const Index n = 300;
    const auto g = testing::dense_graph(path_weights(n));
    FiedlerOptions opts;
    opts.dense_limit = 16;
    const auto it = fiedler_vector(g, opts);
    const auto dense = fiedler_vector(g.dense_laplacian());
    CHECK(it.eigenvalue == doctest::Approx(dense.eigenvalue).epsilon(1e-8));
    CHECK((it.vector - dense.vector).norm() < 1e-6);
  }
  SUBCASE("dense random graph") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Index n = 120;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < i; ++j)
        if (u(rng) < 0.6) W(i, j) = W(j, i) = u(rng);
    const auto g = testing::dense_graph(W);
    FiedlerOptions opts;
    opts.dense_limit = 4;
    const auto it = fiedler_vector(g, opts);
    const auto dense = fiedler_vector(g.dense_laplacian());
    CHECK(it.eigenvalue == doctest::Approx(dense.eigenvalue).epsilon(1e-8));
    CHECK((it.vector - dense.vector).norm() < 1e-6);
  }
}

TEST_CASE("zero eigenvalue multiplicity counts components") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> blocks(1, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int nb = blocks(rng);
    Index n = 0;
    std::vector<Index> start;
    for (int b = 0; b < nb; ++b) {
      start.push_back(n);
      n += 2 + static_cast<Index>(u(rng) * 6);
    }
    start.push_back(n);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (int b = 0; b < nb; ++b)
      for (Index i = start[b]; i + 1 < start[b + 1]; ++i)
        W(i, i + 1) = W(i + 1, i) = 0.5 + u(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(testing::dense_graph(W).dense_laplacian());
    Index zeros = 0;
    for (Index k = 0; k < n; ++k) zeros += std::abs(es.eigenvalues()[k]) < 1e-10;
    CHECK(zeros == testing::count_components(W));
  }
}

TEST_CASE("bisection examples") {
  SUBCASE("two separated groups") {
    const auto fs = testing::line_diracs({0.0, 0.1, 10.0, 10.1});
    const auto g = build_graph(fs, SimilarityScheme::gaussian(1.0));
    const auto b = spectral_bisection(g);
    CHECK(sorted(b.first) == std::vector<Index>{0, 1});
    CHECK(sorted(b.second) == std::vector<Index>{2, 3});
  }
  SUBCASE("single edge") {
    const auto b = spectral_bisection(testing::dense_graph(path_weights(2)));
    CHECK(b.first.size() == 1);
    CHECK(b.second.size() == 1);
  }
  SUBCASE("disconnected edges split into components") {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4, 4);
    W(0, 2) = W(2, 0) = 1;
    W(1, 3) = W(3, 1) = 1;
    const auto b = spectral_bisection(testing::dense_graph(W));
    CHECK(b.rule == SplitRule::kComponents);
    CHECK(sorted(b.first) == std::vector<Index>{0, 2});
    CHECK(sorted(b.second) == std::vector<Index>{1, 3});
  }
  SUBCASE("global ids on a sub-cluster") {
    const auto fs = testing::line_diracs({5.0, 0.0, 0.1, 10.0, 10.1});
    const auto g = build_graph(fs, SimilarityScheme::gaussian(1.0));
    const std::vector<Index> cluster{1, 2, 3, 4};
    const auto b = spectral_bisection(cluster, g);
    CHECK(sorted(b.first) == std::vector<Index>{1, 2});
    CHECK(sorted(b.second) == std::vector<Index>{3, 4});
  }
  SUBCASE("too small") {
    CHECK_THROWS_AS(spectral_bisection(testing::dense_graph(Eigen::MatrixXd::Zero(1, 1))),
                    InputError);
  }
}

TEST_CASE("undersized parts fall back") {
  SUBCASE("isolated vertex is attached to a spectral split") {
    // a 10-path plus one isolated vertex; whole-component grouping leaves a part of size 1
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(11, 11);
    W.topLeftCorner(10, 10) = path_weights(10);
    const auto b = spectral_bisection(testing::dense_graph(W), 2);
    CHECK(b.rule == SplitRule::kComponentsAttached);
    CHECK(std::min(b.first.size(), b.second.size()) > 2);
    CHECK(b.first.size() + b.second.size() == 11);
  }
  SUBCASE("lopsided sign split becomes a median split") {
    // star graph: the Fiedler vector concentrates on the leaves
    const Index n = 12;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 1; i < n; ++i) W(0, i) = W(i, 0) = 1.0;
    W(1, 2) = W(2, 1) = 5.0;
    const auto b = spectral_bisection(testing::dense_graph(W), 3);
    CHECK(std::min(b.first.size(), b.second.size()) > 3);
  }
}

TEST_CASE("eight equispaced diracs give a balanced tree of three levels") {
  const auto fs = testing::uniform_line(8);
  TreeOptions opts;
  opts.leaf_max = 2;
  opts.primitive_count = 1;
  const auto t = build_cluster_tree(fs, SimilarityScheme::gaussian(0.5), opts);
  CHECK(t.depth() == 2);
  CHECK(t.levels().size() == 3);
  CHECK(t.leaves().size() == 4);
  std::set<std::vector<Index>> leaf_sets;
  for (Index id : t.leaves()) leaf_sets.insert(sorted(t.node(id).indices));
  CHECK(leaf_sets == std::set<std::vector<Index>>{{0, 1}, {2, 3}, {4, 5}, {6, 7}});
  check_tree(t, 8, 1, 2);
}

TEST_CASE("root stays a leaf when it is small enough") {
  const auto fs = testing::uniform_line(3);
  TreeOptions opts;
  opts.leaf_max = 3;
  opts.primitive_count = 1;
  const auto t = build_cluster_tree(fs, SimilarityScheme::knn(1), opts);
  CHECK(t.num_nodes() == 1);
  CHECK(t.depth() == 0);
}

TEST_CASE("tree construction rejects impossible sizes") {
  TreeOptions opts;
  opts.leaf_max = 6;
  opts.primitive_count = 3;
  CHECK_THROWS_AS(build_cluster_tree(testing::uniform_line(3), SimilarityScheme::knn(2), opts),
                  InputError);
  opts.leaf_max = 3;
  CHECK_THROWS_AS(build_cluster_tree(testing::uniform_line(30), SimilarityScheme::knn(2), opts),
                  InputError);
}

TEST_CASE("built trees satisfy the invariants and rebuild identically") {
  struct Case {
    int dim;
    Index n;
    int degree;
    SimilarityScheme scheme;
  };
  const std::vector<Case> cases{{1, 200, 0, SimilarityScheme::knn(4)},
                                {1, 300, 2, SimilarityScheme::epsilon(0.02)},
                                {2, 400, 1, SimilarityScheme::knn(8)},
                                {2, 150, 2, SimilarityScheme::gaussian(0.1)},
                                {3, 300, 1, SimilarityScheme::knn(6)}};
  for (const auto &c : cases) {
    const auto fs = testing::random_diracs(c.n, c.dim, 100 + c.n);
    TreeOptions opts;
    opts.primitive_count = primitive_count(c.dim, c.degree);
    opts.leaf_max = 2 * opts.primitive_count;
    const auto t = build_cluster_tree(fs, c.scheme, opts);
    CHECK(t.check_invariants().empty());
    check_tree(t, c.n, opts.primitive_count, opts.leaf_max);
    for (const auto &node : t.nodes())
      CHECK(node.box == support_box(fs, node.indices));
    CHECK(t == build_cluster_tree(fs, c.scheme, opts));
  }
}

TEST_CASE("invalid node lists are rejected") {
  ClusterNode root;
  root.indices = {0, 1, 2, 3};
  root.children = {1, 2};
  ClusterNode a, b;
  a.indices = {0, 1};
  a.level = 1;
  a.parent = 0;
  b.indices = {2, 2};
  b.level = 1;
  b.parent = 0;
  CHECK_THROWS_AS(ClusterTree({root, a, b}), InputError);
  b.indices = {3, 2};
  CHECK_THROWS_AS(ClusterTree({root, a, b}), InputError);  // not the concatenation
  b.indices = {2, 3};
  CHECK_NOTHROW(ClusterTree({root, a, b}));
  b.level = 2;
  CHECK_THROWS_AS(ClusterTree({root, a, b}), InputError);
}

}  // TEST_SUITE
