#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <vector>

#include "gensamplets/ctree.hpp"
#include "gensamplets/measures.hpp"
#include "gensamplets/samplets.hpp"
#include "gensamplets/simgraph.hpp"

namespace testing {

using namespace gensamplets;

inline std::vector<Functional> random_diracs(Index n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Functional> fs;
  for (Index i = 0; i < n; ++i) {
    Eigen::VectorXd x(dim);
    for (int k = 0; k < dim; ++k) x[k] = unif(rng);
    fs.push_back(Functional::dirac(i, x));
  }
  return fs;
}

inline std::vector<Functional> line_diracs(const std::vector<double> &xs) {
  std::vector<Functional> fs;
  for (std::size_t i = 0; i < xs.size(); ++i)
    fs.push_back(Functional::dirac(static_cast<std::int64_t>(i), Eigen::VectorXd::Constant(1, xs[i])));
  return fs;
}

inline std::vector<Functional> uniform_line(Index n) {
  std::vector<double> xs(n);
  for (Index k = 0; k < n; ++k) xs[k] = double(k) / double(n - 1);
  return line_diracs(xs);
}

inline SampletBasis make_basis(const std::vector<Functional> &fs, int degree,
                               const SimilarityScheme &scheme = SimilarityScheme::knn(8),
                               Index leaf_max = 0) {
  const int dim = static_cast<int>(common_dimension(fs));
  TreeOptions opts;
  opts.primitive_count = primitive_count(dim, degree);
  opts.leaf_max = leaf_max ? leaf_max : 2 * opts.primitive_count;
  return build_samplet_basis(fs, build_cluster_tree(fs, scheme, opts), degree);
}

// Connected components by depth-first search on the nonzero pattern.
inline Index count_components(const Eigen::MatrixXd &W) {
  const Index n = W.rows();
  std::vector<bool> seen(n, false);
  Index count = 0;
  for (Index s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++count;
    std::vector<Index> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < n; ++v)
        if (W(u, v) != 0.0 && !seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
    }
  }
  return count;
}

inline SimilarityGraph dense_graph(const Eigen::MatrixXd &W) {
  return SimilarityGraph(W.sparseView());
}

// Pairings (f_j, p_a) with the raw monomials of total degree <= q.
inline Eigen::MatrixXd raw_moments(const std::vector<Functional> &fs, int degree) {
  const int dim = static_cast<int>(common_dimension(fs));
  const auto exps = graded_exponents(dim, degree);
  Eigen::MatrixXd M(exps.size(), fs.size());
  for (std::size_t a = 0; a < exps.size(); ++a) {
    const Polynomial p(dim, {{exps[a], 1.0}});
    for (std::size_t j = 0; j < fs.size(); ++j) M(a, j) = evaluate(fs[j], p);
  }
  return M;
}

}  // namespace testing
