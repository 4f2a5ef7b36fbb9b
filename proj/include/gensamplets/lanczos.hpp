#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "gensamplets/measures.hpp"

namespace gensamplets {

/// y = A x for a symmetric operator A.
using LinearOperator =
    std::function<void(const Eigen::VectorXd &x, Eigen::VectorXd &y)>;

struct RitzPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  /// Estimated operator residual |A v - value v|.
  double residual = 0.0;
  int iterations = 0;
};

struct LanczosOptions {
  /// Stop when the residual estimate drops below rel_tol * |value|.
  double rel_tol = 1e-12;
  int krylov_dim = 120;
  int max_restarts = 40;
  std::uint64_t seed = 0x5eed5a3e1e75ULL;
};

/// Largest eigenpair of a symmetric operator on the orthogonal complement of
/// the (orthonormal) columns of `deflate`. Explicitly restarted Lanczos with
/// full reorthogonalization. Throws NumericalError on non-convergence.
RitzPair lanczos_largest(const LinearOperator &apply, Index n,
                         const Eigen::MatrixXd &deflate,
                         const LanczosOptions &opts = {});

}  // namespace gensamplets
