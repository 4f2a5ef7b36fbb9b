#include "gensamplets/lanczos.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gensamplets/errors.hpp"

namespace gensamplets {

namespace {

void project_out(const Eigen::MatrixXd &Q, Eigen::Ref<Eigen::VectorXd> v) {
  if (Q.cols() == 0) return;
  v -= Q * (Q.transpose() * v);
}

}  // namespace

RitzPair lanczos_largest(const LinearOperator &apply, Index n,
                         const Eigen::MatrixXd &deflate,
                         const LanczosOptions &opts) {
  const Index free_dim = n - deflate.cols();
  if (free_dim < 1)
    throw InputError("Lanczos: nothing left after deflation");
  const Index m = std::min<Index>(free_dim, opts.krylov_dim);

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd start(n);
  for (Index i = 0; i < n; ++i) start[i] = gauss(rng);
  project_out(deflate, start);
  project_out(deflate, start);
  start.normalize();

  Eigen::MatrixXd V(n, m + 1);
  Eigen::VectorXd alpha(m), beta(m);
  Eigen::VectorXd w(n);
  RitzPair best;
  int total = 0;

  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    V.col(0) = start;
    for (Index j = 0; j < m; ++j) {
      apply(V.col(j), w);
      ++total;
      project_out(deflate, w);
      alpha[j] = V.col(j).dot(w);
      // two passes of classical Gram-Schmidt against the whole basis
      for (int pass = 0; pass < 2; ++pass) {
        w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
        project_out(deflate, w);
      }
      beta[j] = w.norm();

      const bool last = (j + 1 == m);
      const bool exhausted = beta[j] <= 1e-14 * alpha.head(j + 1).cwiseAbs().maxCoeff();
      if (last || exhausted || (j + 1) % 10 == 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(j + 1, j + 1);
        T.diagonal() = alpha.head(j + 1);
        if (j > 0) {
          T.diagonal(1) = beta.head(j);
          T.diagonal(-1) = beta.head(j);
        }
        tri.compute(T);
        const double theta = tri.eigenvalues()[j];
        const Eigen::VectorXd s = tri.eigenvectors().col(j);
        const double est = exhausted ? 0.0 : std::abs(beta[j] * s[j]);
        best.value = theta;
        best.vector = V.leftCols(j + 1) * s;
        best.vector.normalize();
        best.residual = est;
        best.iterations = total;
        if (est <= opts.rel_tol * std::abs(theta) || exhausted) return best;
        if (last) break;
      }
      V.col(j + 1) = w / beta[j];
    }
    start = best.vector;
  }
  throw NumericalError("Lanczos did not converge after " +
                       std::to_string(total) + " operator applications");
}

}  // namespace gensamplets
