#include "gensamplets/frameops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gensamplets/errors.hpp"
#include "gensamplets/lanczos.hpp"

namespace gensamplets {

KernelType parse_kernel(const std::string &name) {
  if (name == "exponential") return KernelType::kExponential;
  if (name == "gaussian") return KernelType::kGaussian;
  if (name == "matern32") return KernelType::kMatern32;
  throw InputError("unknown kernel '" + name + "'");
}

std::string kernel_name(KernelType k) {
  switch (k) {
    case KernelType::kExponential: return "exponential";
    case KernelType::kGaussian: return "gaussian";
    case KernelType::kMatern32: return "matern32";
  }
  return "?";
}

double kernel_value(KernelType k, double r, double ell) {
  const double s = r / ell;
  switch (k) {
    case KernelType::kExponential: return std::exp(-s);
    case KernelType::kGaussian: return std::exp(-0.5 * s * s);
    case KernelType::kMatern32: {
      const double t = std::sqrt(3.0) * s;
      return (1.0 + t) * std::exp(-t);
    }
  }
  return 0.0;
}

std::string GramModel::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KernelGram>)
          os << "kernel " << kernel_name(p.kernel) << " l=" << p.length;
        else if constexpr (std::is_same_v<T, MassGram>)
          os << "P1 mass on " << p.nodes.size() << " nodes";
        else
          os << "Green " << p.operator_name;
      },
      provenance);
  return os.str();
}

GramModel gram_kernel(std::span<const Eigen::VectorXd> points, KernelType kernel,
                      double length) {
  if (!(length > 0.0)) throw InputError("kernel length scale must be positive");
  const Index n = static_cast<Index>(points.size());
  if (n < 1) throw InputError("kernel Gram needs at least one point");
  Eigen::MatrixXd G(n, n);
  for (Index j = 0; j < n; ++j) {
    G(j, j) = kernel_value(kernel, 0.0, length);
    for (Index i = j + 1; i < n; ++i) {
      if (points[i].size() != points[j].size())
        throw InputError("kernel points differ in dimension");
      const double r = (points[i] - points[j]).norm();
      if (r == 0.0)
        throw InputError("duplicate kernel points " + std::to_string(i) + " and " +
                         std::to_string(j));
      G(i, j) = G(j, i) = kernel_value(kernel, r, length);
    }
  }
  return {std::move(G), KernelGram{kernel, length}};
}

MassModel gram_mass_p1(std::span<const double> mesh) {
  const Index m = static_cast<Index>(mesh.size());
  if (m < 3) throw InputError("P1 mass matrix needs at least three nodes");
  for (Index k = 1; k < m; ++k)
    if (!(mesh[k] > mesh[k - 1]))
      throw InputError("mesh must be strictly increasing (node " + std::to_string(k) + ")");
  const Index n = m - 2;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  auto h = [&](Index e) { return mesh[e + 1] - mesh[e]; };
  for (Index i = 0; i < n; ++i) {
    // interior node i + 1 between elements i and i + 1
    G(i, i) = (h(i) + h(i + 1)) / 3.0;
    if (i + 1 < n) G(i, i + 1) = G(i + 1, i) = h(i + 1) / 6.0;
  }

  const double g = 0.5 / std::sqrt(3.0);
  const double gauss[2] = {0.5 - g, 0.5 + g};
  std::vector<Functional> fs;
  fs.reserve(n);
  for (Index i = 0; i < n; ++i) {
    std::vector<Atom> atoms;
    for (Index e : {i, i + 1}) {
      const double a = mesh[e], len = h(e);
      for (double xi : gauss) {
        const double x = a + xi * len;
        // rising on the left element, falling on the right one
        const double hat = (e == i) ? xi : 1.0 - xi;
        atoms.emplace_back(Eigen::VectorXd::Constant(1, x), 0.5 * len * hat);
      }
    }
    fs.emplace_back(i + 1, std::move(atoms));
  }
  return {{std::move(G), MassGram{std::vector<double>(mesh.begin(), mesh.end())}},
          std::move(fs)};
}

double green_1d(double x, double y) { return std::min(x, y) - x * y; }

GramModel gram_green_1d(std::span<const double> points) {
  const Index n = static_cast<Index>(points.size());
  if (n < 1) throw InputError("Green Gram needs at least one point");
  std::vector<double> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end());
  for (Index k = 0; k < n; ++k) {
    if (!(sorted[k] > 0.0 && sorted[k] < 1.0))
      throw InputError("Green Gram points must lie strictly inside (0, 1)");
    if (k > 0 && sorted[k] == sorted[k - 1])
      throw InputError("duplicate Green Gram points");
  }
  Eigen::MatrixXd G(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) G(i, j) = green_1d(points[i], points[j]);
  return {std::move(G), GreenGram{}};
}

DualCoefficients dual_coefficients(const GramModel &model, const DualOptions &opts) {
  const Index n = model.size();
  DualCoefficients out;
  Eigen::MatrixXd A = model.G;
  if (opts.regularize) {
    out.shift = 1e-12 * A.trace() / static_cast<double>(n);
    A.diagonal().array() += out.shift;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError("Gram matrix is not positive definite");
  const double rcond = llt.rcond();
  out.condition_estimate = rcond > 0.0 ? 1.0 / rcond : INFINITY;
  if (!(out.condition_estimate <= opts.condition_cap)) {
    std::ostringstream os;
    os << "Gram matrix condition estimate " << out.condition_estimate
       << " exceeds cap " << opts.condition_cap;
    throw NumericalError(os.str());
  }
  out.C = llt.solve(Eigen::MatrixXd::Identity(n, n));
  out.C = 0.5 * (out.C + out.C.transpose()).eval();
  return out;
}

FrameBounds frame_bounds(const GramModel &model) {
  const Index n = model.size();
  FrameBounds fb;
  if (n <= 2048) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.G, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on Gram matrix");
    fb.lower = es.eigenvalues()[0];
    fb.upper = es.eigenvalues()[n - 1];
  } else {
    const Eigen::MatrixXd none(n, 0);
    const Eigen::MatrixXd &G = model.G;
    fb.upper = lanczos_largest(
                   [&](const Eigen::VectorXd &x, Eigen::VectorXd &y) { y = G * x; },
                   n, none)
                   .value;
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) throw InputError("Gram matrix is not SPD");
    fb.lower = 1.0 / lanczos_largest(
                         [&](const Eigen::VectorXd &x, Eigen::VectorXd &y) {
                           y = llt.solve(x);
                         },
                         n, none)
                         .value;
  }
  if (!(fb.lower > 0.0)) throw InputError("Gram matrix is not SPD");
  return fb;
}

Eigen::MatrixXd dual_samplet_coefficients(const SampletBasis &basis,
                                          const GramModel &model,
                                          const DualOptions &opts) {
  if (model.size() != basis.size())
    throw InputError("Gram model and basis differ in size");
  const DualCoefficients dual = dual_coefficients(model, opts);
  // rows of C U^T are U applied to the rows of C (C is symmetric)
  Eigen::MatrixXd D(basis.size(), basis.size());
  for (Index i = 0; i < basis.size(); ++i)
    D.row(i) = basis.forward(dual.C.col(i)).transpose();
  return D;
}

Eigen::VectorXd analysis(std::span<const Functional> functionals, const TestFunction &v) {
  Eigen::VectorXd out(static_cast<Index>(functionals.size()));
  for (Index i = 0; i < out.size(); ++i) out[i] = evaluate(functionals[i], v);
  return out;
}

DecayReport decay_report(const SampletBasis &basis,
                         std::span<const Functional> functionals,
                         const TestFunction &v, std::string label) {
  if (static_cast<Index>(functionals.size()) != basis.size())
    throw InputError("functional count differs from the basis size");
  DecayReport rep;
  rep.label = std::move(label);
  const Eigen::VectorXd data = analysis(functionals, v);
  rep.scale = data.norm();
  const Eigen::VectorXd c = basis.forward(data);

  std::vector<DecayLevel> levels(basis.tree().depth() + 1);
  for (int j = 0; j < static_cast<int>(levels.size()); ++j) levels[j] = {j, 0, 0.0, 0.0};
  double max_samplet = 0.0;
  for (Index i = 0; i < basis.size(); ++i) {
    const SampletInfo &info = basis.samplet(i);
    rep.rows.push_back({i, info.level, info.diameter, c[i]});
    if (info.scaling) continue;
    DecayLevel &lv = levels[info.level];
    ++lv.count;
    lv.max_coefficient = std::max(lv.max_coefficient, std::abs(c[i]));
    lv.max_diameter = std::max(lv.max_diameter, info.diameter);
    max_samplet = std::max(max_samplet, std::abs(c[i]));
  }
  for (const auto &lv : levels)
    if (lv.count > 0) rep.levels.push_back(lv);

  rep.annihilated = max_samplet <= 1e-10 * rep.scale;
  if (rep.annihilated) return rep;

  std::vector<double> xs, ys;
  for (const auto &lv : rep.levels)
    if (lv.count >= 2 && lv.max_diameter > 0.0 && lv.max_coefficient > 0.0) {
      xs.push_back(std::log(lv.max_diameter));
      ys.push_back(std::log(lv.max_coefficient));
    }
  if (xs.size() >= 2) {
    const Index m = static_cast<Index>(xs.size());
    const Eigen::Map<const Eigen::VectorXd> X(xs.data(), m), Y(ys.data(), m);
    const double xm = X.mean(), ym = Y.mean();
    const double sxx = (X.array() - xm).square().sum();
    if (sxx > 0.0) rep.slope = ((X.array() - xm) * (Y.array() - ym)).sum() / sxx;
  }
  return rep;
}

LocalizationCheck localization_check(const SampletBasis &basis,
                                     std::span<const Functional> functionals,
                                     Index samplet, const TestFunction &v,
                                     std::span<const Polynomial> candidates) {
  const SampletInfo &info = basis.samplet(samplet);
  const auto idx = basis.support(samplet);
  Eigen::VectorXd tv(static_cast<Index>(idx.size()));
  for (Index p = 0; p < tv.size(); ++p) tv[p] = evaluate(functionals[idx[p]], v);

  LocalizationCheck out;
  out.coefficient = std::abs(info.coefficients.dot(tv));
  out.bound = INFINITY;
  for (const Polynomial &poly : candidates) {
    Eigen::VectorXd r(tv.size());
    for (Index p = 0; p < r.size(); ++p) r[p] = tv[p] - evaluate(functionals[idx[p]], poly);
    out.bound = std::min(out.bound, r.norm());
  }
  return out;
}

}  // namespace gensamplets
