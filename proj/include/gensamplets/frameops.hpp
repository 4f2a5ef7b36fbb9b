#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gensamplets/measures.hpp"
#include "gensamplets/samplets.hpp"

namespace gensamplets {

enum class KernelType { kExponential, kGaussian, kMatern32 };

KernelType parse_kernel(const std::string &name);
std::string kernel_name(KernelType k);
/// Radial kernel profile at distance r with length scale ell.
double kernel_value(KernelType k, double r, double ell);

struct KernelGram {
  KernelType kernel;
  double length;
};
struct MassGram {
  std::vector<double> nodes;
};
struct GreenGram {
  std::string operator_name = "-d^2/dx^2 on H^1_0(0,1)";
};

/// Symmetric Gram matrix of N functionals with the construction that produced it.
struct GramModel {
  Eigen::MatrixXd G;
  std::variant<KernelGram, MassGram, GreenGram> provenance;

  Index size() const { return G.rows(); }
  std::string describe() const;
};

struct FrameBounds {
  double lower = 0.0;  // A_N
  double upper = 0.0;  // B_N
};

/// Kernel matrix K(x_i, x_j); points must be mutually distinct.
GramModel gram_kernel(std::span<const Eigen::VectorXd> points, KernelType kernel,
                      double length);

struct MassModel {
  GramModel model;
  /// Interior hat-function integrals as two-point Gauss atom measures.
  std::vector<Functional> functionals;
};

/// P1 mass matrix of the interior hat functions on a sorted 1D mesh.
MassModel gram_mass_p1(std::span<const double> mesh);

/// Green's function min(x, y) - x y of -d^2/dx^2 with homogeneous Dirichlet
/// conditions on (0, 1), at distinct interior points.
GramModel gram_green_1d(std::span<const double> points);
double green_1d(double x, double y);

struct DualOptions {
  double condition_cap = 1e12;
  /// Apply the Tikhonov shift mu = 1e-12 trace(G) / N before inverting.
  bool regularize = false;
};

struct DualCoefficients {
  Eigen::MatrixXd C;
  double shift = 0.0;
  double condition_estimate = 0.0;
};

/// C = (G + mu I)^{-1}; column j expands the canonical dual of f_j in the
/// Riesz representers. Throws NumericalError above the condition cap.
DualCoefficients dual_coefficients(const GramModel &model, const DualOptions &opts = {});

/// Extreme eigenvalues of G. Dense for N <= 2048, Lanczos above.
FrameBounds frame_bounds(const GramModel &model);

/// D = (G + mu I)^{-1} U^T, columns are the dual samplets.
Eigen::MatrixXd dual_samplet_coefficients(const SampletBasis &basis,
                                          const GramModel &model,
                                          const DualOptions &opts = {});

/// Analysis data T* v = [(f_i, v)]_i.
Eigen::VectorXd analysis(std::span<const Functional> functionals, const TestFunction &v);

struct DecayRow {
  Index samplet;
  int level;
  double diameter;
  double coefficient;
};

struct DecayLevel {
  int level;
  Index count;
  double max_coefficient;
  double max_diameter;
};

struct DecayReport {
  std::string label;
  std::vector<DecayRow> rows;  // every row of U, scaling rows included
  std::vector<DecayLevel> levels;
  /// Least-squares slope of log max|c| against log max diam; empty when
  /// fewer than two levels qualify or the data is annihilated.
  std::optional<double> slope;
  bool annihilated = false;
  double scale = 0.0;  // ||T* v||_2
};

DecayReport decay_report(const SampletBasis &basis,
                         std::span<const Functional> functionals,
                         const TestFunction &v, std::string label = {});

struct LocalizationCheck {
  double coefficient = 0.0;  // |u_i . T* v|
  double bound = 0.0;        // min_p ||(T*(v - p)) restricted to supp u_i||_2
};

/// Coefficient-space localization: compares one samplet coefficient with
/// the restricted residual norms of v - p over the candidate primitives.
LocalizationCheck localization_check(const SampletBasis &basis,
                                     std::span<const Functional> functionals,
                                     Index samplet, const TestFunction &v,
                                     std::span<const Polynomial> candidates);

}  // namespace gensamplets
