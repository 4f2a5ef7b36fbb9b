#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gensamplets {

using Index = std::ptrdiff_t;
using MultiIndex = std::vector<int>;

/// Weighted point atom `weight * (d/dx)^deriv delta_point`. A plain Dirac
/// measure is the atom (x, 1, 0).
struct Atom {
  Eigen::VectorXd point;
  double weight = 1.0;
  MultiIndex deriv;  // empty means all zeros

  Atom() = default;
  Atom(Eigen::VectorXd p, double w, MultiIndex d = {});

  Index dimension() const { return point.size(); }
  int derivative_order() const;
};

/// Axis-aligned box; zero extent in any coordinate is allowed.
struct SupportBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  SupportBox() = default;
  SupportBox(Eigen::VectorXd lo, Eigen::VectorXd hi);
  static SupportBox point(const Eigen::VectorXd &p) { return {p, p}; }

  Index dimension() const { return lower.size(); }
  bool contains(const Eigen::VectorXd &p, double tol = 0.0) const;
  bool contains(const SupportBox &other, double tol = 0.0) const;
  /// Euclidean length of the diagonal.
  double diameter() const { return (upper - lower).norm(); }
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  void expand(const SupportBox &other);

  bool operator==(const SupportBox &) const = default;
};

/// Compactly supported functional represented as a finite discrete signed
/// measure. All atoms share one spatial dimension.
class Functional {
 public:
  Functional(std::int64_t id, std::vector<Atom> atoms);

  std::int64_t id() const { return id_; }
  Index dimension() const { return dim_; }
  const std::vector<Atom> &atoms() const { return atoms_; }

  static Functional dirac(std::int64_t id, Eigen::VectorXd x);

 private:
  std::int64_t id_;
  Index dim_;
  std::vector<Atom> atoms_;
};

/// Pointwise evaluable test function. `deriv` holds per-coordinate
/// derivative orders (possibly empty meaning zero). Implementations throw
/// InputError for derivative orders they cannot supply.
using TestFunction =
    std::function<double(const Eigen::VectorXd &x, std::span<const int> deriv)>;

/// Polynomial in the affinely mapped coordinates t_k = scale_k (x_k - center_k).
class Polynomial {
 public:
  struct Term {
    MultiIndex exponent;
    double coefficient;
  };

  /// Polynomial in raw coordinates (center 0, scale 1).
  Polynomial(Index dim, std::vector<Term> terms);
  Polynomial(Eigen::VectorXd center, Eigen::VectorXd scale,
             std::vector<Term> terms);

  Index dimension() const { return center_.size(); }
  const std::vector<Term> &terms() const { return terms_; }
  const Eigen::VectorXd &center() const { return center_; }
  const Eigen::VectorXd &scale() const { return scale_; }

  /// Value of the mixed partial derivative (d/dx)^deriv at x.
  double operator()(const Eigen::VectorXd &x,
                    std::span<const int> deriv = {}) const;

  /// Sum of polynomials sharing the same affine map.
  Polynomial operator+(const Polynomial &other) const;
  Polynomial operator*(double alpha) const;
  friend Polynomial operator*(double alpha, const Polynomial &p) {
    return p * alpha;
  }

  TestFunction as_function() const;

 private:
  Eigen::VectorXd center_;
  Eigen::VectorXd scale_;
  std::vector<Term> terms_;
};

/// Monomials of total degree <= q in coordinates affinely mapped so that the
/// reference box becomes [-1, 1]^d. Degenerate box coordinates are only
/// shifted. Elements are in graded-lexicographic order, constant first.
class PrimitiveBasis {
 public:
  PrimitiveBasis(int dim, int degree, SupportBox box);

  int dimension() const { return dim_; }
  int degree() const { return degree_; }
  Index size() const { return static_cast<Index>(exponents_.size()); }
  const SupportBox &box() const { return box_; }
  const std::vector<MultiIndex> &exponents() const { return exponents_; }
  const Eigen::VectorXd &center() const { return center_; }
  const Eigen::VectorXd &scale() const { return scale_; }

  Polynomial element(Index a) const;

  /// All basis elements (with derivative `deriv`) at one point.
  void evaluate_at(const Eigen::VectorXd &x, std::span<const int> deriv,
                   Eigen::Ref<Eigen::VectorXd> out) const;

  /// Pairings [(f, p_a)]_a of one functional with every element.
  Eigen::VectorXd moments(const Functional &f) const;

  /// Matrix T with p_a = sum_b T(a, b) other.p_b, where `other` has the same
  /// dimension and degree but a different reference box.
  Eigen::MatrixXd expansion_in(const PrimitiveBasis &other) const;

  /// Position of an exponent in the graded order, or -1.
  Index position(const MultiIndex &e) const;

 private:
  int dim_;
  int degree_;
  SupportBox box_;
  Eigen::VectorXd center_;
  Eigen::VectorXd scale_;
  std::vector<MultiIndex> exponents_;
};

/// Number of monomials of total degree <= q in d variables, C(d+q, q).
Index primitive_count(int dim, int degree);

/// Exponents of total degree <= q, graded, lexicographically descending in
/// the leading coordinate inside each degree.
std::vector<MultiIndex> graded_exponents(int dim, int degree);

/// Duality pairing sum_atoms weight * (d^deriv p)(point).
double evaluate(const Functional &f, const Polynomial &p);
double evaluate(const Functional &f, const TestFunction &v);

SupportBox support_box(const Functional &f);
/// Bounding box of the union of supports of `fs[indices]`.
SupportBox support_box(std::span<const Functional> fs,
                       std::span<const Index> indices);

PrimitiveBasis primitive_basis(int dim, int degree, const SupportBox &box);

/// Common dimension of a functional set; throws on mismatch or empty input.
Index common_dimension(std::span<const Functional> fs);

}  // namespace gensamplets
