#include "gensamplets/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "gensamplets/errors.hpp"

namespace gensamplets {

namespace {

int deriv_at(std::span<const int> deriv, Index k) {
  return deriv.empty() ? 0 : deriv[k];
}

// e! / (e - a)!
double falling_factorial(int e, int a) {
  double r = 1.0;
  for (int i = 0; i < a; ++i) r *= static_cast<double>(e - i);
  return r;
}

double monomial_derivative(const MultiIndex &e, const Eigen::VectorXd &center,
                           const Eigen::VectorXd &scale,
                           const Eigen::VectorXd &x,
                           std::span<const int> deriv) {
  double value = 1.0;
  for (Index k = 0; k < x.size(); ++k) {
    const int a = deriv_at(deriv, k);
    if (a > e[k]) return 0.0;
    const double t = scale[k] * (x[k] - center[k]);
    value *= falling_factorial(e[k], a) * std::pow(scale[k], a) *
             std::pow(t, e[k] - a);
  }
  return value;
}

}  // namespace

Atom::Atom(Eigen::VectorXd p, double w, MultiIndex d)
    : point(std::move(p)), weight(w), deriv(std::move(d)) {
  if (!deriv.empty() && static_cast<Index>(deriv.size()) != point.size())
    throw InputError("atom derivative multi-index has wrong length");
  for (int a : deriv)
    if (a < 0) throw InputError("atom derivative order must be nonnegative");
  if (!point.allFinite()) throw InputError("atom point is not finite");
  if (!std::isfinite(weight)) throw InputError("atom weight is not finite");
}

int Atom::derivative_order() const {
  return std::accumulate(deriv.begin(), deriv.end(), 0);
}

SupportBox::SupportBox(Eigen::VectorXd lo, Eigen::VectorXd hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size())
    throw InputError("support box corners differ in dimension");
  if ((lower.array() > upper.array()).any())
    throw InputError("support box lower corner exceeds upper corner");
}

bool SupportBox::contains(const Eigen::VectorXd &p, double tol) const {
  return (p.array() >= lower.array() - tol).all() &&
         (p.array() <= upper.array() + tol).all();
}

bool SupportBox::contains(const SupportBox &other, double tol) const {
  return contains(other.lower, tol) && contains(other.upper, tol);
}

void SupportBox::expand(const SupportBox &other) {
  lower = lower.cwiseMin(other.lower);
  upper = upper.cwiseMax(other.upper);
}

Functional::Functional(std::int64_t id, std::vector<Atom> atoms)
    : id_(id), dim_(0), atoms_(std::move(atoms)) {
  if (atoms_.empty())
    throw InputError("functional " + std::to_string(id) + " has no atoms");
  dim_ = atoms_.front().dimension();
  if (dim_ < 1) throw InputError("atoms must have dimension >= 1");
  for (auto &a : atoms_) {
    if (a.dimension() != dim_)
      throw InputError("functional " + std::to_string(id) +
                       " mixes atom dimensions");
    if (a.deriv.empty()) a.deriv.assign(dim_, 0);
  }
}

Functional Functional::dirac(std::int64_t id, Eigen::VectorXd x) {
  return Functional(id, {Atom(std::move(x), 1.0)});
}

Polynomial::Polynomial(Index dim, std::vector<Term> terms)
    : Polynomial(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim),
                 std::move(terms)) {}

Polynomial::Polynomial(Eigen::VectorXd center, Eigen::VectorXd scale,
                       std::vector<Term> terms)
    : center_(std::move(center)),
      scale_(std::move(scale)),
      terms_(std::move(terms)) {
  if (center_.size() != scale_.size())
    throw InputError("polynomial affine map has inconsistent dimension");
  for (const auto &t : terms_) {
    if (static_cast<Index>(t.exponent.size()) != center_.size())
      throw InputError("polynomial term has wrong exponent length");
    for (int e : t.exponent)
      if (e < 0) throw InputError("negative polynomial exponent");
  }
}

double Polynomial::operator()(const Eigen::VectorXd &x,
                              std::span<const int> deriv) const {
  if (x.size() != dimension())
    throw InputError("polynomial evaluated at point of wrong dimension");
  double value = 0.0;
  for (const auto &t : terms_)
    value += t.coefficient *
             monomial_derivative(t.exponent, center_, scale_, x, deriv);
  return value;
}

Polynomial Polynomial::operator+(const Polynomial &other) const {
  if (other.center_ != center_ || other.scale_ != scale_)
    throw InputError("polynomials with different affine maps cannot be added");
  std::map<MultiIndex, double> acc;
  for (const auto &t : terms_) acc[t.exponent] += t.coefficient;
  for (const auto &t : other.terms_) acc[t.exponent] += t.coefficient;
  std::vector<Term> terms;
  terms.reserve(acc.size());
  for (auto &[e, c] : acc) terms.push_back({e, c});
  return Polynomial(center_, scale_, std::move(terms));
}

Polynomial Polynomial::operator*(double alpha) const {
  auto terms = terms_;
  for (auto &t : terms) t.coefficient *= alpha;
  return Polynomial(center_, scale_, std::move(terms));
}

TestFunction Polynomial::as_function() const {
  return [p = *this](const Eigen::VectorXd &x, std::span<const int> deriv) {
    return p(x, deriv);
  };
}

Index primitive_count(int dim, int degree) {
  if (dim < 1 || degree < 0) throw InputError("need dim >= 1 and degree >= 0");
  // C(d+q, q) computed incrementally, exact in integers for the sizes used.
  Index r = 1;
  for (int i = 1; i <= degree; ++i) r = r * (dim + i) / i;
  return r;
}

std::vector<MultiIndex> graded_exponents(int dim, int degree) {
  std::vector<MultiIndex> out;
  MultiIndex e(dim, 0);
  // Lexicographically descending compositions of s into dim parts.
  std::function<void(int, int)> fill = [&](int k, int remaining) {
    if (k == dim - 1) {
      e[k] = remaining;
      out.push_back(e);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      e[k] = v;
      fill(k + 1, remaining - v);
    }
  };
  for (int s = 0; s <= degree; ++s) fill(0, s);
  return out;
}

PrimitiveBasis::PrimitiveBasis(int dim, int degree, SupportBox box)
    : dim_(dim), degree_(degree), box_(std::move(box)) {
  if (dim < 1 || degree < 0)
    throw InputError("primitive basis needs dim >= 1 and degree >= 0");
  if (box_.dimension() != dim)
    throw InputError("primitive basis box has wrong dimension");
  center_ = box_.center();
  scale_.resize(dim);
  for (int k = 0; k < dim; ++k) {
    const double half = 0.5 * (box_.upper[k] - box_.lower[k]);
    scale_[k] = half > 0.0 ? 1.0 / half : 1.0;
  }
  exponents_ = graded_exponents(dim, degree);
}

Polynomial PrimitiveBasis::element(Index a) const {
  return Polynomial(center_, scale_, {{exponents_.at(a), 1.0}});
}

void PrimitiveBasis::evaluate_at(const Eigen::VectorXd &x,
                                 std::span<const int> deriv,
                                 Eigen::Ref<Eigen::VectorXd> out) const {
  for (Index a = 0; a < size(); ++a)
    out[a] = monomial_derivative(exponents_[a], center_, scale_, x, deriv);
}

Eigen::VectorXd PrimitiveBasis::moments(const Functional &f) const {
  if (f.dimension() != dim_)
    throw InputError("functional dimension differs from primitive basis");
  Eigen::VectorXd m = Eigen::VectorXd::Zero(size());
  Eigen::VectorXd tmp(size());
  for (const auto &atom : f.atoms()) {
    evaluate_at(atom.point, atom.deriv, tmp);
    m += atom.weight * tmp;
  }
  return m;
}

Index PrimitiveBasis::position(const MultiIndex &e) const {
  auto it = std::find(exponents_.begin(), exponents_.end(), e);
  return it == exponents_.end() ? -1 : std::distance(exponents_.begin(), it);
}

Eigen::MatrixXd PrimitiveBasis::expansion_in(const PrimitiveBasis &other) const {
  if (other.dim_ != dim_ || other.degree_ != degree_)
    throw InputError("change of basis needs equal dimension and degree");
  // t_k = alpha_k + beta_k * s_k with s the coordinates of `other`.
  const Eigen::ArrayXd alpha =
      scale_.array() * (other.center_ - center_).array();
  const Eigen::ArrayXd beta = scale_.array() / other.scale_.array();

  std::map<MultiIndex, Index> lookup;
  for (Index b = 0; b < other.size(); ++b) lookup[other.exponents_[b]] = b;

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(size(), other.size());
  for (Index a = 0; a < size(); ++a) {
    std::map<MultiIndex, double> poly{{MultiIndex(dim_, 0), 1.0}};
    for (int k = 0; k < dim_; ++k) {
      const int e = exponents_[a][k];
      std::map<MultiIndex, double> next;
      double binom = 1.0;
      for (int r = 0; r <= e; ++r) {
        const double c = binom * std::pow(alpha[k], e - r) * std::pow(beta[k], r);
        for (const auto &[m, v] : poly) {
          MultiIndex mm = m;
          mm[k] += r;
          next[mm] += v * c;
        }
        binom = binom * (e - r) / (r + 1);
      }
      poly = std::move(next);
    }
    for (const auto &[m, v] : poly) T(a, lookup.at(m)) += v;
  }
  return T;
}

double evaluate(const Functional &f, const Polynomial &p) {
  if (f.dimension() != p.dimension())
    throw InputError("functional and polynomial differ in dimension");
  double s = 0.0;
  for (const auto &atom : f.atoms()) s += atom.weight * p(atom.point, atom.deriv);
  return s;
}

double evaluate(const Functional &f, const TestFunction &v) {
  double s = 0.0;
  for (const auto &atom : f.atoms()) {
    const double val = v(atom.point, atom.deriv);
    if (!std::isfinite(val))
      throw InputError("test function is not evaluable at an atom of functional " +
                       std::to_string(f.id()));
    s += atom.weight * val;
  }
  return s;
}

SupportBox support_box(const Functional &f) {
  const auto &atoms = f.atoms();
  if (atoms.empty()) throw InputError("support of an empty functional");
  SupportBox box = SupportBox::point(atoms.front().point);
  for (const auto &a : atoms) box.expand(SupportBox::point(a.point));
  return box;
}

SupportBox support_box(std::span<const Functional> fs,
                       std::span<const Index> indices) {
  if (indices.empty()) throw InputError("support of an empty index set");
  SupportBox box = support_box(fs[indices.front()]);
  for (Index i : indices) box.expand(support_box(fs[i]));
  return box;
}

PrimitiveBasis primitive_basis(int dim, int degree, const SupportBox &box) {
  return PrimitiveBasis(dim, degree, box);
}

Index common_dimension(std::span<const Functional> fs) {
  if (fs.empty()) throw InputError("empty functional set");
  const Index d = fs.front().dimension();
  for (const auto &f : fs)
    if (f.dimension() != d)
      throw InputError("functionals have inconsistent dimensions");
  return d;
}

}  // namespace gensamplets
