#include "gensamplets/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "gensamplets/errors.hpp"

namespace gensamplets {

namespace {

std::vector<std::string> split_fields(const std::string &line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string &s, double &v) {
  if (s.empty()) return false;
  const char *end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end && std::isfinite(v);
}

bool parse_int(const std::string &s, std::int64_t &v) {
  if (s.empty()) return false;
  const char *end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end;
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::vector<Functional> parse_functionals(const std::string &csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string &msg) -> InputError {
    return InputError("line " + std::to_string(lineno) + ": " + msg);
  };

  // header
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_fields(line);
    break;
  }
  if (header.empty()) throw InputError("atom file has no header");
  if (header.front() != "id") throw fail("header must start with 'id'");
  int dim = 0;
  while (1 + dim < static_cast<int>(header.size()) &&
         header[1 + dim] == "x" + std::to_string(dim + 1))
    ++dim;
  if (dim < 1) throw fail("header needs coordinate columns x1..xd");
  if (static_cast<int>(header.size()) <= 1 + dim || header[1 + dim] != "weight")
    throw fail("expected 'weight' after the coordinate columns");
  const int extra = static_cast<int>(header.size()) - (2 + dim);
  if (extra != 0 && extra != dim)
    throw fail("derivative columns d1..dd must be all present or all absent");
  for (int k = 0; k < extra; ++k)
    if (header[2 + dim + k] != "d" + std::to_string(k + 1))
      throw fail("expected derivative column d" + std::to_string(k + 1));

  std::vector<std::int64_t> order;
  std::map<std::int64_t, std::vector<Atom>> groups;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw fail("expected " + std::to_string(header.size()) + " fields, got " +
                 std::to_string(fields.size()));
    std::int64_t id;
    if (!parse_int(fields[0], id)) throw fail("bad id '" + fields[0] + "'");
    Eigen::VectorXd x(dim);
    for (int k = 0; k < dim; ++k)
      if (!parse_double(fields[1 + k], x[k]))
        throw fail("bad coordinate '" + fields[1 + k] + "'");
    double w;
    if (!parse_double(fields[1 + dim], w)) throw fail("bad weight '" + fields[1 + dim] + "'");
    MultiIndex deriv(dim, 0);
    for (int k = 0; k < extra; ++k) {
      std::int64_t a;
      if (!parse_int(fields[2 + dim + k], a) || a < 0)
        throw fail("derivative order must be a nonnegative integer, got '" +
                   fields[2 + dim + k] + "'");
      deriv[k] = static_cast<int>(a);
    }
    auto [it, fresh] = groups.try_emplace(id);
    if (fresh) order.push_back(id);
    it->second.emplace_back(std::move(x), w, std::move(deriv));
  }
  if (order.empty()) throw InputError("atom file contains no atoms");
  std::vector<Functional> out;
  out.reserve(order.size());
  for (auto id : order) out.emplace_back(id, std::move(groups[id]));
  return out;
}

std::vector<Functional> ingest_functionals(const std::filesystem::path &path) {
  try {
    return parse_functionals(read_file(path));
  } catch (const InputError &e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_functionals(const std::filesystem::path &path,
                       const std::vector<Functional> &functionals) {
  const Index d = common_dimension(functionals);
  auto out = open_out(path);
  out << "id";
  for (Index k = 1; k <= d; ++k) out << ",x" << k;
  out << ",weight";
  for (Index k = 1; k <= d; ++k) out << ",d" << k;
  out << '\n';
  for (const auto &f : functionals)
    for (const auto &a : f.atoms()) {
      out << f.id();
      for (Index k = 0; k < d; ++k) out << ',' << format_number(a.point[k]);
      out << ',' << format_number(a.weight);
      for (Index k = 0; k < d; ++k) out << ',' << a.deriv[k];
      out << '\n';
    }
}

void write_matrix_csv(const std::filesystem::path &path, const Eigen::MatrixXd &M) {
  auto out = open_out(path);
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) out << (j ? "," : "") << format_number(M(i, j));
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path &path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    for (const auto &f : split_fields(line)) {
      double v;
      if (!parse_double(f, v))
        throw InputError(path.string() + ": line " + std::to_string(lineno) + ": bad number");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path.string() + ": line " + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) M(i, j) = rows[i][j];
  return M;
}

std::vector<double> read_csv_column(const std::filesystem::path &path,
                                    const std::string &column) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  Index col = -1;
  std::size_t width = 0;
  std::vector<double> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (col < 0) {
      for (std::size_t k = 0; k < fields.size(); ++k)
        if (fields[k] == column) col = static_cast<Index>(k);
      if (col < 0) throw InputError(path.string() + ": no column '" + column + "'");
      width = fields.size();
      continue;
    }
    double v;
    if (fields.size() != width || !parse_double(fields[col], v))
      throw InputError(path.string() + ": line " + std::to_string(lineno) + ": malformed row");
    out.push_back(v);
  }
  if (col < 0) throw InputError(path.string() + ": empty file");
  return out;
}

ExampleData generate_example(const std::string &name, Index n, int dim,
                             std::uint64_t seed) {
  if (n < 1) throw InputError("example size must be positive");
  if (dim < 1) throw InputError("example dimension must be positive");
  ExampleData ex;
  ex.name = name;
  if (name == "uniform-diracs") {
    if (dim == 1) {
      for (Index k = 0; k < n; ++k)
        ex.functionals.push_back(Functional::dirac(
            k + 1, Eigen::VectorXd::Constant(1, n == 1 ? 0.0 : double(k) / double(n - 1))));
    } else {
      Index side = static_cast<Index>(std::ceil(std::pow(double(n), 1.0 / dim) - 1e-9));
      while (static_cast<double>(std::pow(double(side), dim)) < double(n)) ++side;
      for (Index k = 0; k < n; ++k) {
        Eigen::VectorXd x(dim);
        Index r = k;
        for (int c = dim - 1; c >= 0; --c) {
          x[c] = side == 1 ? 0.0 : double(r % side) / double(side - 1);
          r /= side;
        }
        ex.functionals.push_back(Functional::dirac(k + 1, x));
      }
    }
  } else if (name == "random-diracs") {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index k = 0; k < n; ++k) {
      Eigen::VectorXd x(dim);
      for (int c = 0; c < dim; ++c) x[c] = unif(rng);
      ex.functionals.push_back(Functional::dirac(k + 1, x));
    }
  } else if (name == "p1-mass") {
    if (dim != 1) throw InputError("p1-mass is one-dimensional");
    std::vector<double> mesh(n + 2);
    for (Index k = 0; k < n + 2; ++k) mesh[k] = double(k) / double(n + 1);
    auto mm = gram_mass_p1(mesh);
    ex.functionals = std::move(mm.functionals);
    ex.gram = std::move(mm.model);
  } else if (name == "green-1d") {
    if (dim != 1) throw InputError("green-1d is one-dimensional");
    std::vector<double> pts(n);
    for (Index k = 0; k < n; ++k) {
      pts[k] = double(k + 1) / double(n + 1);
      ex.functionals.push_back(Functional::dirac(k + 1, Eigen::VectorXd::Constant(1, pts[k])));
    }
    ex.gram = gram_green_1d(pts);
  } else {
    throw InputError("unknown example '" + name +
                     "' (uniform-diracs, random-diracs, p1-mass, green-1d)");
  }
  return ex;
}

TestFunction named_test_function(const std::string &name, int dim) {
  if (name == "exp") {
    return [](const Eigen::VectorXd &x, std::span<const int>) { return std::exp(x.sum()); };
  }
  if (name == "sin") {
    return [](const Eigen::VectorXd &x, std::span<const int> deriv) {
      double v = 1.0;
      for (Index k = 0; k < x.size(); ++k) {
        const int a = deriv.empty() ? 0 : deriv[k];
        v *= std::pow(std::numbers::pi, a) *
             std::sin(std::numbers::pi * x[k] + a * std::numbers::pi / 2.0);
      }
      return v;
    };
  }
  if (name == "kink") {
    return [](const Eigen::VectorXd &x, std::span<const int> deriv) {
      for (int a : deriv)
        if (a != 0) throw InputError("kink test function has no derivatives");
      return std::abs(x[0] - std::numbers::pi / 8.0);
    };
  }
  if (name == "quadratic") {
    std::vector<Polynomial::Term> terms{{MultiIndex(dim, 0), 1.0}};
    for (int k = 0; k < dim; ++k) {
      MultiIndex e(dim, 0);
      e[k] = 1;
      terms.push_back({e, 1.0});
      e[k] = 2;
      terms.push_back({e, 1.0});
    }
    return Polynomial(dim, std::move(terms)).as_function();
  }
  throw InputError("unknown test function '" + name + "' (exp, sin, kink, quadratic)");
}

std::vector<Eigen::VectorXd> dirac_points(const std::vector<Functional> &functionals) {
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(functionals.size());
  for (const auto &f : functionals) {
    if (f.atoms().size() != 1)
      throw InputError("kernel Gram models need single-atom functionals (functional " +
                       std::to_string(f.id()) + ")");
    pts.push_back(f.atoms().front().point);
  }
  return pts;
}

}  // namespace gensamplets
