#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gensamplets/frameops.hpp"
#include "gensamplets/measures.hpp"

namespace gensamplets {

/// Reads the atom CSV format
///
///   id,x1,...,xd,weight[,d1,...,dd]
///
/// with one atom per row. Rows sharing an id form one functional; functionals
/// are returned in order of first appearance.
std::vector<Functional> ingest_functionals(const std::filesystem::path &path);
std::vector<Functional> parse_functionals(const std::string &csv_text);

/// Writes functionals in the atom CSV format (derivative columns always present).
void write_functionals(const std::filesystem::path &path,
                       const std::vector<Functional> &functionals);

/// Dense matrix as header-less CSV, one row per line.
void write_matrix_csv(const std::filesystem::path &path, const Eigen::MatrixXd &M);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path &path);

/// Reads one numeric column of a headed CSV by name.
std::vector<double> read_csv_column(const std::filesystem::path &path,
                                    const std::string &column);

/// Shortest round-trip decimal representation.
std::string format_number(double v);

struct ExampleData {
  std::string name;
  std::vector<Functional> functionals;
  std::optional<GramModel> gram;
};

/// Deterministic example generators: uniform-diracs, random-diracs,
/// p1-mass and green-1d (the last two are one-dimensional).
ExampleData generate_example(const std::string &name, Index n, int dim,
                             std::uint64_t seed);

/// Built-in test functions: exp, sin, kink, quadratic.
TestFunction named_test_function(const std::string &name, int dim);

/// Points of single-atom functionals (required for kernel Gram models).
std::vector<Eigen::VectorXd> dirac_points(const std::vector<Functional> &functionals);

}  // namespace gensamplets
