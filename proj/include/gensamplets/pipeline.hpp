#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gensamplets/frameops.hpp"
#include "gensamplets/samplets.hpp"
#include "gensamplets/simgraph.hpp"

namespace gensamplets {

/// Batch configuration shared by all CLI verbs.
struct RunConfig {
  std::filesystem::path input;  // atom CSV; empty when `example` is set
  std::string example;          // generator name
  Index n = 1024;               // example size
  int dim = 1;
  int degree = 2;
  std::string scheme = "knn";   // knn | epsilon | gaussian
  double scheme_param = 8;      // k, epsilon or length scale
  Index leaf_max = 0;           // 0 selects 2 * C(d+q, q)
  std::string gram = "auto";    // auto | none | kernel | mass | green
  std::string kernel = "exponential";
  double kernel_length = 1.0;
  double sigma = 1e-6;
  std::string function = "exp";  // test function for decay reports
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;

  /// Empty string if the invariants hold, otherwise the first violation.
  std::string validate() const;
  SimilarityScheme similarity_scheme() const;
  Index effective_leaf_max() const;
};

struct PipelineResult {
  std::uint64_t checksum = 0;
  std::uint64_t reloaded_checksum = 0;
  double vanishing_residual = 0.0;
  std::optional<double> decay_slope;
  bool annihilated = false;
  std::optional<CompressedMatrix> compression;
  double compression_error = 0.0;
  std::vector<std::filesystem::path> artifacts;
};

/// Loads or generates functionals according to `cfg`.
struct LoadedInput {
  std::vector<Functional> functionals;
  std::optional<GramModel> gram;
};
LoadedInput load_input(const RunConfig &cfg);

/// Clusters, builds and returns the samplet basis for `cfg`.
SampletBasis build_basis(const RunConfig &cfg, const std::vector<Functional> &functionals);

/// Gram model selected by cfg.gram (nullopt for "none").
std::optional<GramModel> select_gram(const RunConfig &cfg, const LoadedInput &in);

/// Report writers; each returns the written path.
std::filesystem::path write_coefficients(const std::filesystem::path &path,
                                         const SampletBasis &basis,
                                         const Eigen::VectorXd &coefficients);
std::filesystem::path write_vanishing_report(const std::filesystem::path &path,
                                             const SampletBasis &basis,
                                             const std::vector<Functional> &functionals);
std::filesystem::path write_decay_report(const std::filesystem::path &dir,
                                         const DecayReport &rep);
std::filesystem::path write_compression_report(const std::filesystem::path &path,
                                               const CompressedMatrix &c,
                                               double dense_fraction,
                                               double relative_error);

/// Full batch run: build, save, reload and compare checksums, transform,
/// vanishing-moment, decay and compression reports.
PipelineResult run_pipeline(const RunConfig &cfg);

/// Command line front end. Returns the process exit code:
/// 0 success, 2 input error, 3 numerical failure.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace gensamplets
