#include "gensamplets/pipeline.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "gensamplets/container.hpp"
#include "gensamplets/ctree.hpp"
#include "gensamplets/errors.hpp"
#include "gensamplets/io.hpp"

namespace gensamplets {

namespace fs = std::filesystem;

std::string RunConfig::validate() const {
  if (input.empty() == example.empty()) return "exactly one of input and example must be set";
  if (dim < 1) return "dimension must be >= 1";
  if (degree < 0) return "degree q must be >= 0";
  if (!(sigma >= 0.0)) return "sigma must be >= 0";
  if (leaf_max != 0 && leaf_max <= primitive_count(dim, degree))
    return "leaf_max must exceed C(d+q, q) = " + std::to_string(primitive_count(dim, degree));
  if (!(kernel_length > 0.0)) return "kernel length must be positive";
  return {};
}

SimilarityScheme RunConfig::similarity_scheme() const {
  if (scheme == "knn") {
    if (scheme_param < 1 || scheme_param != std::floor(scheme_param))
      throw InputError("knn needs a positive integer parameter");
    return SimilarityScheme::knn(static_cast<int>(scheme_param));
  }
  if (scheme == "epsilon") return SimilarityScheme::epsilon(scheme_param);
  if (scheme == "gaussian") return SimilarityScheme::gaussian(scheme_param);
  throw InputError("unknown similarity scheme '" + scheme + "' (knn, epsilon, gaussian)");
}

Index RunConfig::effective_leaf_max() const {
  return leaf_max != 0 ? leaf_max : 2 * primitive_count(dim, degree);
}

LoadedInput load_input(const RunConfig &cfg) {
  LoadedInput in;
  if (!cfg.example.empty()) {
    ExampleData ex = generate_example(cfg.example, cfg.n, cfg.dim, cfg.seed);
    in.functionals = std::move(ex.functionals);
    in.gram = std::move(ex.gram);
  } else {
    in.functionals = ingest_functionals(cfg.input);
    if (common_dimension(in.functionals) != cfg.dim)
      throw InputError("input dimension " + std::to_string(common_dimension(in.functionals)) +
                       " differs from configured dimension " + std::to_string(cfg.dim));
  }
  return in;
}

SampletBasis build_basis(const RunConfig &cfg, const std::vector<Functional> &functionals) {
  if (const auto err = cfg.validate(); !err.empty()) throw InputError(err);
  TreeOptions topts;
  topts.primitive_count = primitive_count(cfg.dim, cfg.degree);
  topts.leaf_max = cfg.effective_leaf_max();
  ClusterTree tree = build_cluster_tree(functionals, cfg.similarity_scheme(), topts);
  return build_samplet_basis(functionals, std::move(tree), cfg.degree);
}

std::optional<GramModel> select_gram(const RunConfig &cfg, const LoadedInput &in) {
  if (cfg.gram == "none") return std::nullopt;
  if (cfg.gram == "auto") {
    if (in.gram) return in.gram;
    for (const auto &f : in.functionals)
      if (f.atoms().size() != 1) return std::nullopt;
    return gram_kernel(dirac_points(in.functionals), parse_kernel(cfg.kernel), cfg.kernel_length);
  }
  if (cfg.gram == "kernel")
    return gram_kernel(dirac_points(in.functionals), parse_kernel(cfg.kernel), cfg.kernel_length);
  if (cfg.gram == "mass" || cfg.gram == "green") {
    const bool is_mass = in.gram && std::holds_alternative<MassGram>(in.gram->provenance);
    const bool is_green = in.gram && std::holds_alternative<GreenGram>(in.gram->provenance);
    if ((cfg.gram == "mass" && is_mass) || (cfg.gram == "green" && is_green)) return in.gram;
    if (cfg.gram == "green") {
      std::vector<double> pts;
      for (const auto &p : dirac_points(in.functionals)) {
        if (p.size() != 1) throw InputError("green Gram is one-dimensional");
        pts.push_back(p[0]);
      }
      return gram_green_1d(pts);
    }
    throw InputError("mass Gram is only available for the p1-mass example");
  }
  throw InputError("unknown gram model '" + cfg.gram + "' (auto, none, kernel, mass, green)");
}

namespace {

std::ofstream open_csv(const fs::path &path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

fs::path write_coefficients(const fs::path &path, const SampletBasis &basis,
                            const Eigen::VectorXd &coefficients) {
  auto out = open_csv(path);
  out << "samplet,level,diam,coefficient\n";
  for (Index i = 0; i < basis.size(); ++i) {
    const SampletInfo &s = basis.samplet(i);
    out << i << ',' << s.level << ',' << format_number(s.diameter) << ','
        << format_number(coefficients[i]) << '\n';
  }
  return path;
}

fs::path write_vanishing_report(const fs::path &path, const SampletBasis &basis,
                                const std::vector<Functional> &functionals) {
  auto out = open_csv(path);
  out << "degree,role,max_residual\n";
  out << basis.degree() << ",constructed,"
      << format_number(verify_vanishing_moments(basis, functionals, basis.degree())) << '\n';
  out << basis.degree() + 1 << ",control,"
      << format_number(verify_vanishing_moments(basis, functionals, basis.degree() + 1)) << '\n';
  return path;
}

fs::path write_decay_report(const fs::path &dir, const DecayReport &rep) {
  {
    auto out = open_csv(dir / "decay_levels.csv");
    out << "level,count,max_diam,max_coefficient\n";
    for (const auto &lv : rep.levels)
      out << lv.level << ',' << lv.count << ',' << format_number(lv.max_diameter) << ','
          << format_number(lv.max_coefficient) << '\n';
  }
  const fs::path path = dir / "decay_summary.csv";
  auto out = open_csv(path);
  out << "function,annihilated,slope,scale\n";
  out << rep.label << ',' << (rep.annihilated ? 1 : 0) << ','
      << (rep.slope ? format_number(*rep.slope) : "") << ',' << format_number(rep.scale)
      << '\n';
  return path;
}

fs::path write_compression_report(const fs::path &path, const CompressedMatrix &c,
                                  double dense_fraction, double relative_error) {
  auto out = open_csv(path);
  out << "threshold,kept,total,kept_fraction,dense_fraction,dropped_norm,relative_error\n";
  out << format_number(c.threshold) << ',' << c.kept << ',' << c.total << ','
      << format_number(double(c.kept) / double(c.total)) << ','
      << format_number(dense_fraction) << ',' << format_number(c.dropped_norm) << ','
      << format_number(relative_error) << '\n';
  return path;
}

namespace {

struct CompressionOutcome {
  CompressedMatrix compressed;
  double dense_fraction;
  double relative_error;
};

CompressionOutcome compress_gram(const SampletBasis &basis, const GramModel &gram,
                                 double sigma) {
  const Eigen::MatrixXd C = transform_matrix(basis, gram.G);
  CompressionOutcome o{threshold_compress(C, sigma), 0.0, 0.0};
  const Eigen::MatrixXd back =
      inverse_transform_matrix(basis, Eigen::MatrixXd(o.compressed.values));
  o.relative_error = (back - gram.G).norm() / gram.G.norm();
  o.dense_fraction = double((gram.G.array().abs() >= o.compressed.threshold).count()) /
                     double(gram.G.size());
  return o;
}

// Rethrows library errors with the name of the stage that raised them.
template <class F>
auto tagged(const char *module, F &&f) {
  try {
    return f();
  } catch (const InputError &e) {
    throw InputError(std::string(module) + ": " + e.what());
  } catch (const NumericalError &e) {
    throw NumericalError(std::string(module) + ": " + e.what());
  }
}

}  // namespace

PipelineResult run_pipeline(const RunConfig &cfg) {
  if (const auto err = cfg.validate(); !err.empty()) throw InputError("config: " + err);
  PipelineResult res;
  fs::create_directories(cfg.output);
  const LoadedInput in = tagged("io", [&] { return load_input(cfg); });
  const SampletBasis basis = tagged("samplets", [&] { return build_basis(cfg, in.functionals); });

  const fs::path basis_path = cfg.output / "basis.bin";
  const SampletBasis reloaded = tagged("container", [&] {
    res.checksum = save_basis(basis, basis_path);
    SampletBasis b = load_basis(basis_path, &res.reloaded_checksum);
    if (serialize_basis(b) != serialize_basis(basis) || res.checksum != res.reloaded_checksum)
      throw NumericalError("basis container round trip is not bit-exact");
    return b;
  });
  res.artifacts.push_back(basis_path);

  const TestFunction v = tagged("io", [&] { return named_test_function(cfg.function, cfg.dim); });
  const Eigen::VectorXd coeffs =
      tagged("frameops", [&] { return reloaded.forward(analysis(in.functionals, v)); });
  res.artifacts.push_back(write_coefficients(cfg.output / "coefficients.csv", reloaded, coeffs));

  res.vanishing_residual = verify_vanishing_moments(reloaded, in.functionals, cfg.degree);
  res.artifacts.push_back(
      write_vanishing_report(cfg.output / "vanishing.csv", reloaded, in.functionals));

  const DecayReport rep =
      tagged("frameops", [&] { return decay_report(reloaded, in.functionals, v, cfg.function); });
  res.decay_slope = rep.slope;
  res.annihilated = rep.annihilated;
  res.artifacts.push_back(cfg.output / "decay_levels.csv");
  res.artifacts.push_back(write_decay_report(cfg.output, rep));

  if (const auto gram = tagged("frameops", [&] { return select_gram(cfg, in); })) {
    auto o = tagged("samplets", [&] { return compress_gram(reloaded, *gram, cfg.sigma); });
    res.artifacts.push_back(write_compression_report(cfg.output / "compression.csv",
                                                     o.compressed, o.dense_fraction,
                                                     o.relative_error));
    res.compression_error = o.relative_error;
    res.compression = std::move(o.compressed);
  }
  return res;
}

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// "key = value" lines become "--key=value" arguments placed before the
// command line flags, so flags win.
std::vector<std::string> config_arguments(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError(path.string() + ": line " + std::to_string(lineno) +
                       ": expected key = value");
    out.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return out;
}

void add_run_options(CLI::App &sub, RunConfig &cfg) {
  sub.add_option("--input", cfg.input, "atom CSV file");
  sub.add_option("--example", cfg.example,
                 "example generator: uniform-diracs, random-diracs, p1-mass, green-1d");
  sub.add_option("--n", cfg.n, "example size");
  sub.add_option("--dim", cfg.dim, "spatial dimension d");
  sub.add_option("--degree,-q", cfg.degree, "polynomial degree q of the primitives");
  sub.add_option("--scheme", cfg.scheme, "similarity scheme: knn, epsilon, gaussian");
  sub.add_option("--scheme-param", cfg.scheme_param, "k, epsilon or length scale");
  sub.add_option("--leaf-max", cfg.leaf_max, "maximum leaf size (0: 2*C(d+q,q))");
  sub.add_option("--gram", cfg.gram, "Gram model: auto, none, kernel, mass, green");
  sub.add_option("--kernel", cfg.kernel, "kernel: exponential, gaussian, matern32");
  sub.add_option("--kernel-length", cfg.kernel_length, "kernel length scale");
  sub.add_option("--sigma", cfg.sigma, "relative compression threshold");
  sub.add_option("--function", cfg.function, "test function: exp, sin, kink, quadratic");
  sub.add_option("--out", cfg.output, "output directory");
  sub.add_option("--seed", cfg.seed, "random seed");
}

}  // namespace

int run_cli(const std::vector<std::string> &raw_args, std::ostream &out, std::ostream &err) {
  std::vector<std::string> args;
  try {
    // expand --config FILE in place
    for (std::size_t k = 0; k < raw_args.size(); ++k) {
      const std::string &a = raw_args[k];
      if (a == "--config" || a.rfind("--config=", 0) == 0) {
        fs::path file;
        if (a == "--config") {
          if (k + 1 >= raw_args.size()) throw InputError("--config needs a file");
          file = raw_args[++k];
        } else {
          file = a.substr(9);
        }
        const auto extra = config_arguments(file);
        // place right after the verb so explicit flags come later
        const auto at = args.empty() ? args.end() : args.begin() + 1;
        args.insert(at, extra.begin(), extra.end());
      } else {
        args.push_back(a);
      }
    }
  } catch (const InputError &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"Generalized samplet bases for compactly supported functionals"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  RunConfig cfg;
  fs::path basis_path, data_path, coeff_path;

  auto *ex = app.add_subcommand("example", "write an example atom file (and Gram matrix)");
  auto *build = app.add_subcommand("build", "cluster, build and save a samplet basis");
  auto *transform = app.add_subcommand("transform", "samplet coefficients of data");
  auto *inverse = app.add_subcommand("inverse", "data from samplet coefficients");
  auto *compress = app.add_subcommand("compress", "compress a Gram matrix in samplet coordinates");
  auto *report = app.add_subcommand("report", "vanishing-moment and decay reports");
  auto *run = app.add_subcommand("run", "full pipeline: build, save, reload, transform, reports");
  for (auto *sub : {ex, build, transform, inverse, compress, report, run}) {
    sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    add_run_options(*sub, cfg);
  }
  for (auto *sub : {transform, inverse, compress, report})
    sub->add_option("--basis", basis_path, "basis container")->required();
  transform->add_option("--data", data_path, "CSV with a 'value' column (instead of --function)");
  inverse->add_option("--coefficients", coeff_path, "CSV with a 'coefficient' column")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    auto need_input = [&] {
      if (cfg.input.empty() && cfg.example.empty())
        throw InputError("one of --input or --example is required");
    };
    auto loaded_basis = [&] {
      std::uint64_t sum = 0;
      SampletBasis b = load_basis(basis_path, &sum);
      out << "loaded " << basis_path.string() << " checksum " << hex(sum) << '\n';
      return b;
    };
    auto check_match = [](const SampletBasis &b, const LoadedInput &in) {
      if (b.size() != static_cast<Index>(in.functionals.size()))
        throw InputError("basis size differs from the number of functionals");
    };

    if (ex->parsed()) {
      if (cfg.example.empty()) throw InputError("--example is required");
      const ExampleData data = generate_example(cfg.example, cfg.n, cfg.dim, cfg.seed);
      fs::create_directories(cfg.output);
      write_functionals(cfg.output / "atoms.csv", data.functionals);
      out << "wrote " << (cfg.output / "atoms.csv").string() << '\n';
      if (data.gram) {
        write_matrix_csv(cfg.output / "gram.csv", data.gram->G);
        out << "wrote " << (cfg.output / "gram.csv").string() << '\n';
      }
    } else if (build->parsed()) {
      need_input();
      const LoadedInput in = load_input(cfg);
      const SampletBasis basis = build_basis(cfg, in.functionals);
      fs::create_directories(cfg.output);
      const auto sum = save_basis(basis, cfg.output / "basis.bin");
      write_vanishing_report(cfg.output / "vanishing.csv", basis, in.functionals);
      out << "N=" << basis.size() << " depth=" << basis.tree().depth()
          << " samplets=" << basis.num_samplets() << " checksum " << hex(sum) << '\n';
    } else if (transform->parsed()) {
      const SampletBasis basis = loaded_basis();
      Eigen::VectorXd x;
      if (!data_path.empty()) {
        const auto col = read_csv_column(data_path, "value");
        x = Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Index>(col.size()));
      } else {
        need_input();
        const LoadedInput in = load_input(cfg);
        check_match(basis, in);
        x = analysis(in.functionals, named_test_function(cfg.function, cfg.dim));
      }
      fs::create_directories(cfg.output);
      const auto path =
          write_coefficients(cfg.output / "coefficients.csv", basis, basis.forward(x));
      out << "wrote " << path.string() << '\n';
    } else if (inverse->parsed()) {
      const SampletBasis basis = loaded_basis();
      const auto col = read_csv_column(coeff_path, "coefficient");
      const Eigen::VectorXd c =
          Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Index>(col.size()));
      const Eigen::VectorXd x = basis.inverse(c);
      fs::create_directories(cfg.output);
      auto f = open_csv(cfg.output / "values.csv");
      f << "index,value\n";
      for (Index i = 0; i < x.size(); ++i) f << i << ',' << format_number(x[i]) << '\n';
      out << "wrote " << (cfg.output / "values.csv").string() << '\n';
    } else if (compress->parsed()) {
      need_input();
      const SampletBasis basis = loaded_basis();
      const LoadedInput in = load_input(cfg);
      check_match(basis, in);
      const auto gram = select_gram(cfg, in);
      if (!gram) throw InputError("no Gram model available for compression");
      const auto o = compress_gram(basis, *gram, cfg.sigma);
      fs::create_directories(cfg.output);
      const auto path = write_compression_report(cfg.output / "compression.csv", o.compressed,
                                                 o.dense_fraction, o.relative_error);
      out << "kept " << o.compressed.kept << " of " << o.compressed.total
          << " relative error " << o.relative_error << '\n';
      out << "wrote " << path.string() << '\n';
    } else if (report->parsed()) {
      need_input();
      const SampletBasis basis = loaded_basis();
      const LoadedInput in = load_input(cfg);
      check_match(basis, in);
      fs::create_directories(cfg.output);
      write_vanishing_report(cfg.output / "vanishing.csv", basis, in.functionals);
      const DecayReport rep = decay_report(
          basis, in.functionals, named_test_function(cfg.function, cfg.dim), cfg.function);
      write_decay_report(cfg.output, rep);
      out << "decay slope " << (rep.slope ? format_number(*rep.slope) : "undefined")
          << (rep.annihilated ? " (annihilated)" : "") << '\n';
    } else if (run->parsed()) {
      const PipelineResult r = run_pipeline(cfg);
      out << "checksum " << hex(r.checksum) << " reloaded " << hex(r.reloaded_checksum) << '\n';
      out << "vanishing residual " << r.vanishing_residual << '\n';
      out << "decay slope " << (r.decay_slope ? format_number(*r.decay_slope) : "undefined")
          << '\n';
      for (const auto &p : r.artifacts) out << "wrote " << p.string() << '\n';
    }
  } catch (const InputError &e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError &e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error &e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace gensamplets
