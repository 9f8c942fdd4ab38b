#include "cli.hpp"

#include "resdeconv/baselines.hpp"
#include "resdeconv/degrade.hpp"
#include "resdeconv/io.hpp"
#include "resdeconv/ird.hpp"
#include "resdeconv/manifest.hpp"
#include "resdeconv/metrics.hpp"
#include "resdeconv/mmse.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace resdeconv::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestName = "manifest.txt";
constexpr double kOracleTolerance = 1e-6;

/// Failure that maps to exit code 3.
class ToleranceBreach : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string extension_of(ImageFormat f) {
  switch (f) {
    case ImageFormat::pgm:
      return ".pgm";
    case ImageFormat::png:
      return ".png";
    case ImageFormat::txt:
      return ".txt";
  }
  return "";
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");
}

/// Output names are the input stems; two inputs may not collide.
std::vector<std::string> unique_stems(const std::vector<std::string>& inputs) {
  std::vector<std::string> stems;
  std::set<std::string> seen;
  for (const auto& in : inputs) {
    std::string stem = fs::path(in).stem().string();
    if (!seen.insert(stem).second) {
      throw std::invalid_argument("two inputs share the file stem '" + stem + "'");
    }
    stems.push_back(std::move(stem));
  }
  return stems;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
/// failure in index order.
template <typename Fn>
void for_each_index(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ImageD rescale_to_unit_max(const ImageD& img) {
  const double peak = img.cwiseAbs().maxCoeff();
  return peak > 0.0 ? ImageD(img / peak) : img;
}

std::string zero_pad(std::size_t n, int width) {
  std::ostringstream s;
  s << std::setw(width) << std::setfill('0') << n;
  return s.str();
}

double relative_error(const ImageD& a, const ImageD& ref) {
  const double denom = ref.norm();
  return denom > 0.0 ? (a - ref).norm() / denom : (a - ref).norm();
}

// --- degrade ---------------------------------------------------------------

struct DegradeArgs {
  std::vector<std::string> images;
  std::string kernel;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "pgm";
  int bit_depth = 16;
  std::size_t jobs = 1;
};

void add_degrade(CLI::App& app, DegradeArgs& a) {
  app.add_option("--image", a.images, "Clear input image(s)")->required();
  app.add_option("--kernel", a.kernel, "Blur kernel (text format)")->required();
  app.add_option("--noise-sigma", a.noise_sigma, "Std of additive Gaussian noise")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", a.seed, "Noise seed; image i uses seed + i")->capture_default_str();
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--format", a.format, "Output format")
      ->capture_default_str()
      ->check(CLI::IsMember({"pgm", "png", "txt"}));
  app.add_option("--bit-depth", a.bit_depth, "PGM bit depth")
      ->capture_default_str()
      ->check(CLI::IsMember({8, 16}));
  app.add_option("--jobs", a.jobs, "Images processed in parallel")->capture_default_str();
}

int cmd_degrade(const DegradeArgs& a, const std::vector<std::string>& argv) {
  const Kernel<double> k = load_kernel_text(a.kernel);
  const auto stems = unique_stems(a.images);
  const ImageFormat format = parse_image_format(a.format);
  const fs::path out_dir(a.out);
  ensure_directory(out_dir);

  std::vector<std::string> outputs(a.images.size());
  for_each_index(a.images.size(), a.jobs, [&](std::size_t i) {
    const ImageD x = load_image(a.images[i]);
    const DegradeConfig cfg{a.noise_sigma, a.seed + i};
    const fs::path target = out_dir / (stems[i] + extension_of(format));
    save_image(degrade(x, k, cfg), target, format, a.bit_depth);
    outputs[i] = target.filename().string();
  });

  RunManifest m;
  m.set("command", "degrade");
  m.set_args(argv);
  m.set("toolkit_version", std::string(kToolkitVersion));
  m.set("kernel", a.kernel);
  m.set("noise_sigma", format_double(a.noise_sigma));
  m.set("seed", std::to_string(a.seed));
  m.set("noise_generator", std::string(kNoiseGeneratorName));
  m.set("format", a.format);
  m.set("bit_depth", std::to_string(a.bit_depth));
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    m.set("input." + std::to_string(i), a.images[i]);
    m.set("output." + std::to_string(i), outputs[i]);
    m.set("seed." + std::to_string(i), std::to_string(a.seed + i));
  }
  m.write(out_dir / kManifestName);
  return kOk;
}

// --- deconv ----------------------------------------------------------------

struct DeconvArgs {
  std::string method;
  std::vector<std::string> images;
  std::string kernel;
  std::string out;
  double sigma = 0.01;
  std::optional<std::size_t> iters;
  std::string fx;
  double lambda = 0.01;
  double rho = 1.0;
  double step = 0.25;
  double tol = 1e-6;
  std::optional<double> rel_tol;
  std::string trace_dir;
  std::size_t trace_every = 0;
  bool lambda_scaled_step = false;
  std::string format = "pgm";
  int bit_depth = 16;
  std::size_t jobs = 1;
};

void add_deconv(CLI::App& app, DeconvArgs& a) {
  app.add_option("--method", a.method, "Solver")
      ->required()
      ->check(CLI::IsMember({"ird", "wiener", "admm", "apg"}));
  app.add_option("--image", a.images, "Blurred input image(s)")->required();
  app.add_option("--kernel", a.kernel, "Blur kernel (text format)")->required();
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--sigma", a.sigma, "Noise regularization (ird, wiener)")->capture_default_str();
  app.add_option("--iters", a.iters, "Iterations: N for ird (default 100), cap for admm/apg (default 500)");
  app.add_option("--fx", a.fx, "Prior patch f_x (text format); delta if omitted");
  app.add_option("--lambda", a.lambda, "L1 weight (admm, apg)")->capture_default_str();
  app.add_option("--rho", a.rho, "ADMM penalty")->capture_default_str();
  app.add_option("--step", a.step, "APG step size")->capture_default_str();
  app.add_option("--tol", a.tol, "Stopping tolerance (admm, apg)")->capture_default_str();
  app.add_option("--rel-tol", a.rel_tol, "ird: iterate until ||r_n|| <= rel_tol ||b|| instead of a fixed N");
  app.add_option("--trace-dir", a.trace_dir, "ird: directory for residue images and energies");
  app.add_option("--trace-every", a.trace_every, "ird: residue image spacing (default N/10)");
  app.add_flag("--lambda-scaled-step", a.lambda_scaled_step,
               "apg: scale the gradient step by 2 lambda t instead of 2 t");
  app.add_option("--format", a.format, "Output format")
      ->capture_default_str()
      ->check(CLI::IsMember({"pgm", "png", "txt"}));
  app.add_option("--bit-depth", a.bit_depth, "PGM bit depth")
      ->capture_default_str()
      ->check(CLI::IsMember({8, 16}));
  app.add_option("--jobs", a.jobs, "Images processed in parallel")->capture_default_str();
}

struct DeconvOutcome {
  ImageD x_hat;
  std::map<std::string, std::string> fields;
};

void write_trace(const fs::path& dir, const std::string& stem, const IrdTrace<double>& trace,
                 const ResidualIteration<double>& iteration) {
  ensure_directory(dir);
  for (const auto& sample : trace.residues) {
    const std::string n = zero_pad(sample.n, 6);
    save_image(rescale_to_unit_max(sample.residue), dir / (stem + "_residue_" + n + ".pgm"),
               ImageFormat::pgm, 16);
    save_image(rescale_to_unit_max(iteration.project(sample.residue)),
               dir / (stem + "_component_" + n + ".pgm"), ImageFormat::pgm, 16);
  }
  std::ofstream csv(dir / (stem + "_energies.csv"));
  if (!csv) throw IoError("cannot write energies to '" + dir.string() + "'");
  csv << "n,residue_energy\n";
  for (std::size_t n = 0; n < trace.energies.size(); ++n) {
    csv << n << ',' << format_double(trace.energies[n]) << '\n';
  }
}

DeconvOutcome deconvolve_one(const DeconvArgs& a, const ImageD& b, const Kernel<double>& k,
                             const PriorPatch<double>& prior, const std::string& stem) {
  DeconvOutcome out;
  if (a.method == "wiener") {
    MmseConfig<double> cfg{a.sigma, prior};
    out.x_hat = wiener_solve(b, k, cfg);
    out.fields["converged"] = "true";
  } else if (a.method == "ird") {
    IrdConfig<double> cfg;
    cfg.sigma = a.sigma;
    cfg.prior = prior;
    cfg.n_iters = a.iters.value_or(100);
    const auto factors = convergence_factors(k, prior, a.sigma, shape_of(b));
    out.fields["rho_max"] = format_double(factors.rho_max);
    if (a.rel_tol) {
      const auto res = ird_auto_n(b, k, cfg, *a.rel_tol);
      out.x_hat = res.x_hat;
      out.fields["iterations_used"] = std::to_string(res.n_used);
      out.fields["converged"] = res.capped ? "false" : "true";
    } else {
      if (!a.trace_dir.empty()) {
        cfg.trace_every = a.trace_every > 0 ? a.trace_every : std::max<std::size_t>(1, cfg.n_iters / 10);
      }
      auto res = ird_deconvolve(b, k, cfg);
      out.x_hat = std::move(res.x_hat);
      out.fields["iterations_used"] = std::to_string(cfg.n_iters);
      out.fields["converged"] = "true";
      out.fields["final_residue_energy"] = format_double(res.trace.energies.back());
      if (!a.trace_dir.empty()) {
        write_trace(a.trace_dir, stem, res.trace, ResidualIteration<double>(k, prior, a.sigma, shape_of(b)));
      }
    }
  } else {
    SolverResult<double> res;
    if (a.method == "admm") {
      AdmmConfig<double> cfg{a.lambda, a.rho, a.iters.value_or(500), a.tol};
      res = admm_l1(b, k, cfg);
      out.fields["primal_residual"] = format_double(res.primal_residual);
    } else {
      ApgConfig<double> cfg{a.lambda, a.step, a.iters.value_or(500), a.tol, a.lambda_scaled_step};
      res = apg_l1(b, k, cfg);
    }
    out.x_hat = std::move(res.x_hat);
    out.fields["iterations_used"] = std::to_string(res.iterations_used);
    out.fields["converged"] = res.converged ? "true" : "false";
    out.fields["initial_objective"] = format_double(res.objective_history.front());
    out.fields["final_objective"] = format_double(res.objective_history.back());
  }
  return out;
}

int cmd_deconv(const DeconvArgs& a, const std::vector<std::string>& argv) {
  if (a.method != "ird" && (!a.trace_dir.empty() || a.rel_tol)) {
    throw std::invalid_argument("--trace-dir and --rel-tol apply to --method ird only");
  }
  if (a.rel_tol && !a.trace_dir.empty()) {
    throw std::invalid_argument("--trace-dir cannot be combined with --rel-tol");
  }
  if ((a.method == "admm" || a.method == "apg") && !a.fx.empty()) {
    throw std::invalid_argument("--fx applies to ird and wiener only");
  }
  const Kernel<double> k = load_kernel_text(a.kernel);
  const PriorPatch<double> prior = a.fx.empty() ? PriorPatch<double>() : load_prior_patch_text(a.fx);
  const auto stems = unique_stems(a.images);
  const ImageFormat format = parse_image_format(a.format);
  const fs::path out_dir(a.out);
  ensure_directory(out_dir);

  std::vector<DeconvOutcome> outcomes(a.images.size());
  std::vector<std::string> outputs(a.images.size());
  for_each_index(a.images.size(), a.jobs, [&](std::size_t i) {
    const ImageD b = load_image(a.images[i]);
    outcomes[i] = deconvolve_one(a, b, k, prior, stems[i]);
    const fs::path target = out_dir / (stems[i] + extension_of(format));
    save_image(outcomes[i].x_hat, target, format, a.bit_depth);
    outputs[i] = target.filename().string();
  });

  RunManifest m;
  m.set("command", "deconv");
  m.set_args(argv);
  m.set("toolkit_version", std::string(kToolkitVersion));
  m.set("solver", a.method);
  m.set("kernel", a.kernel);
  if (a.method == "ird" || a.method == "wiener") {
    m.set("config.sigma", format_double(a.sigma));
    m.set("config.fx", a.fx.empty() ? "delta" : a.fx);
  }
  if (a.method == "ird") {
    if (a.rel_tol) {
      m.set("config.rel_tol", format_double(*a.rel_tol));
      m.set("config.iteration_cap", std::to_string(kIrdIterationCap));
    } else {
      m.set("config.iters", std::to_string(a.iters.value_or(100)));
    }
    if (!a.trace_dir.empty()) m.set("config.trace_dir", a.trace_dir);
  }
  if (a.method == "admm" || a.method == "apg") {
    m.set("config.lambda", format_double(a.lambda));
    m.set("config.iters", std::to_string(a.iters.value_or(500)));
    m.set("config.tol", format_double(a.tol));
  }
  if (a.method == "admm") m.set("config.rho", format_double(a.rho));
  if (a.method == "apg") {
    m.set("config.step", format_double(a.step));
    m.set("config.lambda_scaled_step", a.lambda_scaled_step ? "true" : "false");
  }
  m.set("format", a.format);
  m.set("bit_depth", std::to_string(a.bit_depth));
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    const std::string prefix = "result." + std::to_string(i) + ".";
    m.set("input." + std::to_string(i), a.images[i]);
    m.set("output." + std::to_string(i), outputs[i]);
    for (const auto& [key, value] : outcomes[i].fields) m.set(prefix + key, value);
  }
  m.write(out_dir / kManifestName);
  return kOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string restored;
  std::string reference;
  bool loss = false;
  double alpha = kDefaultContentWeight;
  double gamma = kDefaultEdgeWeight;
  bool header = false;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  app.add_option("--restored", a.restored, "Restored image")->required();
  app.add_option("--reference", a.reference, "Ground-truth image")->required();
  app.add_flag("--loss", a.loss, "Append content, edge and total loss");
  app.add_option("--alpha", a.alpha, "Content loss weight")->capture_default_str();
  app.add_option("--gamma", a.gamma, "Edge loss weight")->capture_default_str();
  app.add_flag("--header", a.header, "Print a CSV header line first");
}

std::string format_psnr(double db) {
  if (std::isinf(db)) return "inf";
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << db;
  return s.str();
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const ImageD restored = load_image(a.restored);
  const ImageD reference = load_image(a.reference);
  require_same_shape(restored, reference, "eval");
  const QualityReport q = evaluate_quality(restored, reference);
  if (a.header) out << (a.loss ? "psnr_db,ssim,content,edge,total\n" : "psnr_db,ssim\n");
  out << format_psnr(q.psnr_db) << ',' << format_double(q.ssim);
  if (a.loss) {
    const LossReport l = total_loss(restored, reference, a.alpha, a.gamma);
    out << ',' << format_double(l.content) << ',' << format_double(l.edge) << ','
        << format_double(l.total);
  }
  out << '\n';
  return kOk;
}

// --- oracle-check ----------------------------------------------------------

struct OracleArgs {
  std::string kernel;
  double sigma = 0.01;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
};

void add_oracle(CLI::App& app, OracleArgs& a) {
  app.add_option("--kernel", a.kernel, "Blur kernel (text format)")->required();
  app.add_option("--sigma", a.sigma, "Regularization in (0, 1)")->capture_default_str();
  app.add_option("--trials", a.trials, "Random instances")->capture_default_str();
  app.add_option("--seed", a.seed, "Instance seed")->capture_default_str();
}

int cmd_oracle_check(const OracleArgs& a, std::ostream& out) {
  const Kernel<double> k = load_kernel_text(a.kernel);
  if (!(a.sigma > 0.0 && a.sigma < 1.0)) throw std::invalid_argument("--sigma must lie in (0, 1)");
  const Eigen::Index lo = std::max<Eigen::Index>({6, k.rows(), k.cols()});
  const Eigen::Index hi = std::max<Eigen::Index>(16, lo);
  if (hi * hi > kMaxOraclePixels) throw std::invalid_argument("kernel too large for the dense oracle");

  std::mt19937_64 rng(a.seed);
  std::uniform_int_distribution<Eigen::Index> dim(lo, hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double err_operator = 0, err_wiener = 0, err_ird = 0;
  for (std::size_t t = 0; t < a.trials; ++t) {
    const Shape shape{dim(rng), dim(rng)};
    ImageD x(shape.rows, shape.cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = unit(rng);

    const ImageD b = convolve_circular(x, k);
    const Vector<double> dense = materialize_operator(k, shape) * vec(x);
    err_operator = std::max(err_operator, relative_error(unvec(dense, shape), b));

    const MmseConfig<double> mmse{a.sigma, PriorPatch<double>()};
    const ImageD wiener = wiener_solve(b, k, mmse);
    err_wiener = std::max(err_wiener, relative_error(wiener, mmse_solve_dense(b, k, mmse)));

    IrdConfig<double> ird;
    ird.sigma = a.sigma;
    ird.n_iters = iterations_for_tail_bound(convergence_factors(k, ird.prior, a.sigma, shape).rho_max, 1e-8);
    err_ird = std::max(err_ird, relative_error(ird_deconvolve(b, k, ird).x_hat, wiener));
  }
  out << "check,max_relative_error\n";
  out << "operator_materialization," << format_double(err_operator) << '\n';
  out << "wiener_vs_dense," << format_double(err_wiener) << '\n';
  out << "ird_vs_wiener," << format_double(err_ird) << '\n';
  if (std::max({err_operator, err_wiener, err_ird}) > kOracleTolerance) {
    throw ToleranceBreach("oracle check exceeded tolerance " + format_double(kOracleTolerance));
  }
  return kOk;
}

// --- kernel-gen ------------------------------------------------------------

struct KernelGenArgs {
  std::string family = "trajectory";
  int size = 21;
  std::uint64_t seed = 0;
  std::optional<double> radius;
  std::string out;
};

void add_kernel_gen(CLI::App& app, KernelGenArgs& a) {
  app.add_option("--family", a.family, "Kernel family")
      ->capture_default_str()
      ->check(CLI::IsMember({"trajectory", "disk", "gaussian"}));
  app.add_option("--size", a.size, "Odd kernel size")->capture_default_str();
  app.add_option("--seed", a.seed, "Trajectory seed")->capture_default_str();
  app.add_option("--radius", a.radius, "Disk radius (default (size - 1) / 2)");
  app.add_option("--out", a.out, "Output kernel file")->required();
}

int cmd_kernel_gen(const KernelGenArgs& a) {
  const KernelGenConfig cfg{a.size, a.seed, parse_kernel_family(a.family)};
  if (a.radius && cfg.family != KernelFamily::disk) {
    throw std::invalid_argument("--radius applies to --family disk only");
  }
  const Kernel<double> k = a.radius ? gen_disk_kernel(*a.radius, a.size) : generate_kernel(cfg);
  save_kernel_text(k, a.out);
  return kOk;
}

// --- make-testset ----------------------------------------------------------

struct TestsetArgs {
  std::vector<std::string> images;
  std::size_t kernels = 10;
  int kernel_size = 21;
  std::string family = "trajectory";
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

void add_testset(CLI::App& app, TestsetArgs& a) {
  app.add_option("--image", a.images, "Clear source image(s)")->required();
  app.add_option("--kernels", a.kernels, "Number of generated kernels")->capture_default_str();
  app.add_option("--kernel-size", a.kernel_size, "Odd kernel size")->capture_default_str();
  app.add_option("--family", a.family, "Kernel family")
      ->capture_default_str()
      ->check(CLI::IsMember({"trajectory", "disk", "gaussian"}));
  app.add_option("--noise-sigma", a.noise_sigma, "Std of additive Gaussian noise")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", a.seed, "Kernel j uses seed + j; pair (i, j) noise uses seed + i * kernels + j")
      ->capture_default_str();
  app.add_option("--out", a.out, "Output directory")->required();
}

int cmd_make_testset(const TestsetArgs& a, const std::vector<std::string>& argv) {
  const auto stems = unique_stems(a.images);
  const fs::path out_dir(a.out);
  ensure_directory(out_dir);
  const KernelFamily family = parse_kernel_family(a.family);

  std::vector<Kernel<double>> kernels;
  for (std::size_t j = 0; j < a.kernels; ++j) {
    kernels.push_back(generate_kernel({a.kernel_size, a.seed + j, family}));
    save_kernel_text(kernels.back(), out_dir / ("kernel_" + zero_pad(j, 2) + ".txt"));
  }

  std::ofstream csv(out_dir / "testset.csv");
  if (!csv) throw IoError("cannot write testset.csv in '" + out_dir.string() + "'");
  csv << "blurred,kernel,clear,noise_sigma,seed\n";
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    const ImageD x = load_image(a.images[i]);
    const std::string clear = "clear_" + stems[i] + ".pgm";
    save_image(x, out_dir / clear, ImageFormat::pgm, 16);
    for (std::size_t j = 0; j < kernels.size(); ++j) {
      const std::uint64_t seed = a.seed + i * a.kernels + j;
      const std::string blurred = "blurred_" + stems[i] + "_k" + zero_pad(j, 2) + ".pgm";
      save_image(degrade(x, kernels[j], {a.noise_sigma, seed}), out_dir / blurred, ImageFormat::pgm, 16);
      csv << blurred << ",kernel_" << zero_pad(j, 2) << ".txt," << clear << ','
          << format_double(a.noise_sigma) << ',' << seed << '\n';
    }
  }

  RunManifest m;
  m.set("command", "make-testset");
  m.set_args(argv);
  m.set("toolkit_version", std::string(kToolkitVersion));
  m.set("kernel_family", a.family);
  m.set("kernel_size", std::to_string(a.kernel_size));
  m.set("kernels", std::to_string(a.kernels));
  m.set("noise_sigma", format_double(a.noise_sigma));
  m.set("seed", std::to_string(a.seed));
  m.set("noise_generator", std::string(kNoiseGeneratorName));
  m.write(out_dir / kManifestName);
  return kOk;
}

// --- export-loss-fixture ---------------------------------------------------

struct FixtureArgs {
  std::string out;
  std::size_t cases = 8;
  int size = 35;
  std::uint64_t seed = 0;
  double alpha = kDefaultContentWeight;
  double gamma = kDefaultEdgeWeight;
};

void add_fixture(CLI::App& app, FixtureArgs& a) {
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--cases", a.cases, "Number of image pairs")->capture_default_str();
  app.add_option("--size", a.size, "Square image size")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--seed", a.seed, "Pair generator seed")->capture_default_str();
  app.add_option("--alpha", a.alpha, "Content loss weight")->capture_default_str();
  app.add_option("--gamma", a.gamma, "Edge loss weight")->capture_default_str();
}

// Pairs are written in the lossless text format; differences span both
// branches of the smooth-L1 content loss.
int cmd_export_loss_fixture(const FixtureArgs& a, const std::vector<std::string>& argv) {
  const fs::path out_dir(a.out);
  ensure_directory(out_dir);
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::ofstream csv(out_dir / "fixture.csv");
  if (!csv) throw IoError("cannot write fixture.csv in '" + out_dir.string() + "'");
  csv << "case,restored,reference,alpha,gamma,content,edge,total\n";
  for (std::size_t c = 0; c < a.cases; ++c) {
    const double spread = 0.01 * std::pow(300.0, a.cases > 1 ? double(c) / double(a.cases - 1) : 0.0);
    std::normal_distribution<double> noise(0.0, spread);
    ImageD reference(a.size, a.size), restored(a.size, a.size);
    for (Eigen::Index i = 0; i < reference.size(); ++i) {
      reference.data()[i] = unit(rng);
      restored.data()[i] = reference.data()[i] + noise(rng);
    }
    const std::string restored_name = "case_" + zero_pad(c, 3) + "_restored.txt";
    const std::string reference_name = "case_" + zero_pad(c, 3) + "_reference.txt";
    save_matrix_text(restored, out_dir / restored_name);
    save_matrix_text(reference, out_dir / reference_name);
    // Losses on the values as a reader will parse them back.
    const ImageD restored_read = load_matrix_text(out_dir / restored_name);
    const ImageD reference_read = load_matrix_text(out_dir / reference_name);
    const LossReport l = total_loss(restored_read, reference_read, a.alpha, a.gamma);
    csv << c << ',' << restored_name << ',' << reference_name << ',' << format_double(l.alpha) << ','
        << format_double(l.gamma) << ',' << format_double(l.content) << ',' << format_double(l.edge)
        << ',' << format_double(l.total) << '\n';
  }

  RunManifest m;
  m.set("command", "export-loss-fixture");
  m.set_args(argv);
  m.set("toolkit_version", std::string(kToolkitVersion));
  m.set("seed", std::to_string(a.seed));
  m.set("cases", std::to_string(a.cases));
  m.write(out_dir / kManifestName);
  return kOk;
}

// --- replay ----------------------------------------------------------------

struct ReplayArgs {
  std::string manifest;
  std::string out;
  std::string trace_dir;
};

void add_replay(CLI::App& app, ReplayArgs& a) {
  app.add_option("--manifest", a.manifest, "Manifest of a previous run")->required();
  app.add_option("--out", a.out, "Output directory for the re-run")->required();
  app.add_option("--trace-dir", a.trace_dir, "Trace directory for the re-run (default <out>/trace)");
}

// Rewrites --out (and --trace-dir) of the recorded command line.
std::vector<std::string> retarget(std::vector<std::string> args, const ReplayArgs& a) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& tok = args[i];
    if (tok == "--out" || tok == "--trace-dir") {
      const bool is_out = tok == "--out";
      out.push_back(tok);
      out.push_back(is_out ? a.out : (a.trace_dir.empty() ? (fs::path(a.out) / "trace").string() : a.trace_dir));
      ++i;
    } else if (tok.rfind("--out=", 0) == 0) {
      out.push_back("--out=" + a.out);
    } else if (tok.rfind("--trace-dir=", 0) == 0) {
      out.push_back("--trace-dir=" +
                    (a.trace_dir.empty() ? (fs::path(a.out) / "trace").string() : a.trace_dir));
    } else {
      out.push_back(tok);
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-blind image deconvolution toolkit", "resdeconv"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.require_subcommand(1);

  DegradeArgs degrade_args;
  DeconvArgs deconv_args;
  EvalArgs eval_args;
  OracleArgs oracle_args;
  KernelGenArgs kernel_args;
  TestsetArgs testset_args;
  FixtureArgs fixture_args;
  ReplayArgs replay_args;

  auto* degrade_cmd = app.add_subcommand("degrade", "Blur (and optionally add noise to) clear images");
  add_degrade(*degrade_cmd, degrade_args);
  auto* deconv_cmd = app.add_subcommand("deconv", "Deconvolve blurred images");
  add_deconv(*deconv_cmd, deconv_args);
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM (and losses) of a restored image as CSV");
  add_eval(*eval_cmd, eval_args);
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare fast solvers against dense oracles");
  add_oracle(*oracle_cmd, oracle_args);
  auto* kernel_cmd = app.add_subcommand("kernel-gen", "Generate a blur kernel");
  add_kernel_gen(*kernel_cmd, kernel_args);
  auto* testset_cmd = app.add_subcommand("make-testset", "Write blurred/kernel/clear triples and a CSV index");
  add_testset(*testset_cmd, testset_args);
  auto* fixture_cmd = app.add_subcommand("export-loss-fixture", "Write loss reference values for cross-checks");
  add_fixture(*fixture_cmd, fixture_args);
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  add_replay(*replay_cmd, replay_args);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kOk;
    for (const auto* sub : app.get_subcommands()) err << sub->help();
    if (app.get_subcommands().empty()) err << app.help();
    return kBadArguments;
  }

  try {
    if (degrade_cmd->parsed()) return cmd_degrade(degrade_args, args);
    if (deconv_cmd->parsed()) return cmd_deconv(deconv_args, args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, out);
    if (oracle_cmd->parsed()) return cmd_oracle_check(oracle_args, out);
    if (kernel_cmd->parsed()) return cmd_kernel_gen(kernel_args);
    if (testset_cmd->parsed()) return cmd_make_testset(testset_args, args);
    if (fixture_cmd->parsed()) return cmd_export_loss_fixture(fixture_args, args);
    if (replay_cmd->parsed()) {
      const RunManifest m = RunManifest::read(replay_args.manifest);
      return run(retarget(m.args(), replay_args), out, err);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const ToleranceBreach& e) {
    err << "error: " << e.what() << '\n';
    return kToleranceBreach;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  }
  return kBadArguments;
}

}  // namespace resdeconv::cli
