// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "cli.hpp"
#include "resdeconv/baselines.hpp"
#include "resdeconv/degrade.hpp"
#include "resdeconv/io.hpp"
#include "resdeconv/ird.hpp"
#include "resdeconv/metrics.hpp"
#include "resdeconv/mmse.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace resdeconv;
using resdeconv::testing::random_image;
using resdeconv::testing::random_kernel;
using resdeconv::testing::random_odd;
using resdeconv::testing::relative_l2;

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

struct Instance {
  ImageD b;
  Kernel<double> k;
  double sigma;
};

// Images 4x4 to 16x16, kernels 3x3 to 5x5 (clipped to the image), sigma alternating 0.01 / 0.1.
std::vector<Instance> oracle_instances(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> dim(4, 16);
  std::vector<Instance> out;
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::Index h = dim(rng), w = dim(rng);
    const Eigen::Index kr = random_odd(3, std::min<Eigen::Index>(5, h), rng);
    const Eigen::Index kc = random_odd(3, std::min<Eigen::Index>(5, w), rng);
    out.push_back({random_image(h, w, rng), random_kernel(kr, kc, rng), i % 2 ? 0.1 : 0.01});
  }
  return out;
}

MmseConfig<double> mmse(double sigma) {
  MmseConfig<double> cfg;
  cfg.sigma = sigma;
  return cfg;
}

IrdConfig<double> ird(double sigma, std::size_t n) {
  IrdConfig<double> cfg;
  cfg.sigma = sigma;
  cfg.n_iters = n;
  return cfg;
}

ImageD astronaut() { return load_image(RESDECONV_TEST_DATA_DIR "/astronaut_128.png"); }

double high_frequency_fraction(const ImageD& x) {
  const auto spectrum = fft2(x);
  const Eigen::Index h = x.rows(), w = x.cols();
  std::vector<double> radii;
  for (Eigen::Index u = 0; u < h; ++u) {
    for (Eigen::Index v = 0; v < w; ++v) {
      radii.push_back(std::hypot(double(std::min(u, h - u)) / double(h), double(std::min(v, w - v)) / double(w)));
    }
  }
  std::vector<double> sorted = radii;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  double high = 0, total = 0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const double e = std::norm(spectrum.data()[i]);
    total += e;
    if (radii[std::size_t(i)] > median) high += e;
  }
  return high / total;
}

Outcome oracle_equivalence() {
  const Stopwatch clock;
  const auto instances = oracle_instances(60, 2024);
  double worst = 0;
  for (const auto& inst : instances) {
    const auto cfg = mmse(inst.sigma);
    worst = std::max(worst, relative_l2(wiener_solve(inst.b, inst.k, cfg), mmse_solve_dense(inst.b, inst.k, cfg)));
  }
  const double t = clock.seconds();
  return {worst <= 1e-8 && t < 10.0,
          std::to_string(instances.size()) + " instances, max rel err " + fmt(worst) + ", " + fmt(t) + " s"};
}

Outcome series_convergence() {
  const Stopwatch clock;
  const auto instances = oracle_instances(60, 2024);
  double worst = 0;
  std::size_t max_n = 0;
  for (const auto& inst : instances) {
    const double rho =
        convergence_factors(inst.k, PriorPatch<double>::identity(), inst.sigma, shape_of(inst.b)).rho_max;
    const std::size_t n = iterations_for_tail_bound(rho, 1e-8);
    max_n = std::max(max_n, n);
    const ImageD x = ird_deconvolve(inst.b, inst.k, ird(inst.sigma, n)).x_hat;
    worst = std::max(worst, relative_l2(x, wiener_solve(inst.b, inst.k, mmse(inst.sigma))));
  }
  const double t = clock.seconds();
  return {worst <= 1e-6 && t < 30.0,
          "max rel err " + fmt(worst) + " (N up to " + std::to_string(max_n) + "), " + fmt(t) + " s"};
}

// Kernel seed fixed at 1 before any run.
Kernel<double> figure_kernel() { return gen_trajectory_kernel(KernelGenConfig{21, 1, KernelFamily::trajectory}); }

Outcome restoration_noise_free() {
  const ImageD x = astronaut();
  const auto k = figure_kernel();
  const ImageD b = degrade(x, k, DegradeConfig{0.0, 0});
  const double blurry = psnr(b, x);
  std::vector<double> scores;
  for (std::size_t n : {10, 100, 1000}) scores.push_back(psnr(ird_deconvolve(b, k, ird(0.01, n)).x_hat, x));
  const bool increasing = scores[0] < scores[1] && scores[1] < scores[2];
  // Reported only: the same sweep with sigma = 0.001.
  std::string reference;
  for (std::size_t n : {10, 100, 1000}) {
    reference += (reference.empty() ? "" : " / ") + fmt(psnr(ird_deconvolve(b, k, ird(0.001, n)).x_hat, x));
  }
  return {increasing && scores[2] >= blurry + 5.0,
          "blurry " + fmt(blurry) + " dB; N=10/100/1000: " + fmt(scores[0]) + " / " + fmt(scores[1]) + " / " +
              fmt(scores[2]) + " dB (sigma 0.001: " + reference + " dB)"};
}

// The regularization matches the noise model: sigma = noise variance.
Outcome restoration_noisy() {
  const ImageD x = astronaut();
  const auto k = figure_kernel();
  const double noise = 0.01;
  const ImageD b = degrade(x, k, DegradeConfig{noise, 1});
  const std::vector<std::size_t> ns{10, 100, 1000};
  std::vector<double> scores;
  for (std::size_t n : ns) scores.push_back(psnr(ird_deconvolve(b, k, ird(noise * noise, n)).x_hat, x));
  const auto best = std::size_t(std::max_element(scores.begin(), scores.end()) - scores.begin());
  return {ns[best] < 1000, "N=10/100/1000: " + fmt(scores[0]) + " / " + fmt(scores[1]) + " / " + fmt(scores[2]) +
                               " dB, best at N=" + std::to_string(ns[best])};
}

Outcome residue_behavior() {
  const ImageD x = astronaut();
  const auto k = gen_gaussian_kernel(9, 1.0);
  const ImageD b = degrade(x, k, DegradeConfig{0.0, 0});
  const double sigma = 0.01;
  const auto result = ird_deconvolve(b, k, ird(sigma, 1000));
  const auto& e = result.trace.energies;
  const bool decreasing = e[1] > e[10] && e[10] > e[100] && e[100] > e[1000];
  const auto identity = PriorPatch<double>::identity();
  const double hf1 = high_frequency_fraction(ird_series_term(b, k, identity, sigma, 1));
  const double hf1000 = high_frequency_fraction(ird_series_term(b, k, identity, sigma, 1000));
  return {decreasing && hf1000 > hf1, "||r_n|| at 1/10/100/1000: " + fmt(e[1]) + " / " + fmt(e[10]) + " / " +
                                          fmt(e[100]) + " / " + fmt(e[1000]) + "; HF share " + fmt(hf1) + " -> " +
                                          fmt(hf1000)};
}

Outcome baseline_agreement() {
  const Stopwatch clock;
  std::mt19937_64 rng(77);
  double worst_gap = 0, worst_update = 0;
  std::size_t count = 0;
  const Shape shape{8, 8};
  for (double lambda : {0.001, 0.01}) {
    for (int trial = 0; trial < 5; ++trial) {
      const ImageD b = random_image(8, 8, rng);
      const auto k = random_kernel(3, 3, rng);
      AdmmConfig<double> admm;
      admm.lambda = lambda;
      admm.max_iters = 20000;
      admm.tol = 1e-10;
      ApgConfig<double> apg;
      apg.lambda = lambda;
      apg.max_iters = 50000;
      apg.tol = 1e-12;
      const double fa = admm_l1(b, k, admm).objective_history.back();
      const double fp = apg_l1(b, k, apg).objective_history.back();
      worst_gap = std::max(worst_gap, std::abs(fa - fp) / std::max(fa, fp));

      const ImageD z = random_image(8, 8, rng), y = random_image(8, 8, rng, -1, 1);
      const DenseMatrix<double> h = materialize_operator(k, shape);
      DenseMatrix<double> system = h.transpose() * h;
      system.diagonal().array() += admm.rho;
      const Vector<double> rhs = h.transpose() * vec(b) + admm.rho * vec(z) - vec(y);
      const ImageD dense = unvec(Vector<double>(system.fullPivLu().solve(rhs)), shape);
      worst_update = std::max(worst_update, relative_l2(admm_x_update(b, k, z, y, admm.rho), dense));
      ++count;
    }
  }
  const double t = clock.seconds();
  return {worst_gap <= 1e-4 && worst_update <= 1e-8 && t < 10.0,
          std::to_string(count) + " instances, max objective gap " + fmt(worst_gap) + ", x-update err " +
              fmt(worst_update) + ", " + fmt(t) + " s"};
}

Outcome metric_sanity() {
  std::vector<std::pair<std::string, bool>> checks;
  std::mt19937_64 rng(3);
  const ImageD x = random_image(16, 16, rng, 0.0, 0.9);
  checks.emplace_back("psnr identical", psnr(x, x) == std::numeric_limits<double>::infinity());
  checks.emplace_back("psnr mse 0.01", std::abs(psnr(ImageD(x.array() + 0.1), x) - 20.0) <= 1e-12);
  checks.emplace_back("ssim identical", std::abs(ssim(x, x) - 1.0) <= 1e-12);
  const ImageD half = ImageD::Constant(16, 16, 0.5);
  checks.emplace_back("ssim constant", ssim(half, half) == 1.0);
  ImageD texture(16, 16);
  for (Eigen::Index i = 0; i < 16; ++i) {
    for (Eigen::Index j = 0; j < 16; ++j) texture(i, j) = ((i / 2 + j / 2) % 2) ? 1.0 : 0.0;
  }
  checks.emplace_back("ssim anticorrelated", ssim(texture, ImageD(1.0 - texture.array())) < 0.0);
  checks.emplace_back("content identical", content_loss(x, x) == 0.0);
  checks.emplace_back("content d=0.5", content_loss(ImageD(x.array() + 0.5), x) == 0.125);
  checks.emplace_back("content d=2", content_loss(ImageD(x.array() + 2.0), x) == 1.5);
  checks.emplace_back("edge identical", edge_loss(x, x) == 0.0);
  checks.emplace_back("edge constants", edge_loss(half, ImageD::Constant(16, 16, 0.2)) == 0.0);
  checks.emplace_back("total identical", total_loss(x, x).total == 0.0);
  checks.emplace_back("total 501", std::abs(combine_losses(0.1, 0.01, 5000, 100).total - 501.0) <= 1e-10);
  const LossReport defaults = total_loss(x, x);
  checks.emplace_back("default weights", defaults.alpha == 5000.0 && defaults.gamma == 100.0);

  std::string failed;
  for (const auto& [name, ok] : checks) {
    if (!ok) failed += (failed.empty() ? "" : ", ") + name;
  }
  return {failed.empty(), failed.empty() ? std::to_string(checks.size()) + " cases" : "failed: " + failed};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "resdeconv");
  std::ostringstream sink;
  return cli::run(args, sink, sink);
}

// Every file in `a` except the manifest must exist in `b` with identical bytes.
bool same_outputs(const fs::path& a, const fs::path& b, std::size_t& compared) {
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.txt") continue;
    const fs::path other = b / fs::relative(entry.path(), a);
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) return false;
    ++compared;
  }
  return compared > 0;
}

Outcome determinism() {
  const fs::path dir = resdeconv::testing::fresh_temp_dir("acceptance_determinism");
  std::mt19937_64 rng(5);
  save_image(random_image(48, 40, rng), dir / "clear.pgm");
  save_kernel_text(gen_trajectory_kernel(KernelGenConfig{9, 2, KernelFamily::trajectory}), dir / "k.txt");

  bool ok = invoke({"degrade", "--image", (dir / "clear.pgm").string(), "--kernel", (dir / "k.txt").string(),
                    "--noise-sigma", "0.01", "--seed", "11", "--out", (dir / "degrade_a").string()}) == 0;
  ok = ok && invoke({"replay", "--manifest", (dir / "degrade_a" / "manifest.txt").string(), "--out",
                     (dir / "degrade_b").string()}) == 0;
  std::size_t compared = 0;
  ok = ok && same_outputs(dir / "degrade_a", dir / "degrade_b", compared);

  const std::string blurred = (dir / "degrade_a" / "clear.pgm").string();
  for (const std::string method : {"ird", "wiener", "admm", "apg"}) {
    const fs::path first = dir / ("deconv_" + method + "_a");
    std::vector<std::string> args{"deconv", "--method", method, "--image", blurred, "--kernel",
                                  (dir / "k.txt").string(), "--out", first.string()};
    if (method == "ird") {
      args.insert(args.end(), {"--iters", "50", "--trace-dir", (first / "trace").string()});
    }
    ok = ok && invoke(args) == 0;
    ok = ok && invoke({"replay", "--manifest", (first / "manifest.txt").string(), "--out",
                       (dir / ("deconv_" + method + "_b")).string()}) == 0;
    std::size_t n = 0;
    ok = ok && same_outputs(first, dir / ("deconv_" + method + "_b"), n);
    compared += n;
  }
  return {ok, std::to_string(compared) + " output files byte-identical on re-run"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle_equivalence", oracle_equivalence},
      {"series_convergence", series_convergence},
      {"restoration_noise_free", restoration_noise_free},
      {"restoration_noisy", restoration_noisy},
      {"residue_behavior", residue_behavior},
      {"baseline_agreement", baseline_agreement},
      {"metric_sanity", metric_sanity},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
