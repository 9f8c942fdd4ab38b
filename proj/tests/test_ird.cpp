#include "resdeconv/degrade.hpp"
#include "resdeconv/io.hpp"
#include "resdeconv/ird.hpp"
#include "resdeconv/metrics.hpp"
#include "resdeconv/mmse.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace resdeconv;
using resdeconv::testing::random_image;
using resdeconv::testing::random_kernel;
using resdeconv::testing::random_odd;
using resdeconv::testing::relative_l2;

namespace {

IrdConfig<double> config(double sigma, std::size_t n, std::size_t trace_every = 0) {
  IrdConfig<double> cfg;
  cfg.sigma = sigma;
  cfg.n_iters = n;
  cfg.trace_every = trace_every;
  return cfg;
}

MmseConfig<double> wiener_config(double sigma) {
  MmseConfig<double> cfg;
  cfg.sigma = sigma;
  return cfg;
}

// Fraction of spectral energy above the median radial frequency.
double high_frequency_fraction(const ImageD& x) {
  const auto spectrum = fft2(x);
  const Eigen::Index h = x.rows(), w = x.cols();
  std::vector<double> radii;
  for (Eigen::Index u = 0; u < h; ++u) {
    for (Eigen::Index v = 0; v < w; ++v) {
      const double fu = double(std::min(u, h - u)) / double(h);
      const double fv = double(std::min(v, w - v)) / double(w);
      radii.push_back(std::hypot(fu, fv));
    }
  }
  std::vector<double> sorted = radii;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  double high = 0, total = 0;
  for (Eigen::Index u = 0; u < h; ++u) {
    for (Eigen::Index v = 0; v < w; ++v) {
      const double e = std::norm(spectrum(u, v));
      total += e;
      if (radii[std::size_t(u * w + v)] > median) high += e;
    }
  }
  return high / total;
}

}  // namespace

TEST(IrdDeconvolve, DeltaKernelGeometricSeries) {
  std::mt19937_64 rng(1);
  const ImageD b = random_image(6, 7, rng);
  const auto result = ird_deconvolve(b, Kernel<double>::delta(3, 3), config(0.5, 3, 1));
  EXPECT_LE((result.x_hat - 0.625 * b).cwiseAbs().maxCoeff(), 1e-15);
  ASSERT_EQ(result.trace.residues.size(), 4u);
  for (const auto& sample : result.trace.residues) {
    const ImageD expected = std::pow(-0.5, double(sample.n)) * b;
    EXPECT_LE((sample.residue - expected).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(IrdDeconvolve, ZeroIterationsIsCorrelation) {
  std::mt19937_64 rng(2);
  const ImageD b = random_image(9, 9, rng);
  const auto k = random_kernel(3, 5, rng);
  const auto result = ird_deconvolve(b, k, config(0.1, 0));
  EXPECT_LE((result.x_hat - apply_adjoint(b, k)).cwiseAbs().maxCoeff(), 1e-14);
  ASSERT_EQ(result.trace.energies.size(), 1u);
  EXPECT_DOUBLE_EQ(result.trace.energies[0], b.norm());
}

TEST(IrdDeconvolve, ConvergesToWiener) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const ImageD b = random_image(6, 6, rng);
    const auto k = random_kernel(3, 3, rng);
    const ImageD reference = wiener_solve(b, k, wiener_config(0.1));
    EXPECT_LE(relative_l2(ird_deconvolve(b, k, config(0.1, 500)).x_hat, reference), 1e-8);
  }
}

TEST(IrdDeconvolve, ErrorWithinTailBound) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const ImageD b = random_image(8, 10, rng);
    const auto k = random_kernel(random_odd(3, 5, rng), random_odd(3, 5, rng), rng);
    const double sigma = 0.05;
    const double rho = convergence_factors(k, PriorPatch<double>::identity(), sigma, shape_of(b)).rho_max;
    const std::size_t n = 50 + 10 * std::size_t(trial);
    const double bound = std::max(std::pow(rho, double(n + 1)) / (1 - rho), 1e-8);
    const ImageD reference = wiener_solve(b, k, wiener_config(sigma));
    EXPECT_LE(relative_l2(ird_deconvolve(b, k, config(sigma, n)).x_hat, reference), bound);
  }
}

TEST(IrdDeconvolve, NonIdentityPriorMatchesWiener) {
  std::mt19937_64 rng(5);
  ImageD taps(3, 3);
  taps << 0.05, 0.1, 0.05, 0.1, 0.4, 0.1, 0.05, 0.1, 0.05;
  const ImageD b = random_image(8, 8, rng);
  const auto k = random_kernel(3, 3, rng);
  auto cfg = config(0.1, 600);
  cfg.prior = PriorPatch<double>(taps);
  MmseConfig<double> mcfg{0.1, cfg.prior};
  EXPECT_LE(relative_l2(ird_deconvolve(b, k, cfg).x_hat, mmse_solve_dense(b, k, mcfg)), 1e-8);
}

TEST(IrdSeriesTerm, ZeroIsCorrelation) {
  std::mt19937_64 rng(6);
  const ImageD b = random_image(7, 7, rng);
  const auto k = random_kernel(3, 3, rng);
  EXPECT_LE((ird_series_term(b, k, PriorPatch<double>::identity(), 0.1, 0) - apply_adjoint(b, k))
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
}

TEST(IrdSeriesTerm, TermsResumToOutput) {
  std::mt19937_64 rng(7);
  const ImageD b = random_image(8, 8, rng);
  const auto k = random_kernel(5, 3, rng);
  const auto identity = PriorPatch<double>::identity();
  ImageD sum = ImageD::Zero(8, 8);
  for (std::size_t n = 0; n <= 100; ++n) {
    sum += ird_series_term(b, k, identity, 0.1, n);
    if (n == 10 || n == 37 || n == 100) {
      EXPECT_LE((sum - ird_deconvolve(b, k, config(0.1, n)).x_hat).cwiseAbs().maxCoeff(), 1e-10) << n;
    }
  }
}

TEST(IrdSeriesTerm, DeltaTermEnergiesHalve) {
  std::mt19937_64 rng(8);
  const ImageD b = random_image(5, 5, rng);
  for (std::size_t n = 0; n < 12; ++n) {
    const double energy =
        ird_series_term(b, Kernel<double>::delta(1, 1), PriorPatch<double>::identity(), 0.5, n).norm();
    EXPECT_NEAR(energy, std::pow(0.5, double(n)) * b.norm(), 1e-14);
  }
}

TEST(IrdAutoN, DeltaKernelStopsAtTwenty) {
  std::mt19937_64 rng(9);
  const ImageD b = random_image(6, 6, rng);
  const auto result = ird_auto_n(b, Kernel<double>::delta(3, 3), config(0.5, 0), 1e-6);
  EXPECT_EQ(result.n_used, 20u);
  EXPECT_FALSE(result.capped);
  EXPECT_LE(ird_auto_n(b, Kernel<double>::delta(3, 3), config(0.5, 0), 1.0).n_used, 1u);
}

TEST(IrdAutoN, RandomKernelWithinConvergenceBound) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const ImageD b = random_image(16, 16, rng);
    const auto k = random_kernel(3, 3, rng);
    const double rho = convergence_factors(k, PriorPatch<double>::identity(), 0.01, shape_of(b)).rho_max;
    const double rel_tol = 1e-4;
    const auto result = ird_auto_n(b, k, config(0.01, 0), rel_tol);
    EXPECT_LE(double(result.n_used), std::log(rel_tol) / std::log(rho) + 10);
  }
}

TEST(IrdAutoN, RejectsNonPositiveTolerance) {
  EXPECT_THROW(ird_auto_n(ImageD::Ones(4, 4), Kernel<double>::delta(1, 1), config(0.5, 0), 0.0),
               std::invalid_argument);
}

TEST(IterationsForTailBound, SmallestSufficientN) {
  for (double rho : {0.1, 0.5, 0.9, 0.99}) {
    const std::size_t n = iterations_for_tail_bound(rho, 1e-8);
    EXPECT_LE(std::pow(rho, double(n + 1)) / (1 - rho), 1e-8 * (1 + 1e-9));
    if (n > 0) {
      EXPECT_GT(std::pow(rho, double(n)) / (1 - rho), 1e-8);
    }
  }
  EXPECT_THROW(iterations_for_tail_bound(1.0, 1e-8), std::invalid_argument);
}

TEST(IrdTrace, SamplingSchedule) {
  std::mt19937_64 rng(11);
  const ImageD b = random_image(8, 8, rng);
  const auto result = ird_deconvolve(b, random_kernel(3, 3, rng), config(0.1, 25, 10));
  EXPECT_EQ(result.trace.energies.size(), 26u);
  std::vector<std::size_t> sampled;
  for (const auto& s : result.trace.residues) sampled.push_back(s.n);
  EXPECT_EQ(sampled, (std::vector<std::size_t>{0, 10, 20, 25}));
  EXPECT_EQ(result.trace.partial_outputs.back().estimate, result.x_hat);
}

TEST(IrdProperties, HighFrequencyShareGrowsWithN) {
  std::mt19937_64 rng(12);
  const ImageD x = random_image(32, 32, rng);
  const auto k = gen_gaussian_kernel(7, 1.0);
  const ImageD b = convolve_circular(x, k);
  const auto identity = PriorPatch<double>::identity();
  const ResidualIteration<double> iteration(k, identity, 0.01, shape_of(b));
  ImageD r = b;
  for (int n = 0; n < 100; ++n) iteration.step(r);
  double previous = high_frequency_fraction(iteration.project(r));
  int steps = 0, decreasing = 0;
  for (int n = 100; n < 1000; n += 10) {
    for (int i = 0; i < 10; ++i) iteration.step(r);
    const double current = high_frequency_fraction(iteration.project(r));
    ++steps;
    if (current < previous) ++decreasing;
    previous = current;
  }
  EXPECT_LE(double(decreasing), 0.05 * double(steps));
}

TEST(IrdProperties, NoiseAmplification) {
  const ImageD x = load_image(RESDECONV_TEST_DATA_DIR "/astronaut_128.png").topLeftCorner(64, 64);
  const auto k = gen_trajectory_kernel(KernelGenConfig{15, 4, KernelFamily::trajectory});
  const double noise = 0.01;
  const ImageD b = degrade(x, k, DegradeConfig{noise, 5});
  std::vector<double> scores;
  for (std::size_t n : {10, 100, 1000}) {
    scores.push_back(psnr(ird_deconvolve(b, k, config(noise * noise, n)).x_hat, x));
  }
  EXPECT_LT(scores[2], std::max(scores[0], scores[1]));
}
