#pragma once

#include "resdeconv/conv.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace resdeconv {

/// Identifies the noise generator in run manifests.
inline constexpr std::string_view kNoiseGeneratorName = "mt19937_64+std::normal_distribution";

struct DegradeConfig {
  double noise_sigma = 0.0;  ///< std of additive Gaussian noise
  std::uint64_t seed = 0;
};

/// b = k * x + eta, eta i.i.d. N(0, noise_sigma^2), reproducible per seed.
template <typename Derived>
Image<typename Derived::Scalar> degrade(const Eigen::MatrixBase<Derived>& x,
                                        const Kernel<typename Derived::Scalar>& k,
                                        const DegradeConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  if (!(cfg.noise_sigma >= 0.0)) {
    throw std::invalid_argument("degrade: noise_sigma must be nonnegative");
  }
  Image<Scalar> b = convolve_circular(x, k);
  if (cfg.noise_sigma > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] += Scalar(noise(rng));
  }
  return b;
}

enum class KernelFamily { trajectory, disk, gaussian };

KernelFamily parse_kernel_family(std::string_view name);
std::string_view to_string(KernelFamily family);

struct KernelGenConfig {
  int size = 21;  ///< odd, >= 3
  std::uint64_t seed = 0;
  KernelFamily family = KernelFamily::trajectory;
};

/// Camera-shake kernel: a seeded 2-D random walk with momentum, centered on
/// the grid, splatted bilinearly, smoothed by a 3x3 Gaussian (sigma 0.5) and
/// normalized. A walk that collapses onto one tap is redrawn with seed + 1,
/// at most 10 times.
Kernel<double> gen_trajectory_kernel(const KernelGenConfig& cfg);

/// Uniform disk with anti-aliased rim (pixel coverage by 32x32 supersampling).
/// size = 0 picks the smallest odd grid that holds the disk.
Kernel<double> gen_disk_kernel(double radius, int size = 0);

/// Sampled isotropic Gaussian, normalized.
Kernel<double> gen_gaussian_kernel(int size, double sigma);

/// Dispatch on cfg.family: disk radius (size - 1)/2, Gaussian sigma size/6.
Kernel<double> generate_kernel(const KernelGenConfig& cfg);

}  // namespace resdeconv
