#include "resdeconv/degrade.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace resdeconv {

namespace {

constexpr int kTrajectorySteps = 64;
constexpr int kTrajectoryRetries = 10;
constexpr int kDiskSupersampling = 32;

void require_kernel_size(int size) {
  if (size < 3 || size % 2 == 0) {
    throw std::invalid_argument("kernel size must be odd and >= 3, got " + std::to_string(size));
  }
}

struct Point {
  double r;
  double c;
};

std::vector<Point> random_walk(std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Point> path;
  path.reserve(kTrajectorySteps + 1);
  Point p{0.0, 0.0};
  Point v{unit(rng), unit(rng)};
  path.push_back(p);
  for (int i = 0; i < kTrajectorySteps; ++i) {
    v.r = 0.8 * v.r + 0.6 * unit(rng);
    v.c = 0.8 * v.c + 0.6 * unit(rng);
    p.r += v.r;
    p.c += v.c;
    path.push_back(p);
  }
  return path;
}

// Centers the path at its mean and scales its largest excursion to
// `extent` pixels.
void fit_to_grid(std::vector<Point>& path, double extent) {
  Point mean{0.0, 0.0};
  for (const auto& p : path) {
    mean.r += p.r;
    mean.c += p.c;
  }
  mean.r /= double(path.size());
  mean.c /= double(path.size());
  double reach = 0.0;
  for (auto& p : path) {
    p.r -= mean.r;
    p.c -= mean.c;
    reach = std::max({reach, std::abs(p.r), std::abs(p.c)});
  }
  const double scale = reach > 0.0 ? extent / reach : 0.0;
  for (auto& p : path) {
    p.r *= scale;
    p.c *= scale;
  }
}

// Bilinear splatting keeps the first moment of the path, so the center of
// mass stays at the grid center.
ImageD splat(const std::vector<Point>& path, int size) {
  ImageD grid = ImageD::Zero(size, size);
  const double center = size / 2;
  const double w = 1.0 / double(path.size());
  for (const auto& p : path) {
    const double r = p.r + center, c = p.c + center;
    const int r0 = static_cast<int>(std::floor(r));
    const int c0 = static_cast<int>(std::floor(c));
    const double fr = r - r0, fc = c - c0;
    const std::array<std::array<double, 2>, 2> weights{
        {{(1 - fr) * (1 - fc), (1 - fr) * fc}, {fr * (1 - fc), fr * fc}}};
    for (int dr = 0; dr < 2; ++dr) {
      for (int dc = 0; dc < 2; ++dc) {
        const int rr = r0 + dr, cc = c0 + dc;
        if (rr >= 0 && rr < size && cc >= 0 && cc < size) grid(rr, cc) += w * weights[dr][dc];
      }
    }
  }
  return grid;
}

ImageD smooth_3x3(const ImageD& in) {
  ImageD g(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      g(i, j) = std::exp(-double((i - 1) * (i - 1) + (j - 1) * (j - 1)) / (2.0 * 0.25));
    }
  }
  g /= g.sum();
  ImageD out = ImageD::Zero(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    for (Eigen::Index j = 0; j < in.cols(); ++j) {
      for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) {
          const Eigen::Index si = i - a, sj = j - b;
          if (si >= 0 && si < in.rows() && sj >= 0 && sj < in.cols()) {
            out(i, j) += g(a + 1, b + 1) * in(si, sj);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "trajectory") return KernelFamily::trajectory;
  if (name == "disk") return KernelFamily::disk;
  if (name == "gaussian") return KernelFamily::gaussian;
  throw std::invalid_argument("unknown kernel family '" + std::string(name) + "'");
}

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::trajectory:
      return "trajectory";
    case KernelFamily::disk:
      return "disk";
    case KernelFamily::gaussian:
      return "gaussian";
  }
  return "unknown";
}

Kernel<double> gen_trajectory_kernel(const KernelGenConfig& cfg) {
  require_kernel_size(cfg.size);
  // Leave one pixel for the bilinear footprint and one for the smoothing.
  const double max_extent = double(cfg.size / 2) - 1.5;
  for (int attempt = 0; attempt <= kTrajectoryRetries; ++attempt) {
    std::mt19937_64 rng(cfg.seed + std::uint64_t(attempt));
    std::vector<Point> path = random_walk(rng);
    std::uniform_real_distribution<double> length(0.25, 1.0);
    fit_to_grid(path, std::max(0.0, max_extent) * length(rng));
    const ImageD raw = splat(path, cfg.size);
    if ((raw.array() > 0.0).count() <= 1) continue;
    return Kernel<double>::normalized(smooth_3x3(raw).cwiseMax(0.0));
  }
  throw std::runtime_error("gen_trajectory_kernel: degenerate trajectory after retries");
}

Kernel<double> gen_disk_kernel(double radius, int size) {
  if (!(radius > 0.0)) throw std::invalid_argument("gen_disk_kernel: radius must be positive");
  if (size == 0) size = 2 * static_cast<int>(std::ceil(radius)) + 1;
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("gen_disk_kernel: size must be odd");
  const int c = size / 2;
  const double r2 = radius * radius;
  ImageD taps = ImageD::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      int inside = 0;
      for (int si = 0; si < kDiskSupersampling; ++si) {
        const double y = double(i - c) + (si + 0.5) / kDiskSupersampling - 0.5;
        for (int sj = 0; sj < kDiskSupersampling; ++sj) {
          const double x = double(j - c) + (sj + 0.5) / kDiskSupersampling - 0.5;
          if (x * x + y * y <= r2) ++inside;
        }
      }
      taps(i, j) = double(inside);
    }
  }
  return Kernel<double>::normalized(std::move(taps));
}

Kernel<double> gen_gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw std::invalid_argument("gen_gaussian_kernel: size must be odd");
  if (!(sigma > 0.0)) throw std::invalid_argument("gen_gaussian_kernel: sigma must be positive");
  const int c = size / 2;
  ImageD taps(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      taps(i, j) = std::exp(-double((i - c) * (i - c) + (j - c) * (j - c)) / (2.0 * sigma * sigma));
    }
  }
  return Kernel<double>::normalized(std::move(taps));
}

Kernel<double> generate_kernel(const KernelGenConfig& cfg) {
  require_kernel_size(cfg.size);
  switch (cfg.family) {
    case KernelFamily::trajectory:
      return gen_trajectory_kernel(cfg);
    case KernelFamily::disk:
      return gen_disk_kernel(double(cfg.size - 1) / 2.0, cfg.size);
    case KernelFamily::gaussian:
      return gen_gaussian_kernel(cfg.size, double(cfg.size) / 6.0);
  }
  throw std::invalid_argument("generate_kernel: unknown family");
}

}  // namespace resdeconv
