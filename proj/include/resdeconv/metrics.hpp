#pragma once

#include "resdeconv/image.hpp"

#include <cmath>
#include <limits>

namespace resdeconv {

inline constexpr double kDefaultContentWeight = 5000.0;  // alpha
inline constexpr double kDefaultEdgeWeight = 100.0;      // gamma

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimWindowSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

struct QualityReport {
  double psnr_db = 0;  ///< +inf for identical inputs
  double ssim = 0;
};

struct LossReport {
  double content = 0;
  double edge = 0;
  double total = 0;
  double alpha = kDefaultContentWeight;
  double gamma = kDefaultEdgeWeight;
};

/// PSNR in dB with peak 1.
template <typename DerivedA, typename DerivedB>
double psnr(const Eigen::MatrixBase<DerivedA>& x_hat, const Eigen::MatrixBase<DerivedB>& x) {
  require_same_shape(x_hat, x, "psnr");
  require_nonempty(x, "psnr");
  const double mse = (x_hat - x).template cast<double>().squaredNorm() / double(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline Image<double> ssim_window() {
  Image<double> w(kSsimWindow, kSsimWindow);
  const int c = kSsimWindow / 2;
  for (int i = 0; i < kSsimWindow; ++i) {
    for (int j = 0; j < kSsimWindow; ++j) {
      const double r2 = double((i - c) * (i - c) + (j - c) * (j - c));
      w(i, j) = std::exp(-r2 / (2.0 * kSsimWindowSigma * kSsimWindowSigma));
    }
  }
  return w / w.sum();
}

}  // namespace detail

/// Mean SSIM over all fully-contained 11x11 Gaussian windows (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, peak 1.
template <typename DerivedA, typename DerivedB>
double ssim(const Eigen::MatrixBase<DerivedA>& x_hat, const Eigen::MatrixBase<DerivedB>& x) {
  require_same_shape(x_hat, x, "ssim");
  if (x.rows() < kSsimWindow || x.cols() < kSsimWindow) {
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  }
  const Image<double> a = x_hat.template cast<double>();
  const Image<double> b = x.template cast<double>();
  const Image<double> w = detail::ssim_window();
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);

  const Eigen::Index out_rows = a.rows() - kSsimWindow + 1;
  const Eigen::Index out_cols = a.cols() - kSsimWindow + 1;
  double total = 0;
  for (Eigen::Index i = 0; i < out_rows; ++i) {
    for (Eigen::Index j = 0; j < out_cols; ++j) {
      const auto pa = a.block(i, j, kSsimWindow, kSsimWindow);
      const auto pb = b.block(i, j, kSsimWindow, kSsimWindow);
      const double mu_a = w.cwiseProduct(pa).sum();
      const double mu_b = w.cwiseProduct(pb).sum();
      const double var_a = w.cwiseProduct(pa.cwiseProduct(pa)).sum() - mu_a * mu_a;
      const double var_b = w.cwiseProduct(pb.cwiseProduct(pb)).sum() - mu_b * mu_b;
      const double cov = w.cwiseProduct(pa.cwiseProduct(pb)).sum() - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  }
  return total / double(out_rows * out_cols);
}

template <typename DerivedA, typename DerivedB>
QualityReport evaluate_quality(const Eigen::MatrixBase<DerivedA>& x_hat,
                               const Eigen::MatrixBase<DerivedB>& x) {
  return {psnr(x_hat, x), ssim(x_hat, x)};
}

/// Mean smooth-L1 of the difference (quadratic below |d| = 1).
template <typename DerivedA, typename DerivedB>
double content_loss(const Eigen::MatrixBase<DerivedA>& x_hat, const Eigen::MatrixBase<DerivedB>& x) {
  require_same_shape(x_hat, x, "content_loss");
  require_nonempty(x, "content_loss");
  const Image<double> d = (x_hat - x).template cast<double>();
  const double sum = d.unaryExpr([](double v) {
                        const double m = std::abs(v);
                        return m < 1.0 ? 0.5 * v * v : m - 0.5;
                      }).sum();
  return sum / double(d.size());
}

/// Per-pixel mean of squared differences between forward-difference gradients
/// (horizontal plus vertical), periodic at the border.
template <typename DerivedA, typename DerivedB>
double edge_loss(const Eigen::MatrixBase<DerivedA>& x_hat, const Eigen::MatrixBase<DerivedB>& x) {
  require_same_shape(x_hat, x, "edge_loss");
  require_nonempty(x, "edge_loss");
  const Image<double> d = (x_hat - x).template cast<double>();
  const Eigen::Index h = d.rows(), w = d.cols();
  double sum = 0;
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) {
      const double dh = d(i, (j + 1) % w) - d(i, j);
      const double dv = d((i + 1) % h, j) - d(i, j);
      sum += dh * dh + dv * dv;
    }
  }
  return sum / double(d.size());
}

inline LossReport combine_losses(double content, double edge, double alpha = kDefaultContentWeight,
                                 double gamma = kDefaultEdgeWeight) {
  if (!(alpha >= 0) || !(gamma >= 0)) {
    throw std::invalid_argument("loss weights must be nonnegative");
  }
  return {content, edge, alpha * content + gamma * edge, alpha, gamma};
}

/// alpha * content + gamma * edge.
template <typename DerivedA, typename DerivedB>
LossReport total_loss(const Eigen::MatrixBase<DerivedA>& x_hat, const Eigen::MatrixBase<DerivedB>& x,
                      double alpha = kDefaultContentWeight, double gamma = kDefaultEdgeWeight) {
  if (!(alpha >= 0) || !(gamma >= 0)) {
    throw std::invalid_argument("loss weights must be nonnegative");
  }
  return combine_losses(content_loss(x_hat, x), edge_loss(x_hat, x), alpha, gamma);
}

}  // namespace resdeconv
