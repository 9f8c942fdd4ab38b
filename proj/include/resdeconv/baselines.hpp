#pragma once

#include "resdeconv/conv.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

namespace resdeconv {

/// sign(v) max(|v| - threshold, 0), element-wise; the proximal map of threshold*||.||_1.
template <typename Derived>
Image<typename Derived::Scalar> soft_shrink(const Eigen::MatrixBase<Derived>& v,
                                            typename Derived::Scalar threshold) {
  using Scalar = typename Derived::Scalar;
  if (!(threshold >= Scalar(0))) {
    throw std::invalid_argument("soft_shrink: threshold must be nonnegative");
  }
  return v.unaryExpr([threshold](Scalar x) {
    const Scalar mag = std::abs(x) - threshold;
    return mag > Scalar(0) ? std::copysign(mag, x) : Scalar(0);
  });
}

/// F(x) = ||k * x - b||_2^2 + lambda ||x||_1
template <typename DerivedX, typename DerivedB>
typename DerivedX::Scalar l1_objective(const Eigen::MatrixBase<DerivedX>& x,
                                       const Eigen::MatrixBase<DerivedB>& b,
                                       const Kernel<typename DerivedX::Scalar>& k,
                                       typename DerivedX::Scalar lambda) {
  require_same_shape(x, b, "l1_objective");
  return (convolve_circular(x, k) - b).squaredNorm() + lambda * x.template lpNorm<1>();
}

template <typename Scalar>
struct AdmmConfig {
  Scalar lambda = Scalar(0.01);  ///< weight of ||x||_1 in F
  Scalar rho = Scalar(1);        ///< augmented Lagrangian penalty
  std::size_t max_iters = 500;
  Scalar tol = Scalar(1e-6);  ///< on ||x - z|| / ||b|| and rho ||z - z_prev|| / ||b||

  void validate() const {
    if (!(lambda > 0) || !(rho > 0) || max_iters == 0 || !(tol > 0)) {
      throw std::invalid_argument("AdmmConfig: lambda, rho, max_iters, tol must be positive");
    }
  }
};

template <typename Scalar>
struct ApgConfig {
  Scalar lambda = Scalar(0.01);
  Scalar step = Scalar(0.25);  ///< t; at most 1 / (2 max|k^|^2) = 0.5
  std::size_t max_iters = 500;
  Scalar tol = Scalar(1e-6);  ///< on ||x_i - x_{i-1}|| / ||x_{i-1}||
  /// Scale the gradient step by 2 lambda t instead of 2 t.
  bool lambda_scaled_step = false;

  void validate() const {
    if (!(lambda >= 0) || !(step > 0) || max_iters == 0 || !(tol > 0)) {
      throw std::invalid_argument("ApgConfig: lambda must be nonnegative; step, max_iters, tol positive");
    }
    if (step > Scalar(0.5)) {
      throw std::invalid_argument("ApgConfig: step must not exceed 0.5");
    }
  }
};

template <typename Scalar>
struct SolverResult {
  Image<Scalar> x_hat;
  std::size_t iterations_used = 0;
  std::vector<Scalar> objective_history;  ///< F at x0, then after every iteration
  bool converged = false;
  Scalar primal_residual = 0;  ///< ADMM: ||x - z|| at exit
};

/// Spectral form of the circular operator: H x = ifft(k^ fft(x)).
template <typename Scalar>
class SpectralBlur {
 public:
  SpectralBlur(const Kernel<Scalar>& k, Shape shape) : kh_(transfer_function(k, shape)) {}

  const ComplexImage<Scalar>& response() const { return kh_; }

  /// H^T (H x - b)
  Image<Scalar> normal_residual(const Image<Scalar>& x, const ComplexImage<Scalar>& b_hat) const {
    ComplexImage<Scalar> freq = fft2(x);
    freq.array() = kh_.conjugate().array() * (kh_.array() * freq.array() - b_hat.array());
    return ifft2_real(std::move(freq));
  }

 private:
  ComplexImage<Scalar> kh_;
};

/// Exact x-update of the L1 ADMM: (H^T H + rho I)^{-1} (H^T b + rho z - y),
/// solved per frequency.
template <typename Scalar>
Image<Scalar> admm_x_update(const Image<Scalar>& b, const Kernel<Scalar>& k, const Image<Scalar>& z,
                            const Image<Scalar>& y, Scalar rho) {
  require_same_shape(b, z, "admm_x_update");
  require_same_shape(b, y, "admm_x_update");
  const ComplexImage<Scalar> kh = transfer_function(k, shape_of(b));
  ComplexImage<Scalar> freq = kh.conjugate().cwiseProduct(fft2(b)) + fft2(Image<Scalar>(rho * z - y));
  freq.array() /= (kh.cwiseAbs2().array() + rho).template cast<std::complex<Scalar>>();
  return ifft2_real(std::move(freq));
}

/// L1-regularized ADMM on F with x = z splitting. Starts from z = b, y = 0.
/// The x-update carries the 1/2-scaled data term, so the shrinkage threshold
/// is lambda / (2 rho) for the fixed point to minimize F.
template <typename Derived>
SolverResult<typename Derived::Scalar> admm_l1(const Eigen::MatrixBase<Derived>& b_in,
                                               const Kernel<typename Derived::Scalar>& k,
                                               const AdmmConfig<typename Derived::Scalar>& cfg) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  require_nonempty(b_in, "admm_l1");
  const Image<Scalar> b = b_in;
  const Shape shape = shape_of(b);
  const ComplexImage<Scalar> kh = transfer_function(k, shape);
  const ComplexImage<Scalar> htb = kh.conjugate().cwiseProduct(fft2(b));
  const Image<Scalar> denom = (kh.cwiseAbs2().array() + cfg.rho).matrix();
  const Scalar threshold = cfg.lambda / (Scalar(2) * cfg.rho);
  const Scalar scale = b.norm();

  SolverResult<Scalar> result;
  Image<Scalar> x = b;
  Image<Scalar> z = b;
  Image<Scalar> y = Image<Scalar>::Zero(shape.rows, shape.cols);
  result.objective_history.push_back(l1_objective(x, b, k, cfg.lambda));

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    ComplexImage<Scalar> freq = htb + fft2(Image<Scalar>(cfg.rho * z - y));
    freq.array() /= denom.array().template cast<std::complex<Scalar>>();
    x = ifft2_real(std::move(freq));

    const Image<Scalar> z_prev = z;
    z = soft_shrink(x + y / cfg.rho, threshold);
    y += cfg.rho * (x - z);

    result.iterations_used = it;
    result.objective_history.push_back(l1_objective(x, b, k, cfg.lambda));
    const Scalar primal = (x - z).norm();
    const Scalar dual = cfg.rho * (z - z_prev).norm();
    result.primal_residual = primal;
    if (primal <= cfg.tol * scale && dual <= cfg.tol * scale) {
      result.converged = true;
      break;
    }
  }
  result.x_hat = std::move(x);
  return result;
}

/// Accelerated proximal gradient on F: x_i = S_{lambda t}(y - 2 t H^T (H y - b)),
/// y = x_i + (i - 1)/(i + 2) (x_i - x_{i-1}), starting from x_0 = y = b.
template <typename Derived>
SolverResult<typename Derived::Scalar> apg_l1(const Eigen::MatrixBase<Derived>& b_in,
                                              const Kernel<typename Derived::Scalar>& k,
                                              const ApgConfig<typename Derived::Scalar>& cfg) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  require_nonempty(b_in, "apg_l1");
  const Image<Scalar> b = b_in;
  const SpectralBlur<Scalar> blur(k, shape_of(b));
  const ComplexImage<Scalar> b_hat = fft2(b);
  const Scalar gradient_scale =
      Scalar(2) * cfg.step * (cfg.lambda_scaled_step ? cfg.lambda : Scalar(1));
  const Scalar threshold = cfg.lambda * cfg.step;

  SolverResult<Scalar> result;
  Image<Scalar> x_prev = b;
  Image<Scalar> y = b;
  result.objective_history.push_back(l1_objective(x_prev, b, k, cfg.lambda));

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    Image<Scalar> x = soft_shrink(y - gradient_scale * blur.normal_residual(y, b_hat), threshold);
    const Scalar momentum = Scalar(it - 1) / Scalar(it + 2);
    y = x + momentum * (x - x_prev);

    result.iterations_used = it;
    result.objective_history.push_back(l1_objective(x, b, k, cfg.lambda));
    const Scalar change = (x - x_prev).norm();
    const Scalar ref = std::max(x_prev.norm(), std::numeric_limits<Scalar>::min());
    x_prev = std::move(x);
    if (change <= cfg.tol * ref) {
      result.converged = true;
      break;
    }
  }
  result.x_hat = std::move(x_prev);
  return result;
}

}  // namespace resdeconv
