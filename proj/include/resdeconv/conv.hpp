#pragma once

#include "resdeconv/fft2.hpp"
#include "resdeconv/image.hpp"
#include "resdeconv/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace resdeconv {

/// Largest image (in pixels) for which dense operators are materialized.
inline constexpr Eigen::Index kMaxOraclePixels = 4096;

/// Kernels with at most this many nonzero taps are applied by direct summation.
inline constexpr Eigen::Index kDirectTapLimit = 25;

namespace detail {

inline Eigen::Index wrap(Eigen::Index i, Eigen::Index n) {
  const Eigen::Index m = i % n;
  return m < 0 ? m + n : m;
}

template <typename Scalar>
void require_fits(const Image<Scalar>& taps, Shape shape, const char* what) {
  if (shape.rows < 1 || shape.cols < 1) {
    throw std::invalid_argument(std::string(what) + ": empty image shape");
  }
  if (taps.rows() > shape.rows || taps.cols() > shape.cols) {
    throw std::invalid_argument(std::string(what) + ": kernel " + to_string(shape_of(taps)) +
                                " larger than image " + to_string(shape));
  }
}

// Taps placed on a periodic grid with the center tap at the origin.
template <typename Scalar>
Image<Scalar> centered_embedding(const Image<Scalar>& taps, Shape shape) {
  Image<Scalar> grid = Image<Scalar>::Zero(shape.rows, shape.cols);
  const Eigen::Index cr = taps.rows() / 2, cc = taps.cols() / 2;
  for (Eigen::Index a = 0; a < taps.rows(); ++a) {
    for (Eigen::Index b = 0; b < taps.cols(); ++b) {
      grid(wrap(a - cr, shape.rows), wrap(b - cc, shape.cols)) += taps(a, b);
    }
  }
  return grid;
}

template <typename Scalar>
ComplexImage<Scalar> taps_spectrum(const Image<Scalar>& taps, Shape shape) {
  return fft2(centered_embedding(taps, shape));
}

// y(i,j) = sum_{a,b} taps(a,b) x(i - (a - cr), j - (b - cc)), indices periodic.
template <typename Scalar, typename Derived>
Image<Scalar> circular_direct(const Eigen::MatrixBase<Derived>& x, const Image<Scalar>& taps) {
  const Eigen::Index h = x.rows(), w = x.cols();
  const Eigen::Index cr = taps.rows() / 2, cc = taps.cols() / 2;
  Image<Scalar> y = Image<Scalar>::Zero(h, w);
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) {
      Scalar acc(0);
      for (Eigen::Index a = 0; a < taps.rows(); ++a) {
        const Eigen::Index si = wrap(i - (a - cr), h);
        for (Eigen::Index b = 0; b < taps.cols(); ++b) {
          if (taps(a, b) != Scalar(0)) acc += taps(a, b) * x(si, wrap(j - (b - cc), w));
        }
      }
      y(i, j) = acc;
    }
  }
  return y;
}

template <typename Scalar>
DenseMatrix<Scalar> materialize_taps(const Image<Scalar>& taps, Shape shape) {
  if (shape.size() > kMaxOraclePixels) {
    throw std::invalid_argument("materialize_operator: image " + to_string(shape) +
                                " exceeds oracle scale of " + std::to_string(kMaxOraclePixels) +
                                " pixels");
  }
  require_fits(taps, shape, "materialize_operator");
  const Eigen::Index h = shape.rows, w = shape.cols;
  const Eigen::Index cr = taps.rows() / 2, cc = taps.cols() / 2;
  DenseMatrix<Scalar> m = DenseMatrix<Scalar>::Zero(shape.size(), shape.size());
  for (Eigen::Index i = 0; i < h; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) {
      for (Eigen::Index a = 0; a < taps.rows(); ++a) {
        for (Eigen::Index b = 0; b < taps.cols(); ++b) {
          const Eigen::Index col = wrap(i - (a - cr), h) * w + wrap(j - (b - cc), w);
          m(i * w + j, col) += taps(a, b);
        }
      }
    }
  }
  return m;
}

}  // namespace detail

/// Multiplies the spectrum of x by a transfer function and returns the real
/// part of the result.
template <typename Derived, typename SpectrumDerived>
Image<typename Derived::Scalar> apply_transfer(const Eigen::MatrixBase<Derived>& x,
                                               const Eigen::MatrixBase<SpectrumDerived>& response) {
  require_same_shape(x, response, "apply_transfer");
  auto spectrum = fft2(x);
  spectrum.array() *= response.array().template cast<std::complex<typename Derived::Scalar>>();
  return ifft2_real(std::move(spectrum));
}

/// Transfer function k^(w) of a kernel on a periodic grid (kernel center at
/// the origin). Diagonalizes the circular blur operator.
template <typename Scalar>
ComplexImage<Scalar> transfer_function(const Kernel<Scalar>& k, Shape shape) {
  detail::require_fits(k.taps(), shape, "transfer_function");
  return detail::taps_spectrum(k.taps(), shape);
}

/// Real transfer function c^(w) of a prior patch. Throws if it is negative
/// anywhere on the grid beyond rounding.
template <typename Scalar>
Image<Scalar> prior_transfer_function(const PriorPatch<Scalar>& f, Shape shape) {
  detail::require_fits(f.taps(), shape, "prior_transfer_function");
  Image<Scalar> response = detail::taps_spectrum(f.taps(), shape).real();
  const Scalar slack = Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
                       std::max(Scalar(1), f.taps().cwiseAbs().sum());
  if (response.minCoeff() < -slack) {
    throw std::invalid_argument("prior patch has a negative transfer function on a " +
                                to_string(shape) + " grid");
  }
  return response.cwiseMax(Scalar(0));
}

/// Periodic convolution k * x. Sparse kernels (at most kDirectTapLimit
/// nonzero taps) are summed directly, others go through the frequency domain;
/// both paths agree to rounding.
template <typename Derived>
Image<typename Derived::Scalar> convolve_circular(
    const Eigen::MatrixBase<Derived>& x, const Kernel<typename Derived::Scalar>& k) {
  using Scalar = typename Derived::Scalar;
  detail::require_fits(k.taps(), shape_of(x), "convolve_circular");
  if ((k.taps().array() != Scalar(0)).count() <= kDirectTapLimit) {
    return detail::circular_direct(x, k.taps());
  }
  return apply_transfer(x, transfer_function(k, shape_of(x)));
}

/// Periodic convolution through the frequency domain regardless of kernel size.
template <typename Derived>
Image<typename Derived::Scalar> convolve_circular_fft(
    const Eigen::MatrixBase<Derived>& x, const Kernel<typename Derived::Scalar>& k) {
  return apply_transfer(x, transfer_function(k, shape_of(x)));
}

/// Periodic convolution by direct summation; reference path for convolve_circular.
template <typename Derived>
Image<typename Derived::Scalar> convolve_circular_direct(
    const Eigen::MatrixBase<Derived>& x, const Kernel<typename Derived::Scalar>& k) {
  detail::require_fits(k.taps(), shape_of(x), "convolve_circular_direct");
  return detail::circular_direct(x, k.taps());
}

/// H^T y: convolution with the flipped kernel.
template <typename Derived>
Image<typename Derived::Scalar> apply_adjoint(const Eigen::MatrixBase<Derived>& y,
                                              const Kernel<typename Derived::Scalar>& k) {
  return convolve_circular(y, k.flipped());
}

template <typename Scalar>
struct ConvergenceFactors {
  Image<Scalar> factors;  ///< |(1 - sigma) - |k^|^2 c^| per frequency
  Scalar rho_max = 0;
};

/// Per-frequency contraction factors of the residual iteration. The series
/// converges iff rho_max < 1.
template <typename Scalar>
ConvergenceFactors<Scalar> convergence_factors(const Kernel<Scalar>& k, const PriorPatch<Scalar>& f_x,
                                               Scalar sigma, Shape shape) {
  if (!(sigma > Scalar(0) && sigma < Scalar(1))) {
    throw std::invalid_argument("convergence_factors: sigma must lie in (0, 1)");
  }
  const Image<Scalar> gram = transfer_function(k, shape).cwiseAbs2().cwiseProduct(
      prior_transfer_function(f_x, shape));
  ConvergenceFactors<Scalar> out;
  out.factors = ((Scalar(1) - sigma) - gram.array()).abs().matrix();
  out.rho_max = out.factors.maxCoeff();
  return out;
}

/// Dense (HW)x(HW) matrix of the circular convolution acting on row-major vec(x).
template <typename Scalar>
DenseMatrix<Scalar> materialize_operator(const Kernel<Scalar>& k, Shape shape) {
  return detail::materialize_taps(k.taps(), shape);
}

template <typename Scalar>
DenseMatrix<Scalar> materialize_operator(const PriorPatch<Scalar>& f, Shape shape) {
  return detail::materialize_taps(f.taps(), shape);
}

}  // namespace resdeconv
