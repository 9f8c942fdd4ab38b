#pragma once

#include "resdeconv/image.hpp"

#include <unsupported/Eigen/FFT>

#include <vector>

namespace resdeconv {

namespace detail {

// Separable 2-D transform: 1-D transforms along every row, then every column.
// Length-1 axes are skipped (the 1-point DFT is the identity).
template <typename Scalar>
void transform_2d(ComplexImage<Scalar>& data, bool inverse) {
  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> in, out;

  in.resize(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index r = 0; data.cols() > 1 && r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) in[c] = data(r, c);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index c = 0; c < data.cols(); ++c) data(r, c) = out[c];
  }

  in.resize(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index c = 0; data.rows() > 1 && c < data.cols(); ++c) {
    for (Eigen::Index r = 0; r < data.rows(); ++r) in[r] = data(r, c);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index r = 0; r < data.rows(); ++r) data(r, c) = out[r];
  }
}

}  // namespace detail

/// Unnormalized forward DFT: X(u,v) = sum x(i,j) exp(-2 pi i (ui/H + vj/W)).
template <typename Derived>
ComplexImage<typename Eigen::NumTraits<typename Derived::Scalar>::Real> fft2(
    const Eigen::MatrixBase<Derived>& x) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  ComplexImage<Real> data = x.template cast<std::complex<Real>>();
  detail::transform_2d(data, false);
  return data;
}

/// Inverse DFT, scaled by 1/(H W).
template <typename Scalar>
ComplexImage<Scalar> ifft2(ComplexImage<Scalar> spectrum) {
  detail::transform_2d(spectrum, true);
  return spectrum;
}

/// Real part of the inverse DFT; used where the spectrum is Hermitian.
template <typename Scalar>
Image<Scalar> ifft2_real(ComplexImage<Scalar> spectrum) {
  detail::transform_2d(spectrum, true);
  return spectrum.real();
}

}  // namespace resdeconv
