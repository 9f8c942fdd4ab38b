#pragma once

#include "resdeconv/conv.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace resdeconv {

template <typename Scalar>
struct MmseConfig {
  Scalar sigma = Scalar(0.01);  ///< noise regularization, > 0
  PriorPatch<Scalar> prior;     ///< f_x, identity by default

  void validate() const {
    if (!(sigma > Scalar(0)) || !std::isfinite(sigma)) {
      throw std::invalid_argument("MmseConfig: sigma must be positive");
    }
  }
};

/// Closed-form linear MMSE estimate C H^T (H C H^T + sigma I)^{-1} b under the
/// circular operator, evaluated per frequency:
///   x^(w) = c^(w) conj(k^(w)) b^(w) / (|k^(w)|^2 c^(w) + sigma).
template <typename Derived>
Image<typename Derived::Scalar> wiener_solve(const Eigen::MatrixBase<Derived>& b,
                                             const Kernel<typename Derived::Scalar>& k,
                                             const MmseConfig<typename Derived::Scalar>& cfg) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  require_nonempty(b, "wiener_solve");
  const Shape shape = shape_of(b);
  const ComplexImage<Scalar> kh = transfer_function(k, shape);
  const Image<Scalar> ch = prior_transfer_function(cfg.prior, shape);
  const Image<Scalar> denom = (kh.cwiseAbs2().cwiseProduct(ch).array() + cfg.sigma).matrix();
  const ComplexImage<Scalar> response =
      (kh.conjugate().array() * (ch.array() / denom.array()).template cast<std::complex<Scalar>>())
          .matrix();
  return apply_transfer(b, response);
}

/// The same estimate by dense factorization of H C H^T + sigma I. Oracle scale only.
template <typename Derived>
Image<typename Derived::Scalar> mmse_solve_dense(const Eigen::MatrixBase<Derived>& b,
                                                 const Kernel<typename Derived::Scalar>& k,
                                                 const MmseConfig<typename Derived::Scalar>& cfg) {
  using Scalar = typename Derived::Scalar;
  cfg.validate();
  require_nonempty(b, "mmse_solve_dense");
  const Shape shape = shape_of(b);
  const DenseMatrix<Scalar> h = materialize_operator(k, shape);
  const DenseMatrix<Scalar> c = materialize_operator(cfg.prior, shape);
  const DenseMatrix<Scalar> ch_t = c * h.transpose();
  DenseMatrix<Scalar> system = h * ch_t;
  system.diagonal().array() += cfg.sigma;

  const Image<Scalar> b_img = b;
  const Vector<Scalar> rhs = vec(b_img);
  const Scalar tol = Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() * system.norm();
  if ((system - system.transpose()).norm() <= tol) {
    const Eigen::LLT<DenseMatrix<Scalar>> llt(system);
    if (llt.info() == Eigen::Success) return unvec(ch_t * llt.solve(rhs), shape);
  }
  return unvec(ch_t * system.partialPivLu().solve(rhs), shape);
}

}  // namespace resdeconv
