#pragma once

#include "resdeconv/image.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace resdeconv {

/// Allowed deviation of a kernel's tap sum from one.
template <typename Scalar>
constexpr Scalar tap_sum_tolerance() {
  if constexpr (std::is_same_v<Scalar, float>) {
    return 1e-5f;
  } else {
    return Scalar(1e-12);
  }
}

namespace detail {

template <typename Scalar>
void require_odd_taps(const Image<Scalar>& taps, const char* what) {
  if (taps.rows() < 1 || taps.cols() < 1 || taps.rows() % 2 == 0 ||
      taps.cols() % 2 == 0) {
    throw std::invalid_argument(std::string(what) + ": dimensions must be odd and positive, got " +
                                to_string(shape_of(taps)));
  }
  if (!taps.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite tap");
  }
}

}  // namespace detail

/// Normalized nonnegative blur kernel. Odd dimensions, so the center tap
/// (rows/2, cols/2) is unambiguous. Every constructor path validates.
template <typename Scalar>
class Kernel {
 public:
  /// 1x1 delta.
  Kernel() : taps_(Image<Scalar>::Ones(1, 1)) {}

  explicit Kernel(Image<Scalar> taps) : taps_(std::move(taps)) {
    detail::require_odd_taps(taps_, "Kernel");
    if ((taps_.array() < Scalar(0)).any()) {
      throw std::invalid_argument("Kernel: negative tap");
    }
    const Scalar sum = taps_.sum();
    if (std::abs(sum - Scalar(1)) > tap_sum_tolerance<Scalar>()) {
      throw std::invalid_argument("Kernel: taps sum to " + std::to_string(sum) + ", expected 1");
    }
  }

  static Kernel delta(Eigen::Index rows = 1, Eigen::Index cols = 1) {
    Image<Scalar> taps = Image<Scalar>::Zero(rows, cols);
    if (rows > 0 && cols > 0) taps(rows / 2, cols / 2) = Scalar(1);
    return Kernel(std::move(taps));
  }

  /// Divides nonnegative weights by their sum.
  static Kernel normalized(Image<Scalar> weights) {
    detail::require_odd_taps(weights, "Kernel::normalized");
    if ((weights.array() < Scalar(0)).any()) {
      throw std::invalid_argument("Kernel::normalized: negative weight");
    }
    const Scalar sum = weights.sum();
    if (!(sum > Scalar(0))) {
      throw std::invalid_argument("Kernel::normalized: weights sum to zero");
    }
    weights /= sum;
    return Kernel(std::move(weights));
  }

  const Image<Scalar>& taps() const { return taps_; }
  Eigen::Index rows() const { return taps_.rows(); }
  Eigen::Index cols() const { return taps_.cols(); }
  Eigen::Index center_row() const { return taps_.rows() / 2; }
  Eigen::Index center_col() const { return taps_.cols() / 2; }
  Scalar operator()(Eigen::Index r, Eigen::Index c) const { return taps_(r, c); }

  /// 180 degree rotation; the adjoint kernel.
  Kernel flipped() const {
    Kernel out;
    out.taps_ = taps_.reverse();
    return out;
  }

  template <typename Other>
  Kernel<Other> cast() const {
    return Kernel<Other>::normalized(taps_.template cast<Other>());
  }

  friend bool operator==(const Kernel& a, const Kernel& b) { return a.taps_ == b.taps_; }

 private:
  Image<Scalar> taps_;
};

template <typename Scalar>
Kernel<Scalar> flip_kernel(const Kernel<Scalar>& k) {
  return k.flipped();
}

/// Image prior patch f_x: a centrally symmetric convolution patch, so the
/// operator it induces is symmetric. The default is the delta (identity prior).
/// Nonnegativity of its transfer function depends on the grid and is checked
/// by prior_transfer_function().
template <typename Scalar>
class PriorPatch {
 public:
  PriorPatch() : taps_(Image<Scalar>::Ones(1, 1)) {}

  explicit PriorPatch(Image<Scalar> taps) : taps_(std::move(taps)) {
    detail::require_odd_taps(taps_, "PriorPatch");
    if (taps_ != Image<Scalar>(taps_.reverse())) {
      throw std::invalid_argument("PriorPatch: taps are not centrally symmetric");
    }
  }

  static PriorPatch identity() { return PriorPatch(); }

  const Image<Scalar>& taps() const { return taps_; }
  Eigen::Index rows() const { return taps_.rows(); }
  Eigen::Index cols() const { return taps_.cols(); }
  Eigen::Index center_row() const { return taps_.rows() / 2; }
  Eigen::Index center_col() const { return taps_.cols() / 2; }

  bool is_identity() const { return taps_.rows() == 1 && taps_.cols() == 1 && taps_(0, 0) == Scalar(1); }

 private:
  Image<Scalar> taps_;
};

}  // namespace resdeconv
