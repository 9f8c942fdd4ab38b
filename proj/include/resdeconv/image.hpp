#pragma once

#include <Eigen/Core>

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace resdeconv {

/// Dense 2-D intensity field stored row-major, so that the flat buffer is the
/// row-major vectorisation used by every dense operator in the toolkit.
template <typename Scalar>
using Image = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ComplexImage = Image<std::complex<Scalar>>;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using ImageD = Image<double>;

struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

template <typename Derived>
Shape shape_of(const Eigen::DenseBase<Derived>& m) {
  return {m.rows(), m.cols()};
}

inline std::string to_string(const Shape& s) {
  return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

template <typename DerivedA, typename DerivedB>
void require_same_shape(const Eigen::DenseBase<DerivedA>& a,
                        const Eigen::DenseBase<DerivedB>& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                to_string(shape_of(a)) + " vs " +
                                to_string(shape_of(b)) + ")");
  }
}

template <typename Derived>
void require_nonempty(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw std::invalid_argument(std::string(what) + ": empty image");
  }
}

/// Row-major column expansion of an image.
template <typename Scalar>
Eigen::Map<const Vector<Scalar>> vec(const Image<Scalar>& x) {
  return Eigen::Map<const Vector<Scalar>>(x.data(), x.size());
}

template <typename Derived>
Image<typename Derived::Scalar> unvec(const Eigen::MatrixBase<Derived>& v, Shape shape) {
  if (v.size() != shape.size()) {
    throw std::invalid_argument("unvec: length does not match shape");
  }
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> tmp = v;
  return Eigen::Map<const Image<Scalar>>(tmp.data(), shape.rows, shape.cols);
}

/// Luma (Y of YCbCr) from three R, G, B planes, ITU-R BT.601 weights.
/// Evaluated as g + 0.299 (r - g) + 0.114 (b - g) so grey inputs map to
/// themselves exactly.
template <typename Scalar>
Image<Scalar> rgb_to_luma(std::span<const Image<Scalar>> channels) {
  if (channels.size() != 3) {
    throw std::invalid_argument("rgb_to_luma: expected 3 channels, got " +
                                std::to_string(channels.size()));
  }
  require_nonempty(channels[0], "rgb_to_luma");
  require_same_shape(channels[0], channels[1], "rgb_to_luma");
  require_same_shape(channels[0], channels[2], "rgb_to_luma");
  const auto& g = channels[1];
  return g + Scalar(0.299) * (channels[0] - g) + Scalar(0.114) * (channels[2] - g);
}

template <typename Scalar>
Image<Scalar> rgb_to_luma(const std::vector<Image<Scalar>>& channels) {
  return rgb_to_luma(std::span<const Image<Scalar>>(channels));
}

}  // namespace resdeconv
