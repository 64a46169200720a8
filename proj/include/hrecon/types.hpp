#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace hrecon {

using Index = std::ptrdiff_t;
using Cx = std::complex<double>;
using CxMatrix = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic>;
using RealVector = Eigen::VectorXd;

// Dense complex third-order tensor, column-major: element (i, j, k) lives at
// i + d0 * (j + d1 * k).
class Tensor3
{
public:
  using Shape = std::array<Index, 3>;

  Tensor3() = default;
  explicit Tensor3(Shape shape, Cx fill = Cx{0.0, 0.0});

  Shape const &shape() const { return shape_; }
  Index dim(int n) const { return shape_[static_cast<std::size_t>(n)]; }
  Index size() const { return static_cast<Index>(data_.size()); }

  Cx &operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
  Cx const &operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

  std::vector<Cx> &data() { return data_; }
  std::vector<Cx> const &data() const { return data_; }

  // Frobenius norm over all entries.
  double norm() const;
  bool all_finite() const;

  friend bool operator==(Tensor3 const &, Tensor3 const &) = default;

private:
  std::size_t offset(Index i, Index j, Index k) const
  {
    return static_cast<std::size_t>(i + shape_[0] * (j + shape_[1] * k));
  }

  Shape shape_{0, 0, 0};
  std::vector<Cx> data_;
};

} // namespace hrecon
