#pragma once

#include "hrecon/types.hpp"

#include <cstdint>
#include <vector>

namespace hrecon {

// Complex nx x ny x nc array. Storage follows the CKS file layout:
// index = c * nx * ny + i * ny + j, i.e. coil-major, row-major within a coil.
class MultiCoilKSpace
{
public:
  MultiCoilKSpace() = default;
  MultiCoilKSpace(Index nx, Index ny, Index nc);
  MultiCoilKSpace(Index nx, Index ny, Index nc, std::vector<Cx> data);

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  Index nc() const { return nc_; }
  Index size() const { return static_cast<Index>(data_.size()); }

  Cx &operator()(Index i, Index j, Index c) { return data_[offset(i, j, c)]; }
  Cx const &operator()(Index i, Index j, Index c) const { return data_[offset(i, j, c)]; }

  std::vector<Cx> &data() { return data_; }
  std::vector<Cx> const &data() const { return data_; }

  Cx *coil(Index c) { return data_.data() + c * nx_ * ny_; }
  Cx const *coil(Index c) const { return data_.data() + c * nx_ * ny_; }

  bool same_shape(MultiCoilKSpace const &other) const
  {
    return nx_ == other.nx_ && ny_ == other.ny_ && nc_ == other.nc_;
  }
  bool all_finite() const;
  double norm() const;

  friend bool operator==(MultiCoilKSpace const &, MultiCoilKSpace const &) = default;

private:
  std::size_t offset(Index i, Index j, Index c) const
  {
    return static_cast<std::size_t>((c * nx_ + i) * ny_ + j);
  }

  Index nx_ = 0;
  Index ny_ = 0;
  Index nc_ = 0;
  std::vector<Cx> data_;
};

// Half-open rectangle of k-space indices.
struct IndexRect
{
  Index row0 = 0;
  Index rows = 0;
  Index col0 = 0;
  Index cols = 0;

  bool contains(Index i, Index j) const
  {
    return i >= row0 && i < row0 + rows && j >= col0 && j < col0 + cols;
  }
  Index area() const { return rows * cols; }

  friend bool operator==(IndexRect const &, IndexRect const &) = default;
};

// Binary nx x ny sampling pattern. The sampled set Omega is stored as a dense
// row-major byte map; acs must lie inside Omega.
class SamplingMask
{
public:
  SamplingMask() = default;
  SamplingMask(Index nx, Index ny, std::vector<std::uint8_t> bits, IndexRect acs);

  static SamplingMask full(Index nx, Index ny);

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  IndexRect const &acs() const { return acs_; }
  std::vector<std::uint8_t> const &bits() const { return bits_; }

  bool sampled(Index i, Index j) const { return bits_[static_cast<std::size_t>(i * ny_ + j)] != 0; }
  Index count() const;
  // nx * ny / |Omega|
  double acceleration() const;

  friend bool operator==(SamplingMask const &, SamplingMask const &) = default;

private:
  Index nx_ = 0;
  Index ny_ = 0;
  std::vector<std::uint8_t> bits_;
  IndexRect acs_;
};

// Nonnegative real image, row-major (index = i * ny + j).
class MagnitudeImage
{
public:
  MagnitudeImage() = default;
  MagnitudeImage(Index nx, Index ny);
  MagnitudeImage(Index nx, Index ny, std::vector<double> pixels);

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  double &operator()(Index i, Index j) { return pixels_[static_cast<std::size_t>(i * ny_ + j)]; }
  double operator()(Index i, Index j) const { return pixels_[static_cast<std::size_t>(i * ny_ + j)]; }
  std::vector<double> const &pixels() const { return pixels_; }
  std::vector<double> &pixels() { return pixels_; }
  double max() const;

  friend bool operator==(MagnitudeImage const &, MagnitudeImage const &) = default;

private:
  Index nx_ = 0;
  Index ny_ = 0;
  std::vector<double> pixels_;
};

// Zeroes every entry outside the mask.
MultiCoilKSpace apply_mask(MultiCoilKSpace const &k, SamplingMask const &mask);

} // namespace hrecon
