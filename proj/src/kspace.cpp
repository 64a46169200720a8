#include "hrecon/kspace.hpp"

#include "hrecon/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace hrecon {

namespace {

void check_dims(Index nx, Index ny, Index nc)
{
  if (nx <= 0 || ny <= 0 || nc <= 0) {
    throw ConfigError(fmt::format("k-space dimensions must be positive, got {}x{}x{}", nx, ny, nc));
  }
}

} // namespace

MultiCoilKSpace::MultiCoilKSpace(Index nx, Index ny, Index nc)
  : nx_{nx}
  , ny_{ny}
  , nc_{nc}
{
  check_dims(nx, ny, nc);
  data_.assign(static_cast<std::size_t>(nx * ny * nc), Cx{0.0, 0.0});
}

MultiCoilKSpace::MultiCoilKSpace(Index nx, Index ny, Index nc, std::vector<Cx> data)
  : nx_{nx}
  , ny_{ny}
  , nc_{nc}
  , data_{std::move(data)}
{
  check_dims(nx, ny, nc);
  if (static_cast<Index>(data_.size()) != nx * ny * nc) {
    throw DataError(fmt::format(
      "k-space payload has {} samples, expected {}x{}x{} = {}", data_.size(), nx, ny, nc, nx * ny * nc));
  }
}

bool MultiCoilKSpace::all_finite() const
{
  return std::all_of(data_.begin(), data_.end(), [](Cx const &v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

double MultiCoilKSpace::norm() const
{
  double s = 0.0;
  for (auto const &v : data_) { s += std::norm(v); }
  return std::sqrt(s);
}

SamplingMask::SamplingMask(Index nx, Index ny, std::vector<std::uint8_t> bits, IndexRect acs)
  : nx_{nx}
  , ny_{ny}
  , bits_{std::move(bits)}
  , acs_{acs}
{
  if (nx <= 0 || ny <= 0) { throw ConfigError(fmt::format("mask dimensions must be positive, got {}x{}", nx, ny)); }
  if (static_cast<Index>(bits_.size()) != nx * ny) {
    throw DataError(fmt::format("mask has {} entries, expected {}", bits_.size(), nx * ny));
  }
  for (auto b : bits_) {
    if (b > 1) { throw DataError(fmt::format("mask entries must be 0 or 1, found {}", int(b))); }
  }
  if (acs_.rows < 0 || acs_.cols < 0 || acs_.row0 < 0 || acs_.col0 < 0 || acs_.row0 + acs_.rows > nx ||
      acs_.col0 + acs_.cols > ny) {
    throw DataError(fmt::format(
      "ACS block rows [{}, {}) cols [{}, {}) exceeds the {}x{} grid",
      acs_.row0, acs_.row0 + acs_.rows, acs_.col0, acs_.col0 + acs_.cols, nx, ny));
  }
  for (Index i = acs_.row0; i < acs_.row0 + acs_.rows; ++i) {
    for (Index j = acs_.col0; j < acs_.col0 + acs_.cols; ++j) {
      if (!sampled(i, j)) { throw DataError(fmt::format("ACS location ({}, {}) is not sampled", i, j)); }
    }
  }
  if (count() == 0) { throw DataError("mask samples no k-space locations"); }
}

SamplingMask SamplingMask::full(Index nx, Index ny)
{
  return SamplingMask(nx, ny, std::vector<std::uint8_t>(static_cast<std::size_t>(nx * ny), 1), IndexRect{0, nx, 0, ny});
}

Index SamplingMask::count() const
{
  return static_cast<Index>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

double SamplingMask::acceleration() const
{
  return static_cast<double>(nx_ * ny_) / static_cast<double>(count());
}

MagnitudeImage::MagnitudeImage(Index nx, Index ny)
  : nx_{nx}
  , ny_{ny}
  , pixels_(static_cast<std::size_t>(nx * ny), 0.0)
{
  if (nx <= 0 || ny <= 0) { throw ConfigError(fmt::format("image dimensions must be positive, got {}x{}", nx, ny)); }
}

MagnitudeImage::MagnitudeImage(Index nx, Index ny, std::vector<double> pixels)
  : nx_{nx}
  , ny_{ny}
  , pixels_{std::move(pixels)}
{
  if (nx <= 0 || ny <= 0) { throw ConfigError(fmt::format("image dimensions must be positive, got {}x{}", nx, ny)); }
  if (static_cast<Index>(pixels_.size()) != nx * ny) {
    throw DataError(fmt::format("image has {} pixels, expected {}", pixels_.size(), nx * ny));
  }
  for (double p : pixels_) {
    if (!std::isfinite(p) || p < 0.0) { throw DataError(fmt::format("image pixel {} is negative or non-finite", p)); }
  }
}

double MagnitudeImage::max() const
{
  return pixels_.empty() ? 0.0 : *std::max_element(pixels_.begin(), pixels_.end());
}

MultiCoilKSpace apply_mask(MultiCoilKSpace const &k, SamplingMask const &mask)
{
  if (k.nx() != mask.nx() || k.ny() != mask.ny()) {
    throw DataError(fmt::format("mask {}x{} does not match k-space {}x{}", mask.nx(), mask.ny(), k.nx(), k.ny()));
  }
  MultiCoilKSpace out = k;
  for (Index c = 0; c < k.nc(); ++c) {
    for (Index i = 0; i < k.nx(); ++i) {
      for (Index j = 0; j < k.ny(); ++j) {
        if (!mask.sampled(i, j)) { out(i, j, c) = Cx{0.0, 0.0}; }
      }
    }
  }
  return out;
}

} // namespace hrecon
