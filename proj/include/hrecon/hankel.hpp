#pragma once

#include "hrecon/kspace.hpp"
#include "hrecon/types.hpp"

#include <vector>

namespace hrecon {

// Source k-space shape plus the sliding window that produced a matrix.
struct HankelGeometry
{
  Index nx = 0;
  Index ny = 0;
  Index nc = 0;
  Index window = 0;

  // w^2 * nc: length of one vectorized block
  Index block_length() const { return window * window * nc; }
  Index positions_x() const { return nx - window + 1; }
  Index positions_y() const { return ny - window + 1; }
  // (nx - w + 1) * (ny - w + 1): number of sliding-window positions
  Index positions() const { return positions_x() * positions_y(); }

  friend bool operator==(HankelGeometry const &, HankelGeometry const &) = default;
};

// Which axis of the stored matrix holds the window offsets.
enum class HankelLayout
{
  // rows = w^2 nc (offset c*w^2 + u*w + v), cols = positions (a*(ny-w+1) + b)
  WindowRows,
  // transpose of the above: rows = positions, cols = w^2 nc
  PositionRows,
};

struct HankelMatrix
{
  HankelGeometry geometry;
  HankelLayout layout = HankelLayout::WindowRows;
  CxMatrix data;

  // Block-length axis count and position axis count, independent of layout.
  Index block_axis() const { return geometry.block_length(); }
  Index position_axis() const { return geometry.positions(); }
  // Validates data shape against geometry and layout.
  void check() const;
};

// Builds the block-Hankel matrix of k with a w x w x nc sliding window.
HankelMatrix hankel_forward(MultiCoilKSpace const &k, Index window, HankelLayout layout = HankelLayout::WindowRows);

// Averages every entry that came from the same k-space location.
MultiCoilKSpace hankel_pinv(HankelMatrix const &m);

// Adjoint of hankel_forward: sums (rather than averages) the entries per location.
MultiCoilKSpace hankel_adjoint(HankelMatrix const &m);

// Number of matrix entries each (i, j) location contributes per coil,
// row-major nx x ny. Cached per (nx, ny, w).
std::vector<double> const &hankel_multiplicity(Index nx, Index ny, Index window);

// Half-open range of long-axis rows copied into one patch.
struct PatchRange
{
  Index begin = 0;
  Index end = 0;

  friend bool operator==(PatchRange const &, PatchRange const &) = default;
};

enum class TailPolicy
{
  // An extra patch covering the last p rows when L is not a multiple of p.
  Overlap,
  // Only floor(L / p) disjoint patches; trailing rows are not covered.
  Drop,
};

// p x p x np stack of square patches cut from the long axis of a Hankel
// matrix. Slice s holds rows ranges[s] of the position-major matrix.
struct PatchTensor
{
  HankelGeometry geometry;
  HankelLayout source_layout = HankelLayout::WindowRows;
  std::vector<PatchRange> ranges;
  Tensor3 data;

  Index patch_size() const { return data.dim(0); }
  Index patch_count() const { return data.dim(2); }
  Index long_axis() const { return geometry.positions(); }
};

// Tiling of a long axis of length L into patches of side p.
std::vector<PatchRange> patch_ranges(Index long_axis, Index patch, TailPolicy tail = TailPolicy::Overlap);

PatchTensor tensor_form(HankelMatrix const &m, TailPolicy tail = TailPolicy::Overlap);

// Inverse of tensor_form: rows covered by several patches receive the mean of
// those patches. Rows covered by no patch are taken from `fill`; without a
// fill matrix an uncovered row is an error.
HankelMatrix tensor_unform(PatchTensor const &t, HankelMatrix const *fill = nullptr);

} // namespace hrecon
