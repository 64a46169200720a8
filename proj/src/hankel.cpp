#include "hrecon/hankel.hpp"

#include "hrecon/error.hpp"
#include "hrecon/parallel.hpp"

#include <fmt/format.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace hrecon {

namespace {

// Number of window positions along one axis that cover index i.
Index cover_count(Index i, Index n, Index w)
{
  Index const lo = std::max<Index>(0, i - w + 1);
  Index const hi = std::min(i, n - w);
  return hi - lo + 1;
}

// Position-major view (rows = positions, cols = block offsets), copying only
// when the stored layout differs.
CxMatrix position_major(HankelMatrix const &m)
{
  if (m.layout == HankelLayout::PositionRows) { return m.data; }
  return m.data.transpose();
}

template <typename Combine>
MultiCoilKSpace scatter(HankelMatrix const &m, Combine finish)
{
  m.check();
  auto const &g = m.geometry;
  Index const w = g.window;
  Index const py = g.positions_y();
  MultiCoilKSpace out(g.nx, g.ny, g.nc);
  bool const window_rows = m.layout == HankelLayout::WindowRows;

  parallel_for(g.nc, [&](Index lo, Index hi) {
    for (Index c = lo; c < hi; ++c) {
      Cx *dst = out.coil(c);
      for (Index u = 0; u < w; ++u) {
        for (Index v = 0; v < w; ++v) {
          Index const offset = c * w * w + u * w + v;
          for (Index a = 0; a < g.positions_x(); ++a) {
            for (Index b = 0; b < py; ++b) {
              Index const pos = a * py + b;
              Cx const &entry = window_rows ? m.data(offset, pos) : m.data(pos, offset);
              dst[(a + u) * g.ny + (b + v)] += entry;
            }
          }
        }
      }
      finish(dst);
    }
  });
  return out;
}

} // namespace

void HankelMatrix::check() const
{
  auto const &g = geometry;
  if (g.window < 1 || g.nx < g.window || g.ny < g.window || g.nc < 1) {
    throw DataError(fmt::format(
      "Hankel metadata invalid: window {} for source {}x{}x{}", g.window, g.nx, g.ny, g.nc));
  }
  Index const want_rows = layout == HankelLayout::WindowRows ? g.block_length() : g.positions();
  Index const want_cols = layout == HankelLayout::WindowRows ? g.positions() : g.block_length();
  if (data.rows() != want_rows || data.cols() != want_cols) {
    throw DataError(fmt::format(
      "Hankel matrix is {}x{} but window {} on {}x{}x{} implies {}x{}",
      data.rows(), data.cols(), g.window, g.nx, g.ny, g.nc, want_rows, want_cols));
  }
}

HankelMatrix hankel_forward(MultiCoilKSpace const &k, Index window, HankelLayout layout)
{
  if (window < 1 || window > std::min(k.nx(), k.ny())) {
    throw ConfigError(fmt::format("window {} must lie in [1, {}] for {}x{} k-space", window, std::min(k.nx(), k.ny()), k.nx(), k.ny()));
  }
  HankelMatrix m;
  m.geometry = HankelGeometry{k.nx(), k.ny(), k.nc(), window};
  m.layout = layout;
  auto const &g = m.geometry;
  Index const w = window;
  Index const px = g.positions_x();
  Index const py = g.positions_y();

  if (layout == HankelLayout::WindowRows) {
    m.data.resize(g.block_length(), g.positions());
    parallel_for(g.positions(), [&](Index lo, Index hi) {
      for (Index pos = lo; pos < hi; ++pos) {
        Index const a = pos / py;
        Index const b = pos % py;
        Cx *col = m.data.col(pos).data();
        for (Index c = 0; c < g.nc; ++c) {
          for (Index u = 0; u < w; ++u) {
            for (Index v = 0; v < w; ++v) { *col++ = k(a + u, b + v, c); }
          }
        }
      }
    });
  } else {
    m.data.resize(g.positions(), g.block_length());
    parallel_for(g.block_length(), [&](Index lo, Index hi) {
      for (Index offset = lo; offset < hi; ++offset) {
        Index const c = offset / (w * w);
        Index const u = (offset / w) % w;
        Index const v = offset % w;
        Cx *col = m.data.col(offset).data();
        for (Index a = 0; a < px; ++a) {
          for (Index b = 0; b < py; ++b) { *col++ = k(a + u, b + v, c); }
        }
      }
    });
  }
  return m;
}

std::vector<double> const &hankel_multiplicity(Index nx, Index ny, Index window)
{
  static std::mutex lock;
  static std::map<std::tuple<Index, Index, Index>, std::unique_ptr<std::vector<double>>> cache;

  std::lock_guard guard(lock);
  auto &slot = cache[{nx, ny, window}];
  if (!slot) {
    slot = std::make_unique<std::vector<double>>(static_cast<std::size_t>(nx * ny));
    for (Index i = 0; i < nx; ++i) {
      for (Index j = 0; j < ny; ++j) {
        (*slot)[static_cast<std::size_t>(i * ny + j)] =
          static_cast<double>(cover_count(i, nx, window) * cover_count(j, ny, window));
      }
    }
  }
  return *slot;
}

MultiCoilKSpace hankel_pinv(HankelMatrix const &m)
{
  m.check();
  auto const &g = m.geometry;
  auto const &counts = hankel_multiplicity(g.nx, g.ny, g.window);
  return scatter(m, [&](Cx *dst) {
    for (std::size_t n = 0; n < counts.size(); ++n) { dst[n] /= counts[n]; }
  });
}

MultiCoilKSpace hankel_adjoint(HankelMatrix const &m)
{
  return scatter(m, [](Cx *) {});
}

std::vector<PatchRange> patch_ranges(Index long_axis, Index patch, TailPolicy tail)
{
  if (patch < 1) { throw ConfigError(fmt::format("patch size must be positive, got {}", patch)); }
  if (long_axis < patch) {
    throw ConfigError(fmt::format("long axis {} is shorter than the patch size {}", long_axis, patch));
  }
  std::vector<PatchRange> ranges;
  Index const whole = long_axis / patch;
  for (Index s = 0; s < whole; ++s) { ranges.push_back({s * patch, (s + 1) * patch}); }
  if (tail == TailPolicy::Overlap && long_axis % patch != 0) { ranges.push_back({long_axis - patch, long_axis}); }
  return ranges;
}

PatchTensor tensor_form(HankelMatrix const &m, TailPolicy tail)
{
  m.check();
  Index const p = m.block_axis();
  Index const L = m.position_axis();
  if (L < p) {
    throw ConfigError(fmt::format(
      "cannot cut {}x{} patches: the position axis has only {} entries", p, p, L));
  }

  PatchTensor t;
  t.geometry = m.geometry;
  t.source_layout = m.layout;
  t.ranges = patch_ranges(L, p, tail);
  Index const np = static_cast<Index>(t.ranges.size());
  t.data = Tensor3({p, p, np});

  CxMatrix transposed;
  if (m.layout == HankelLayout::WindowRows) { transposed = m.data.transpose(); }
  CxMatrix const &rows = m.layout == HankelLayout::PositionRows ? m.data : transposed;
  for (Index s = 0; s < np; ++s) {
    Eigen::Map<CxMatrix> slice(t.data.data().data() + s * p * p, p, p);
    slice = rows.middleRows(t.ranges[static_cast<std::size_t>(s)].begin, p);
  }
  return t;
}

HankelMatrix tensor_unform(PatchTensor const &t, HankelMatrix const *fill)
{
  Index const p = t.geometry.block_length();
  Index const L = t.geometry.positions();
  Index const np = static_cast<Index>(t.ranges.size());
  if (t.data.dim(0) != p || t.data.dim(1) != p || t.data.dim(2) != np) {
    throw DataError(fmt::format(
      "patch tensor is {}x{}x{} but geometry implies {}x{}x{}", t.data.dim(0), t.data.dim(1), t.data.dim(2), p, p, np));
  }
  for (std::size_t s = 0; s < t.ranges.size(); ++s) {
    auto const &r = t.ranges[s];
    if (r.end - r.begin != p || r.begin < 0 || r.end > L) {
      throw DataError(fmt::format("patch {} covers rows [{}, {}) outside a {}-row axis with patch size {}", s, r.begin, r.end, L, p));
    }
    if (s > 0 && r.begin <= t.ranges[s - 1].begin) {
      throw DataError(fmt::format("patch ranges are not in ascending order at patch {}", s));
    }
  }

  CxMatrix rows(L, p);
  std::vector<int> hits(static_cast<std::size_t>(L), 0);
  for (Index s = 0; s < np; ++s) {
    Eigen::Map<CxMatrix const> slice(t.data.data().data() + s * p * p, p, p);
    Index const begin = t.ranges[static_cast<std::size_t>(s)].begin;
    for (Index r = 0; r < p; ++r) {
      auto &h = hits[static_cast<std::size_t>(begin + r)];
      if (h == 0) {
        rows.row(begin + r) = slice.row(r);
      } else {
        rows.row(begin + r) += slice.row(r);
      }
      ++h;
    }
  }

  CxMatrix fill_rows;
  for (Index r = 0; r < L; ++r) {
    int const h = hits[static_cast<std::size_t>(r)];
    if (h > 1) {
      rows.row(r) /= static_cast<double>(h);
    } else if (h == 0) {
      if (fill == nullptr) { throw DataError(fmt::format("row {} of the Hankel matrix is not covered by any patch", r)); }
      if (fill_rows.size() == 0) {
        if (!(fill->geometry == t.geometry)) { throw DataError("fill matrix geometry differs from the patch tensor"); }
        fill->check();
        fill_rows = position_major(*fill);
      }
      rows.row(r) = fill_rows.row(r);
    }
  }

  HankelMatrix m;
  m.geometry = t.geometry;
  m.layout = t.source_layout;
  if (m.layout == HankelLayout::PositionRows) {
    m.data = std::move(rows);
  } else {
    m.data = rows.transpose();
  }
  return m;
}

} // namespace hrecon
