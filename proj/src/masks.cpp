#include "hrecon/masks.hpp"

#include "hrecon/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hrecon {

namespace {

IndexRect centered_acs(Index nx, Index ny, Index acs)
{
  Index const rows = std::min(acs, nx);
  Index const cols = std::min(acs, ny);
  return IndexRect{nx / 2 - rows / 2, rows, ny / 2 - cols / 2, cols};
}

std::vector<std::uint8_t> acs_bits(Index nx, Index ny, IndexRect const &acs)
{
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(nx * ny), 0);
  for (Index i = acs.row0; i < acs.row0 + acs.rows; ++i) {
    for (Index j = acs.col0; j < acs.col0 + acs.cols; ++j) { bits[static_cast<std::size_t>(i * ny + j)] = 1; }
  }
  return bits;
}

// Flat indices of all locations outside the ACS block, shuffled.
std::vector<Index> shuffled_candidates(Index nx, Index ny, IndexRect const &acs, std::mt19937_64 &rng)
{
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(nx * ny));
  for (Index i = 0; i < nx; ++i) {
    for (Index j = 0; j < ny; ++j) {
      if (!acs.contains(i, j)) { out.push_back(i * ny + j); }
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

SamplingMask random2d(Index nx, Index ny, IndexRect const &acs, Index budget, std::mt19937_64 &rng)
{
  auto bits = acs_bits(nx, ny, acs);
  auto const candidates = shuffled_candidates(nx, ny, acs, rng);
  Index const extra = budget - acs.area();
  for (Index n = 0; n < extra; ++n) { bits[static_cast<std::size_t>(candidates[static_cast<std::size_t>(n)])] = 1; }
  return SamplingMask(nx, ny, std::move(bits), acs);
}

// Dart throwing in a fixed candidate order. A candidate is accepted when no
// sample lies closer than its local radius r0 * (1 + d / d_max), d being the
// distance to the k-space center; sampling density thus falls off as
// (1 + d / d_max)^-2.
class PoissonDisc
{
public:
  PoissonDisc(Index nx, Index ny, IndexRect const &acs, std::vector<Index> candidates)
    : nx_{nx}
    , ny_{ny}
    , acs_{acs}
    , candidates_{std::move(candidates)}
    , scale_(candidates_.size())
  {
    double const cx = 0.5 * static_cast<double>(nx);
    double const cy = 0.5 * static_cast<double>(ny);
    double const dmax = std::hypot(cx, cy);
    for (std::size_t n = 0; n < candidates_.size(); ++n) {
      Index const i = candidates_[n] / ny;
      Index const j = candidates_[n] % ny;
      scale_[n] = 1.0 + std::hypot(static_cast<double>(i) + 0.5 - cx, static_cast<double>(j) + 0.5 - cy) / dmax;
    }
  }

  std::vector<std::uint8_t> throw_darts(double r0, std::vector<Index> *accepted) const
  {
    auto bits = acs_bits(nx_, ny_, acs_);
    if (accepted) { accepted->clear(); }
    for (std::size_t n = 0; n < candidates_.size(); ++n) {
      double const r = r0 * scale_[n];
      Index const i = candidates_[n] / ny_;
      Index const j = candidates_[n] % ny_;
      if (r > 1.0 && blocked(bits, i, j, r)) { continue; }
      bits[static_cast<std::size_t>(candidates_[n])] = 1;
      if (accepted) { accepted->push_back(candidates_[n]); }
    }
    return bits;
  }

  Index count(double r0) const
  {
    auto const bits = throw_darts(r0, nullptr);
    return static_cast<Index>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }

private:
  bool blocked(std::vector<std::uint8_t> const &bits, Index i, Index j, double r) const
  {
    auto const reach = static_cast<Index>(std::ceil(r));
    double const r2 = r * r;
    for (Index di = -reach; di <= reach; ++di) {
      Index const ii = i + di;
      if (ii < 0 || ii >= nx_) { continue; }
      for (Index dj = -reach; dj <= reach; ++dj) {
        Index const jj = j + dj;
        if (jj < 0 || jj >= ny_) { continue; }
        if (bits[static_cast<std::size_t>(ii * ny_ + jj)] && static_cast<double>(di * di + dj * dj) < r2) { return true; }
      }
    }
    return false;
  }

  Index nx_;
  Index ny_;
  IndexRect acs_;
  std::vector<Index> candidates_;
  std::vector<double> scale_;
};

SamplingMask poisson2d(Index nx, Index ny, IndexRect const &acs, Index budget, std::mt19937_64 &rng)
{
  PoissonDisc disc(nx, ny, acs, shuffled_candidates(nx, ny, acs, rng));

  // Largest base radius whose dart throw still yields at least the budget.
  double lo = 0.5;
  double hi = 0.5 * static_cast<double>(std::max(nx, ny));
  for (int it = 0; it < 30 && hi - lo > 1e-3; ++it) {
    double const mid = 0.5 * (lo + hi);
    if (disc.count(mid) >= budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  std::vector<Index> accepted;
  auto bits = disc.throw_darts(lo, &accepted);
  Index const surplus = static_cast<Index>(std::count(bits.begin(), bits.end(), std::uint8_t{1})) - budget;
  // Removing samples only widens gaps, so trimming keeps the disc property.
  std::shuffle(accepted.begin(), accepted.end(), rng);
  for (Index n = 0; n < surplus; ++n) { bits[static_cast<std::size_t>(accepted[static_cast<std::size_t>(n)])] = 0; }
  return SamplingMask(nx, ny, std::move(bits), acs);
}

SamplingMask partial2d(Index nx, Index ny, IndexRect const &acs, double accel)
{
  auto const band = std::clamp<Index>(static_cast<Index>(std::llround(static_cast<double>(ny) / accel)), 1, ny);
  if (band < acs.cols) {
    throw ConfigError(fmt::format(
      "partial2d band of {} columns cannot hold {} ACS columns; the ACS needs R <= {:.4g}",
      band, acs.cols, static_cast<double>(ny) / static_cast<double>(acs.cols)));
  }
  Index const col0 = ny / 2 - band / 2;
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(nx * ny), 0);
  for (Index i = 0; i < nx; ++i) {
    for (Index j = col0; j < col0 + band; ++j) { bits[static_cast<std::size_t>(i * ny + j)] = 1; }
  }
  return SamplingMask(nx, ny, std::move(bits), acs);
}

} // namespace

char const *to_string(MaskKind kind)
{
  switch (kind) {
  case MaskKind::Poisson2d:
    return "poisson2d";
  case MaskKind::Random2d:
    return "random2d";
  case MaskKind::Partial2d:
    return "partial2d";
  }
  return "?";
}

MaskKind parse_mask_kind(std::string const &name)
{
  if (name == "poisson2d" || name == "poisson") { return MaskKind::Poisson2d; }
  if (name == "random2d" || name == "random") { return MaskKind::Random2d; }
  if (name == "partial2d" || name == "partial") { return MaskKind::Partial2d; }
  throw ConfigError(fmt::format("unknown mask kind \"{}\" (expected poisson2d, random2d or partial2d)", name));
}

Index mask_budget(Index nx, Index ny, double accel)
{
  return std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(nx * ny) / accel)));
}

void MaskSpec::validate(Index nx, Index ny) const
{
  if (nx <= 0 || ny <= 0) { throw ConfigError(fmt::format("mask grid must be positive, got {}x{}", nx, ny)); }
  if (!(accel >= 1.0) || !std::isfinite(accel)) { throw ConfigError(fmt::format("acceleration must be >= 1, got {}", accel)); }
  if (acs < 0 || acs > std::min(nx, ny)) {
    throw ConfigError(fmt::format("ACS size {} does not fit a {}x{} grid", acs, nx, ny));
  }
}

SamplingMask mask_generate(MaskSpec const &spec, Index nx, Index ny)
{
  spec.validate(nx, ny);
  IndexRect const acs = centered_acs(nx, ny, spec.acs);
  Index const budget = mask_budget(nx, ny, spec.accel);
  if (budget >= nx * ny) {
    return SamplingMask(nx, ny, std::vector<std::uint8_t>(static_cast<std::size_t>(nx * ny), 1), acs);
  }
  if (spec.kind != MaskKind::Partial2d && acs.area() > budget) {
    throw ConfigError(fmt::format(
      "ACS block of {} samples exceeds the budget of {} at R = {}; the ACS needs R <= {:.4g}",
      acs.area(), budget, spec.accel, static_cast<double>(nx * ny) / static_cast<double>(acs.area())));
  }

  std::mt19937_64 rng(spec.seed);
  switch (spec.kind) {
  case MaskKind::Random2d:
    return random2d(nx, ny, acs, budget, rng);
  case MaskKind::Poisson2d:
    return poisson2d(nx, ny, acs, budget, rng);
  case MaskKind::Partial2d:
    return partial2d(nx, ny, acs, spec.accel);
  }
  throw ConfigError("unhandled mask kind");
}

} // namespace hrecon
