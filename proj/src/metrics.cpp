#include "hrecon/metrics.hpp"

#include "hrecon/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <vector>

namespace hrecon {

namespace {

void check_pair(MagnitudeImage const &reference, MagnitudeImage const &test)
{
  if (reference.nx() != test.nx() || reference.ny() != test.ny()) {
    throw DataError(fmt::format(
      "image shapes differ: reference {}x{}, test {}x{}", reference.nx(), reference.ny(), test.nx(), test.ny()));
  }
  if (!(reference.max() > 0.0)) { throw DataError("reference image is identically zero"); }
}

std::vector<double> gaussian_kernel(int size, double sigma)
{
  std::vector<double> k(static_cast<std::size_t>(size));
  double const center = 0.5 * (size - 1);
  double sum = 0.0;
  for (int n = 0; n < size; ++n) {
    double const d = n - center;
    k[static_cast<std::size_t>(n)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[static_cast<std::size_t>(n)];
  }
  for (auto &v : k) { v /= sum; }
  return k;
}

// Separable 'valid' filtering of a row-major nx x ny field.
std::vector<double> filter_valid(std::vector<double> const &in, Index nx, Index ny, std::vector<double> const &k)
{
  Index const w = static_cast<Index>(k.size());
  Index const ox = nx - w + 1;
  Index const oy = ny - w + 1;
  std::vector<double> rows(static_cast<std::size_t>(nx * oy));
  for (Index i = 0; i < nx; ++i) {
    for (Index j = 0; j < oy; ++j) {
      double s = 0.0;
      for (Index t = 0; t < w; ++t) { s += k[static_cast<std::size_t>(t)] * in[static_cast<std::size_t>(i * ny + j + t)]; }
      rows[static_cast<std::size_t>(i * oy + j)] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ox * oy));
  for (Index i = 0; i < ox; ++i) {
    for (Index j = 0; j < oy; ++j) {
      double s = 0.0;
      for (Index t = 0; t < w; ++t) { s += k[static_cast<std::size_t>(t)] * rows[static_cast<std::size_t>((i + t) * oy + j)]; }
      out[static_cast<std::size_t>(i * oy + j)] = s;
    }
  }
  return out;
}

} // namespace

double psnr(MagnitudeImage const &reference, MagnitudeImage const &test)
{
  check_pair(reference, test);
  double const peak = reference.max();
  auto const &a = reference.pixels();
  auto const &b = test.pixels();
  double sse = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    double const d = a[n] / peak - b[n] / peak;
    sse += d * d;
  }
  if (sse == 0.0) { return std::numeric_limits<double>::infinity(); }
  double const mse = sse / static_cast<double>(a.size());
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(MagnitudeImage const &reference, MagnitudeImage const &test, SsimParams const &params)
{
  check_pair(reference, test);
  Index const nx = reference.nx();
  Index const ny = reference.ny();
  if (nx < params.window || ny < params.window) {
    throw DataError(fmt::format("image {}x{} is smaller than the {}x{} SSIM window", nx, ny, params.window, params.window));
  }

  double const peak = reference.max();
  std::size_t const n = reference.pixels().size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t p = 0; p < n; ++p) {
    x[p] = reference.pixels()[p] / peak;
    y[p] = test.pixels()[p] / peak;
    xx[p] = x[p] * x[p];
    yy[p] = y[p] * y[p];
    xy[p] = x[p] * y[p];
  }

  auto const k = gaussian_kernel(params.window, params.gaussian_sigma);
  auto const mx = filter_valid(x, nx, ny, k);
  auto const my = filter_valid(y, nx, ny, k);
  auto const mxx = filter_valid(xx, nx, ny, k);
  auto const myy = filter_valid(yy, nx, ny, k);
  auto const mxy = filter_valid(xy, nx, ny, k);

  double const c1 = std::pow(params.k1 * params.dynamic_range, 2);
  double const c2 = std::pow(params.k2 * params.dynamic_range, 2);
  double total = 0.0;
  for (std::size_t p = 0; p < mx.size(); ++p) {
    double const vx = mxx[p] - mx[p] * mx[p];
    double const vy = myy[p] - my[p] * my[p];
    double const cxy = mxy[p] - mx[p] * my[p];
    total += ((2.0 * mx[p] * my[p] + c1) * (2.0 * cxy + c2)) /
             ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

} // namespace hrecon
