#include "hrecon/phantom.hpp"

#include "hrecon/error.hpp"
#include "hrecon/fft.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <random>

namespace hrecon {

namespace {

struct Ellipse
{
  double intensity;
  double a;
  double b;
  double x0;
  double y0;
  double degrees;
};

// Modified Shepp-Logan (Toft) ellipses.
constexpr Ellipse kEllipses[] = {
  {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
  {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
  {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
  {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
  {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
  {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
  {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
  {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
  {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
  {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

// Normalized coordinate in [-1, 1) for pixel n of an axis of length len.
double coord(Index n, Index len) { return 2.0 * (static_cast<double>(n) + 0.5) / static_cast<double>(len) - 1.0; }

} // namespace

Phantom phantom_generate(Index nx, Index ny, Index nc, std::uint64_t seed)
{
  if (nx < 1 || ny < 1 || nc < 1) { throw ConfigError(fmt::format("phantom dimensions must be positive, got {}x{}x{}", nx, ny, nc)); }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  // Piecewise-constant ellipses under a gentle smooth shading.
  double const shade_x = 0.1 * uni(rng);
  double const shade_y = 0.1 * uni(rng);
  std::vector<double> mag(static_cast<std::size_t>(nx * ny), 0.0);
  for (Index i = 0; i < nx; ++i) {
    for (Index j = 0; j < ny; ++j) {
      double const y = -coord(i, nx);
      double const x = coord(j, ny);
      double v = 0.0;
      for (auto const &e : kEllipses) {
        double const th = e.degrees * std::numbers::pi / 180.0;
        double const dx = x - e.x0;
        double const dy = y - e.y0;
        double const u = (dx * std::cos(th) + dy * std::sin(th)) / e.a;
        double const w = (-dx * std::sin(th) + dy * std::cos(th)) / e.b;
        if (u * u + w * w <= 1.0) { v += e.intensity; }
      }
      mag[static_cast<std::size_t>(i * ny + j)] = std::abs(v) * (1.0 + shade_x * x + shade_y * y);
    }
  }
  double peak = 0.0;
  for (double v : mag) { peak = std::max(peak, v); }
  for (auto &v : mag) { v /= peak; }

  // Smooth background phase: quadratic polynomial with random coefficients.
  std::array<double, 6> pc{};
  for (auto &c : pc) { c = 0.5 * uni(rng); }

  // Coil c looks from angle theta_c; its magnitude is a positive quadratic in
  // the projected coordinate, its phase linear.
  struct Coil
  {
    double cs, sn, lin, quad, phase0, phase_x, phase_y;
  };
  std::vector<Coil> coils(static_cast<std::size_t>(nc));
  for (Index c = 0; c < nc; ++c) {
    double const theta = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(nc) + 0.2 * uni(rng);
    coils[static_cast<std::size_t>(c)] = Coil{
      std::cos(theta), std::sin(theta), 0.6 + 0.1 * uni(rng), 0.25 + 0.05 * uni(rng),
      std::numbers::pi * uni(rng), 0.3 * uni(rng), 0.3 * uni(rng)};
  }

  Phantom out;
  out.magnitude = MagnitudeImage(nx, ny, mag);
  out.coil_images = MultiCoilKSpace(nx, ny, nc);
  std::vector<Cx> sens(static_cast<std::size_t>(nc));
  for (Index i = 0; i < nx; ++i) {
    for (Index j = 0; j < ny; ++j) {
      double const y = -coord(i, nx);
      double const x = coord(j, ny);
      double const phi = pc[0] * x + pc[1] * y + pc[2] * x * x + pc[3] * y * y + pc[4] * x * y + pc[5];
      double total = 0.0;
      for (Index c = 0; c < nc; ++c) {
        auto const &k = coils[static_cast<std::size_t>(c)];
        double const u = k.cs * x + k.sn * y;
        double const amp = 1.0 + k.lin * u + k.quad * u * u;
        sens[static_cast<std::size_t>(c)] = std::polar(amp, k.phase0 + k.phase_x * x + k.phase_y * y);
        total += amp * amp;
      }
      double const norm = std::sqrt(total);
      Cx const base = std::polar(mag[static_cast<std::size_t>(i * ny + j)], phi);
      for (Index c = 0; c < nc; ++c) { out.coil_images(i, j, c) = base * sens[static_cast<std::size_t>(c)] / norm; }
    }
  }
  out.kspace = fft2c(out.coil_images);
  return out;
}

} // namespace hrecon
