#pragma once

#include "hrecon/kspace.hpp"

#include <cstdint>

namespace hrecon {

struct Phantom
{
  // Ground-truth magnitude, max 1.
  MagnitudeImage magnitude;
  // Coil images m * exp(i phi) * s_c with sum_c |s_c|^2 = 1.
  MultiCoilKSpace coil_images;
  // fft2c of coil_images.
  MultiCoilKSpace kspace;
};

// Ellipse phantom with a smooth random phase, multiplied by nc smooth
// polynomial coil sensitivities.
Phantom phantom_generate(Index nx, Index ny, Index nc, std::uint64_t seed);

} // namespace hrecon
