#pragma once

#include "hrecon/kspace.hpp"

namespace hrecon {

// Centered, unitary 2D DFT applied independently to each coil. The zero
// frequency sits at index (nx / 2, ny / 2).
MultiCoilKSpace fft2c(MultiCoilKSpace const &images);
MultiCoilKSpace ifft2c(MultiCoilKSpace const &kspace);

// pixel(i, j) = sqrt(sum_c |x(i, j, c)|^2)
MagnitudeImage sos_combine(MultiCoilKSpace const &coil_images);

} // namespace hrecon
