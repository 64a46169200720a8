#pragma once

#include "hrecon/kspace.hpp"

namespace hrecon {

// Peak signal-to-noise ratio in dB. Both images are scaled by the reference
// maximum, so the peak is 1. Identical images give +infinity.
double psnr(MagnitudeImage const &reference, MagnitudeImage const &test);

struct SsimParams
{
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Mean structural similarity over every fully contained window position
// (no padding). Both images are scaled by the reference maximum first.
double ssim(MagnitudeImage const &reference, MagnitudeImage const &test, SsimParams const &params = {});

} // namespace hrecon
