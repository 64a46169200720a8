#pragma once

#include "hrecon/kspace.hpp"

#include <cstdint>
#include <string>

namespace hrecon {

enum class MaskKind
{
  Poisson2d,
  Random2d,
  Partial2d,
};

char const *to_string(MaskKind kind);
MaskKind parse_mask_kind(std::string const &name);

struct MaskSpec
{
  MaskKind kind = MaskKind::Poisson2d;
  double accel = 4.0;
  // Side of the fully sampled centered square.
  Index acs = 24;
  std::uint64_t seed = 0;

  void validate(Index nx, Index ny) const;
};

// Target sample count round(nx * ny / R). Every generator hits it exactly
// except partial2d, which rounds to whole phase-encode columns.
Index mask_budget(Index nx, Index ny, double accel);

SamplingMask mask_generate(MaskSpec const &spec, Index nx, Index ny);

} // namespace hrecon
