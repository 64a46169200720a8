#include "hrecon/types.hpp"

#include <cmath>

namespace hrecon {

Tensor3::Tensor3(Shape shape, Cx fill)
  : shape_{shape}
  , data_(static_cast<std::size_t>(shape[0] * shape[1] * shape[2]), fill)
{
}

double Tensor3::norm() const
{
  double s = 0.0;
  for (auto const &v : data_) { s += std::norm(v); }
  return std::sqrt(s);
}

bool Tensor3::all_finite() const
{
  for (auto const &v : data_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) { return false; }
  }
  return true;
}

} // namespace hrecon
