#pragma once

#include "hrecon/kspace.hpp"
#include "hrecon/types.hpp"

#include <cmath>
#include <random>

namespace hrecon::test {

inline Cx random_cx(std::mt19937_64 &rng)
{
  std::normal_distribution<double> g;
  return {g(rng), g(rng)};
}

// Values exactly representable as float32, so file round trips are lossless.
inline Cx random_cx_f32(std::mt19937_64 &rng)
{
  std::normal_distribution<float> g;
  return {static_cast<double>(g(rng)), static_cast<double>(g(rng))};
}

inline MultiCoilKSpace random_kspace(Index nx, Index ny, Index nc, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  MultiCoilKSpace k(nx, ny, nc);
  for (auto &v : k.data()) { v = random_cx(rng); }
  return k;
}

inline Tensor3 random_tensor(Tensor3::Shape shape, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  Tensor3 t(shape);
  for (auto &v : t.data()) { v = random_cx(rng); }
  return t;
}

inline CxMatrix random_matrix(Index rows, Index cols, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  CxMatrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) { m(r, c) = random_cx(rng); }
  }
  return m;
}

inline MagnitudeImage random_image(Index nx, Index ny, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MagnitudeImage img(nx, ny);
  for (auto &p : img.pixels()) { p = u(rng); }
  return img;
}

inline double rel_diff(std::vector<Cx> const &a, std::vector<Cx> const &b)
{
  double num = 0.0;
  double den = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    num += std::norm(a[n] - b[n]);
    den += std::norm(b[n]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

inline double rel_diff(MultiCoilKSpace const &a, MultiCoilKSpace const &b) { return rel_diff(a.data(), b.data()); }
inline double rel_diff(Tensor3 const &a, Tensor3 const &b) { return rel_diff(a.data(), b.data()); }
inline double rel_diff(CxMatrix const &a, CxMatrix const &b)
{
  double const den = b.norm();
  return den == 0.0 ? (a - b).norm() : (a - b).norm() / den;
}

} // namespace hrecon::test
