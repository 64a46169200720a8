#pragma once

#include "hrecon/types.hpp"

#include <array>

namespace hrecon {

// Mode index of a third-order tensor.
class Mode
{
public:
  explicit Mode(int index);
  int index() const { return index_; }

private:
  int index_;
};

// Mode-n unfolding: mode-n fibers become columns; the remaining two indices
// enumerate columns with the lower mode varying fastest.
CxMatrix unfold(Tensor3 const &t, Mode n);
Tensor3 fold(CxMatrix const &m, Mode n, Tensor3::Shape const &shape);

enum class Truncation
{
  // Keep the tau largest singular values.
  Hard,
  // Shrink the tau largest singular values by `threshold`, clamping at zero;
  // the rest are zeroed.
  Soft,
};

enum class SvdMethod
{
  // Divide-and-conquer thin SVD of the matrix itself.
  Full,
  // Eigendecomposition of the smaller Gram matrix, projecting onto the top-tau
  // singular subspace. Faster for strongly rectangular matrices; loses
  // accuracy when singular values span many orders of magnitude.
  Gram,
};

struct TruncateOptions
{
  Truncation kind = Truncation::Hard;
  double threshold = 0.0;
  SvdMethod method = SvdMethod::Full;
};

// U diag(sigma_tau) V^H. With hard truncation this is the Frobenius-optimal
// rank-tau approximation.
CxMatrix svd_truncate(CxMatrix const &m, Index tau, TruncateOptions const &opts = {});

// Singular values, descending.
RealVector singular_values(CxMatrix const &m);

struct LowRankConfig
{
  Index tau = 1;
  std::array<int, 3> mode_order{0, 1, 2};
  // Per-mode weights. Accepted and validated; the sweep applies the same tau
  // to every mode.
  std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  TruncateOptions truncate;

  void validate() const;
};

// For each mode in cfg.mode_order: t <- fold(svd_truncate(unfold(t, n), tau), n).
Tensor3 lowrank_rotate(Tensor3 const &t, LowRankConfig const &cfg);

} // namespace hrecon
