#include "hrecon/lowrank.hpp"

#include "hrecon/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace hrecon {

namespace {

void check_finite(CxMatrix const &m)
{
  if (!m.allFinite()) {
    throw NumericalError(fmt::format("SVD input {}x{} contains NaN or Inf", m.rows(), m.cols()));
  }
}

// Replacement singular values for the chosen truncation rule.
RealVector shrink(RealVector const &s, Index tau, TruncateOptions const &opts)
{
  RealVector out = s;
  if (opts.kind == Truncation::Hard) {
    for (Index n = tau; n < out.size(); ++n) { out(n) = 0.0; }
  } else {
    for (Index n = 0; n < out.size(); ++n) { out(n) = n < tau ? std::max(0.0, out(n) - opts.threshold) : 0.0; }
  }
  return out;
}

CxMatrix truncate_full(CxMatrix const &m, Index tau, TruncateOptions const &opts)
{
  Eigen::BDCSVD<CxMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw NumericalError(fmt::format("SVD of a {}x{} matrix did not converge", m.rows(), m.cols()));
  }
  RealVector const s = shrink(svd.singularValues(), tau, opts);
  Index keep = 0;
  while (keep < s.size() && s(keep) > 0.0) { ++keep; }
  if (keep == 0) { return CxMatrix::Zero(m.rows(), m.cols()); }
  return svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
}

CxMatrix truncate_gram(CxMatrix const &m, Index tau, TruncateOptions const &opts)
{
  bool const wide = m.cols() > m.rows();
  // Eigenvectors of the small Gram matrix are the singular vectors on the
  // short side.
  CxMatrix const gram = wide ? CxMatrix(m * m.adjoint()) : CxMatrix(m.adjoint() * m);
  Eigen::SelfAdjointEigenSolver<CxMatrix> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw NumericalError(fmt::format("Gram eigendecomposition of a {}x{} matrix did not converge", m.rows(), m.cols()));
  }
  Index const n = gram.rows();
  // Ascending eigenvalues: reverse for descending singular values.
  RealVector s(n);
  CxMatrix vecs(n, n);
  for (Index k = 0; k < n; ++k) {
    s(k) = std::sqrt(std::max(0.0, eig.eigenvalues()(n - 1 - k)));
    vecs.col(k) = eig.eigenvectors().col(n - 1 - k);
  }
  RealVector const target = shrink(s, tau, opts);
  // Per-direction gain target_k / s_k applied on the short side.
  RealVector gain = RealVector::Zero(n);
  for (Index k = 0; k < n; ++k) {
    if (s(k) > 0.0 && target(k) > 0.0) { gain(k) = target(k) / s(k); }
  }
  Index keep = 0;
  while (keep < n && gain(keep) > 0.0) { ++keep; }
  if (keep == 0) { return CxMatrix::Zero(m.rows(), m.cols()); }
  auto const basis = vecs.leftCols(keep);
  CxMatrix const filter = basis * gain.head(keep).asDiagonal() * basis.adjoint();
  return wide ? CxMatrix(filter * m) : CxMatrix(m * filter);
}

} // namespace

Mode::Mode(int index)
  : index_{index}
{
  if (index < 0 || index > 2) { throw ConfigError(fmt::format("mode index {} is not in {{0, 1, 2}}", index)); }
}

CxMatrix unfold(Tensor3 const &t, Mode n)
{
  auto const [d0, d1, d2] = t.shape();
  switch (n.index()) {
  case 0:
    return Eigen::Map<CxMatrix const>(t.data().data(), d0, d1 * d2);
  case 1: {
    CxMatrix m(d1, d0 * d2);
    for (Index k = 0; k < d2; ++k) {
      for (Index j = 0; j < d1; ++j) {
        for (Index i = 0; i < d0; ++i) { m(j, i + d0 * k) = t(i, j, k); }
      }
    }
    return m;
  }
  default:
    return Eigen::Map<CxMatrix const>(t.data().data(), d0 * d1, d2).transpose();
  }
}

Tensor3 fold(CxMatrix const &m, Mode n, Tensor3::Shape const &shape)
{
  auto const [d0, d1, d2] = shape;
  std::array<Index, 3> const rows{d0, d1, d2};
  std::array<Index, 3> const cols{d1 * d2, d0 * d2, d0 * d1};
  auto const k = static_cast<std::size_t>(n.index());
  if (m.rows() != rows[k] || m.cols() != cols[k]) {
    throw ConfigError(fmt::format(
      "cannot fold a {}x{} matrix along mode {} into {}x{}x{}: expected {}x{}",
      m.rows(), m.cols(), n.index(), d0, d1, d2, rows[k], cols[k]));
  }
  Tensor3 t(shape);
  switch (n.index()) {
  case 0:
    Eigen::Map<CxMatrix>(t.data().data(), d0, d1 * d2) = m;
    break;
  case 1:
    for (Index kk = 0; kk < d2; ++kk) {
      for (Index j = 0; j < d1; ++j) {
        for (Index i = 0; i < d0; ++i) { t(i, j, kk) = m(j, i + d0 * kk); }
      }
    }
    break;
  default:
    Eigen::Map<CxMatrix>(t.data().data(), d0 * d1, d2) = m.transpose();
    break;
  }
  return t;
}

RealVector singular_values(CxMatrix const &m)
{
  check_finite(m);
  Eigen::BDCSVD<CxMatrix> svd(m);
  if (svd.info() != Eigen::Success) {
    throw NumericalError(fmt::format("SVD of a {}x{} matrix did not converge", m.rows(), m.cols()));
  }
  return svd.singularValues();
}

CxMatrix svd_truncate(CxMatrix const &m, Index tau, TruncateOptions const &opts)
{
  if (tau < 1) { throw ConfigError(fmt::format("truncation rank must be at least 1, got {}", tau)); }
  if (opts.kind == Truncation::Soft && !(opts.threshold >= 0.0)) {
    throw ConfigError(fmt::format("soft threshold must be nonnegative, got {}", opts.threshold));
  }
  check_finite(m);
  if (m.size() == 0) { return m; }
  if (opts.kind == Truncation::Hard && tau >= std::min(m.rows(), m.cols())) { return m; }
  return opts.method == SvdMethod::Gram ? truncate_gram(m, tau, opts) : truncate_full(m, tau, opts);
}

void LowRankConfig::validate() const
{
  if (tau < 1) { throw ConfigError(fmt::format("tau must be at least 1, got {}", tau)); }
  auto sorted = mode_order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::array<int, 3>{0, 1, 2}) {
    throw ConfigError(fmt::format("mode order ({}, {}, {}) is not a permutation of (0, 1, 2)", mode_order[0], mode_order[1], mode_order[2]));
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) { throw ConfigError(fmt::format("mode weight {} is negative", w)); }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) { throw ConfigError(fmt::format("mode weights sum to {}, expected 1", sum)); }
}

Tensor3 lowrank_rotate(Tensor3 const &t, LowRankConfig const &cfg)
{
  cfg.validate();
  Tensor3 out = t;
  for (int n : cfg.mode_order) {
    Mode const mode(n);
    out = fold(svd_truncate(unfold(out, mode), cfg.tau, cfg.truncate), mode, out.shape());
  }
  return out;
}

} // namespace hrecon
