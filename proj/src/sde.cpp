#include "hrecon/sde.hpp"

#include "hrecon/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace hrecon {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void check_same_shape(Tensor3 const &a, Tensor3 const &b, char const *what)
{
  if (a.shape() != b.shape()) {
    throw DataError(fmt::format(
      "{}: shape {}x{}x{} does not match {}x{}x{}", what, b.dim(0), b.dim(1), b.dim(2), a.dim(0), a.dim(1), a.dim(2)));
  }
}

Tensor3 checked_score(ScoreProvider &provider, Tensor3 const &x, double sigma)
{
  Tensor3 g = provider.score(x, sigma);
  if (g.shape() != x.shape()) {
    throw NumericalError(fmt::format(
      "score provider {} returned shape {}x{}x{} for input {}x{}x{}",
      provider.describe(), g.dim(0), g.dim(1), g.dim(2), x.dim(0), x.dim(1), x.dim(2)));
  }
  if (!g.all_finite()) {
    throw NumericalError(fmt::format("score provider {} returned non-finite values at sigma = {}", provider.describe(), sigma));
  }
  return g;
}

} // namespace

SigmaSchedule::SigmaSchedule(std::vector<double> levels)
  : levels_{std::move(levels)}
{
  if (levels_.empty()) { throw ConfigError("sigma schedule needs at least one level"); }
  if (!(levels_.front() > 0.0) || !std::isfinite(levels_.back())) {
    throw ConfigError(fmt::format("sigma levels must be positive and finite, got {} .. {}", levels_.front(), levels_.back()));
  }
  for (std::size_t n = 1; n < levels_.size(); ++n) {
    if (!(levels_[n] > levels_[n - 1])) {
      throw ConfigError(fmt::format("sigma schedule is not strictly increasing at level {}", n + 1));
    }
  }
}

double SigmaSchedule::sigma(Index i) const
{
  if (i < 0 || i > steps()) { throw ConfigError(fmt::format("sigma index {} outside [0, {}]", i, steps())); }
  return i == 0 ? 0.0 : levels_[static_cast<std::size_t>(i - 1)];
}

SigmaSchedule geometric_schedule(Index n, double sigma_min, double sigma_max)
{
  if (n < 2) { throw ConfigError(fmt::format("geometric schedule needs at least 2 levels, got {}", n)); }
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max)) {
    throw ConfigError(fmt::format("need 0 < sigma_min < sigma_max, got {} and {}", sigma_min, sigma_max));
  }
  std::vector<double> levels(static_cast<std::size_t>(n));
  double const log_ratio = std::log(sigma_max / sigma_min);
  for (Index i = 0; i < n; ++i) {
    levels[static_cast<std::size_t>(i)] = sigma_min * std::exp(log_ratio * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  levels.front() = sigma_min;
  levels.back() = sigma_max;
  return SigmaSchedule(std::move(levels));
}

Tensor3 gaussian_score(Tensor3 const &x, Tensor3 const &mu, double sigma_data, double sigma_t)
{
  check_same_shape(mu, x, "gaussian_score");
  double const var = sigma_data * sigma_data + sigma_t * sigma_t;
  if (!(var > 0.0)) { throw ConfigError("gaussian_score needs a positive total variance"); }
  Tensor3 out(x.shape());
  for (std::size_t n = 0; n < out.data().size(); ++n) { out.data()[n] = (mu.data()[n] - x.data()[n]) / var; }
  return out;
}

GaussianScore::GaussianScore(Tensor3 mu, double sigma_data)
  : mu_{std::move(mu)}
  , sigma_data_{sigma_data}
{
  if (!(sigma_data >= 0.0)) { throw ConfigError(fmt::format("sigma_data must be nonnegative, got {}", sigma_data)); }
}

Tensor3 GaussianScore::score(Tensor3 const &x, double sigma) { return gaussian_score(x, mu_, sigma_data_, sigma); }

std::string GaussianScore::describe() const { return fmt::format("gaussian(sigma_data={})", sigma_data_); }

void SamplerParams::validate() const
{
  if (!(snr > 0.0)) { throw ConfigError(fmt::format("snr must be positive, got {}", snr)); }
  if (n_outer < 0) { throw ConfigError(fmt::format("outer iteration count must be nonnegative, got {}", n_outer)); }
  if (n_inner < 0) { throw ConfigError(fmt::format("inner iteration count must be nonnegative, got {}", n_inner)); }
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min)) {
    throw ConfigError(fmt::format("need 0 < sigma_min < sigma_max, got {} and {}", sigma_min, sigma_max));
  }
}

NoiseSource::NoiseSource(std::uint64_t seed)
  : seed_{seed}
  , engine_{splitmix64(seed)}
{
}

NoiseSource NoiseSource::split(std::uint64_t stream) const
{
  return NoiseSource(splitmix64(seed_ ^ splitmix64(stream + 0x632BE59BD9B4E019ull)));
}

double NoiseSource::normal_scalar() { return gauss_(engine_); }

Tensor3 NoiseSource::normal(Tensor3::Shape const &shape, double scale)
{
  Tensor3 t(shape);
  for (auto &v : t.data()) {
    double const re = gauss_(engine_);
    double const im = gauss_(engine_);
    v = Cx{scale * re, scale * im};
  }
  return t;
}

Tensor3 predictor_step(Tensor3 const &x, ScoreProvider &score, SigmaSchedule const &schedule, Index i, Tensor3 const &noise)
{
  if (i < 0 || i >= schedule.steps()) { throw ConfigError(fmt::format("predictor index {} outside [0, {})", i, schedule.steps())); }
  check_same_shape(x, noise, "predictor noise");
  double const hi = schedule.sigma(i + 1);
  double const lo = schedule.sigma(i);
  double const dvar = hi * hi - lo * lo;
  double const diffusion = std::sqrt(dvar);
  Tensor3 const g = checked_score(score, x, hi);

  Tensor3 out(x.shape());
  for (std::size_t n = 0; n < out.data().size(); ++n) {
    out.data()[n] = x.data()[n] + dvar * g.data()[n] + diffusion * noise.data()[n];
  }
  return out;
}

namespace {

Tensor3 langevin_update(Tensor3 const &x, Tensor3 const &g, Tensor3 const &noise, double eps)
{
  double const diffusion = std::sqrt(2.0 * eps);
  Tensor3 out(x.shape());
  for (std::size_t n = 0; n < x.data().size(); ++n) { out.data()[n] = x.data()[n] + eps * g.data()[n] + diffusion * noise.data()[n]; }
  return out;
}

void check_corrector_args(double sigma, double snr)
{
  if (!(sigma > 0.0)) { throw ConfigError(fmt::format("corrector sigma must be positive, got {}", sigma)); }
  if (!(snr > 0.0)) { throw ConfigError(fmt::format("corrector snr must be positive, got {}", snr)); }
}

} // namespace

CorrectorResult corrector_step(Tensor3 const &x, ScoreProvider &score, double sigma, double snr, Tensor3 const &noise)
{
  check_corrector_args(sigma, snr);
  check_same_shape(x, noise, "corrector noise");
  Tensor3 const g = checked_score(score, x, sigma);
  double const g_norm = g.norm();
  if (g_norm == 0.0) { return {x, 0.0, true}; }

  double const ratio = snr * noise.norm() / g_norm;
  double const eps = 2.0 * ratio * ratio;
  return {langevin_update(x, g, noise, eps), eps, false};
}

BatchCorrectorResult corrector_step_batch(
  std::vector<Tensor3> const &xs, ScoreProvider &score, double sigma, double snr, std::vector<Tensor3> const &noise)
{
  check_corrector_args(sigma, snr);
  if (xs.empty() || xs.size() != noise.size()) {
    throw ConfigError(fmt::format("corrector batch of {} states needs as many noise tensors, got {}", xs.size(), noise.size()));
  }
  std::vector<Tensor3> gs;
  gs.reserve(xs.size());
  double g_sum = 0.0;
  double z_sum = 0.0;
  for (std::size_t b = 0; b < xs.size(); ++b) {
    check_same_shape(xs[b], noise[b], "corrector noise");
    gs.push_back(checked_score(score, xs[b], sigma));
    g_sum += gs.back().norm();
    z_sum += noise[b].norm();
  }
  double const count = static_cast<double>(xs.size());
  if (g_sum == 0.0) { return {xs, 0.0, true}; }

  double const ratio = snr * (z_sum / count) / (g_sum / count);
  double const eps = 2.0 * ratio * ratio;
  BatchCorrectorResult result{{}, eps, false};
  result.x.reserve(xs.size());
  for (std::size_t b = 0; b < xs.size(); ++b) { result.x.push_back(langevin_update(xs[b], gs[b], noise[b], eps)); }
  return result;
}

} // namespace hrecon
