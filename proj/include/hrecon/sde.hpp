#pragma once

#include "hrecon/types.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hrecon {

// Noise levels sigma_1 < ... < sigma_N of the variance-exploding SDE. The
// level sigma_0 = 0 is implicit.
class SigmaSchedule
{
public:
  explicit SigmaSchedule(std::vector<double> levels);

  Index steps() const { return static_cast<Index>(levels_.size()); }
  // sigma_i for i in [0, N]; sigma_0 = 0.
  double sigma(Index i) const;
  double sigma_min() const { return levels_.front(); }
  double sigma_max() const { return levels_.back(); }
  std::vector<double> const &levels() const { return levels_; }

private:
  std::vector<double> levels_;
};

// sigma_i = sigma_min * (sigma_max / sigma_min)^((i - 1) / (n - 1)), i = 1..n
SigmaSchedule geometric_schedule(Index n, double sigma_min, double sigma_max);

// Approximates the gradient of log p_sigma at x. Output has the shape of x.
class ScoreProvider
{
public:
  virtual ~ScoreProvider() = default;
  virtual Tensor3 score(Tensor3 const &x, double sigma) = 0;
  // False when the provider must not be called from several threads at once.
  virtual bool concurrent() const { return true; }
  virtual std::string describe() const = 0;
};

// Exact score of N(mu, (sigma_data^2 + sigma_t^2) I): (mu - x) / (sigma_data^2 + sigma_t^2).
Tensor3 gaussian_score(Tensor3 const &x, Tensor3 const &mu, double sigma_data, double sigma_t);

class GaussianScore final : public ScoreProvider
{
public:
  GaussianScore(Tensor3 mu, double sigma_data);

  Tensor3 score(Tensor3 const &x, double sigma) override;
  std::string describe() const override;

  Tensor3 const &mean() const { return mu_; }
  double sigma_data() const { return sigma_data_; }

private:
  Tensor3 mu_;
  double sigma_data_;
};

struct SamplerParams
{
  double snr = 0.075;
  Index n_outer = 1000;
  Index n_inner = 1;
  std::uint64_t seed = 0;
  double sigma_min = 0.01;
  double sigma_max = 1.0;

  void validate() const;
  SigmaSchedule schedule() const { return geometric_schedule(n_outer, sigma_min, sigma_max); }
};

// Seeded generator of standard normal tensors. Real and imaginary parts are
// independent N(0, 1). Streams derived with split() are decorrelated from the
// parent and from each other.
class NoiseSource
{
public:
  explicit NoiseSource(std::uint64_t seed);

  NoiseSource split(std::uint64_t stream) const;
  Tensor3 normal(Tensor3::Shape const &shape, double scale = 1.0);
  double normal_scalar();
  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_;
};

// Reverse-diffusion step from sigma_{i+1} to sigma_i:
// x + (s_{i+1}^2 - s_i^2) score(x, s_{i+1}) + sqrt(s_{i+1}^2 - s_i^2) noise
Tensor3 predictor_step(Tensor3 const &x, ScoreProvider &score, SigmaSchedule const &schedule, Index i, Tensor3 const &noise);

struct CorrectorResult
{
  Tensor3 x;
  double step_size = 0.0;
  // True when the score was identically zero and x was returned unchanged.
  bool skipped = false;
};

// Langevin step with eps = 2 (r |noise| / |score|)^2:
// x + eps score(x, sigma) + sqrt(2 eps) noise
CorrectorResult corrector_step(Tensor3 const &x, ScoreProvider &score, double sigma, double snr, Tensor3 const &noise);

struct BatchCorrectorResult
{
  std::vector<Tensor3> x;
  double step_size = 0.0;
  bool skipped = false;
};

// Langevin step over independent chains sharing one step size computed from
// the mean per-chain norms: eps = 2 (r mean|noise_b| / mean|score_b|)^2.
// A batch of one is corrector_step. Per-chain step sizes bias the stationary
// variance of very small tensors; the shared step does not.
BatchCorrectorResult corrector_step_batch(
  std::vector<Tensor3> const &xs, ScoreProvider &score, double sigma, double snr, std::vector<Tensor3> const &noise);

} // namespace hrecon
