#pragma once

#include "hrecon/error.hpp"
#include "hrecon/hankel.hpp"
#include "hrecon/kspace.hpp"
#include "hrecon/lowrank.hpp"
#include "hrecon/sde.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hrecon {

enum class SamplerMode
{
  ZeroFilled,
  Sake,
  Lrkgm,
};

char const *to_string(SamplerMode mode);
SamplerMode parse_sampler_mode(std::string const &name);

inline constexpr double kHardDataConsistency = std::numeric_limits<double>::infinity();

struct ReconConfig
{
  SamplerMode mode = SamplerMode::Sake;
  Index window = 6;
  LowRankConfig lowrank;
  SamplerParams sampler;
  // Weight of the current estimate on sampled entries; infinity replaces them
  // with the measurements.
  double lambda_dc = kHardDataConsistency;
  TailPolicy tail = TailPolicy::Overlap;
  // SAKE ablation: truncate the patch tensor instead of the Hankel matrix.
  bool sake_on_tensor = false;
  // Required for Lrkgm, ignored (with a warning) otherwise.
  std::shared_ptr<ScoreProvider> score;

  void validate() const;
};

struct TracePoint
{
  Index iteration = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct ReconReport
{
  SamplerMode mode = SamplerMode::ZeroFilled;
  MagnitudeImage image;
  MultiCoilKSpace kspace;
  Index iterations = 0;
  // One point per executed outer iteration when a reference image is given.
  std::vector<TracePoint> trace;
  std::optional<TracePoint> final_metrics;
  // Wall-clock seconds per phase, in first-use order.
  std::vector<std::pair<std::string, double>> seconds;
  std::vector<std::string> warnings;

  double phase_seconds(std::string const &phase) const;
  // key=value lines, one fact per line.
  std::string to_text() const;
};

// Raised when an iteration fails; carries everything computed before it.
class ReconAborted : public NumericalError
{
public:
  ReconAborted(std::string const &what, Index iteration, ReconReport partial)
    : NumericalError(what)
    , iteration_{iteration}
    , partial_{std::move(partial)}
  {
  }

  Index iteration() const { return iteration_; }
  ReconReport const &partial() const { return partial_; }

private:
  Index iteration_;
  ReconReport partial_;
};

// Entries outside Omega keep k_est; inside, (lambda k_est + y) / (1 + lambda),
// or y itself when lambda is infinite.
MultiCoilKSpace dc_project(MultiCoilKSpace const &k_est, MultiCoilKSpace const &y, SamplingMask const &mask, double lambda);

// Patch tensor of k, as seen by the sampler for the same window and tail policy.
Tensor3 patch_tensor_of(MultiCoilKSpace const &k, Index window, TailPolicy tail = TailPolicy::Overlap);

MagnitudeImage zero_filled_recon(MultiCoilKSpace const &y, SamplingMask const &mask);

// Hankel rank truncation alternated with data consistency, starting from the
// zero-filled measurements.
ReconReport sake_recon(
  MultiCoilKSpace const &y, SamplingMask const &mask, ReconConfig const &cfg, MagnitudeImage const *truth = nullptr);

// Predictor-corrector sampling on the Hankel patch tensor, with low-rank
// rotation and data consistency after every predictor and corrector step.
ReconReport lrkgm_recon(
  MultiCoilKSpace const &y,
  SamplingMask const &mask,
  ReconConfig const &cfg,
  ScoreProvider &score,
  MagnitudeImage const *truth = nullptr);

struct ReconInputs
{
  MultiCoilKSpace measured;
  SamplingMask mask;
  std::optional<MagnitudeImage> truth;
};

// Validates, masks the measurements, and dispatches on cfg.mode.
ReconReport run_reconstruction(ReconConfig const &cfg, ReconInputs const &inputs);

} // namespace hrecon
