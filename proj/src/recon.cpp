#include "hrecon/recon.hpp"

#include "hrecon/fft.hpp"
#include "hrecon/metrics.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <sstream>

namespace hrecon {

namespace {

// Accumulates wall-clock time per named phase into a report.
class PhaseClock
{
public:
  explicit PhaseClock(ReconReport &report)
    : report_{report}
  {
  }

  template <typename F>
  auto time(char const *phase, F &&f)
  {
    auto const start = std::chrono::steady_clock::now();
    struct Stop
    {
      PhaseClock &clock;
      char const *phase;
      std::chrono::steady_clock::time_point start;
      ~Stop()
      {
        std::chrono::duration<double> const d = std::chrono::steady_clock::now() - start;
        clock.add(phase, d.count());
      }
    } stop{*this, phase, start};
    return f();
  }

  void add(std::string const &phase, double secs)
  {
    for (auto &[name, total] : report_.seconds) {
      if (name == phase) {
        total += secs;
        return;
      }
    }
    report_.seconds.emplace_back(phase, secs);
  }

private:
  ReconReport &report_;
};

void check_inputs(MultiCoilKSpace const &y, SamplingMask const &mask)
{
  if (y.nx() != mask.nx() || y.ny() != mask.ny()) {
    throw DataError(fmt::format("mask {}x{} does not match k-space {}x{}", mask.nx(), mask.ny(), y.nx(), y.ny()));
  }
  if (!y.all_finite()) { throw DataError("measured k-space contains NaN or Inf"); }
}

MagnitudeImage image_of(MultiCoilKSpace const &k) { return sos_combine(ifft2c(k)); }

// Toy-sized images get the largest odd window that fits.
double report_ssim(MagnitudeImage const &truth, MagnitudeImage const &img)
{
  SsimParams params;
  Index const side = std::min(truth.nx(), truth.ny());
  if (side < params.window) { params.window = static_cast<int>(side % 2 == 1 ? side : side - 1); }
  return ssim(truth, img, params);
}

void record(ReconReport &report, PhaseClock &clock, MultiCoilKSpace const &k, MagnitudeImage const *truth, Index iteration)
{
  if (truth == nullptr) { return; }
  clock.time("metrics", [&] {
    auto const img = image_of(k);
    double const p = psnr(*truth, img);
    double const s = report_ssim(*truth, img);
    if (std::isnan(p) || std::isnan(s)) {
      throw NumericalError(fmt::format("metrics became NaN at iteration {}", iteration));
    }
    report.trace.push_back({iteration, p, s});
    return 0;
  });
}

void finish(ReconReport &report, PhaseClock &clock, MultiCoilKSpace k, MagnitudeImage const *truth)
{
  report.kspace = std::move(k);
  report.image = clock.time("fft", [&] { return image_of(report.kspace); });
  if (truth != nullptr) {
    report.final_metrics = TracePoint{report.iterations, psnr(*truth, report.image), report_ssim(*truth, report.image)};
  }
}

} // namespace

char const *to_string(SamplerMode mode)
{
  switch (mode) {
  case SamplerMode::ZeroFilled:
    return "zero";
  case SamplerMode::Sake:
    return "sake";
  case SamplerMode::Lrkgm:
    return "lrkgm";
  }
  return "?";
}

SamplerMode parse_sampler_mode(std::string const &name)
{
  if (name == "zero" || name == "zero_filled") { return SamplerMode::ZeroFilled; }
  if (name == "sake") { return SamplerMode::Sake; }
  if (name == "lrkgm") { return SamplerMode::Lrkgm; }
  throw ConfigError(fmt::format("unknown reconstruction mode \"{}\" (expected zero, sake or lrkgm)", name));
}

void ReconConfig::validate() const
{
  if (window < 1) { throw ConfigError(fmt::format("window must be at least 1, got {}", window)); }
  if (!(lambda_dc > 0.0)) { throw ConfigError(fmt::format("lambda must be positive or infinite, got {}", lambda_dc)); }
  lowrank.validate();
  sampler.validate();
  if (mode == SamplerMode::Lrkgm) {
    if (!score) { throw ConfigError("lrkgm mode needs a score provider"); }
    if (sampler.n_outer == 1) { throw ConfigError("lrkgm needs 0 or at least 2 outer iterations (one per noise level)"); }
  }
}

double ReconReport::phase_seconds(std::string const &phase) const
{
  for (auto const &[name, secs] : seconds) {
    if (name == phase) { return secs; }
  }
  return 0.0;
}

std::string ReconReport::to_text() const
{
  std::ostringstream out;
  out << fmt::format("mode={}\n", to_string(mode));
  out << fmt::format("dims={}x{}x{}\n", kspace.nx(), kspace.ny(), kspace.nc());
  out << fmt::format("iterations={}\n", iterations);
  for (auto const &w : warnings) { out << fmt::format("warning={}\n", w); }
  for (auto const &t : trace) { out << fmt::format("iter={} psnr={:.6f} ssim={:.6f}\n", t.iteration, t.psnr, t.ssim); }
  for (auto const &[name, secs] : seconds) { out << fmt::format("phase={} seconds={:.6f}\n", name, secs); }
  if (final_metrics) { out << fmt::format("final psnr={:.6f} ssim={:.6f}\n", final_metrics->psnr, final_metrics->ssim); }
  return out.str();
}

MultiCoilKSpace dc_project(MultiCoilKSpace const &k_est, MultiCoilKSpace const &y, SamplingMask const &mask, double lambda)
{
  if (!k_est.same_shape(y)) {
    throw DataError(fmt::format(
      "estimate {}x{}x{} and measurements {}x{}x{} differ in shape", k_est.nx(), k_est.ny(), k_est.nc(), y.nx(), y.ny(), y.nc()));
  }
  if (y.nx() != mask.nx() || y.ny() != mask.ny()) {
    throw DataError(fmt::format("mask {}x{} does not match k-space {}x{}", mask.nx(), mask.ny(), y.nx(), y.ny()));
  }
  if (!(lambda > 0.0)) { throw ConfigError(fmt::format("lambda must be positive or infinite, got {}", lambda)); }

  bool const hard = std::isinf(lambda);
  MultiCoilKSpace out = k_est;
  for (Index c = 0; c < y.nc(); ++c) {
    for (Index i = 0; i < y.nx(); ++i) {
      for (Index j = 0; j < y.ny(); ++j) {
        if (!mask.sampled(i, j)) { continue; }
        out(i, j, c) = hard ? y(i, j, c) : (lambda * k_est(i, j, c) + y(i, j, c)) / (1.0 + lambda);
      }
    }
  }
  return out;
}

Tensor3 patch_tensor_of(MultiCoilKSpace const &k, Index window, TailPolicy tail)
{
  return tensor_form(hankel_forward(k, window, HankelLayout::PositionRows), tail).data;
}

MagnitudeImage zero_filled_recon(MultiCoilKSpace const &y, SamplingMask const &mask)
{
  check_inputs(y, mask);
  return image_of(apply_mask(y, mask));
}

ReconReport sake_recon(MultiCoilKSpace const &y, SamplingMask const &mask, ReconConfig const &cfg, MagnitudeImage const *truth)
{
  check_inputs(y, mask);
  ReconReport report;
  report.mode = SamplerMode::Sake;
  PhaseClock clock(report);

  MultiCoilKSpace k = apply_mask(y, mask);
  for (Index it = 1; it <= cfg.sampler.n_outer; ++it) {
    auto m = clock.time("hankel", [&] { return hankel_forward(k, cfg.window, HankelLayout::PositionRows); });
    try {
      if (cfg.sake_on_tensor) {
        auto t = clock.time("hankel", [&] { return tensor_form(m, cfg.tail); });
        t.data = clock.time("lowrank", [&] { return lowrank_rotate(t.data, cfg.lowrank); });
        m = clock.time("hankel", [&] { return tensor_unform(t, &m); });
      } else {
        m.data = clock.time("lowrank", [&] { return svd_truncate(m.data, cfg.lowrank.tau, cfg.lowrank.truncate); });
      }
    } catch (NumericalError const &e) {
      report.iterations = it - 1;
      report.kspace = k;
      throw ReconAborted(fmt::format("SAKE iteration {}: {}", it, e.what()), it, std::move(report));
    }
    k = clock.time("hankel", [&] { return hankel_pinv(m); });
    k = clock.time("dc", [&] { return dc_project(k, y, mask, cfg.lambda_dc); });
    report.iterations = it;
    record(report, clock, k, truth, it);
  }
  finish(report, clock, std::move(k), truth);
  return report;
}

ReconReport lrkgm_recon(
  MultiCoilKSpace const &y, SamplingMask const &mask, ReconConfig const &cfg, ScoreProvider &score, MagnitudeImage const *truth)
{
  check_inputs(y, mask);
  ReconReport report;
  report.mode = SamplerMode::Lrkgm;
  PhaseClock clock(report);

  auto const &params = cfg.sampler;
  HankelGeometry const geometry{y.nx(), y.ny(), y.nc(), cfg.window};
  if (cfg.window < 1 || cfg.window > std::min(y.nx(), y.ny())) {
    throw ConfigError(fmt::format("window {} does not fit {}x{} k-space", cfg.window, y.nx(), y.ny()));
  }
  Index const p = geometry.block_length();
  auto const ranges = patch_ranges(geometry.positions(), p, cfg.tail);
  Tensor3::Shape const shape{p, p, static_cast<Index>(ranges.size())};

  MultiCoilKSpace const y0 = apply_mask(y, mask);
  NoiseSource noise(params.seed);
  PatchTensor t;
  t.geometry = geometry;
  t.source_layout = HankelLayout::PositionRows;
  t.ranges = ranges;
  t.data = noise.normal(shape, params.sigma_max);

  // Rows dropped by TailPolicy::Drop are refilled from the tensor's own
  // pre-truncation Hankel matrix.
  std::optional<HankelMatrix> fill;

  auto to_kspace = [&](bool low_rank) {
    PatchTensor projected = t;
    if (low_rank) {
      projected.data = clock.time("lowrank", [&] { return lowrank_rotate(t.data, cfg.lowrank); });
    }
    return clock.time("hankel", [&] {
      auto m = tensor_unform(projected, fill ? &*fill : nullptr);
      return hankel_pinv(m);
    });
  };
  auto reform = [&](MultiCoilKSpace const &k) {
    clock.time("hankel", [&] {
      auto m = hankel_forward(k, cfg.window, HankelLayout::PositionRows);
      t = tensor_form(m, cfg.tail);
      if (cfg.tail == TailPolicy::Drop) { fill = std::move(m); }
      return 0;
    });
  };
  auto project = [&](Index step) {
    if (!t.data.all_finite()) {
      report.iterations = params.n_outer - 1 - step;
      throw ReconAborted(fmt::format("tensor became non-finite at step {}", step), step, report);
    }
    auto k = to_kspace(true);
    k = clock.time("dc", [&] { return dc_project(k, y0, mask, cfg.lambda_dc); });
    reform(k);
    return k;
  };

  if (cfg.tail == TailPolicy::Drop) {
    // No earlier estimate exists for uncovered rows; start them at zero.
    HankelMatrix zero;
    zero.geometry = geometry;
    zero.layout = HankelLayout::PositionRows;
    zero.data = CxMatrix::Zero(geometry.positions(), p);
    fill = std::move(zero);
  }

  MultiCoilKSpace k;
  if (params.n_outer == 0) {
    k = to_kspace(false);
    k = clock.time("dc", [&] { return dc_project(k, y0, mask, cfg.lambda_dc); });
    finish(report, clock, std::move(k), truth);
    return report;
  }

  SigmaSchedule const schedule = params.schedule();
  for (Index i = params.n_outer - 1; i >= 0; --i) {
    try {
      auto const z = noise.normal(shape);
      t.data = clock.time("score", [&] { return predictor_step(t.data, score, schedule, i, z); });
      k = project(i);
      for (Index j = 1; j <= params.n_inner; ++j) {
        auto const zc = noise.normal(shape);
        auto step = clock.time("score", [&] { return corrector_step(t.data, score, schedule.sigma(i + 1), params.snr, zc); });
        t.data = std::move(step.x);
        k = project(i);
      }
    } catch (ReconAborted const &) {
      throw;
    } catch (NumericalError const &e) {
      report.kspace = k;
      throw ReconAborted(fmt::format("lrkgm step {}: {}", i, e.what()), i, std::move(report));
    }
    report.iterations = params.n_outer - i;
    record(report, clock, k, truth, report.iterations);
  }
  finish(report, clock, std::move(k), truth);
  return report;
}

ReconReport run_reconstruction(ReconConfig const &cfg, ReconInputs const &inputs)
{
  cfg.validate();
  check_inputs(inputs.measured, inputs.mask);
  MagnitudeImage const *truth = inputs.truth ? &*inputs.truth : nullptr;
  if (truth != nullptr && (truth->nx() != inputs.measured.nx() || truth->ny() != inputs.measured.ny())) {
    throw DataError(fmt::format(
      "reference image {}x{} does not match k-space {}x{}", truth->nx(), truth->ny(), inputs.measured.nx(), inputs.measured.ny()));
  }
  std::vector<std::string> warnings;
  if (cfg.mode != SamplerMode::Lrkgm && cfg.score) {
    warnings.push_back(fmt::format("score provider {} ignored in {} mode", cfg.score->describe(), to_string(cfg.mode)));
  }

  auto const start = std::chrono::steady_clock::now();
  ReconReport report;
  switch (cfg.mode) {
  case SamplerMode::ZeroFilled: {
    report.mode = SamplerMode::ZeroFilled;
    PhaseClock clock(report);
    finish(report, clock, apply_mask(inputs.measured, inputs.mask), truth);
    break;
  }
  case SamplerMode::Sake:
    report = sake_recon(inputs.measured, inputs.mask, cfg, truth);
    break;
  case SamplerMode::Lrkgm:
    report = lrkgm_recon(inputs.measured, inputs.mask, cfg, *cfg.score, truth);
    break;
  }
  std::chrono::duration<double> const total = std::chrono::steady_clock::now() - start;
  report.seconds.emplace_back("total", total.count());
  report.warnings.insert(report.warnings.begin(), warnings.begin(), warnings.end());
  return report;
}

} // namespace hrecon
