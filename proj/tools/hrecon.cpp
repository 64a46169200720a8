// hrecon: mask generation, phantom synthesis, reconstruction, metrics and
// file conversion.
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error,
// 3 numerical failure.

#include "hrecon/error.hpp"
#include "hrecon/fft.hpp"
#include "hrecon/io.hpp"
#include "hrecon/masks.hpp"
#include "hrecon/metrics.hpp"
#include "hrecon/phantom.hpp"
#include "hrecon/recon.hpp"
#include "hrecon/score_process.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace hrecon;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct MaskArgs
{
  Index nx = 256;
  Index ny = 256;
  std::string kind = "poisson2d";
  double accel = 4.0;
  Index acs = 24;
  std::uint64_t seed = 0;
  std::string out = ".";
};

struct PhantomArgs
{
  Index nx = 256;
  Index ny = 256;
  Index nc = 8;
  std::uint64_t seed = 0;
  std::string out = ".";
};

struct ReconArgs
{
  std::string kspace;
  std::string mask;
  std::string truth;
  std::string mode = "sake";
  Index window = 6;
  Index tau = 30;
  std::string lambda = "inf";
  Index outer = 1000;
  Index inner = 1;
  double snr = 0.075;
  double sigma_min = 0.01;
  double sigma_max = 1.0;
  double sigma_data = 0.01;
  std::string score;
  std::string tail = "overlap";
  std::string svd = "gram";
  bool sake_on_tensor = false;
  std::uint64_t seed = 0;
  std::string out = ".";
};

struct MetricsArgs
{
  std::string reference;
  std::string test;
  bool kspace = false;
};

struct ConvertArgs
{
  std::string input;
  std::string output;
  bool kspace = false;
};

MagnitudeImage load_image(std::string const &path, bool kspace)
{
  auto const k = io::read_kspace(path);
  return kspace ? sos_combine(ifft2c(k)) : io::kspace_layout_to_image(k);
}

double parse_lambda(std::string const &text)
{
  if (text == "inf") { return kHardDataConsistency; }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (std::exception const &) {
    used = 0;
  }
  if (used != text.size() || !(v > 0.0)) {
    throw ConfigError(fmt::format("--lambda must be \"inf\" or a positive number, got \"{}\"", text));
  }
  return v;
}

TailPolicy parse_tail(std::string const &text)
{
  if (text == "overlap") { return TailPolicy::Overlap; }
  if (text == "drop") { return TailPolicy::Drop; }
  throw ConfigError(fmt::format("--tail must be overlap or drop, got \"{}\"", text));
}

std::shared_ptr<ScoreProvider> make_score(ReconArgs const &a, TailPolicy tail)
{
  if (a.score.empty()) { return nullptr; }
  if (a.score.starts_with("gaussian:")) {
    auto const mu = io::read_kspace(a.score.substr(9));
    return std::make_shared<GaussianScore>(patch_tensor_of(mu, a.window, tail), a.sigma_data);
  }
  if (a.score.starts_with("exec:")) {
    return std::make_shared<ProcessScore>(ProcessScore::parse_command(a.score.substr(5)));
  }
  throw ConfigError(fmt::format("--score must be gaussian:<mu-file> or exec:<command>, got \"{}\"", a.score));
}

void write_report(fs::path const &dir, ReconReport const &report)
{
  std::string const text = report.to_text();
  io::write_file(dir / "report.txt", std::span(reinterpret_cast<std::uint8_t const *>(text.data()), text.size()));
}

int run_mask(MaskArgs const &a)
{
  MaskSpec spec;
  spec.kind = parse_mask_kind(a.kind);
  spec.accel = a.accel;
  spec.acs = a.acs;
  spec.seed = a.seed;
  auto const mask = mask_generate(spec, a.nx, a.ny);
  fs::create_directories(a.out);
  io::write_mask(fs::path(a.out) / "mask.msk", mask);
  fmt::print("samples={} acceleration={:.4f}\n", mask.count(), mask.acceleration());
  return 0;
}

int run_phantom(PhantomArgs const &a)
{
  auto const ph = phantom_generate(a.nx, a.ny, a.nc, a.seed);
  fs::path const dir(a.out);
  fs::create_directories(dir);
  io::write_kspace(dir / "kspace.cks", ph.kspace);
  io::write_kspace(dir / "truth.cks", io::image_to_kspace_layout(ph.magnitude));
  io::write_file(dir / "truth.pgm", io::to_pgm(ph.magnitude));
  return 0;
}

int run_recon(ReconArgs const &a)
{
  ReconConfig cfg;
  cfg.mode = parse_sampler_mode(a.mode);
  cfg.window = a.window;
  cfg.lowrank.tau = a.tau;
  if (a.svd == "gram") {
    cfg.lowrank.truncate.method = SvdMethod::Gram;
  } else if (a.svd != "full") {
    throw ConfigError(fmt::format("--svd must be full or gram, got \"{}\"", a.svd));
  }
  cfg.lambda_dc = parse_lambda(a.lambda);
  cfg.tail = parse_tail(a.tail);
  cfg.sake_on_tensor = a.sake_on_tensor;
  cfg.sampler.n_outer = a.outer;
  cfg.sampler.n_inner = a.inner;
  cfg.sampler.snr = a.snr;
  cfg.sampler.sigma_min = a.sigma_min;
  cfg.sampler.sigma_max = a.sigma_max;
  cfg.sampler.seed = a.seed;
  // Everything that needs no input file is checked first.
  if (cfg.mode == SamplerMode::Lrkgm && a.score.empty()) { throw ConfigError("--mode lrkgm needs --score"); }
  {
    auto probe = cfg;
    probe.score = nullptr;
    if (probe.mode == SamplerMode::Lrkgm) { probe.mode = SamplerMode::Sake; }
    probe.validate();
    if (cfg.mode == SamplerMode::Lrkgm && cfg.sampler.n_outer == 1) {
      throw ConfigError("lrkgm needs 0 or at least 2 outer iterations (one per noise level)");
    }
  }

  ReconInputs inputs{io::read_kspace(a.kspace), io::read_mask(a.mask), std::nullopt};
  if (!a.truth.empty()) { inputs.truth = io::kspace_layout_to_image(io::read_kspace(a.truth)); }
  cfg.score = make_score(a, cfg.tail);

  fs::path const dir(a.out);
  fs::create_directories(dir);
  try {
    auto const report = run_reconstruction(cfg, inputs);
    for (auto const &w : report.warnings) { fmt::print(stderr, "warning: {}\n", w); }
    write_report(dir, report);
    io::write_kspace(dir / "image.cks", io::image_to_kspace_layout(report.image));
    io::write_file(dir / "image.pgm", io::to_pgm(report.image));
    io::write_kspace(dir / "kspace.cks", report.kspace);
    if (report.final_metrics) {
      fmt::print("PSNR={:.4f} SSIM={:.4f}\n", report.final_metrics->psnr, report.final_metrics->ssim);
    }
  } catch (ReconAborted const &e) {
    write_report(dir, e.partial());
    throw;
  }
  return 0;
}

int run_metrics(MetricsArgs const &a)
{
  auto const ref = load_image(a.reference, a.kspace);
  auto const img = load_image(a.test, a.kspace);
  fmt::print("PSNR={:.4f} SSIM={:.4f}\n", psnr(ref, img), ssim(ref, img));
  return 0;
}

int run_convert(ConvertArgs const &a)
{
  fs::path const in(a.input);
  fs::path const out(a.output);
  auto const bytes = io::read_file(in);
  bool const is_mask = bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "MSK1");
  auto const ext = out.extension().string();
  if (is_mask) {
    auto const mask = io::deserialize_mask(bytes);
    if (ext == ".msk") {
      io::write_mask(out, mask);
      return 0;
    }
    if (ext != ".pgm") { throw ConfigError(fmt::format("a mask converts to .msk or .pgm, not \"{}\"", ext)); }
    MagnitudeImage img(mask.nx(), mask.ny());
    for (Index i = 0; i < mask.nx(); ++i) {
      for (Index j = 0; j < mask.ny(); ++j) { img(i, j) = mask.sampled(i, j) ? 1.0 : 0.0; }
    }
    io::write_file(out, io::to_pgm(img));
    return 0;
  }
  auto const k = io::deserialize_kspace(bytes);
  if (ext == ".cks") {
    io::write_kspace(out, a.kspace ? io::image_to_kspace_layout(sos_combine(ifft2c(k))) : k);
    return 0;
  }
  if (ext != ".pgm") { throw ConfigError(fmt::format("output must end in .cks or .pgm, not \"{}\"", ext)); }
  io::write_file(out, io::to_pgm(a.kspace ? sos_combine(ifft2c(k)) : io::kspace_layout_to_image(k)));
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Calibrationless parallel MRI reconstruction"};
  app.require_subcommand(1);

  MaskArgs mask;
  auto *mask_cmd = app.add_subcommand("mask", "Generate an undersampling mask (writes mask.msk)");
  mask_cmd->add_option("--nx", mask.nx, "Readout size")->capture_default_str();
  mask_cmd->add_option("--ny", mask.ny, "Phase-encode size")->capture_default_str();
  mask_cmd->add_option("--mask-kind", mask.kind, "poisson2d, random2d or partial2d")->capture_default_str();
  mask_cmd->add_option("--accel", mask.accel, "Acceleration R >= 1")->capture_default_str();
  mask_cmd->add_option("--acs", mask.acs, "Side of the centered calibration square")->capture_default_str();
  mask_cmd->add_option("--seed", mask.seed)->capture_default_str();
  mask_cmd->add_option("--out", mask.out, "Output directory")->capture_default_str();

  PhantomArgs phantom;
  auto *phantom_cmd = app.add_subcommand("phantom", "Synthesize multi-coil k-space (kspace.cks, truth.cks, truth.pgm)");
  phantom_cmd->add_option("--nx", phantom.nx)->capture_default_str();
  phantom_cmd->add_option("--ny", phantom.ny)->capture_default_str();
  phantom_cmd->add_option("--nc", phantom.nc, "Coils")->capture_default_str();
  phantom_cmd->add_option("--seed", phantom.seed)->capture_default_str();
  phantom_cmd->add_option("--out", phantom.out, "Output directory")->capture_default_str();

  ReconArgs recon;
  auto *recon_cmd = app.add_subcommand("recon", "Reconstruct undersampled k-space");
  recon_cmd->add_option("--kspace", recon.kspace, "Measured k-space (CKS)")->required();
  recon_cmd->add_option("--mask", recon.mask, "Sampling mask (MSK)")->required();
  recon_cmd->add_option("--truth", recon.truth, "Reference image (single-coil CKS) for metrics");
  recon_cmd->add_option("--mode", recon.mode, "zero, sake or lrkgm")->capture_default_str();
  recon_cmd->add_option("--window", recon.window, "Hankel window side")->capture_default_str();
  recon_cmd->add_option("--tau", recon.tau, "Retained rank")->capture_default_str();
  recon_cmd->add_option("--lambda", recon.lambda, "Data-consistency weight: inf or a positive number")->capture_default_str();
  recon_cmd->add_option("--outer", recon.outer, "Outer iterations / noise levels")->capture_default_str();
  recon_cmd->add_option("--inner", recon.inner, "Corrector steps per level")->capture_default_str();
  recon_cmd->add_option("--snr", recon.snr, "Corrector signal-to-noise ratio")->capture_default_str();
  recon_cmd->add_option("--sigma-min", recon.sigma_min)->capture_default_str();
  recon_cmd->add_option("--sigma-max", recon.sigma_max)->capture_default_str();
  recon_cmd->add_option("--sigma-data", recon.sigma_data, "Spread of the gaussian: score")->capture_default_str();
  recon_cmd->add_option("--score", recon.score, "gaussian:<mu.cks> or exec:<command>");
  recon_cmd->add_option("--tail", recon.tail, "Patch tail policy: overlap or drop")->capture_default_str();
  recon_cmd->add_option("--svd", recon.svd, "Truncation backend: full or gram")->capture_default_str();
  recon_cmd->add_flag("--sake-on-tensor", recon.sake_on_tensor, "SAKE on the patch tensor instead of the Hankel matrix");
  recon_cmd->add_option("--seed", recon.seed)->capture_default_str();
  recon_cmd->add_option("--out", recon.out, "Output directory")->capture_default_str();

  MetricsArgs metrics;
  auto *metrics_cmd = app.add_subcommand("metrics", "Print PSNR and SSIM of test against reference");
  metrics_cmd->add_option("reference", metrics.reference)->required();
  metrics_cmd->add_option("test", metrics.test)->required();
  metrics_cmd->add_flag("--kspace", metrics.kspace, "Inputs are multi-coil k-space, compared after SOS");

  ConvertArgs convert;
  auto *convert_cmd = app.add_subcommand("convert", "Convert CKS/MSK files to CKS, MSK or PGM");
  convert_cmd->add_option("input", convert.input)->required();
  convert_cmd->add_option("output", convert.output, "Target; the extension picks the format")->required();
  convert_cmd->add_flag("--kspace", convert.kspace, "Input is k-space; output its SOS image");

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const &e) {
    return app.exit(e);
  } catch (CLI::CallForAllHelp const &e) {
    return app.exit(e);
  } catch (CLI::ParseError const &e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*mask_cmd) { return run_mask(mask); }
    if (*phantom_cmd) { return run_phantom(phantom); }
    if (*recon_cmd) { return run_recon(recon); }
    if (*metrics_cmd) { return run_metrics(metrics); }
    if (*convert_cmd) { return run_convert(convert); }
  } catch (ConfigError const &e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (DataError const &e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kExitData;
  } catch (NumericalError const &e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return kExitNumerical;
  } catch (fs::filesystem_error const &e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
