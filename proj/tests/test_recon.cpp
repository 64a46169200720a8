#include "support.hpp"

#include "hrecon/error.hpp"
#include "hrecon/fft.hpp"
#include "hrecon/io.hpp"
#include "hrecon/masks.hpp"
#include "hrecon/phantom.hpp"
#include "hrecon/recon.hpp"
#include "hrecon/score_process.hpp"

#include <doctest.h>

#include <filesystem>
#include <limits>

using namespace hrecon;

namespace {

SamplingMask random_mask(Index nx, Index ny, double accel, Index acs, std::uint64_t seed)
{
  MaskSpec s;
  s.kind = MaskKind::Random2d;
  s.accel = accel;
  s.acs = acs;
  s.seed = seed;
  return mask_generate(s, nx, ny);
}

bool sampled_entries_equal(MultiCoilKSpace const &k, MultiCoilKSpace const &y, SamplingMask const &mask)
{
  for (Index c = 0; c < y.nc(); ++c) {
    for (Index i = 0; i < y.nx(); ++i) {
      for (Index j = 0; j < y.ny(); ++j) {
        if (mask.sampled(i, j) && k(i, j, c) != y(i, j, c)) { return false; }
      }
    }
  }
  return true;
}

double rel_error(MultiCoilKSpace const &k, MultiCoilKSpace const &truth) { return test::rel_diff(k, truth); }

// Error of drawing every unsampled entry from the target spread
// N(0, sigma_data^2 + sigma_min^2) per real component, relative to |truth|.
double noise_floor(MultiCoilKSpace const &truth, SamplingMask const &mask, double sigma_data, double sigma_min)
{
  double const missing = static_cast<double>(truth.nx() * truth.ny() - mask.count()) * static_cast<double>(truth.nc());
  return std::sqrt(missing * 2.0 * (sigma_data * sigma_data + sigma_min * sigma_min)) / truth.norm();
}

ReconConfig lrkgm_config(std::shared_ptr<ScoreProvider> score, Index outer, std::uint64_t seed)
{
  ReconConfig cfg;
  cfg.mode = SamplerMode::Lrkgm;
  cfg.window = 3;
  cfg.lowrank.tau = 9;
  cfg.sampler.n_outer = outer;
  cfg.sampler.seed = seed;
  cfg.score = std::move(score);
  return cfg;
}

class NanAfter final : public ScoreProvider
{
public:
  explicit NanAfter(int calls)
    : left_{calls}
  {
  }
  Tensor3 score(Tensor3 const &x, double) override
  {
    Tensor3 out(x.shape());
    if (--left_ < 0) { out.data()[0] = std::numeric_limits<double>::quiet_NaN(); }
    return out;
  }
  std::string describe() const override { return "nan-after"; }

private:
  int left_;
};

} // namespace

TEST_CASE("dc_project")
{
  auto const k = test::random_kspace(6, 5, 2, 1);
  auto const y = test::random_kspace(6, 5, 2, 2);
  auto const mask = random_mask(6, 5, 2.0, 2, 3);

  SUBCASE("hard replacement")
  {
    auto const out = dc_project(k, y, mask, kHardDataConsistency);
    for (Index c = 0; c < 2; ++c) {
      for (Index i = 0; i < 6; ++i) {
        for (Index j = 0; j < 5; ++j) { CHECK(out(i, j, c) == (mask.sampled(i, j) ? y(i, j, c) : k(i, j, c))); }
      }
    }
    CHECK(dc_project(out, y, mask, kHardDataConsistency).data() == out.data());
  }
  SUBCASE("soft blend")
  {
    MultiCoilKSpace a(1, 1, 1);
    MultiCoilKSpace b(1, 1, 1);
    a(0, 0, 0) = 4.0;
    b(0, 0, 0) = 2.0;
    CHECK(dc_project(a, b, SamplingMask::full(1, 1), 1.0)(0, 0, 0) == Cx{3.0, 0.0});
    auto const out = dc_project(k, y, mask, 1.0);
    for (Index c = 0; c < 2; ++c) {
      for (Index i = 0; i < 6; ++i) {
        for (Index j = 0; j < 5; ++j) {
          Cx const want = mask.sampled(i, j) ? (k(i, j, c) + y(i, j, c)) / 2.0 : k(i, j, c);
          CHECK(std::abs(out(i, j, c) - want) <= 1e-12 * std::abs(want));
        }
      }
    }
  }
  SUBCASE("errors")
  {
    CHECK_THROWS_AS(dc_project(k, test::random_kspace(6, 5, 1, 2), mask, 1.0), DataError);
    CHECK_THROWS_AS(dc_project(k, y, random_mask(5, 5, 2.0, 2, 3), 1.0), DataError);
    CHECK_THROWS_AS(dc_project(k, y, mask, 0.0), ConfigError);
    CHECK_THROWS_AS(dc_project(k, y, mask, -1.0), ConfigError);
  }
}

TEST_CASE("zero_filled_recon")
{
  auto const y = test::random_kspace(8, 8, 3, 4);
  auto const full = zero_filled_recon(y, SamplingMask::full(8, 8));
  CHECK(full.pixels() == sos_combine(ifft2c(y)).pixels());

  // values at unsampled locations do not matter
  auto const mask = random_mask(8, 8, 2.0, 2, 5);
  auto y2 = y;
  for (Index i = 0; i < 8; ++i) {
    for (Index j = 0; j < 8; ++j) {
      if (!mask.sampled(i, j)) { y2(i, j, 1) = 100.0; }
    }
  }
  CHECK(zero_filled_recon(y, mask).pixels() == zero_filled_recon(y2, mask).pixels());
  auto bad = y;
  bad(0, 0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(zero_filled_recon(bad, mask), DataError);
}

TEST_CASE("sake_recon")
{
  auto const ph = phantom_generate(16, 16, 2, 1);
  auto const mask = random_mask(16, 16, 2.0, 4, 2);
  ReconConfig cfg;
  cfg.window = 3;
  cfg.lowrank.tau = 6;
  cfg.sampler.n_outer = 5;

  SUBCASE("full rank keeps the zero-filled data")
  {
    auto c = cfg;
    c.lowrank.tau = 1000;
    auto const r = sake_recon(ph.kspace, mask, c);
    CHECK(test::rel_diff(r.kspace, apply_mask(ph.kspace, mask)) <= 1e-12);
  }
  SUBCASE("trace, data consistency and determinism")
  {
    auto const r = sake_recon(ph.kspace, mask, cfg, &ph.magnitude);
    CHECK(r.iterations == 5);
    REQUIRE(r.trace.size() == 5);
    for (auto const &t : r.trace) {
      CHECK(std::isfinite(t.psnr));
      CHECK(std::isfinite(t.ssim));
    }
    CHECK(sampled_entries_equal(r.kspace, ph.kspace, mask));
    CHECK(r.final_metrics.has_value());
    CHECK(sake_recon(ph.kspace, mask, cfg).kspace.data() == r.kspace.data());
  }
  SUBCASE("tensor variant")
  {
    auto c = cfg;
    c.sake_on_tensor = true;
    auto const r = sake_recon(ph.kspace, mask, c);
    CHECK(r.kspace.all_finite());
    CHECK(sampled_entries_equal(r.kspace, ph.kspace, mask));
  }
}

TEST_CASE("lrkgm_recon on a single-coil 8x8 problem")
{
  auto const ph = phantom_generate(8, 8, 1, 3);
  double const sigma_data = 0.01;
  auto const mu = patch_tensor_of(ph.kspace, 3);
  auto score = std::make_shared<GaussianScore>(mu, sigma_data);

  SUBCASE("R = 1 returns the measurements")
  {
    auto const cfg = lrkgm_config(score, 100, 0);
    auto const r = lrkgm_recon(ph.kspace, SamplingMask::full(8, 8), cfg, *score);
    CHECK(r.kspace.data() == ph.kspace.data());
    CHECK(r.iterations == 100);
  }
  SUBCASE("R = 2 lands under the analytic noise floor")
  {
    auto const mask = random_mask(8, 8, 2.0, 2, 1);
    double const floor = noise_floor(ph.kspace, mask, sigma_data, 0.01);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto const r = lrkgm_recon(ph.kspace, mask, lrkgm_config(score, 100, seed), *score, &ph.magnitude);
      CHECK(rel_error(r.kspace, ph.kspace) < floor);
      CHECK(sampled_entries_equal(r.kspace, ph.kspace, mask));
      CHECK(r.trace.size() == 100);
    }
  }
  SUBCASE("seeded runs are bit-identical")
  {
    auto const mask = random_mask(8, 8, 2.0, 2, 1);
    auto const a = lrkgm_recon(ph.kspace, mask, lrkgm_config(score, 20, 7), *score);
    auto const b = lrkgm_recon(ph.kspace, mask, lrkgm_config(score, 20, 7), *score);
    auto const c = lrkgm_recon(ph.kspace, mask, lrkgm_config(score, 20, 8), *score);
    CHECK(a.kspace.data() == b.kspace.data());
    CHECK(a.image.pixels() == b.image.pixels());
    CHECK_FALSE(a.kspace.data() == c.kspace.data());
  }
  SUBCASE("zero outer iterations only projects the initial tensor")
  {
    auto const mask = random_mask(8, 8, 2.0, 2, 1);
    auto const r = lrkgm_recon(ph.kspace, mask, lrkgm_config(score, 0, 1), *score);
    CHECK(r.iterations == 0);
    CHECK(sampled_entries_equal(r.kspace, ph.kspace, mask));
    CHECK(r.phase_seconds("score") == 0.0);
  }
  SUBCASE("dropped tail and several corrector steps")
  {
    auto const mask = random_mask(8, 8, 2.0, 2, 1);
    auto drop_score = std::make_shared<GaussianScore>(patch_tensor_of(ph.kspace, 2, TailPolicy::Drop), sigma_data);
    auto cfg = lrkgm_config(drop_score, 30, 2);
    cfg.tail = TailPolicy::Drop;
    cfg.window = 2;
    cfg.lowrank.tau = 4;
    cfg.sampler.n_inner = 3;
    auto const r = lrkgm_recon(ph.kspace, mask, cfg, *drop_score);
    CHECK(r.kspace.all_finite());
    CHECK(sampled_entries_equal(r.kspace, ph.kspace, mask));
  }
  SUBCASE("external score process")
  {
    auto const dir = std::filesystem::temp_directory_path() / "hrecon_recon_test";
    std::filesystem::create_directories(dir);
    io::write_kspace(dir / "mu.cks", ph.kspace);
    auto const stored = io::read_kspace(dir / "mu.cks");
    auto proc = std::make_shared<ProcessScore>(
      std::vector<std::string>{HRECON_STUB_PATH, "--mu", (dir / "mu.cks").string(), "--window", "3", "--sigma-data", "0.01"});
    auto const mask = random_mask(8, 8, 2.0, 2, 1);
    auto const r = lrkgm_recon(ph.kspace, mask, lrkgm_config(proc, 100, 0), *proc);
    CHECK(rel_error(r.kspace, ph.kspace) < noise_floor(ph.kspace, mask, sigma_data, 0.01));
    CHECK(test::rel_diff(stored, ph.kspace) < 1e-6);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("run_reconstruction")
{
  auto const ph = phantom_generate(16, 16, 2, 5);
  ReconInputs inputs{ph.kspace, random_mask(16, 16, 2.0, 4, 1), ph.magnitude};

  SUBCASE("an unused score provider is reported")
  {
    ReconConfig cfg;
    cfg.mode = SamplerMode::ZeroFilled;
    cfg.score = std::make_shared<GaussianScore>(Tensor3({1, 1, 1}), 1.0);
    auto const r = run_reconstruction(cfg, inputs);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("ignored in zero mode") != std::string::npos);
    CHECK(r.to_text().find("warning=score provider") != std::string::npos);
    CHECK(r.iterations == 0);
  }
  SUBCASE("configuration is checked before any work")
  {
    ReconConfig cfg;
    cfg.mode = SamplerMode::Lrkgm;
    CHECK_THROWS_AS(run_reconstruction(cfg, inputs), ConfigError);
    cfg.mode = SamplerMode::Sake;
    cfg.lowrank.tau = 0;
    CHECK_THROWS_AS(run_reconstruction(cfg, inputs), ConfigError);
    cfg.lowrank.tau = 4;
    cfg.lambda_dc = std::nan("");
    CHECK_THROWS_AS(run_reconstruction(cfg, inputs), ConfigError);
    ReconConfig one = lrkgm_config(std::make_shared<GaussianScore>(Tensor3({1, 1, 1}), 1.0), 1, 0);
    CHECK_THROWS_AS(run_reconstruction(one, inputs), ConfigError);
  }
  SUBCASE("mismatched inputs")
  {
    ReconConfig cfg;
    cfg.mode = SamplerMode::ZeroFilled;
    auto bad = inputs;
    bad.truth = MagnitudeImage(8, 8);
    CHECK_THROWS_AS(run_reconstruction(cfg, bad), DataError);
    bad = inputs;
    bad.mask = SamplingMask::full(8, 16);
    CHECK_THROWS_AS(run_reconstruction(cfg, bad), DataError);
  }
  SUBCASE("timings and report text")
  {
    ReconConfig cfg;
    cfg.window = 3;
    cfg.lowrank.tau = 6;
    cfg.sampler.n_outer = 3;
    auto const r = run_reconstruction(cfg, inputs);
    for (auto const &[name, secs] : r.seconds) { CHECK(secs >= 0.0); }
    CHECK(r.phase_seconds("total") >= r.phase_seconds("lowrank"));
    auto const text = r.to_text();
    CHECK(text.find("mode=sake\n") != std::string::npos);
    CHECK(text.find("dims=16x16x2\n") != std::string::npos);
    CHECK(text.find("iterations=3\n") != std::string::npos);
    CHECK(text.find("iter=3 psnr=") != std::string::npos);
    CHECK(text.find("phase=total seconds=") != std::string::npos);
    CHECK(text.find("final psnr=") != std::string::npos);
  }
  SUBCASE("a failing score aborts with the partial report")
  {
    auto nan = std::make_shared<NanAfter>(7);
    ReconInputs small{phantom_generate(8, 8, 1, 1).kspace, SamplingMask::full(8, 8), std::nullopt};
    auto cfg = lrkgm_config(nan, 10, 0);
    try {
      run_reconstruction(cfg, small);
      FAIL("expected ReconAborted");
    } catch (ReconAborted const &e) {
      // 7 good calls: 3 full outer steps (predictor + corrector) and one predictor
      CHECK(e.iteration() == 6);
      CHECK(e.partial().iterations == 3);
      CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
    }
  }
}
