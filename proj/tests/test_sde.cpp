#include "support.hpp"

#include "hrecon/error.hpp"
#include "hrecon/sde.hpp"

#include <doctest.h>

#include <functional>

using namespace hrecon;

namespace {

class LambdaScore final : public ScoreProvider
{
public:
  explicit LambdaScore(std::function<Tensor3(Tensor3 const &, double)> f)
    : f_{std::move(f)}
  {
  }
  Tensor3 score(Tensor3 const &x, double sigma) override { return f_(x, sigma); }
  std::string describe() const override { return "lambda"; }

private:
  std::function<Tensor3(Tensor3 const &, double)> f_;
};

LambdaScore zero_score()
{
  return LambdaScore([](Tensor3 const &x, double) { return Tensor3(x.shape()); });
}

// log N(x; mu, v I) treating real and imaginary parts as independent coordinates.
double log_density(Tensor3 const &x, Tensor3 const &mu, double v)
{
  double s = 0.0;
  for (std::size_t n = 0; n < x.data().size(); ++n) { s += std::norm(x.data()[n] - mu.data()[n]); }
  return -0.5 * s / v;
}

} // namespace

TEST_CASE("geometric_schedule")
{
  auto const two = geometric_schedule(2, 0.01, 1.0);
  CHECK(two.levels() == std::vector<double>{0.01, 1.0});
  auto const three = geometric_schedule(3, 0.01, 1.0);
  CHECK(three.sigma(1) == 0.01);
  CHECK(three.sigma(2) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(three.sigma(3) == 1.0);
  CHECK(three.sigma(0) == 0.0);

  auto const full = geometric_schedule(1000, 0.01, 1.0);
  CHECK(full.steps() == 1000);
  CHECK(full.sigma_min() == 0.01);
  CHECK(full.sigma_max() == 1.0);
  double const ratio = std::pow(100.0, 1.0 / 999.0);
  CHECK(full.sigma(500) / full.sigma(499) == doctest::Approx(ratio).epsilon(1e-12));
  for (Index i = 0; i < full.steps(); ++i) {
    double const a = full.sigma(i);
    double const b = full.sigma(i + 1);
    CHECK(b * b - a * a > 0.0);
  }

  CHECK_THROWS_AS(geometric_schedule(1, 0.01, 1.0), ConfigError);
  CHECK_THROWS_AS(geometric_schedule(10, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(geometric_schedule(10, 1.0, 0.5), ConfigError);
  CHECK_THROWS_AS(SigmaSchedule({0.1, 0.1}), ConfigError);
}

TEST_CASE("gaussian_score")
{
  auto const mu = test::random_tensor({2, 3, 2}, 1);
  CHECK(gaussian_score(mu, mu, 0.7, 0.3).norm() == 0.0);

  // -x / sigma^2 at a scalar point
  Tensor3 x({1, 1, 1}, Cx{2.0, 0.0});
  Tensor3 const zero({1, 1, 1});
  CHECK(gaussian_score(x, zero, 1.0, 0.0)(0, 0, 0) == Cx{-2.0, 0.0});
  CHECK(gaussian_score(Tensor3({1, 1, 1}, Cx{1.0, 0.0}), zero, 1.0, 0.0)(0, 0, 0) == Cx{-1.0, 0.0});

  // finite-difference gradient of the log density
  double const sd = 0.8;
  double const st = 0.5;
  double const v = sd * sd + st * st;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto pt = test::random_tensor({2, 2, 2}, 10 + seed);
    auto const center = test::random_tensor({2, 2, 2}, 3);
    auto const g2 = gaussian_score(pt, center, sd, st);
    double const h = 1e-5;
    for (std::size_t n = 0; n < pt.data().size(); ++n) {
      Cx const saved = pt.data()[n];
      pt.data()[n] = saved + h;
      double const up = log_density(pt, center, v);
      pt.data()[n] = saved - h;
      double const dn = log_density(pt, center, v);
      pt.data()[n] = saved + Cx{0, h};
      double const upi = log_density(pt, center, v);
      pt.data()[n] = saved - Cx{0, h};
      double const dni = log_density(pt, center, v);
      pt.data()[n] = saved;
      Cx const fd{(up - dn) / (2 * h), (upi - dni) / (2 * h)};
      CHECK(std::abs(fd - g2.data()[n]) <= 1e-6 * std::max(1.0, std::abs(g2.data()[n])));
    }
  }

  CHECK_THROWS_AS(gaussian_score(x, test::random_tensor({2, 1, 1}, 1), 1.0, 0.1), DataError);
}

TEST_CASE("predictor_step")
{
  auto const sched = geometric_schedule(10, 0.01, 1.0);
  auto const x = test::random_tensor({3, 2, 2}, 1);
  auto zs = zero_score();

  CHECK(predictor_step(x, zs, sched, 4, Tensor3(x.shape())) == x);

  auto const z = test::random_tensor(x.shape(), 2);
  auto const out = predictor_step(x, zs, sched, 4, z);
  double const d = std::sqrt(sched.sigma(5) * sched.sigma(5) - sched.sigma(4) * sched.sigma(4));
  for (std::size_t n = 0; n < x.data().size(); ++n) { CHECK(out.data()[n] == x.data()[n] + d * z.data()[n]); }

  // first step uses sigma_0 = 0
  auto const first = predictor_step(x, zs, sched, 0, z);
  CHECK(std::abs(first.data()[0] - (x.data()[0] + 0.01 * z.data()[0])) < 1e-15);

  // deterministic
  GaussianScore gs(test::random_tensor(x.shape(), 3), 0.5);
  CHECK(predictor_step(x, gs, sched, 7, z) == predictor_step(x, gs, sched, 7, z));

  CHECK_THROWS_AS(predictor_step(x, zs, sched, 10, z), ConfigError);
  CHECK_THROWS_AS(predictor_step(x, zs, sched, 0, Tensor3({1, 1, 1})), DataError);
}

TEST_CASE("predictor noise variance is additive")
{
  auto const sched = geometric_schedule(10, 0.01, 1.0);
  auto zs = zero_score();
  NoiseSource noise(42);
  int const draws = 10000;
  Tensor3 const x0({1, 1, 1}, Cx{0.5, 0.0});
  double sum = 0.0;
  double sum2 = 0.0;
  for (int d = 0; d < draws; ++d) {
    Tensor3 x = x0;
    for (Index i = 9; i >= 5; --i) { x = predictor_step(x, zs, sched, i, noise.normal(x.shape())); }
    double const r = x(0, 0, 0).real() - 0.5;
    sum += r;
    sum2 += r * r;
  }
  double const var = sum2 / draws - std::pow(sum / draws, 2);
  double const expect = std::pow(sched.sigma(10), 2) - std::pow(sched.sigma(5), 2);
  double const se = expect * std::sqrt(2.0 / draws);
  CHECK(std::abs(var - expect) <= 3 * se);
}

TEST_CASE("predictor-only reverse sweep reproduces Gaussian moments")
{
  // Exact prior start, exact score, no corrector.
  double const sd = 0.5;
  Tensor3 mu({4, 1, 1});
  mu(0, 0, 0) = 2.0;
  mu(1, 0, 0) = -3.0;
  mu(2, 0, 0) = 2.5;
  mu(3, 0, 0) = 4.0;
  GaussianScore score(mu, sd);
  auto const sched = geometric_schedule(1000, 0.01, 1.0);
  NoiseSource noise(7);
  int const chains = 2000;
  std::array<double, 4> s{}, s2{};
  double const prior_sd = std::sqrt(sd * sd + 1.0);
  for (int c = 0; c < chains; ++c) {
    Tensor3 x = noise.normal(mu.shape(), prior_sd);
    for (auto &v : x.data()) { v = Cx{v.real(), 0.0}; }
    for (std::size_t n = 0; n < 4; ++n) { x.data()[n] += mu.data()[n]; }
    for (Index i = 999; i >= 0; --i) {
      auto z = noise.normal(x.shape());
      for (auto &v : z.data()) { v = Cx{v.real(), 0.0}; }
      x = predictor_step(x, score, sched, i, z);
    }
    for (std::size_t n = 0; n < 4; ++n) {
      s[n] += x.data()[n].real();
      s2[n] += std::pow(x.data()[n].real(), 2);
    }
  }
  double pooled_var = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    double const m = s[n] / chains;
    CHECK(std::abs(m - mu.data()[n].real()) <= 0.05 * std::abs(mu.data()[n].real()));
    pooled_var += (s2[n] / chains - m * m) / 4.0;
  }
  CHECK(std::abs(pooled_var - sd * sd) <= 0.05 * sd * sd);
}

TEST_CASE("corrector_step")
{
  auto const x = test::random_tensor({2, 2, 2}, 1);
  auto const z = test::random_tensor(x.shape(), 2);

  SUBCASE("zero score skips")
  {
    auto zs = zero_score();
    auto const r = corrector_step(x, zs, 0.5, 0.075, z);
    CHECK(r.skipped);
    CHECK(r.x == x);
  }
  SUBCASE("step size follows the SNR rule")
  {
    GaussianScore gs(test::random_tensor(x.shape(), 3), 0.4);
    auto const g = gs.score(x, 0.5);
    auto const a = corrector_step(x, gs, 0.5, 0.075, z);
    auto const b = corrector_step(x, gs, 0.5, 0.15, z);
    CHECK_FALSE(a.skipped);
    CHECK(a.step_size == doctest::Approx(2.0 * std::pow(0.075 * z.norm() / g.norm(), 2)).epsilon(1e-14));
    CHECK(b.step_size == doctest::Approx(4.0 * a.step_size).epsilon(1e-14));
    for (std::size_t n = 0; n < x.data().size(); ++n) {
      Cx const expect = x.data()[n] + a.step_size * g.data()[n] + std::sqrt(2 * a.step_size) * z.data()[n];
      CHECK(std::abs(a.x.data()[n] - expect) < 1e-14);
    }
    auto const again = corrector_step(x, gs, 0.5, 0.075, z);
    CHECK(again.x == a.x);
  }
  SUBCASE("argument checks")
  {
    auto zs = zero_score();
    CHECK_THROWS_AS(corrector_step(x, zs, 0.0, 0.075, z), ConfigError);
    CHECK_THROWS_AS(corrector_step(x, zs, 0.5, 0.0, z), ConfigError);
  }
}

TEST_CASE("corrector leaves the target distribution invariant")
{
  // The adaptive step depends on |g|, so exact invariance only holds as the
  // tensor grows; 256 complex entries keep the drift well under the bound.
  double const sd = 0.5;
  double const sigma = 0.2;
  double const var = sd * sd + sigma * sigma;
  Tensor3 const mu({8, 8, 4}, Cx{3.0, -1.0});
  GaussianScore score(mu, sd);
  NoiseSource noise(11);
  int const chains = 200;
  Cx s = 0.0;
  double s2 = 0.0;
  for (int c = 0; c < chains; ++c) {
    Tensor3 x = noise.normal(mu.shape(), std::sqrt(var));
    for (std::size_t n = 0; n < x.data().size(); ++n) { x.data()[n] += mu.data()[n]; }
    for (int step = 0; step < 500; ++step) { x = corrector_step(x, score, sigma, 0.075, noise.normal(x.shape())).x; }
    for (std::size_t n = 0; n < x.data().size(); ++n) {
      s += x.data()[n];
      s2 += std::norm(x.data()[n] - mu.data()[n]);
    }
  }
  double const n = static_cast<double>(chains) * 256.0;
  Cx const mean = s / n;
  double const v = s2 / (2.0 * n);
  CHECK(std::abs(mean - Cx{3.0, -1.0}) / std::abs(Cx{3.0, -1.0}) < 0.02);
  CHECK(std::abs(v - var) / var < 0.02);
}

TEST_CASE("score provider failures carry the noise level")
{
  LambdaScore bad([](Tensor3 const &x, double) {
    Tensor3 out(x.shape());
    out.data()[0] = Cx{std::nan(""), 0.0};
    return out;
  });
  auto const sched = geometric_schedule(4, 0.1, 1.0);
  Tensor3 const x({2, 1, 1});
  try {
    predictor_step(x, bad, sched, 2, x);
    FAIL("expected failure");
  } catch (NumericalError const &e) {
    CHECK(std::string(e.what()).find("sigma = 0.46") != std::string::npos);
  }
  LambdaScore wrong([](Tensor3 const &, double) { return Tensor3({1, 1, 1}); });
  CHECK_THROWS_AS(corrector_step(x, wrong, 0.5, 0.1, x), NumericalError);
}

TEST_CASE("NoiseSource is reproducible and splittable")
{
  NoiseSource a(5), b(5);
  CHECK(a.normal({3, 3, 3}) == b.normal({3, 3, 3}));
  auto s1 = NoiseSource(5).split(1);
  auto s2 = NoiseSource(5).split(2);
  auto s1b = NoiseSource(5).split(1);
  auto const t1 = s1.normal({4, 1, 1});
  CHECK(t1 == s1b.normal({4, 1, 1}));
  CHECK_FALSE(t1 == s2.normal({4, 1, 1}));
  auto const scaled = NoiseSource(9).normal({1000, 1, 1}, 3.0);
  double s = 0.0;
  for (auto const &v : scaled.data()) { s += std::norm(v); }
  CHECK(s / 2000.0 == doctest::Approx(9.0).epsilon(0.1));
}

TEST_CASE("batched corrector")
{
  GaussianScore gs(test::random_tensor({3, 2, 1}, 1), 0.4);
  auto const x = test::random_tensor({3, 2, 1}, 2);
  auto const z = test::random_tensor({3, 2, 1}, 3);

  auto const single = corrector_step(x, gs, 0.3, 0.075, z);
  auto const one = corrector_step_batch({x}, gs, 0.3, 0.075, {z});
  CHECK(one.step_size == single.step_size);
  CHECK(one.x[0] == single.x);

  // shared step from mean norms
  auto const x2 = test::random_tensor({3, 2, 1}, 4);
  auto const z2 = test::random_tensor({3, 2, 1}, 5);
  auto const two = corrector_step_batch({x, x2}, gs, 0.3, 0.075, {z, z2});
  double const ratio = 0.075 * (z.norm() + z2.norm()) / (gs.score(x, 0.3).norm() + gs.score(x2, 0.3).norm());
  CHECK(two.step_size == doctest::Approx(2 * ratio * ratio).epsilon(1e-14));
  CHECK(std::abs(two.x[1](0, 0, 0) - (x2(0, 0, 0) + two.step_size * gs.score(x2, 0.3)(0, 0, 0) +
                                       std::sqrt(2 * two.step_size) * z2(0, 0, 0))) < 1e-14);

  GaussianScore at_mean(x, 0.4);
  CHECK(corrector_step_batch({x, x}, at_mean, 0.3, 0.075, {z, z2}).skipped);
  CHECK_THROWS_AS(corrector_step_batch({x}, gs, 0.3, 0.075, {}), ConfigError);
  CHECK_THROWS_AS(corrector_step_batch({}, gs, 0.3, 0.075, {}), ConfigError);
}

TEST_CASE("per-chain step sizes are biased on tiny tensors, the shared step is not")
{
  double const sd = 0.5;
  double const sigma = 0.2;
  double const var = sd * sd + sigma * sigma;
  Tensor3 const mu({4, 1, 1}, Cx{1.0, 1.0});
  GaussianScore score(mu, sd);
  NoiseSource noise(12);
  std::size_t const chains = 2000;
  std::vector<Tensor3> shared;
  for (std::size_t c = 0; c < chains; ++c) {
    Tensor3 x = noise.normal(mu.shape(), std::sqrt(var));
    for (std::size_t n = 0; n < 4; ++n) { x.data()[n] += mu.data()[n]; }
    shared.push_back(std::move(x));
  }
  auto own = shared;
  for (int step = 0; step < 300; ++step) {
    std::vector<Tensor3> zs;
    for (std::size_t c = 0; c < chains; ++c) { zs.push_back(noise.normal(mu.shape())); }
    shared = corrector_step_batch(shared, score, sigma, 0.075, zs).x;
    for (std::size_t c = 0; c < chains; ++c) { own[c] = corrector_step(own[c], score, sigma, 0.075, zs[c]).x; }
  }
  auto spread = [&](std::vector<Tensor3> const &xs) {
    double s = 0.0;
    for (auto const &x : xs) {
      for (std::size_t n = 0; n < 4; ++n) { s += std::norm(x.data()[n] - mu.data()[n]); }
    }
    return s / (2.0 * 4.0 * static_cast<double>(xs.size()));
  };
  CHECK(std::abs(spread(shared) - var) / var < 0.05);
  CHECK(spread(own) > 1.2 * var);
}
