#include "hrecon/fft.hpp"

#include "hrecon/error.hpp"
#include "hrecon/parallel.hpp"

#include <fftw3.h>
#include <fmt/format.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

namespace hrecon {

namespace {

// FFTW planning is not thread safe; execution with the new-array interface is.
class PlanCache
{
public:
  ~PlanCache()
  {
    for (auto &[key, plan] : plans_) { fftw_destroy_plan(plan); }
  }

  fftw_plan get(Index nx, Index ny, int sign)
  {
    std::lock_guard lock(mutex_);
    auto const key = std::make_tuple(nx, ny, sign);
    if (auto it = plans_.find(key); it != plans_.end()) { return it->second; }
    auto *scratch = fftw_alloc_complex(static_cast<std::size_t>(nx * ny));
    fftw_plan plan = fftw_plan_dft_2d(
      static_cast<int>(nx), static_cast<int>(ny), scratch, scratch, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) { throw NumericalError(fmt::format("FFTW could not plan a {}x{} transform", nx, ny)); }
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<Index, Index, int>, fftw_plan> plans_;
};

PlanCache &plans()
{
  static PlanCache cache;
  return cache;
}

// out[i] = in[(i + shift) mod n] along both axes.
void roll(Cx const *in, Cx *out, Index nx, Index ny, Index sx, Index sy)
{
  for (Index i = 0; i < nx; ++i) {
    Index const si = (i + sx) % nx;
    for (Index j = 0; j < ny; ++j) { out[i * ny + j] = in[si * ny + (j + sy) % ny]; }
  }
}

MultiCoilKSpace transform(MultiCoilKSpace const &x, int sign)
{
  if (!x.all_finite()) { throw DataError("FFT input contains NaN or Inf"); }
  Index const nx = x.nx();
  Index const ny = x.ny();
  fftw_plan plan = plans().get(nx, ny, sign);
  double const scale = 1.0 / std::sqrt(static_cast<double>(nx * ny));

  MultiCoilKSpace out(nx, ny, x.nc());
  parallel_for(x.nc(), [&](Index lo, Index hi) {
    std::vector<Cx> work(static_cast<std::size_t>(nx * ny));
    for (Index c = lo; c < hi; ++c) {
      // ifftshift, transform, fftshift
      roll(x.coil(c), work.data(), nx, ny, nx / 2, ny / 2);
      auto *buf = reinterpret_cast<fftw_complex *>(work.data());
      fftw_execute_dft(plan, buf, buf);
      roll(work.data(), out.coil(c), nx, ny, (nx + 1) / 2, (ny + 1) / 2);
      Cx *dst = out.coil(c);
      for (Index n = 0; n < nx * ny; ++n) { dst[n] *= scale; }
    }
  });
  return out;
}

} // namespace

MultiCoilKSpace fft2c(MultiCoilKSpace const &images) { return transform(images, FFTW_FORWARD); }

MultiCoilKSpace ifft2c(MultiCoilKSpace const &kspace) { return transform(kspace, FFTW_BACKWARD); }

MagnitudeImage sos_combine(MultiCoilKSpace const &coil_images)
{
  if (!coil_images.all_finite()) { throw DataError("coil images contain NaN or Inf"); }
  MagnitudeImage out(coil_images.nx(), coil_images.ny());
  for (Index i = 0; i < coil_images.nx(); ++i) {
    for (Index j = 0; j < coil_images.ny(); ++j) {
      double s = 0.0;
      for (Index c = 0; c < coil_images.nc(); ++c) { s += std::norm(coil_images(i, j, c)); }
      out(i, j) = std::sqrt(s);
    }
  }
  return out;
}

} // namespace hrecon
