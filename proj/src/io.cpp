#include "hrecon/io.hpp"

#include "hrecon/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string_view>

namespace hrecon::io {

namespace {

static_assert(std::endian::native == std::endian::little, "file I/O assumes a little-endian host");

constexpr std::string_view kCksMagic = "CKS1";
constexpr std::string_view kMskMagic = "MSK1";
// Anything above this is treated as a corrupt header rather than a request
// to allocate.
constexpr std::uint64_t kMaxSamples = std::uint64_t{1} << 34;

class Writer
{
public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
  void raw(void const *p, std::size_t n)
  {
    auto const *b = static_cast<std::uint8_t const *>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader
{
public:
  Reader(std::span<std::uint8_t const> bytes, char const *what)
    : bytes_{bytes}
    , what_{what}
  {
  }

  void magic(std::string_view expected)
  {
    if (bytes_.size() < expected.size() ||
        !std::equal(expected.begin(), expected.end(), bytes_.begin())) {
      std::string found;
      for (std::size_t n = 0; n < std::min(bytes_.size(), expected.size()); ++n) {
        auto const ch = static_cast<char>(bytes_[n]);
        found += (ch >= 32 && ch < 127) ? ch : '?';
      }
      throw FormatError(
        FormatError::Kind::BadMagic, fmt::format("{}: bad magic \"{}\", expected \"{}\"", what_, found, expected));
    }
    pos_ += expected.size();
  }

  void require(std::uint64_t n, std::uint64_t total_expected) const
  {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(
        FormatError::Kind::Truncated,
        fmt::format("{}: truncated, expected {} bytes but stream has {}", what_, total_expected, bytes_.size()));
    }
  }

  std::uint32_t u32()
  {
    require(4, pos_ + 4);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  float f32()
  {
    float v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::uint8_t u8() { return bytes_[pos_++]; }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

  void finish() const
  {
    if (pos_ != bytes_.size()) {
      throw FormatError(
        FormatError::Kind::TrailingBytes,
        fmt::format("{}: {} unexpected trailing bytes after payload", what_, bytes_.size() - pos_));
    }
  }

private:
  std::span<std::uint8_t const> bytes_;
  char const *what_;
  std::size_t pos_ = 0;
};

std::uint32_t narrow_dim(Index v, char const *name)
{
  if (v <= 0 || v > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError(FormatError::Kind::DimensionOverflow, fmt::format("{} = {} does not fit the header", name, v));
  }
  return static_cast<std::uint32_t>(v);
}

} // namespace

std::vector<std::uint8_t> serialize(MultiCoilKSpace const &k)
{
  Writer w;
  w.magic(kCksMagic);
  w.u32(narrow_dim(k.nx(), "nx"));
  w.u32(narrow_dim(k.ny(), "ny"));
  w.u32(narrow_dim(k.nc(), "nc"));
  for (auto const &v : k.data()) {
    w.f32(static_cast<float>(v.real()));
    w.f32(static_cast<float>(v.imag()));
  }
  return w.take();
}

MultiCoilKSpace deserialize_kspace(std::span<std::uint8_t const> bytes)
{
  Reader r(bytes, "CKS");
  r.magic(kCksMagic);
  std::uint64_t const nx = r.u32();
  std::uint64_t const ny = r.u32();
  std::uint64_t const nc = r.u32();
  if (nx == 0 || ny == 0 || nc == 0) {
    throw FormatError(FormatError::Kind::BadValue, fmt::format("CKS: zero dimension in header {}x{}x{}", nx, ny, nc));
  }
  std::uint64_t const plane = nx * ny; // both < 2^32, cannot wrap
  if (plane > kMaxSamples || nc > kMaxSamples / plane) {
    throw FormatError(
      FormatError::Kind::DimensionOverflow, fmt::format("CKS: header dimensions {}x{}x{} overflow", nx, ny, nc));
  }
  std::uint64_t const samples = plane * nc;
  std::uint64_t const payload = samples * 8;
  r.require(payload, r.pos() + payload);

  std::vector<Cx> data(samples);
  for (auto &v : data) {
    float const re = r.f32();
    float const im = r.f32();
    v = Cx{re, im};
  }
  r.finish();
  return MultiCoilKSpace(static_cast<Index>(nx), static_cast<Index>(ny), static_cast<Index>(nc), std::move(data));
}

std::vector<std::uint8_t> serialize(SamplingMask const &mask)
{
  Writer w;
  w.magic(kMskMagic);
  w.u32(narrow_dim(mask.nx(), "nx"));
  w.u32(narrow_dim(mask.ny(), "ny"));
  for (auto b : mask.bits()) { w.u8(b); }
  auto const &acs = mask.acs();
  w.u32(static_cast<std::uint32_t>(acs.row0));
  w.u32(static_cast<std::uint32_t>(acs.rows));
  w.u32(static_cast<std::uint32_t>(acs.col0));
  w.u32(static_cast<std::uint32_t>(acs.cols));
  return w.take();
}

SamplingMask deserialize_mask(std::span<std::uint8_t const> bytes)
{
  Reader r(bytes, "MSK");
  r.magic(kMskMagic);
  std::uint64_t const nx = r.u32();
  std::uint64_t const ny = r.u32();
  if (nx == 0 || ny == 0) {
    throw FormatError(FormatError::Kind::BadValue, fmt::format("MSK: zero dimension in header {}x{}", nx, ny));
  }
  if (nx * ny > kMaxSamples) {
    throw FormatError(FormatError::Kind::DimensionOverflow, fmt::format("MSK: header dimensions {}x{} overflow", nx, ny));
  }
  std::uint64_t const remaining = nx * ny + 16;
  r.require(remaining, r.pos() + remaining);
  std::vector<std::uint8_t> bits(nx * ny);
  for (auto &b : bits) {
    b = r.u8();
    if (b > 1) { throw FormatError(FormatError::Kind::BadValue, fmt::format("MSK: mask byte {} is not 0 or 1", int(b))); }
  }
  IndexRect acs;
  acs.row0 = r.u32();
  acs.rows = r.u32();
  acs.col0 = r.u32();
  acs.cols = r.u32();
  r.finish();
  return SamplingMask(static_cast<Index>(nx), static_cast<Index>(ny), std::move(bits), acs);
}

MultiCoilKSpace image_to_kspace_layout(MagnitudeImage const &image)
{
  MultiCoilKSpace k(image.nx(), image.ny(), 1);
  for (Index i = 0; i < image.nx(); ++i) {
    for (Index j = 0; j < image.ny(); ++j) { k(i, j, 0) = Cx{image(i, j), 0.0}; }
  }
  return k;
}

MagnitudeImage kspace_layout_to_image(MultiCoilKSpace const &k)
{
  MagnitudeImage img(k.nx(), k.ny());
  for (Index i = 0; i < k.nx(); ++i) {
    for (Index j = 0; j < k.ny(); ++j) {
      double s = 0.0;
      for (Index c = 0; c < k.nc(); ++c) { s += std::norm(k(i, j, c)); }
      img(i, j) = std::sqrt(s);
    }
  }
  return img;
}

std::vector<std::uint8_t> to_pgm(MagnitudeImage const &image)
{
  std::string const header = fmt::format("P5\n{} {}\n255\n", image.ny(), image.nx());
  std::vector<std::uint8_t> out(header.begin(), header.end());
  double const peak = image.max();
  for (double p : image.pixels()) {
    double const v = peak > 0.0 ? std::clamp(p / peak, 0.0, 1.0) : 0.0;
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> read_file(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw DataError(fmt::format("cannot open {} for reading", path.string())); }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(std::filesystem::path const &path, std::span<std::uint8_t const> bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw DataError(fmt::format("cannot open {} for writing", path.string())); }
  out.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) { throw DataError(fmt::format("short write to {}", path.string())); }
}

MultiCoilKSpace read_kspace(std::filesystem::path const &path)
{
  auto const bytes = read_file(path);
  try {
    return deserialize_kspace(bytes);
  } catch (FormatError const &e) {
    throw FormatError(e.kind(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_kspace(std::filesystem::path const &path, MultiCoilKSpace const &k) { write_file(path, serialize(k)); }

SamplingMask read_mask(std::filesystem::path const &path)
{
  auto const bytes = read_file(path);
  try {
    return deserialize_mask(bytes);
  } catch (FormatError const &e) {
    throw FormatError(e.kind(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_mask(std::filesystem::path const &path, SamplingMask const &mask) { write_file(path, serialize(mask)); }

} // namespace hrecon::io
