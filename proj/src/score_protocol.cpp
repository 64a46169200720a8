#include "hrecon/score_protocol.hpp"

#include "hrecon/error.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <limits>

namespace hrecon::protocol {

namespace {

constexpr std::uint32_t kMaxFrame = 1u << 31;

void put(std::vector<std::uint8_t> &out, void const *p, std::size_t n)
{
  std::size_t const at = out.size();
  out.resize(at + n);
  std::memcpy(out.data() + at, p, n);
}

void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) { put(out, &v, 4); }

std::vector<std::uint8_t> frame(std::uint8_t type, std::vector<std::uint8_t> const &body)
{
  std::uint64_t const length = body.size() + 1;
  if (length > kMaxFrame) { throw ConfigError(fmt::format("frame of {} bytes exceeds the protocol limit", length)); }
  std::vector<std::uint8_t> out;
  out.reserve(length + 4);
  put_u32(out, static_cast<std::uint32_t>(length));
  out.push_back(type);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

void put_tensor(std::vector<std::uint8_t> &out, Tensor3 const &t)
{
  for (int n = 0; n < 3; ++n) {
    if (t.dim(n) < 0 || t.dim(n) > std::numeric_limits<std::uint32_t>::max()) {
      throw ConfigError(fmt::format("tensor dimension {} does not fit the frame header", t.dim(n)));
    }
    put_u32(out, static_cast<std::uint32_t>(t.dim(n)));
  }
  for (auto const &v : t.data()) {
    float const re = static_cast<float>(v.real());
    float const im = static_cast<float>(v.imag());
    put(out, &re, 4);
    put(out, &im, 4);
  }
}

class Cursor
{
public:
  explicit Cursor(std::span<std::uint8_t const> b)
    : bytes_{b}
  {
  }

  template <typename T>
  T take(char const *field)
  {
    if (bytes_.size() - pos_ < sizeof(T)) {
      throw FormatError(FormatError::Kind::Truncated, fmt::format("frame truncated while reading {}", field));
    }
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  Tensor3 tensor()
  {
    std::uint64_t const d0 = take<std::uint32_t>("d0");
    std::uint64_t const d1 = take<std::uint32_t>("d1");
    std::uint64_t const d2 = take<std::uint32_t>("d2");
    std::uint64_t const expected = d0 * d1 * d2 * 8;
    if (d0 * d1 > kMaxFrame || expected > kMaxFrame || remaining() != expected) {
      throw FormatError(
        FormatError::Kind::Truncated,
        fmt::format("tensor {}x{}x{} needs {} payload bytes, frame carries {}", d0, d1, d2, expected, remaining()));
    }
    Tensor3 t({static_cast<Index>(d0), static_cast<Index>(d1), static_cast<Index>(d2)});
    for (auto &v : t.data()) {
      float const re = take<float>("payload");
      float const im = take<float>("payload");
      v = Cx{re, im};
    }
    return t;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::span<std::uint8_t const> rest() const { return bytes_.subspan(pos_); }

private:
  std::span<std::uint8_t const> bytes_;
  std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_request(Tensor3 const &x, double sigma)
{
  std::vector<std::uint8_t> body;
  body.reserve(20 + 8 * x.data().size());
  put(body, &sigma, 8);
  put_tensor(body, x);
  return frame(kRequest, body);
}

std::vector<std::uint8_t> encode_response(Tensor3 const &score)
{
  std::vector<std::uint8_t> body;
  body.reserve(12 + 8 * score.data().size());
  put_tensor(body, score);
  return frame(kResponse, body);
}

std::vector<std::uint8_t> encode_error(std::string const &message)
{
  return frame(kError, std::vector<std::uint8_t>(message.begin(), message.end()));
}

Message decode_body(std::span<std::uint8_t const> body)
{
  Cursor cur(body);
  auto const type = cur.take<std::uint8_t>("type");
  switch (type) {
  case kRequest: {
    Request r;
    r.sigma = cur.take<double>("sigma");
    r.tensor = cur.tensor();
    return r;
  }
  case kResponse:
    return Response{cur.tensor()};
  case kError: {
    auto const rest = cur.rest();
    return ErrorFrame{std::string(rest.begin(), rest.end())};
  }
  default:
    throw FormatError(FormatError::Kind::BadMagic, fmt::format("unknown frame type 0x{:02X}", type));
  }
}

namespace {

// Returns bytes read; stops early only at end of stream.
std::size_t read_exact(int fd, std::uint8_t *dst, std::size_t n)
{
  std::size_t got = 0;
  while (got < n) {
    ssize_t const r = ::read(fd, dst + got, n - got);
    if (r == 0) { break; }
    if (r < 0) {
      if (errno == EINTR) { continue; }
      throw NumericalError(fmt::format("read from score process failed: {}", std::strerror(errno)));
    }
    got += static_cast<std::size_t>(r);
  }
  return got;
}

} // namespace

bool read_frame(int fd, std::vector<std::uint8_t> &body)
{
  std::uint32_t length = 0;
  std::size_t const head = read_exact(fd, reinterpret_cast<std::uint8_t *>(&length), 4);
  if (head == 0) { return false; }
  if (head < 4) { throw FormatError(FormatError::Kind::Truncated, "stream ended inside a frame length"); }
  if (length == 0 || length > kMaxFrame) {
    throw FormatError(FormatError::Kind::BadValue, fmt::format("frame length {} is out of range", length));
  }
  body.resize(length);
  std::size_t const got = read_exact(fd, body.data(), length);
  if (got != length) {
    throw FormatError(FormatError::Kind::Truncated, fmt::format("frame announced {} bytes, stream ended after {}", length, got));
  }
  return true;
}

void write_all(int fd, std::span<std::uint8_t const> bytes)
{
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    ssize_t const w = ::write(fd, bytes.data() + sent, bytes.size() - sent);
    if (w < 0) {
      if (errno == EINTR) { continue; }
      throw NumericalError(fmt::format("write to score process failed: {}", std::strerror(errno)));
    }
    sent += static_cast<std::size_t>(w);
  }
}

} // namespace hrecon::protocol
