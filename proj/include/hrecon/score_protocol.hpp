#pragma once

#include "hrecon/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

// Length-prefixed binary frames exchanged with an external score process over
// its standard streams. All fields little endian.
//
//   u32 length      bytes that follow this field
//   u8  type        0x01 request, 0x02 response, 0xFF error
//   request:  f64 sigma, u32 d0, d1, d2, 2*d0*d1*d2 float32 (re, im interleaved)
//   response: u32 d0, d1, d2, 2*d0*d1*d2 float32
//   error:    UTF-8 message
//
// Tensor elements are sent in column-major order (d0 fastest).
namespace hrecon::protocol {

inline constexpr std::uint8_t kRequest = 0x01;
inline constexpr std::uint8_t kResponse = 0x02;
inline constexpr std::uint8_t kError = 0xFF;

struct Request
{
  double sigma = 0.0;
  Tensor3 tensor;
};

struct Response
{
  Tensor3 tensor;
};

struct ErrorFrame
{
  std::string message;
};

using Message = std::variant<Request, Response, ErrorFrame>;

std::vector<std::uint8_t> encode_request(Tensor3 const &x, double sigma);
std::vector<std::uint8_t> encode_response(Tensor3 const &score);
std::vector<std::uint8_t> encode_error(std::string const &message);

// Decodes the body of a frame (everything after the length prefix).
// Throws FormatError on malformed bodies.
Message decode_body(std::span<std::uint8_t const> body);

// Blocking frame I/O on file descriptors. read_frame returns false on a clean
// end of stream before any byte of a new frame.
bool read_frame(int fd, std::vector<std::uint8_t> &body);
void write_all(int fd, std::span<std::uint8_t const> bytes);

} // namespace hrecon::protocol
