#pragma once

#include "hrecon/kspace.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hrecon::io {

// CKS: "CKS1", u32 nx, ny, nc, then complex float32 pairs, all little endian.
// Samples are narrowed to float32 on write.
std::vector<std::uint8_t> serialize(MultiCoilKSpace const &k);
MultiCoilKSpace deserialize_kspace(std::span<std::uint8_t const> bytes);

// MSK: "MSK1", u32 nx, ny, nx*ny bytes of 0/1, u32 acs_row0, acs_rows, acs_col0, acs_cols.
std::vector<std::uint8_t> serialize(SamplingMask const &mask);
SamplingMask deserialize_mask(std::span<std::uint8_t const> bytes);

// Single-coil CKS holding the image as real samples.
MultiCoilKSpace image_to_kspace_layout(MagnitudeImage const &image);
MagnitudeImage kspace_layout_to_image(MultiCoilKSpace const &k);

// 8-bit binary PGM scaled to the image maximum.
std::vector<std::uint8_t> to_pgm(MagnitudeImage const &image);

std::vector<std::uint8_t> read_file(std::filesystem::path const &path);
void write_file(std::filesystem::path const &path, std::span<std::uint8_t const> bytes);

MultiCoilKSpace read_kspace(std::filesystem::path const &path);
void write_kspace(std::filesystem::path const &path, MultiCoilKSpace const &k);
SamplingMask read_mask(std::filesystem::path const &path);
void write_mask(std::filesystem::path const &path, SamplingMask const &mask);

} // namespace hrecon::io
