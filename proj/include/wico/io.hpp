#pragma once

#include <string>
#include <vector>

#include "wico/tensor.hpp"

namespace wico {

// Binary tensor container:
//   magic "WICO" | u32 version=1 | u32 dtype (1=f32, 2=f64) | u32 ndim |
//   ndim x u32 dims | row-major little-endian payload.
// Round-trips are bit-exact for both dtypes.
void write_tensor(const std::string& path, const Tensor& t);
Tensor read_tensor(const std::string& path);

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);

// RFC-4180-style CSV with a mandatory header row. Floats are printed with
// round-trip precision so output bytes are stable.
std::string csv_format(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);
std::string csv_number(double v);

// 8-bit binary graymap (P5). Values min-max normalized per image; a constant
// map renders mid-gray 128.
void write_heatmap_pgm(const std::string& path, const Tensor& map2d);

void write_text_file(const std::string& path, const std::string& content);
std::string read_file_bytes(const std::string& path);

}  // namespace wico
