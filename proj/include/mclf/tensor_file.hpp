#pragma once

#include <filesystem>
#include <string>

#include "mclf/tensor.hpp"

namespace mclf {

// Fixture format: "MCLT", u32 rank, rank x u32 dims, then little-endian
// float64 values in row-major order.
std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::string& bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace mclf
