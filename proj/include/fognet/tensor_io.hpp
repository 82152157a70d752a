#pragma once

#include <filesystem>

#include "fognet/tensor.hpp"

namespace fognet {

/// Binary tensor file, format "FVT1":
///   magic "FVT1" (4 bytes), u32 little-endian ndim, ndim x u32 dims,
///   then row-major 32-bit little-endian floats.
/// Storage precision is 32-bit; in-memory compute stays 64-bit.
void write_fvt(const std::filesystem::path& path, const Tensor& t);
Tensor read_fvt(const std::filesystem::path& path);

} // namespace fognet
