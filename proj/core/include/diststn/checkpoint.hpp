#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "diststn/model.hpp"
#include "diststn/tensor.hpp"

namespace diststn {

// Binary tensor archive:
//   "DSTN" | u32 version=1 | u32 count |
//   count x (u16 name_len | name | u8 ndim | ndim x u32 dims | f64 values) |
//   u32 CRC32 of all preceding bytes.
// All integers and floats little-endian.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

std::vector<std::uint8_t> encode_tensor_archive(const NamedTensors& tensors);
// Throws FormatError on bad magic, version, CRC, or truncation.
NamedTensors decode_tensor_archive(const std::vector<std::uint8_t>& bytes);

// Stores every parameter plus a "model.config" record (architecture and loss
// weights) so a checkpoint rebuilds the model on its own.
void save_checkpoint(const DistStnModel& model, const std::filesystem::path& path);
DistStnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace diststn
