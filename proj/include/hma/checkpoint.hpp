#pragma once

#include <string>

#include "hma/params.hpp"

namespace hma {

/// Checkpoint layout: the magic string "HMA1", then one record per
/// parameter in registration order — u32 name length, name bytes, u32 rank,
/// u64 dims, raw little-endian 64-bit floats. Loading rejects unknown magic
/// and truncated payloads, and demands that names and shapes match the
/// receiving model exactly.
void save_checkpoint(const std::string& path, const ModelParams& params);
void load_checkpoint(const std::string& path, ModelParams& params);

}  // namespace hma
