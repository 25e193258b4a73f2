#pragma once

#include <filesystem>

#include "mcdc/model.hpp"

namespace mcdc {

// Checkpoint container: ASCII magic "MCDC", format version u16 LE, then
// per-tensor records of
//   name_len u32 | name bytes | dtype u8 (1=f32, 2=f64) | rank u32 |
//   extents u32 each | raw row-major little-endian data.
// The architecture spec is serialized as a leading "__spec__" record
// (nine f64 values), so a checkpoint is self-describing.
void save_checkpoint(const ModelParams& m, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

inline constexpr uint16_t kCheckpointVersion = 1;

} // namespace mcdc
