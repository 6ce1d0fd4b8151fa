#pragma once

#include <filesystem>
#include <string>

#include "sgl/capacity_grid.hpp"

namespace sgl {

/// Binary layout, all little-endian:
///   "SGLGRID\0", u32 version, u32 d, u32 J, u32 truncation_depth,
///   u64 seed, u32 backend (0 hash, 1 index), f64 eta,
///   64 bytes model hash (hex), u64 cell count, f64 values[count],
///   u64 n_incomplete, u64 cells[n], u64 n_unresolved, u64 cells[n].
/// -inf is written with its IEEE bit pattern.
void save_grid(const CapacityGrid& grid, const std::filesystem::path& path);
/// Loads values and provenance; `own` and witnesses are not stored.
CapacityGrid load_grid(const std::filesystem::path& path);

/// `cell_index,log2_value,witness_depth` (witness depth -1 when unknown).
void export_grid_csv(const CapacityGrid& grid, const std::filesystem::path& path);

}  // namespace sgl
