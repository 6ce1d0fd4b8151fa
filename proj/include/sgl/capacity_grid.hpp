#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgl/errors.hpp"
#include "sgl/gibbs_model.hpp"
#include "sgl/survival_field.hpp"

namespace sgl {

/// Largest supported d*J (one double per cell, plus the own-cube layer).
inline constexpr int kMaxGridBits = 26;

struct GridOptions {
  double trunc_factor = 1.0;
  /// Overrides ceil(J/eta) + ceil(trunc_factor * log2 J) when set.
  std::optional<int> truncation_depth;
  /// Extra levels explored below the truncation for cells left empty.
  int deepen_levels = 4;
  int threads = 1;
  bool keep_witnesses = true;
  /// Refuse Index levels whose expected survivor count exceeds this.
  double max_level_survivors = 268435456.0;
};

struct Witness {
  int depth = -1;
  std::uint64_t index = 0;
  bool valid() const { return depth >= 0; }
};

struct GridProvenance {
  std::string model_hash;
  FieldConfig field;
  GridOptions options;
};

/// log2 of the neighbor-aware sampled capacity for every cell W of depth J.
///
/// Cells are indexed by their packed word.  `own[W]` is the largest
/// log2 mu(I_w) over surviving w below W with |w| in [J, truncation_depth]
/// (deeper where a neighborhood was empty), and `values[W]` is the maximum
/// of `own` over W and its neighbors.  -inf marks "no survivor found".
struct CapacityGrid {
  int J = 0;
  int dim = 1;
  int truncation_depth = 0;
  std::vector<double> values;
  std::vector<double> own;
  /// Present when built with keep_witnesses.
  std::vector<Witness> own_witness;
  /// Cells whose neighborhood held no survivor down to the truncation.
  std::vector<std::uint64_t> incomplete_cells;
  /// Incomplete cells that stayed empty after deepening.
  std::vector<std::uint64_t> unresolved_cells;
  GridProvenance provenance;

  std::size_t cells() const { return values.size(); }
  std::size_t finite_cells() const;
  /// The neighbor (or the cell itself) whose own value attains values[W].
  std::optional<std::uint64_t> argmax_neighbor(std::uint64_t cell) const;
  /// A surviving word realizing values[W]; invalid for -inf cells.
  Witness witness(std::uint64_t cell) const;
};

/// Thrown when a work cap stops the build; carries the levels already done.
class GridResourceError : public ResourceError {
 public:
  GridResourceError(const std::string& what, int completed_through_depth, std::size_t finite_cells)
      : ResourceError(what), completed_through_depth(completed_through_depth), finite_cells(finite_cells) {}
  int completed_through_depth;
  std::size_t finite_cells;
};

int default_truncation_depth(int J, double eta, double trunc_factor);

CapacityGrid build_capacity_grid(const GibbsModel& model, const SurvivalField& field, int J,
                                 const GridOptions& options = {});

/// Recomputes values from `own` (maximum over each cell's neighborhood).
void apply_neighbor_max(CapacityGrid& grid, int threads = 1);

}  // namespace sgl
