#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sgl/gibbs_model.hpp"
#include "sgl/survival_field.hpp"

namespace sgl {

/// Range of survivor exponents -log2 mu(I_w)/j over w in S_j.
struct ValueRange {
  bool empty = true;
  double min_exp = 0.0;
  double max_exp = 0.0;
  std::size_t count = 0;
};

ValueRange survivor_value_range(const GibbsModel& model, const SurvivalField& field, int j);

struct BinSpec {
  double lo = 0.0;
  double hi = 1.0;
  int bins = 10;

  int index_of(double x) const;  // clamped to [0, bins)
  double center(int b) const { return lo + (hi - lo) * (b + 0.5) / bins; }
  double width() const { return (hi - lo) / bins; }
};

struct LevelHistogram {
  BinSpec spec;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  /// j (D_mu(center) - d(1-eta)) per bin, the log2 of the expected count
  /// (-inf where D_mu is -inf).
  std::vector<double> predicted_log2;
};

/// Survivor exponents binned; values outside the range land in the end bins.
LevelHistogram survivor_level_histogram(const GibbsModel& model, const SurvivalField& field, int j,
                                        const BinSpec& bins);

struct DecompositionHistogram {
  int root_length = 0;
  BinSpec root_bins, tail_bins;
  /// counts[r * tail_bins.bins + t].
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  /// Generation-root_length cylinders holding a survivor whose tail
  /// exponent is within tol of the target, over all such cylinders.
  double coverage = 0.0;
  std::uint64_t covered_cylinders = 0;
  std::uint64_t occupied_cylinders = 0;
};

/// Splits each depth-j survivor into its root (first floor(eta' j) letters)
/// and tail, and bins their exponents.
DecompositionHistogram decomposition_histogram(const GibbsModel& model, const SurvivalField& field, int j,
                                               double eta_prime, const BinSpec& root_bins,
                                               const BinSpec& tail_bins, double tail_target, double tol);

/// Fraction of generation-g cylinders that contain a depth-j survivor.
double cylinder_coverage(const SurvivalField& field, int j, int g);
/// Largest number of depth-j survivors inside one generation-g cylinder.
std::uint64_t max_cylinder_multiplicity(const SurvivalField& field, int j, int g);

/// `depth,index,log2_mu` (d = 1) or `depth,index_0,...,index_{d-1},log2_mu`,
/// with one integer cube coordinate per axis.
void write_survivor_csv(const GibbsModel& model, const SurvivalField& field, int j,
                        const std::filesystem::path& path);

}  // namespace sgl
