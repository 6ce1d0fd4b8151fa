#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "sgl/dyadic_word.hpp"
#include "sgl/gibbs_model.hpp"
#include "sgl/survival_field.hpp"

namespace sgl {

/// Survival queries needed by pair searches: membership of arbitrary words
/// and the ordered survivor list of a whole level.
class SurvivalQuery {
 public:
  virtual ~SurvivalQuery() = default;
  virtual int dim() const = 0;
  virtual int max_depth() const = 0;
  virtual bool survives(int depth, std::uint64_t index) const = 0;
  /// Sorted survivors at `depth`.
  virtual const std::vector<std::uint64_t>& level(int depth) const = 0;
};

/// Hash-backed queries; each level is scanned once and kept.
class HashQuery : public SurvivalQuery {
 public:
  explicit HashQuery(const SurvivalField& field);
  int dim() const override { return field_.dim(); }
  int max_depth() const override { return field_.config().max_depth; }
  bool survives(int depth, std::uint64_t index) const override { return field_.survives_packed(depth, index); }
  const std::vector<std::uint64_t>& level(int depth) const override;

 private:
  const SurvivalField& field_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<std::vector<std::uint64_t>>> levels_;
};

struct ReconPiece {
  DyadicWord part;
  int w_depth = 0;
  std::uint64_t w_index = 0;
};

struct ReconResult {
  DyadicWord target;
  bool found = false;
  /// Number of concatenated pieces (1 for a direct pair).
  int k = 0;
  std::vector<ReconPiece> pieces;
  double mu_estimate_log2 = 0.0;
  double error_bound_log2 = 0.0;
  int search_depth_used = 0;
};

/// First w (by depth, then index) with w and wu both surviving, |w| <= J_max.
ReconResult find_pair(const SurvivalQuery& query, const DyadicWord& u, int J_max);
ReconResult find_pair(const SurvivalField& field, const DyadicWord& u, int J_max);

/// Direct pair first, else the fewest-piece split of u (at most k_max
/// pieces) whose every piece has a surviving pair.  The estimate is
/// sum_i log2 mu(w_i u_i) - log2 mu(w_i), within max(k+1, 2k-1) log2 C of
/// log2 mu(u).
ReconResult reconstruct(const GibbsModel& model, const SurvivalQuery& query, const DyadicWord& u, int J_max,
                        int k_max = 4);
ReconResult reconstruct(const GibbsModel& model, const SurvivalField& field, const DyadicWord& u, int J_max,
                        int k_max = 4);

/// Number of w with 1 <= |w| <= J_max such that w and wu survive.
std::uint64_t count_pairs(const SurvivalQuery& query, const DyadicWord& u, int J_max);

/// 2^{-d l (1-eta)} sum_{j=1}^{J_max} 2^{d j (2 eta - 1)}.
double expected_pairs(int dim, double eta, int word_len, int J_max);

struct FractionRow {
  double eta;
  std::uint64_t seed;
  int word_len;
  double fraction;
  double expected_pairs;
};

struct FractionTable {
  std::vector<FractionRow> rows;
  std::vector<double> etas;
  std::vector<double> mean_fraction;
  /// Linear interpolation of the first upward crossing of 1/2; NaN if none.
  double crossing_eta() const;
};

/// Fraction of all length-word_len words that have a surviving pair within
/// depth J_max, for every (eta, seed).
FractionTable fraction_experiment(int dim, const std::vector<double>& eta_grid, int word_len, int J_max,
                                  const std::vector<std::uint64_t>& seeds, int threads = 1);

}  // namespace sgl
