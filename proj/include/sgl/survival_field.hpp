#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sgl/dyadic_word.hpp"

namespace sgl {

enum class Backend { Hash, Index };

std::string to_string(Backend b);
Backend parse_backend(const std::string& text);

struct FieldConfig {
  std::uint64_t seed = 0;
  double eta = 0.5;
  int dim = 1;
  Backend backend = Backend::Hash;
  int max_depth = 32;
  /// HashField scans refuse to visit more candidates than this.
  std::uint64_t scan_cap = std::uint64_t{1} << 32;
};

/// splitmix64 finalizer; also used to derive per-depth keys and streams.
std::uint64_t splitmix64(std::uint64_t x);

/// Seeded survival indicators p_w with P(p_w = 1) = 2^{-d(1-eta)|w|}.
///
/// Hash backend: p_w = [hash(seed, |w|, w) < threshold(|w|)], a pure
/// function of the word.  Index backend: the whole depth-j survivor set is
/// drawn from a stream seeded by (seed, j) as a Binomial count of uniformly
/// placed distinct indices.  Both give independent Bernoulli indicators.
///
/// Words are handled in packed form, so d * max_depth must not exceed 64.
class SurvivalField {
 public:
  explicit SurvivalField(FieldConfig cfg);

  const FieldConfig& config() const { return cfg_; }
  int dim() const { return cfg_.dim; }
  double eta() const { return cfg_.eta; }
  Backend backend() const { return cfg_.backend; }

  /// 2^{-d(1-eta) j}.
  double survival_probability(int j) const;
  /// Hash threshold at depth j; survival iff hash < threshold (or always
  /// when j = 0).
  std::uint64_t threshold(int j) const { return thresholds_.at(static_cast<std::size_t>(j)); }
  /// True when 2^{-d(1-eta) j} is below 2^{-64}: nothing survives there.
  bool level_empty(int j) const { return empty_.at(static_cast<std::size_t>(j)); }

  /// The keyed hash used by the Hash backend.
  std::uint64_t hash(int depth, std::uint64_t index) const;

  bool survives(const DyadicWord& w) const;
  bool survives_packed(int depth, std::uint64_t index) const;

  /// Sorted packed survivors at depth j below a packed prefix.
  std::vector<std::uint64_t> survivors_packed(int j, int prefix_depth = 0,
                                              std::uint64_t prefix = 0) const;
  std::vector<DyadicWord> survivors_at(int j, const DyadicWord& prefix) const;

  /// Survivors at depth j with packed index in [lo, lo + count), by Hash
  /// scan.  Appends to `out` in increasing order; ignores the scan cap.
  void scan_range(int j, std::uint64_t lo, std::uint64_t count, std::vector<std::uint64_t>& out) const;

  /// All survivors at depth j without touching the cache (Index backend
  /// redraws the level; Hash backend scans it subject to the cap).
  std::vector<std::uint64_t> draw_level(int j) const;

  static std::string mixer_name();

 private:
  void check_depth(int j) const;
  std::shared_ptr<const std::vector<std::uint64_t>> cached_level(int j) const;

  FieldConfig cfg_;
  std::vector<std::uint64_t> thresholds_;
  std::vector<bool> empty_;
  mutable std::mutex mutex_;
  mutable std::vector<std::shared_ptr<const std::vector<std::uint64_t>>> levels_;
};

}  // namespace sgl
