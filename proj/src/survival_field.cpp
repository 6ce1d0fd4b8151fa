#include "sgl/survival_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sgl/errors.hpp"
#include "sgl/log.hpp"

namespace sgl {

std::string to_string(Backend b) { return b == Backend::Hash ? "hash" : "index"; }

Backend parse_backend(const std::string& text) {
  if (text == "hash") return Backend::Hash;
  if (text == "index") return Backend::Index;
  throw InvalidInput("unknown backend '" + text + "' (expected hash or index)");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

namespace {

constexpr std::uint64_t kDepthKey = 0xD1B54A32D192ED03ull;
constexpr std::uint64_t kStreamKey = 0x8CB92BA72F3D8DD7ull;
constexpr std::uint64_t kDenseSpace = std::uint64_t{1} << 20;

std::uint64_t level_key(std::uint64_t seed, int depth) {
  return splitmix64(seed + static_cast<std::uint64_t>(depth) * kDepthKey);
}

// `count` distinct uniform values from [0, 2^bits), sorted.
std::vector<std::uint64_t> sample_distinct(std::mt19937_64& rng, std::uint64_t count, int bits) {
  if (count == 0) return {};
  const std::uint64_t top = bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  if (bits < 64 && (std::uint64_t{1} << bits) <= kDenseSpace) {
    // Partial Fisher-Yates over the explicit index set.
    const std::uint64_t space = std::uint64_t{1} << bits;
    std::vector<std::uint64_t> all(space);
    std::iota(all.begin(), all.end(), 0);
    for (std::uint64_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::uint64_t> pick(i, space - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
  }
  std::uniform_int_distribution<std::uint64_t> uni(0, top);
  std::vector<std::uint64_t> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::size_t before = out.size();
    for (std::uint64_t k = before; k < count; ++k) out.push_back(uni(rng));
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(before), out.end());
    std::inplace_merge(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(before), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

}  // namespace

SurvivalField::SurvivalField(FieldConfig cfg) : cfg_(cfg) {
  if (cfg_.dim < 1 || cfg_.dim > kMaxDimension) throw InvalidInput("field dimension out of range");
  if (!(cfg_.eta > 0.0 && cfg_.eta < 1.0)) throw InvalidInput("eta must lie in (0, 1)");
  if (cfg_.max_depth < 1) throw InvalidInput("max_depth must be positive");
  if (cfg_.dim * cfg_.max_depth > 64) {
    throw InvalidInput("d * max_depth must not exceed 64 (words are packed into 64 bits)");
  }
  const auto n = static_cast<std::size_t>(cfg_.max_depth) + 1;
  thresholds_.resize(n);
  empty_.assign(n, false);
  levels_.resize(n);
  bool warned = false;
  for (std::size_t j = 0; j < n; ++j) {
    const long double e = static_cast<long double>(cfg_.dim) * (1.0L - cfg_.eta) * j;
    if (e == 0.0L) {
      thresholds_[j] = ~std::uint64_t{0};
      continue;
    }
    const long double t = std::exp2l(64.0L - e);
    if (e >= 64.0L) {
      empty_[j] = true;
      thresholds_[j] = 0;
      if (!warned) {
        warn("survival probability below 2^-64 from depth " + std::to_string(j) + "; treating those levels as empty");
        warned = true;
      }
    } else if (t >= 18446744073709551615.0L) {
      thresholds_[j] = ~std::uint64_t{0};
    } else {
      thresholds_[j] = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(t + 0.5L));
    }
  }
}

double SurvivalField::survival_probability(int j) const {
  return std::exp2(-cfg_.dim * (1.0 - cfg_.eta) * j);
}

void SurvivalField::check_depth(int j) const {
  if (j < 0 || j > cfg_.max_depth) {
    throw InvalidInput("depth " + std::to_string(j) + " outside [0, " + std::to_string(cfg_.max_depth) + "]");
  }
}

std::uint64_t SurvivalField::hash(int depth, std::uint64_t index) const {
  return splitmix64(level_key(cfg_.seed, depth) ^ splitmix64(index));
}

std::string SurvivalField::mixer_name() { return "splitmix64(key(seed,depth) ^ splitmix64(index))"; }

bool SurvivalField::survives_packed(int depth, std::uint64_t index) const {
  check_depth(depth);
  if (depth == 0) return true;
  if (empty_[depth]) return false;
  if (cfg_.backend == Backend::Hash) return hash(depth, index) < thresholds_[depth];
  const auto level = cached_level(depth);
  return std::binary_search(level->begin(), level->end(), index);
}

bool SurvivalField::survives(const DyadicWord& w) const {
  if (w.dim() != cfg_.dim) throw InvalidInput("word dimension does not match the field");
  check_depth(w.depth());
  return survives_packed(w.depth(), w.packed());
}

void SurvivalField::scan_range(int j, std::uint64_t lo, std::uint64_t count,
                               std::vector<std::uint64_t>& out) const {
  check_depth(j);
  if (j == 0) {
    if (lo == 0 && count > 0) out.push_back(0);
    return;
  }
  if (empty_[j]) return;
  const std::uint64_t key = level_key(cfg_.seed, j);
  const std::uint64_t t = thresholds_[j];
  for (std::uint64_t i = lo, end = lo + count; i != end; ++i) {
    if (splitmix64(key ^ splitmix64(i)) < t) out.push_back(i);
  }
}

std::vector<std::uint64_t> SurvivalField::draw_level(int j) const {
  check_depth(j);
  const int bits = cfg_.dim * j;
  if (j == 0) return {0};
  if (empty_[j]) return {};
  if (cfg_.backend == Backend::Hash) {
    if (bits >= 64 || (std::uint64_t{1} << bits) > cfg_.scan_cap) {
      throw ResourceError("hash scan of depth " + std::to_string(j) +
                          " exceeds the work cap; use the index backend");
    }
    std::vector<std::uint64_t> out;
    scan_range(j, 0, std::uint64_t{1} << bits, out);
    return out;
  }
  std::mt19937_64 rng(splitmix64(level_key(cfg_.seed, j) ^ kStreamKey));
  const double p = survival_probability(j);
  const std::uint64_t n = bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits);
  std::binomial_distribution<std::uint64_t> binom(n, p);
  const std::uint64_t count = binom(rng);
  return sample_distinct(rng, count, bits);
}

std::shared_ptr<const std::vector<std::uint64_t>> SurvivalField::cached_level(int j) const {
  std::lock_guard lock(mutex_);
  auto& slot = levels_[static_cast<std::size_t>(j)];
  if (!slot) slot = std::make_shared<const std::vector<std::uint64_t>>(draw_level(j));
  return slot;
}

std::vector<std::uint64_t> SurvivalField::survivors_packed(int j, int prefix_depth, std::uint64_t prefix) const {
  check_depth(j);
  if (prefix_depth < 0 || prefix_depth > j) throw InvalidInput("prefix deeper than the requested level");
  const int shift = cfg_.dim * (j - prefix_depth);
  const std::uint64_t lo = shift >= 64 ? 0 : prefix << shift;
  const std::uint64_t span_bits = static_cast<std::uint64_t>(shift);
  std::vector<std::uint64_t> out;
  if (cfg_.backend == Backend::Hash) {
    if (span_bits >= 64 || (std::uint64_t{1} << span_bits) > cfg_.scan_cap) {
      throw ResourceError("hash scan below this prefix exceeds the work cap; use the index backend");
    }
    scan_range(j, lo, std::uint64_t{1} << span_bits, out);
    return out;
  }
  const auto level = cached_level(j);
  auto first = std::lower_bound(level->begin(), level->end(), lo);
  if (span_bits >= 64) return {level->begin(), level->end()};
  const std::uint64_t hi = lo + (std::uint64_t{1} << span_bits);
  auto last = hi == 0 ? level->end() : std::lower_bound(first, level->end(), hi);
  return {first, last};
}

std::vector<DyadicWord> SurvivalField::survivors_at(int j, const DyadicWord& prefix) const {
  if (prefix.dim() != cfg_.dim) throw InvalidInput("prefix dimension does not match the field");
  const auto idx = survivors_packed(j, prefix.depth(), prefix.packed());
  std::vector<DyadicWord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(DyadicWord::from_packed(cfg_.dim, j, i));
  return out;
}

}  // namespace sgl
