#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sgl {

/// Largest supported dimension: the alphabet {0,1}^d has at most 16 letters.
inline constexpr int kMaxDimension = 4;

/// A vertex of the 2^d-ary tree.
///
/// Letter k (0-based) is a d-bit symbol whose bit i is the (k+1)-th binary
/// digit of the i-th coordinate of the anchor point x_w.  Words whose d*depth
/// fits in 64 bits also have a packed form (see `packed()`), in which the
/// first letter is most significant; packed order is lexicographic order and
/// the depth-J ancestor of a packed word is a right shift.
class DyadicWord {
 public:
  DyadicWord() = default;
  explicit DyadicWord(int dim);
  DyadicWord(int dim, std::vector<std::uint8_t> letters);

  static DyadicWord from_packed(int dim, int depth, std::uint64_t index);
  /// Parses letters written as hex digits ("0110" for d=1, "03a" for d=4).
  static DyadicWord parse(int dim, std::string_view text);

  int dim() const { return dim_; }
  int depth() const { return static_cast<int>(letters_.size()); }
  bool empty() const { return letters_.empty(); }
  std::span<const std::uint8_t> letters() const { return letters_; }
  std::uint8_t operator[](std::size_t k) const { return letters_[k]; }

  bool packable() const { return dim_ * depth() <= 64; }
  std::uint64_t packed() const;

  /// Integer cube coordinates c_i = x_w^{(i)} 2^{depth}.
  std::vector<std::uint64_t> coordinates() const;
  /// The dyadic point x_w.
  std::vector<double> anchor() const;
  /// Same-depth words whose closed cube touches I_w, excluding w itself.
  std::vector<DyadicWord> neighbors() const;

  DyadicWord prefix(int n) const;
  DyadicWord suffix_from(int n) const;
  DyadicWord concat(const DyadicWord& tail) const;

  std::string to_string() const;

  friend bool operator==(const DyadicWord&, const DyadicWord&) = default;
  friend auto operator<=>(const DyadicWord& a, const DyadicWord& b) {
    if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
    return a.letters_ <=> b.letters_;
  }

 private:
  int dim_ = 1;
  std::vector<std::uint8_t> letters_;
};

/// Operations on packed words (d*depth <= 64).
namespace packed {

inline std::uint64_t mask(int bits) {
  return bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
}

inline std::uint64_t ancestor(std::uint64_t index, int depth, int ancestor_depth, int dim) {
  return index >> (dim * (depth - ancestor_depth));
}

inline std::uint8_t letter(std::uint64_t index, int depth, int k, int dim) {
  return static_cast<std::uint8_t>((index >> (dim * (depth - 1 - k))) & mask(dim));
}

/// Cube coordinate along `axis` of a packed word (de-interleave).
std::uint64_t coordinate(std::uint64_t index, int depth, int dim, int axis);
/// Inverse of `coordinate` over all axes.
std::uint64_t from_coordinates(std::span<const std::uint64_t> coords, int depth, int dim);

/// Packed indices of N(w) (same depth, cube touching I_w, w excluded),
/// in increasing order.  Boundary cubes have fewer neighbors.
void neighbors(std::uint64_t index, int depth, int dim, std::vector<std::uint64_t>& out);

}  // namespace packed

}  // namespace sgl
