#include "sgl/dyadic_word.hpp"

#include <algorithm>
#include <cmath>

#include "sgl/errors.hpp"

namespace sgl {

namespace {

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDimension) {
    throw InvalidInput("dimension must be in [1, " + std::to_string(kMaxDimension) + "], got " +
                       std::to_string(dim));
  }
}

}  // namespace

DyadicWord::DyadicWord(int dim) : dim_(dim) { check_dim(dim); }

DyadicWord::DyadicWord(int dim, std::vector<std::uint8_t> letters)
    : dim_(dim), letters_(std::move(letters)) {
  check_dim(dim);
  const auto alphabet = 1u << dim;
  for (auto l : letters_) {
    if (l >= alphabet) throw InvalidInput("letter out of range for dimension " + std::to_string(dim));
  }
}

DyadicWord DyadicWord::from_packed(int dim, int depth, std::uint64_t index) {
  check_dim(dim);
  if (depth < 0 || dim * depth > 64) throw InvalidInput("packed word depth out of range");
  if (dim * depth < 64 && (index >> (dim * depth)) != 0) throw InvalidInput("packed index exceeds depth");
  std::vector<std::uint8_t> letters(static_cast<std::size_t>(depth));
  for (int k = 0; k < depth; ++k) letters[k] = packed::letter(index, depth, k, dim);
  return DyadicWord(dim, std::move(letters));
}

DyadicWord DyadicWord::parse(int dim, std::string_view text) {
  std::vector<std::uint8_t> letters;
  letters.reserve(text.size());
  for (char c : text) {
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw InvalidInput(std::string("invalid letter '") + c + "' in word");
    letters.push_back(static_cast<std::uint8_t>(v));
  }
  return DyadicWord(dim, std::move(letters));
}

std::uint64_t DyadicWord::packed() const {
  if (!packable()) throw InvalidInput("word too long to pack into 64 bits");
  std::uint64_t index = 0;
  for (auto l : letters_) index = (index << dim_) | l;
  return index;
}

std::vector<std::uint64_t> DyadicWord::coordinates() const {
  if (depth() > 64) throw InvalidInput("coordinates need depth <= 64");
  std::vector<std::uint64_t> c(static_cast<std::size_t>(dim_), 0);
  for (auto l : letters_) {
    for (int i = 0; i < dim_; ++i) c[i] = (c[i] << 1) | ((l >> i) & 1u);
  }
  return c;
}

std::vector<double> DyadicWord::anchor() const {
  std::vector<double> x(static_cast<std::size_t>(dim_), 0.0);
  double scale = 0.5;
  for (auto l : letters_) {
    for (int i = 0; i < dim_; ++i) {
      if ((l >> i) & 1u) x[i] += scale;
    }
    scale *= 0.5;
  }
  return x;
}

std::vector<DyadicWord> DyadicWord::neighbors() const {
  std::vector<DyadicWord> out;
  if (depth() == 0) return out;
  if (!packable()) throw InvalidInput("neighbors need a packable word");
  std::vector<std::uint64_t> idx;
  packed::neighbors(packed(), depth(), dim_, idx);
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(from_packed(dim_, depth(), i));
  return out;
}

DyadicWord DyadicWord::prefix(int n) const {
  if (n < 0 || n > depth()) throw InvalidInput("prefix length out of range");
  return DyadicWord(dim_, std::vector<std::uint8_t>(letters_.begin(), letters_.begin() + n));
}

DyadicWord DyadicWord::suffix_from(int n) const {
  if (n < 0 || n > depth()) throw InvalidInput("suffix start out of range");
  return DyadicWord(dim_, std::vector<std::uint8_t>(letters_.begin() + n, letters_.end()));
}

DyadicWord DyadicWord::concat(const DyadicWord& tail) const {
  if (tail.dim_ != dim_) throw InvalidInput("concatenating words of different dimension");
  auto letters = letters_;
  letters.insert(letters.end(), tail.letters_.begin(), tail.letters_.end());
  return DyadicWord(dim_, std::move(letters));
}

std::string DyadicWord::to_string() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(letters_.size());
  for (auto l : letters_) s.push_back(kDigits[l]);
  return s;
}

namespace packed {

std::uint64_t coordinate(std::uint64_t index, int depth, int dim, int axis) {
  if (dim == 1) return index;
  std::uint64_t c = 0;
  for (int m = depth - 1; m >= 0; --m) c = (c << 1) | ((index >> (dim * m + axis)) & 1u);
  return c;
}

std::uint64_t from_coordinates(std::span<const std::uint64_t> coords, int depth, int dim) {
  if (dim == 1) return coords[0];
  std::uint64_t index = 0;
  for (int m = 0; m < depth; ++m) {
    for (int i = 0; i < dim; ++i) index |= ((coords[i] >> m) & 1u) << (dim * m + i);
  }
  return index;
}

void neighbors(std::uint64_t index, int depth, int dim, std::vector<std::uint64_t>& out) {
  out.clear();
  if (depth == 0) return;
  std::uint64_t c[kMaxDimension];
  for (int i = 0; i < dim; ++i) c[i] = coordinate(index, depth, dim, i);
  const std::uint64_t top = mask(depth);
  int offsets[kMaxDimension];
  int total = 1;
  for (int i = 0; i < dim; ++i) total *= 3;
  std::uint64_t shifted[kMaxDimension];
  for (int code = 0; code < total; ++code) {
    int rest = code;
    bool self = true, valid = true;
    for (int i = 0; i < dim; ++i) {
      offsets[i] = rest % 3 - 1;
      rest /= 3;
      if (offsets[i] != 0) self = false;
      if ((offsets[i] < 0 && c[i] == 0) || (offsets[i] > 0 && c[i] == top)) valid = false;
      shifted[i] = c[i] + static_cast<std::uint64_t>(offsets[i]);
    }
    if (self || !valid) continue;
    out.push_back(from_coordinates(std::span<const std::uint64_t>(shifted, dim), depth, dim));
  }
  std::sort(out.begin(), out.end());
}

}  // namespace packed

}  // namespace sgl
