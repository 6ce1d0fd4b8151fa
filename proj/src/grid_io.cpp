#include "sgl/grid_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "sgl/numerics.hpp"

namespace sgl {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'L', 'G', 'R', 'I', 'D', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw InvalidInput("cannot write " + path.string());
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw InvalidInput("write failed for " + path.string());
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw InvalidInput("cannot open grid file " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw InvalidInput("truncated grid file " + path_.string());
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

}  // namespace

void save_grid(const CapacityGrid& grid, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(grid.dim));
  w.u32(static_cast<std::uint32_t>(grid.J));
  w.u32(static_cast<std::uint32_t>(grid.truncation_depth));
  w.u64(grid.provenance.field.seed);
  w.u32(grid.provenance.field.backend == Backend::Hash ? 0u : 1u);
  w.f64(grid.provenance.field.eta);
  char hash[64] = {};
  std::memcpy(hash, grid.provenance.model_hash.data(), std::min<std::size_t>(64, grid.provenance.model_hash.size()));
  w.bytes(hash, 64);
  w.u64(grid.values.size());
  for (double v : grid.values) w.f64(v);
  w.u64(grid.incomplete_cells.size());
  for (auto c : grid.incomplete_cells) w.u64(c);
  w.u64(grid.unresolved_cells.size());
  for (auto c : grid.unresolved_cells) w.u64(c);
  w.finish(path);
}

CapacityGrid load_grid(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw InvalidInput(path.string() + " is not a grid file");
  if (r.u32() != kVersion) throw InvalidInput(path.string() + ": unsupported grid file version");
  CapacityGrid g;
  g.dim = static_cast<int>(r.u32());
  g.J = static_cast<int>(r.u32());
  g.truncation_depth = static_cast<int>(r.u32());
  if (g.dim < 1 || g.dim > kMaxDimension || g.J < 1 || g.dim * g.J > kMaxGridBits) {
    throw InvalidInput(path.string() + ": corrupt grid header");
  }
  g.provenance.field.dim = g.dim;
  g.provenance.field.seed = r.u64();
  g.provenance.field.backend = r.u32() == 0 ? Backend::Hash : Backend::Index;
  g.provenance.field.eta = r.f64();
  char hash[64];
  r.bytes(hash, 64);
  g.provenance.model_hash.assign(hash, strnlen(hash, 64));
  const auto n = r.u64();
  if (n != (std::uint64_t{1} << (g.dim * g.J))) throw InvalidInput(path.string() + ": cell count mismatch");
  g.values.resize(n);
  for (auto& v : g.values) v = r.f64();
  g.incomplete_cells.resize(r.u64());
  for (auto& c : g.incomplete_cells) c = r.u64();
  g.unresolved_cells.resize(r.u64());
  for (auto& c : g.unresolved_cells) c = r.u64();
  return g;
}

void export_grid_csv(const CapacityGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << "cell_index,log2_value,witness_depth\n";
  for (std::size_t c = 0; c < grid.values.size(); ++c) {
    int depth = -1;
    if (!grid.own_witness.empty()) depth = grid.witness(c).depth;
    out << c << ',' << format_real(grid.values[c]) << ',' << depth << '\n';
  }
}

}  // namespace sgl
