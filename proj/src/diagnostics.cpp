#include "sgl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sgl/errors.hpp"
#include "sgl/numerics.hpp"

namespace sgl {

int BinSpec::index_of(double x) const {
  const double t = (x - lo) / (hi - lo) * bins;
  if (!(t > 0.0)) return 0;
  return std::min(bins - 1, static_cast<int>(t));
}

namespace {

void check_compatible(const GibbsModel& model, const SurvivalField& field, int j) {
  if (model.dim() != field.dim()) throw InvalidInput("model and field dimensions differ");
  if (j < 1 || j > field.config().max_depth) throw InvalidInput("depth outside the field's range");
}

}  // namespace

ValueRange survivor_value_range(const GibbsModel& model, const SurvivalField& field, int j) {
  check_compatible(model, field, j);
  ValueRange r;
  for (auto w : field.survivors_packed(j)) {
    const double e = -model.mu_log2_packed(j, w) / j;
    if (r.empty) {
      r.min_exp = r.max_exp = e;
      r.empty = false;
    } else {
      r.min_exp = std::min(r.min_exp, e);
      r.max_exp = std::max(r.max_exp, e);
    }
    ++r.count;
  }
  return r;
}

LevelHistogram survivor_level_histogram(const GibbsModel& model, const SurvivalField& field, int j,
                                        const BinSpec& bins) {
  check_compatible(model, field, j);
  if (bins.bins < 1 || !(bins.hi > bins.lo)) throw InvalidInput("bad histogram bins");
  LevelHistogram h;
  h.spec = bins;
  h.counts.assign(static_cast<std::size_t>(bins.bins), 0);
  for (auto w : field.survivors_packed(j)) {
    ++h.counts[static_cast<std::size_t>(bins.index_of(-model.mu_log2_packed(j, w) / j))];
    ++h.total;
  }
  const double c = model.dim() * (1.0 - field.eta());
  for (int b = 0; b < bins.bins; ++b) {
    const double D = model.tau_star(bins.center(b));
    h.predicted_log2.push_back(D == kNegInf ? kNegInf : j * (D - c));
  }
  return h;
}

DecompositionHistogram decomposition_histogram(const GibbsModel& model, const SurvivalField& field, int j,
                                               double eta_prime, const BinSpec& root_bins,
                                               const BinSpec& tail_bins, double tail_target, double tol) {
  check_compatible(model, field, j);
  const int r = static_cast<int>(std::floor(eta_prime * j));
  if (r < 1 || r >= j) throw InvalidInput("eta' * j must leave a nonempty root and tail");
  DecompositionHistogram out;
  out.root_length = r;
  out.root_bins = root_bins;
  out.tail_bins = tail_bins;
  out.counts.assign(static_cast<std::size_t>(root_bins.bins * tail_bins.bins), 0);
  const int d = field.dim();
  const int tail_len = j - r;
  const std::uint64_t tail_mask = packed::mask(d * tail_len);
  std::uint64_t last_root = ~std::uint64_t{0};
  bool last_covered = false;
  for (auto w : field.survivors_packed(j)) {
    const std::uint64_t root = w >> (d * tail_len);
    const double re = -model.mu_log2_packed(r, root) / r;
    const double te = -model.mu_log2_packed(tail_len, w & tail_mask) / tail_len;
    ++out.counts[static_cast<std::size_t>(root_bins.index_of(re) * tail_bins.bins + tail_bins.index_of(te))];
    ++out.total;
    if (root != last_root) {
      ++out.occupied_cylinders;
      last_root = root;
      last_covered = false;
    }
    if (!last_covered && std::abs(te - tail_target) <= tol) {
      ++out.covered_cylinders;
      last_covered = true;
    }
  }
  out.coverage = static_cast<double>(out.covered_cylinders) / std::exp2(static_cast<double>(d * r));
  return out;
}

double cylinder_coverage(const SurvivalField& field, int j, int g) {
  if (g < 0 || g > j) throw InvalidInput("cylinder generation must lie in [0, j]");
  const int shift = field.dim() * (j - g);
  std::uint64_t occupied = 0, last = ~std::uint64_t{0};
  for (auto w : field.survivors_packed(j)) {
    const auto c = shift >= 64 ? 0 : w >> shift;
    if (c != last || occupied == 0) {
      ++occupied;
      last = c;
    }
  }
  return static_cast<double>(occupied) / std::exp2(static_cast<double>(field.dim() * g));
}

std::uint64_t max_cylinder_multiplicity(const SurvivalField& field, int j, int g) {
  if (g < 0 || g > j) throw InvalidInput("cylinder generation must lie in [0, j]");
  const int shift = field.dim() * (j - g);
  std::uint64_t best = 0, run = 0, last = ~std::uint64_t{0};
  bool first = true;
  for (auto w : field.survivors_packed(j)) {
    const auto c = shift >= 64 ? 0 : w >> shift;
    if (first || c != last) {
      run = 0;
      last = c;
      first = false;
    }
    best = std::max(best, ++run);
  }
  return best;
}

void write_survivor_csv(const GibbsModel& model, const SurvivalField& field, int j, const std::filesystem::path& path) {
  check_compatible(model, field, j);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  const int d = field.dim();
  out << "depth";
  if (d == 1) {
    out << ",index";
  } else {
    for (int i = 0; i < d; ++i) out << ",index_" << i;
  }
  out << ",log2_mu\n";
  for (auto w : field.survivors_packed(j)) {
    out << j;
    for (int i = 0; i < d; ++i) out << ',' << packed::coordinate(w, j, d, i);
    out << ',' << format_real(model.mu_log2_packed(j, w)) << '\n';
  }
}

}  // namespace sgl
