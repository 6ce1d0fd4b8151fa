#include "sgl/capacity_grid.hpp"

#include <algorithm>
#include <cmath>

#include "sgl/digest.hpp"
#include "sgl/numerics.hpp"
#include "sgl/parallel.hpp"

namespace sgl {

namespace {

bool better(double v, const Witness& w, double best, const Witness& bw) {
  if (v != best) return v > best;
  if (w.depth != bw.depth) return w.depth < bw.depth;
  return w.index < bw.index;
}

struct Builder {
  const GibbsModel& model;
  const SurvivalField& field;
  CapacityGrid& grid;
  const GridOptions& opt;

  void update(std::uint64_t cell, int j, std::uint64_t w) {
    const double v = model.mu_log2_packed(j, w);
    // Levels arrive shallow to deep and indices in increasing order, so a
    // strict comparison already keeps the shallowest, smallest witness.
    if (v > grid.own[cell]) {
      grid.own[cell] = v;
      if (opt.keep_witnesses) grid.own_witness[cell] = {j, w};
    }
  }

  [[noreturn]] void stop(int j, const std::string& why) {
    throw GridResourceError(why + " at depth " + std::to_string(j), j - 1,
                            static_cast<std::size_t>(std::count_if(grid.own.begin(), grid.own.end(),
                                                                   [](double v) { return v != kNegInf; })));
  }

  void check_index_level(int j) {
    const double expected = std::exp2(field.dim() * field.eta() * j);
    if (expected > opt.max_level_survivors) stop(j, "expected survivor count exceeds the per-level cap");
  }

  // Every cell gets all survivors of depth j below it.
  void full_level(int j) {
    const int shift = grid.dim * (j - grid.J);
    const std::size_t cells = grid.own.size();
    if (field.backend() == Backend::Hash) {
      const int bits = grid.dim * j;
      if (bits >= 64 || (std::uint64_t{1} << bits) > field.config().scan_cap) {
        stop(j, "hash scan exceeds the work cap (use the index backend)");
      }
      parallel_for(cells, opt.threads, [&](std::size_t b, std::size_t e, int) {
        std::vector<std::uint64_t> buf;
        const std::uint64_t span = std::uint64_t{1} << shift;
        for (std::size_t c = b; c < e; c += 4096) {
          const std::size_t stop_cell = std::min(e, c + 4096);
          buf.clear();
          field.scan_range(j, static_cast<std::uint64_t>(c) << shift, (stop_cell - c) * span, buf);
          for (auto w : buf) update(w >> shift, j, w);
        }
      });
      return;
    }
    check_index_level(j);
    const auto level = field.draw_level(j);
    parallel_for(cells, opt.threads, [&](std::size_t b, std::size_t e, int) {
      auto first = std::lower_bound(level.begin(), level.end(), static_cast<std::uint64_t>(b) << shift);
      const std::uint64_t hi = static_cast<std::uint64_t>(e) << shift;
      for (auto it = first; it != level.end() && (e == cells ? true : *it < hi); ++it) {
        update(*it >> shift, j, *it);
      }
    });
  }

  // Only the listed cells get the survivors of depth j below them.
  void targeted_level(int j, const std::vector<std::uint64_t>& targets) {
    const int shift = grid.dim * (j - grid.J);
    const std::uint64_t span = std::uint64_t{1} << shift;
    if (field.backend() == Backend::Hash) {
      if (static_cast<double>(span) * static_cast<double>(targets.size()) >
          static_cast<double>(field.config().scan_cap)) {
        stop(j, "deepening scan exceeds the work cap");
      }
      std::vector<std::uint64_t> buf;
      for (auto u : targets) {
        buf.clear();
        field.scan_range(j, u << shift, span, buf);
        for (auto w : buf) update(u, j, w);
      }
      return;
    }
    check_index_level(j);
    const auto level = field.draw_level(j);
    for (auto u : targets) {
      auto it = std::lower_bound(level.begin(), level.end(), u << shift);
      for (; it != level.end() && (*it >> shift) == u; ++it) update(u, j, *it);
    }
  }
};

}  // namespace

int default_truncation_depth(int J, double eta, double trunc_factor) {
  const double base = std::ceil(J / eta - 1e-9);
  const double slack = J > 1 ? std::ceil(trunc_factor * std::log2(static_cast<double>(J)) - 1e-9) : 0.0;
  return static_cast<int>(base + slack);
}

std::size_t CapacityGrid::finite_cells() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double v) { return v != kNegInf; }));
}

std::optional<std::uint64_t> CapacityGrid::argmax_neighbor(std::uint64_t cell) const {
  if (values.at(cell) == kNegInf) return std::nullopt;
  std::vector<std::uint64_t> nb;
  packed::neighbors(cell, J, dim, nb);
  nb.push_back(cell);
  std::optional<std::uint64_t> best;
  for (auto u : nb) {
    if (own[u] == kNegInf) continue;
    if (!best) {
      best = u;
      continue;
    }
    const Witness wu = own_witness.empty() ? Witness{0, u} : own_witness[u];
    const Witness wb = own_witness.empty() ? Witness{0, *best} : own_witness[*best];
    if (better(own[u], wu, own[*best], wb)) best = u;
  }
  return best;
}

Witness CapacityGrid::witness(std::uint64_t cell) const {
  if (own_witness.empty()) throw InvalidInput("grid was built without witnesses");
  auto u = argmax_neighbor(cell);
  return u ? own_witness[*u] : Witness{};
}

void apply_neighbor_max(CapacityGrid& grid, int threads) {
  const std::size_t n = grid.own.size();
  grid.values.assign(n, kNegInf);
  parallel_for(n, threads, [&](std::size_t b, std::size_t e, int) {
    if (grid.dim == 1) {
      for (std::size_t c = b; c < e; ++c) {
        double v = grid.own[c];
        if (c > 0) v = std::max(v, grid.own[c - 1]);
        if (c + 1 < n) v = std::max(v, grid.own[c + 1]);
        grid.values[c] = v;
      }
      return;
    }
    std::vector<std::uint64_t> nb;
    for (std::size_t c = b; c < e; ++c) {
      double v = grid.own[c];
      packed::neighbors(c, grid.J, grid.dim, nb);
      for (auto u : nb) v = std::max(v, grid.own[u]);
      grid.values[c] = v;
    }
  });
}

CapacityGrid build_capacity_grid(const GibbsModel& model, const SurvivalField& field, int J,
                                 const GridOptions& options) {
  if (model.dim() != field.dim()) throw InvalidInput("model and field dimensions differ");
  if (J < 1) throw InvalidInput("J must be at least 1");
  if (field.dim() * J > kMaxGridBits) {
    throw ResourceError("grid of d*J = " + std::to_string(field.dim() * J) + " exceeds the supported limit d*J <= " +
                        std::to_string(kMaxGridBits));
  }
  if (options.trunc_factor < 1.0) throw InvalidInput("trunc_factor must be at least 1");
  const int T = options.truncation_depth.value_or(default_truncation_depth(J, field.eta(), options.trunc_factor));
  if (T < J) throw InvalidInput("truncation depth must be at least J");
  if (T > field.config().max_depth) {
    throw InvalidInput("truncation depth " + std::to_string(T) + " exceeds the field's max_depth " +
                       std::to_string(field.config().max_depth));
  }

  CapacityGrid grid;
  grid.J = J;
  grid.dim = field.dim();
  grid.truncation_depth = T;
  grid.provenance = {sha256_hex(model.canonical_text()), field.config(), options};
  const std::size_t cells = std::size_t{1} << (grid.dim * J);
  grid.own.assign(cells, kNegInf);
  if (options.keep_witnesses) grid.own_witness.assign(cells, Witness{});

  Builder b{model, field, grid, options};
  for (int j = J; j <= T; ++j) b.full_level(j);
  apply_neighbor_max(grid, options.threads);

  for (std::size_t c = 0; c < cells; ++c) {
    if (grid.values[c] == kNegInf) grid.incomplete_cells.push_back(c);
  }
  if (!grid.incomplete_cells.empty() && options.deepen_levels > 0) {
    std::vector<std::uint64_t> targets, nb;
    for (auto c : grid.incomplete_cells) {
      packed::neighbors(c, J, grid.dim, nb);
      nb.push_back(c);
      for (auto u : nb) {
        if (grid.own[u] == kNegInf) targets.push_back(u);
      }
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    const int last = std::min(T + options.deepen_levels, field.config().max_depth);
    for (int j = T + 1; j <= last; ++j) b.targeted_level(j, targets);
    apply_neighbor_max(grid, options.threads);
  }
  for (auto c : grid.incomplete_cells) {
    if (grid.values[c] == kNegInf) grid.unresolved_cells.push_back(c);
  }
  return grid;
}

}  // namespace sgl
