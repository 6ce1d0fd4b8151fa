#include "sgl/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "sgl/errors.hpp"
#include "sgl/parallel.hpp"

namespace sgl {

HashQuery::HashQuery(const SurvivalField& field) : field_(field) {
  if (field.backend() != Backend::Hash) throw InvalidInput("pair searches need the hash backend");
  levels_.resize(static_cast<std::size_t>(field.config().max_depth) + 1);
}

const std::vector<std::uint64_t>& HashQuery::level(int depth) const {
  std::lock_guard lock(mutex_);
  auto& slot = levels_.at(static_cast<std::size_t>(depth));
  if (!slot) slot = std::make_unique<std::vector<std::uint64_t>>(field_.draw_level(depth));
  return *slot;
}

namespace {

void check_budget(const SurvivalQuery& q, const DyadicWord& u, int J_max) {
  if (u.dim() != q.dim()) throw InvalidInput("word dimension does not match the field");
  if (J_max < 0 || u.depth() + J_max > q.max_depth()) {
    throw InvalidInput("|u| + J_max exceeds the field's max_depth");
  }
}

// Shallowest, then smallest, w with w and wu surviving.
bool search(const SurvivalQuery& q, int len, std::uint64_t u, int J_max, int& depth, std::uint64_t& w_out) {
  const int shift = q.dim() * len;
  for (int m = 0; m <= J_max; ++m) {
    for (auto w : q.level(m)) {
      if (q.survives(m + len, (w << shift) | u)) {
        depth = m;
        w_out = w;
        return true;
      }
    }
  }
  return false;
}

double bound_for(int k, double log2C) { return std::max(k + 1, 2 * k - 1) * log2C; }

}  // namespace

ReconResult find_pair(const SurvivalQuery& query, const DyadicWord& u, int J_max) {
  check_budget(query, u, J_max);
  ReconResult r;
  r.target = u;
  r.search_depth_used = J_max;
  int depth = 0;
  std::uint64_t w = 0;
  if (search(query, u.depth(), u.packed(), J_max, depth, w)) {
    r.found = true;
    r.k = 1;
    r.pieces.push_back({u, depth, w});
    r.search_depth_used = depth;
  }
  return r;
}

ReconResult find_pair(const SurvivalField& field, const DyadicWord& u, int J_max) {
  HashQuery q(field);
  return find_pair(q, u, J_max);
}

ReconResult reconstruct(const GibbsModel& model, const SurvivalQuery& query, const DyadicWord& u, int J_max,
                        int k_max) {
  check_budget(query, u, J_max);
  if (model.dim() != query.dim()) throw InvalidInput("model and field dimensions differ");
  if (k_max < 1) throw InvalidInput("k_max must be at least 1");
  const double log2C = model.quasi_bernoulli_log2C();
  auto finish = [&](ReconResult r) {
    if (!r.found) return r;
    double est = 0.0;
    int used = 0;
    for (const auto& p : r.pieces) {
      const auto w = DyadicWord::from_packed(query.dim(), p.w_depth, p.w_index);
      est += model.mu_log2(w.concat(p.part)) - model.mu_log2(w);
      used = std::max(used, p.w_depth);
    }
    r.mu_estimate_log2 = est;
    r.error_bound_log2 = bound_for(r.k, log2C);
    r.search_depth_used = used;
    return r;
  };

  auto direct = find_pair(query, u, J_max);
  if (direct.found || k_max == 1 || u.depth() < 2) return finish(direct);

  // Fewest pieces over all splits; pieces[i][l] caches whether u[i, i+l) has a pair.
  const int n = u.depth();
  std::map<std::pair<int, int>, std::pair<int, std::uint64_t>> pair_of;
  auto has_pair = [&](int start, int len) {
    auto key = std::make_pair(start, len);
    if (auto it = pair_of.find(key); it != pair_of.end()) return it->second.first >= 0;
    const auto part = u.prefix(start + len).suffix_from(start);
    int depth = -1;
    std::uint64_t w = 0;
    if (!search(query, len, part.packed(), J_max, depth, w)) depth = -1;
    pair_of[key] = {depth, w};
    return depth >= 0;
  };
  const int inf = std::numeric_limits<int>::max();
  std::vector<int> best(static_cast<std::size_t>(n) + 1, inf), from(static_cast<std::size_t>(n) + 1, -1);
  best[0] = 0;
  for (int end = 1; end <= n; ++end) {
    for (int start = 0; start < end; ++start) {
      if (best[start] == inf || best[start] + 1 > k_max || best[start] + 1 >= best[end]) continue;
      if (has_pair(start, end - start)) {
        best[end] = best[start] + 1;
        from[end] = start;
      }
    }
  }
  ReconResult r;
  r.target = u;
  r.search_depth_used = J_max;
  if (best[n] == inf) return r;
  r.found = true;
  r.k = best[n];
  for (int end = n; end > 0; end = from[end]) {
    const int start = from[end];
    const auto& hit = pair_of.at({start, end - start});
    r.pieces.push_back({u.prefix(end).suffix_from(start), hit.first, hit.second});
  }
  std::reverse(r.pieces.begin(), r.pieces.end());
  return finish(r);
}

ReconResult reconstruct(const GibbsModel& model, const SurvivalField& field, const DyadicWord& u, int J_max,
                        int k_max) {
  HashQuery q(field);
  return reconstruct(model, q, u, J_max, k_max);
}

std::uint64_t count_pairs(const SurvivalQuery& query, const DyadicWord& u, int J_max) {
  check_budget(query, u, J_max);
  const int shift = query.dim() * u.depth();
  const auto idx = u.packed();
  std::uint64_t n = 0;
  for (int m = 1; m <= J_max; ++m) {
    for (auto w : query.level(m)) {
      if (query.survives(m + u.depth(), (w << shift) | idx)) ++n;
    }
  }
  return n;
}

double expected_pairs(int dim, double eta, int word_len, int J_max) {
  double s = 0.0;
  for (int j = 1; j <= J_max; ++j) s += std::exp2(dim * j * (2.0 * eta - 1.0));
  return std::exp2(-dim * word_len * (1.0 - eta)) * s;
}

double FractionTable::crossing_eta() const {
  for (std::size_t i = 1; i < etas.size(); ++i) {
    const double a = mean_fraction[i - 1] - 0.5, b = mean_fraction[i] - 0.5;
    if (a < 0.0 && b >= 0.0) return etas[i - 1] + (etas[i] - etas[i - 1]) * (-a) / (b - a);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

FractionTable fraction_experiment(int dim, const std::vector<double>& eta_grid, int word_len, int J_max,
                                  const std::vector<std::uint64_t>& seeds, int threads) {
  if (word_len < 0) throw InvalidInput("word length must be nonnegative");
  if (dim * word_len > 24) throw ResourceError("too many words to enumerate (d * word_len > 24)");
  if (seeds.empty()) throw InvalidInput("at least one seed is needed");
  FractionTable t;
  t.etas = eta_grid;
  t.rows.resize(eta_grid.size() * seeds.size());
  const std::uint64_t words = std::uint64_t{1} << (dim * word_len);
  parallel_for(t.rows.size(), threads, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) {
      const double eta = eta_grid[i / seeds.size()];
      const auto seed = seeds[i % seeds.size()];
      double fraction = 1.0;
      if (word_len > 0) {
        SurvivalField field({seed, eta, dim, Backend::Hash, J_max + word_len});
        HashQuery q(field);
        std::uint64_t hit = 0;
        for (std::uint64_t u = 0; u < words; ++u) {
          int depth = 0;
          std::uint64_t w = 0;
          if (search(q, word_len, u, J_max, depth, w)) ++hit;
        }
        fraction = static_cast<double>(hit) / static_cast<double>(words);
      }
      t.rows[i] = {eta, seed, word_len, fraction, expected_pairs(dim, eta, word_len, J_max)};
    }
  });
  for (std::size_t k = 0; k < eta_grid.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) s += t.rows[k * seeds.size() + i].fraction;
    t.mean_fraction.push_back(s / static_cast<double>(seeds.size()));
  }
  return t;
}

}  // namespace sgl
