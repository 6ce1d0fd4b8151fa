#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "sgl/errors.hpp"
#include "sgl/reconstruction.hpp"

using namespace sgl;

namespace {

// Survival given by explicit per-depth sets; the root always survives.
class ForcedQuery : public SurvivalQuery {
 public:
  ForcedQuery(int dim, int max_depth, std::map<int, std::vector<std::uint64_t>> alive)
      : dim_(dim), max_depth_(max_depth), levels_(static_cast<std::size_t>(max_depth) + 1) {
    levels_[0] = {0};
    for (auto& [d, v] : alive) {
      std::sort(v.begin(), v.end());
      levels_.at(static_cast<std::size_t>(d)) = v;
    }
  }
  int dim() const override { return dim_; }
  int max_depth() const override { return max_depth_; }
  bool survives(int depth, std::uint64_t index) const override {
    const auto& l = levels_.at(static_cast<std::size_t>(depth));
    return std::binary_search(l.begin(), l.end(), index);
  }
  const std::vector<std::uint64_t>& level(int depth) const override { return levels_.at(static_cast<std::size_t>(depth)); }

 private:
  int dim_, max_depth_;
  std::vector<std::vector<std::uint64_t>> levels_;
};

GibbsModel markov() {
  Eigen::VectorXd init(2);
  init << 0.4, 0.6;
  Eigen::MatrixXd P(2, 2);
  P << 0.7, 0.3, 0.4, 0.6;
  return GibbsModel::markov(1, init, P);
}

}  // namespace

TEST_CASE("a surviving word pairs with the empty word") {
  const SurvivalField f({3, 0.5, 1, Backend::Hash, 20});
  for (std::uint64_t i = 0; i < 64; ++i) {
    const auto u = DyadicWord::from_packed(1, 6, i);
    if (!f.survives(u)) continue;
    const auto r = find_pair(f, u, 10);
    CHECK(r.found);
    CHECK(r.pieces.at(0).w_depth == 0);
  }
}

TEST_CASE("witness pairs re-verify") {
  const SurvivalField f({8, 0.6, 1, Backend::Hash, 22});
  int found = 0;
  for (std::uint64_t i = 0; i < 32; ++i) {
    const auto u = DyadicWord::from_packed(1, 5, i);
    const auto r = find_pair(f, u, 16);
    if (!r.found) continue;
    ++found;
    const auto& p = r.pieces.at(0);
    const auto w = DyadicWord::from_packed(1, p.w_depth, p.w_index);
    CHECK(f.survives(w));
    CHECK(f.survives(w.concat(u)));
    // nothing shallower works
    for (int m = 0; m < p.w_depth; ++m) {
      for (auto v : f.survivors_packed(m)) CHECK(!f.survives(DyadicWord::from_packed(1, m, v).concat(u)));
    }
  }
  CHECK(found > 0);
}

TEST_CASE("forced field needing two pieces") {
  // "1" survives; so do "101" and "110", giving pairs for "01" and "10" but not for "0110".
  const ForcedQuery q(1, 10, {{1, {1}}, {3, {5, 6}}});
  const auto u = DyadicWord::parse(1, "0110");
  CHECK(!find_pair(q, u, 6).found);
  CHECK(count_pairs(q, u, 6) == 0);
  CHECK(count_pairs(q, DyadicWord::parse(1, "01"), 6) == 1);
  const auto m = markov();
  const auto r = reconstruct(m, q, u, 6, 4);
  REQUIRE(r.found);
  CHECK(r.k == 2);
  REQUIRE(r.pieces.size() == 2);
  CHECK(r.pieces[0].part.to_string() == "01");
  CHECK(r.pieces[1].part.to_string() == "10");
  CHECK(r.error_bound_log2 == doctest::Approx(3 * m.quasi_bernoulli_log2C()));
  CHECK(std::abs(r.mu_estimate_log2 - m.mu_log2(u)) <= r.error_bound_log2);
  // with a single piece allowed it fails
  CHECK(!reconstruct(m, q, u, 6, 1).found);
}

TEST_CASE("exact models reconstruct exactly") {
  const SurvivalField f({4, 0.7, 1, Backend::Hash, 24});
  const auto b = GibbsModel::bernoulli(1, {0.2, 0.8});
  const auto h = GibbsModel::homogeneous(1, 1.5);
  HashQuery q(f);
  for (std::uint64_t i = 0; i < 64; ++i) {
    const auto u = DyadicWord::from_packed(1, 6, i);
    const auto rb = reconstruct(b, q, u, 14);
    if (rb.found) {
      CHECK(rb.error_bound_log2 == 0.0);
      CHECK(rb.mu_estimate_log2 == doctest::Approx(b.mu_log2(u)).epsilon(1e-12));
    }
    const auto rh = reconstruct(h, q, u, 14);
    if (rh.found) CHECK(rh.mu_estimate_log2 == doctest::Approx(-1.5 * 6).epsilon(1e-12));
  }
}

TEST_CASE("error bound is sound") {
  std::vector<GibbsModel> models{markov(), GibbsModel::bernoulli(1, {0.3, 0.7}, 2.0),
                                 GibbsModel::markov(1, (Eigen::VectorXd(2) << 0.5, 0.5).finished(),
                                                    (Eigen::MatrixXd(2, 2) << 0.6, 0.4, 0.9, 0.1).finished(), 0.5,
                                                    1.3, 0.2)};
  std::mt19937_64 rng(1);
  int found = 0;
  for (std::uint64_t seed = 1; found < 10000 && seed < 200; ++seed) {
    const SurvivalField f({seed, 0.65, 1, Backend::Hash, 20});
    HashQuery q(f);
    for (int k = 0; k < 200; ++k) {
      const int len = 1 + static_cast<int>(rng() % 8);
      const auto u = DyadicWord::from_packed(1, len, rng() & packed::mask(len));
      for (const auto& m : models) {
        const auto r = reconstruct(m, q, u, 12);
        if (!r.found) continue;
        ++found;
        CHECK(std::abs(r.mu_estimate_log2 - m.mu_log2(u)) <= r.error_bound_log2 + 1e-9);
      }
    }
  }
  CHECK(found >= 10000);
}

TEST_CASE("pair counts match their expectation") {
  for (double eta : {0.3, 0.7}) {
    const int len = 3, J = 18, seeds = 200;
    double sum = 0, sum2 = 0;
    for (int s = 0; s < seeds; ++s) {
      const SurvivalField f({static_cast<std::uint64_t>(s) + 1000, eta, 1, Backend::Hash, J + len});
      HashQuery q(f);
      double mean = 0;
      for (std::uint64_t i = 0; i < 8; ++i) mean += static_cast<double>(count_pairs(q, DyadicWord::from_packed(1, len, i), J)) / 8;
      sum += mean;
      sum2 += mean * mean;
    }
    const double mean = sum / seeds;
    const double se = std::sqrt((sum2 / seeds - mean * mean) / (seeds - 1));
    CHECK(std::abs(mean - expected_pairs(1, eta, len, J)) <= 3 * se);
  }
  CHECK(expected_pairs(1, 0.5, 2, 10) == doctest::Approx(10 * 0.5));
}

TEST_CASE("fraction experiment") {
  const std::vector<double> etas{0.1, 0.8};
  const auto t = fraction_experiment(1, etas, 4, 16, {1, 2, 3}, 4);
  REQUIRE(t.rows.size() == 6);
  CHECK(expected_pairs(1, 0.8, 4, 16) >= 20);
  CHECK(t.mean_fraction[1] >= 0.99);
  CHECK(t.crossing_eta() > 0.1);
  CHECK(t.crossing_eta() < 0.8);
  // the depth-0 pair (u survives itself) is outside the sum, so a low count needs longer words
  CHECK(expected_pairs(1, 0.1, 8, 16) <= 0.01);
  const auto low = fraction_experiment(1, {0.1}, 8, 16, {1, 2, 3});
  CHECK(low.mean_fraction[0] <= 0.05);
  const auto zero = fraction_experiment(1, {0.3}, 0, 8, {1});
  CHECK(zero.mean_fraction[0] == 1.0);
  // thread count does not matter
  const auto one = fraction_experiment(1, etas, 4, 16, {1, 2, 3}, 1);
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(one.rows[i].fraction == t.rows[i].fraction);
}

TEST_CASE("invalid requests") {
  const SurvivalField f({1, 0.5, 1, Backend::Hash, 10});
  CHECK_THROWS_AS(find_pair(f, DyadicWord::parse(1, "0101"), 8), InvalidInput);
  const SurvivalField idx({1, 0.5, 1, Backend::Index, 10});
  CHECK_THROWS_AS(find_pair(idx, DyadicWord::parse(1, "01"), 4), InvalidInput);
}
