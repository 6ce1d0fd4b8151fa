#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sgl/errors.hpp"
#include "sgl/survival_field.hpp"

using namespace sgl;

namespace {

SurvivalField field(std::uint64_t seed, Backend b, int max_depth = 24, double eta = 0.5, int dim = 1) {
  return SurvivalField({seed, eta, dim, b, max_depth});
}

// Chi-square homogeneity statistic of two samples over the given bin edges.
double chi_square(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                  const std::vector<std::size_t>& edges) {
  const std::size_t k = edges.size() + 1;
  std::vector<double> ca(k, 0), cb(k, 0);
  auto bin = [&](std::size_t x) {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
  };
  for (auto x : a) ca[bin(x)] += 1;
  for (auto x : b) cb[bin(x)] += 1;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double stat = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double tot = ca[i] + cb[i];
    if (tot == 0) continue;
    const double ea = tot * na / (na + nb), eb = tot * nb / (na + nb);
    stat += (ca[i] - ea) * (ca[i] - ea) / ea + (cb[i] - eb) * (cb[i] - eb) / eb;
  }
  return stat;
}

}  // namespace

TEST_CASE("empty word always survives") {
  for (auto b : {Backend::Hash, Backend::Index}) {
    const auto f = field(3, b);
    CHECK(f.survives(DyadicWord(1)));
    CHECK(f.survivors_packed(0) == std::vector<std::uint64_t>{0});
  }
}

TEST_CASE("survival is a pure function") {
  for (auto b : {Backend::Hash, Backend::Index}) {
    const auto f = field(42, b);
    const auto g = field(42, b);
    for (std::uint64_t i = 0; i < 4096; ++i) {
      CHECK(f.survives_packed(12, i) == f.survives_packed(12, i));
      CHECK(f.survives_packed(12, i) == g.survives_packed(12, i));
    }
    CHECK(f.survivors_packed(20) == g.draw_level(20));
  }
}

TEST_CASE("thresholds") {
  const auto f = field(1, Backend::Hash, 24, 0.5);
  CHECK(f.threshold(0) == ~std::uint64_t{0});
  CHECK(f.threshold(2) == (std::uint64_t{1} << 63));
  CHECK(f.threshold(20) == (std::uint64_t{1} << 54));
  CHECK(!f.level_empty(24));
  // The deepest packable level keeps a positive threshold, so it is never empty.
  const SurvivalField g({1, 0.01, 4, Backend::Hash, 16});
  CHECK(!g.level_empty(16));
  CHECK(g.threshold(16) >= 1);
}

TEST_CASE("survivor counts at depth 20 (hash) and 24 (index)") {
  double total20 = 0, total24 = 0;
  for (std::uint64_t s = 1; s <= 8; ++s) {
    total20 += static_cast<double>(field(s, Backend::Hash).survivors_packed(20).size());
    total24 += static_cast<double>(field(s, Backend::Index).survivors_packed(24).size());
  }
  CHECK(std::abs(total20 / 8 - 1024) <= 3 * 32);
  CHECK(std::abs(total24 / 8 - 4096) <= 3 * 64);
}

TEST_CASE("survivors below a prefix") {
  for (auto b : {Backend::Hash, Backend::Index}) {
    const auto f = field(9, b);
    const auto all = f.survivors_packed(14);
    std::size_t total = 0;
    for (std::uint64_t p = 0; p < 8; ++p) {
      const auto part = f.survivors_packed(14, 3, p);
      for (auto i : part) CHECK((i >> 11) == p);
      total += part.size();
    }
    CHECK(total == all.size());
    for (auto i : all) CHECK(f.survives_packed(14, i));
    // j = |prefix|: the prefix itself iff it survives
    const auto w = DyadicWord::parse(1, "0110");
    const auto same = f.survivors_at(4, w);
    CHECK(same.size() == (f.survives(w) ? 1u : 0u));
  }
}

TEST_CASE("hash and index backends have the same count law") {
  std::vector<std::size_t> h, x;
  for (std::uint64_t s = 0; s < 200; ++s) {
    h.push_back(field(s, Backend::Hash, 14).survivors_packed(14).size());
    x.push_back(field(s, Backend::Index, 14).survivors_packed(14).size());
  }
  // Binomial(2^14, 2^-7): mean 128, sd about 11.3; six roughly equiprobable bins.
  const double stat = chi_square(h, x, {116, 123, 128, 133, 140});
  CHECK(stat < 15.086);  // chi-square, 5 degrees of freedom, level 0.01
  const double mh = std::accumulate(h.begin(), h.end(), 0.0) / 200;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 200;
  CHECK(std::abs(mh - 128) < 3 * 11.3 / std::sqrt(200.0));
  CHECK(std::abs(mx - 128) < 3 * 11.3 / std::sqrt(200.0));
}

TEST_CASE("marginal survival frequency") {
  for (int j = 1; j <= 22; ++j) {
    const std::uint64_t draws = std::uint64_t{64} << (22 - j);
    const std::uint64_t words = std::min<std::uint64_t>(std::uint64_t{1} << j, draws);
    const std::uint64_t seeds = (draws + words - 1) / words;
    std::uint64_t hits = 0;
    std::vector<std::uint64_t> out;
    for (std::uint64_t s = 0; s < seeds; ++s) {
      const SurvivalField f({s * 7919 + 1, 0.5, 1, Backend::Hash, j});
      out.clear();
      f.scan_range(j, 0, words, out);
      hits += out.size();
    }
    const double n = static_cast<double>(seeds * words);
    const double p = std::exp2(-0.5 * j);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK_MESSAGE(std::abs(hits / n - p) <= 4 * se, "depth " << j);
  }
}

TEST_CASE("siblings are uncorrelated") {
  // Correlation of sibling indicators at depth 12 over 10^4 seeds (all sibling pairs).
  double n = 0, sa = 0, sb = 0, sab = 0;
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const SurvivalField f({s, 0.5, 1, Backend::Hash, 12});
    out.clear();
    f.scan_range(12, 0, 4096, out);
    std::vector<char> alive(4096, 0);
    for (auto i : out) alive[i] = 1;
    for (std::size_t i = 0; i < 4096; i += 2) {
      sa += alive[i];
      sb += alive[i + 1];
      sab += alive[i] * alive[i + 1];
      n += 1;
    }
  }
  const double ma = sa / n, mb = sb / n;
  const double corr = (sab / n - ma * mb) / std::sqrt(ma * (1 - ma) * mb * (1 - mb));
  CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("resource and input errors") {
  const SurvivalField f({1, 0.5, 1, Backend::Hash, 40, std::uint64_t{1} << 20});
  CHECK_THROWS_AS(f.survivors_packed(30), ResourceError);
  CHECK_NOTHROW(f.survivors_packed(30, 12, 5));
  CHECK_THROWS_AS(f.survives_packed(41, 0), InvalidInput);
  CHECK_THROWS_AS(SurvivalField({1, 1.0, 1, Backend::Hash, 10}), InvalidInput);
  CHECK_THROWS_AS(SurvivalField({1, 0.5, 2, Backend::Hash, 33}), InvalidInput);
  CHECK_THROWS_AS(parse_backend("fast"), InvalidInput);
  CHECK(parse_backend("index") == Backend::Index);
}
