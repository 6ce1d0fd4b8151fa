// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "runner.hpp"
#include "sgl/capacity_grid.hpp"
#include "sgl/diagnostics.hpp"
#include "sgl/digest.hpp"
#include "sgl/numerics.hpp"
#include "sgl/parallel.hpp"
#include "sgl/reconstruction.hpp"
#include "sgl/spectra.hpp"
#include "sgl/theory.hpp"

namespace fs = std::filesystem;
using namespace sgl;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fails]");
  }
};

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

GibbsModel bern() { return GibbsModel::bernoulli(1, {0.2, 0.8}); }

GibbsModel markov() {
  Eigen::VectorXd init(2);
  init << 0.5, 0.5;
  Eigen::MatrixXd P(2, 2);
  P << 0.7, 0.3, 0.4, 0.6;
  return GibbsModel::markov(1, init, P);
}

// Seed-averaged free energy of sampled grids.
Curve mean_tau(const GibbsModel& m, double eta, int J, int seeds, const std::vector<double>& qs,
               std::vector<CapacityGrid>* keep = nullptr) {
  Curve avg;
  avg.xs = qs;
  avg.ys.assign(qs.size(), 0.0);
  const int threads = resolve_threads();
  for (int s = 1; s <= seeds; ++s) {
    GridOptions opt;
    opt.threads = threads;
    opt.keep_witnesses = false;
    const int T = default_truncation_depth(J, eta, opt.trunc_factor);
    const SurvivalField f({static_cast<std::uint64_t>(s), eta, m.dim(), Backend::Index,
                           std::min(64 / m.dim(), T + opt.deepen_levels)});
    auto g = build_capacity_grid(m, f, J, opt);
    const auto c = lq_spectrum(g, qs, threads);
    for (std::size_t i = 0; i < qs.size(); ++i) avg.ys[i] += c.ys[i] / seeds;
    if (keep) keep->push_back(std::move(g));
  }
  return avg;
}

Outcome legendre_pair() {
  Outcome o;
  double worst = 0.0;
  for (const auto& m : {bern(), markov()}) {
    for (double eta : {0.3, 0.5, 0.8}) {
      const Theory th(m, eta);
      Curve tau;
      tau.xs = linspace(-40, 40, 4001);
      for (double q : tau.xs) tau.ys.push_back(th.tau_tilde(q));
      const auto& s = th.summary();
      const auto Hs = linspace(s.breakpoints[0] + 1e-3, s.breakpoints[3] - 1e-3, 500);
      const auto star = legendre_conjugate_numeric(tau, Hs, [&](double q) { return th.tau_tilde(q); });
      for (std::size_t i = 0; i < Hs.size(); ++i) worst = std::max(worst, std::abs(star.ys[i] - th.D_Mmu(Hs[i])));
    }
  }
  o.require(worst < 1e-6, "sup |tau~* - D_Mmu| = " + fmt(worst) + " (< 1e-6)");
  return o;
}

Outcome optimization_oracle() {
  Outcome o;
  const Theory th(bern(), 0.5);
  const auto& s = th.summary();
  double worst = 0.0;
  for (double H : linspace(s.breakpoints[0] + 1e-3, s.H_s + s.H_tilde_ell_tilde, 50)) {
    worst = std::max(worst, std::abs(D_bruteforce(th, H).value - th.D_Mmu(H)));
  }
  o.require(worst < 1e-3, "sup |D_bruteforce - D_Mmu| = " + fmt(worst) + " (< 1e-3)");
  return o;
}

// Difference of the left and right linear extrapolations of f to x.
double jump(const std::function<double(double)>& f, double x) {
  const double h = 1e-6 * std::max(1.0, std::abs(x));
  const double left = 2 * f(x - h) - f(x - 2 * h), right = 2 * f(x + h) - f(x + 2 * h);
  return std::abs(left - right);
}

Outcome self_consistency() {
  Outcome o;
  double tau_res = 0, tangency = 0, dual = 0, cont = 0;
  for (const auto& m : {bern(), markov()}) {
    for (double eta : {0.3, 0.5, 0.8}) {
      const Theory th(m, eta);
      const auto& s = th.summary();
      tau_res = std::max(tau_res, std::abs(m.tau(s.q_eta_tilde) + m.dim() * (1 - eta)));
      tangency = std::max(tangency, std::abs(s.tangency_residual));
      dual = std::max(dual, s.eta_tilde_agreement);
      std::vector<double> qs{s.q_eta_tilde};
      if (s.q_eta_ell_finite) qs.push_back(s.q_eta_ell);
      for (double q : qs) cont = std::max(cont, jump([&](double x) { return th.tau_tilde(x); }, q));
      for (std::size_t i = 1; i + 1 < s.breakpoints.size(); ++i) {
        cont = std::max(cont, jump([&](double x) { return th.D_Mmu(x); }, s.breakpoints[i]));
      }
    }
  }
  o.require(tau_res < 1e-9, "|tau(q_eta~) + d(1-eta)| = " + fmt(tau_res) + " (< 1e-9)");
  o.require(tangency < 1e-8, "tangency residual = " + fmt(tangency) + " (< 1e-8)");
  o.require(dual < 1e-6, "eta~ constructions differ by " + fmt(dual) + " (< 1e-6)");
  o.require(cont < 1e-9, "jump at breakpoints = " + fmt(cont) + " (< 1e-9)");
  return o;
}

Outcome homogeneous_reproduction() {
  Outcome o;
  const auto m = GibbsModel::homogeneous(1, 1.0);
  const auto forms = homogeneous_forms(1.0, 1, 0.5);
  const auto qs = arange(-2.0, 3.0, 0.05);
  std::vector<CapacityGrid> grids;
  const auto emp = mean_tau(m, 0.5, 16, 8, qs, &grids);
  double gap = 0.0;
  for (std::size_t i = 0; i < qs.size(); ++i) gap = std::max(gap, std::abs(emp.ys[i] - forms.tau_M(qs[i])));
  o.require(gap <= 0.08, "sup_q |tau_emp - tau_M| = " + fmt(gap) + " (<= 0.08)");
  const std::vector<double> Hs{1.2, 1.5, 1.8};
  std::vector<double> f(Hs.size(), 0.0);
  for (const auto& g : grids) {
    const auto ld = ld_counts(g, Hs, 0.1);
    for (std::size_t i = 0; i < Hs.size(); ++i) f[i] += ld.f.ys[i] / static_cast<double>(grids.size());
  }
  double ld_gap = 0.0;
  std::string vals;
  for (std::size_t i = 0; i < Hs.size(); ++i) {
    ld_gap = std::max(ld_gap, std::abs(f[i] - 0.5 * Hs[i]));
    vals += (i ? "," : "") + fmt(f[i], 3);
  }
  o.require(ld_gap <= 0.12, "LD at H=1.2,1.5,1.8: " + vals + ", worst gap " + fmt(ld_gap) + " (<= 0.12)");
  return o;
}

Outcome nonhomogeneous_trend() {
  Outcome o;
  const auto m = bern();
  const Theory th(m, 0.5);
  const auto qs = arange(-1.0, 2.0, 0.05);
  std::vector<double> gaps;
  for (int J : {12, 16, 20}) {
    const auto emp = mean_tau(m, 0.5, J, 4, qs);
    double gap = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i) gap = std::max(gap, std::abs(emp.ys[i] - th.tau_tilde(qs[i])));
    gaps.push_back(gap);
  }
  o.require(gaps[1] <= gaps[0] && gaps[2] <= gaps[1],
            "gaps at J=12,16,20: " + fmt(gaps[0]) + "," + fmt(gaps[1]) + "," + fmt(gaps[2]) + " nonincreasing");
  o.require(gaps[2] <= 0.15, "gap at J=20 = " + fmt(gaps[2]) + " (<= 0.15)");
  return o;
}

Outcome sampler_statistics() {
  Outcome o;
  double n20 = 0, n24 = 0;
  for (std::uint64_t s = 1; s <= 8; ++s) {
    n20 += static_cast<double>(SurvivalField({s, 0.5, 1, Backend::Hash, 24}).survivors_packed(20).size()) / 8;
    n24 += static_cast<double>(SurvivalField({s, 0.5, 1, Backend::Index, 24}).survivors_packed(24).size()) / 8;
  }
  o.require(std::abs(n20 - 1024) <= 3 * 32, "mean count j=20 (hash) = " + fmt(n20, 6) + " (1024 +- 96)");
  o.require(std::abs(n24 - 4096) <= 3 * 64, "mean count j=24 (index) = " + fmt(n24, 6) + " (4096 +- 192)");

  // two-sample chi-square on counts at j = 14, 200 seeds each
  const std::vector<std::size_t> edges{116, 123, 128, 133, 140};
  std::vector<double> ca(edges.size() + 1, 0), cb(edges.size() + 1, 0);
  auto bin = [&](std::size_t x) {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
  };
  for (std::uint64_t s = 1; s <= 200; ++s) {
    ca[bin(SurvivalField({s, 0.5, 1, Backend::Hash, 14}).survivors_packed(14).size())] += 1;
    cb[bin(SurvivalField({s + 1000, 0.5, 1, Backend::Index, 14}).survivors_packed(14).size())] += 1;
  }
  double chi = 0;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    const double e = (ca[i] + cb[i]) / 2;
    if (e > 0) chi += (ca[i] - e) * (ca[i] - e) / e + (cb[i] - e) * (cb[i] - e) / e;
  }
  o.require(chi < 15.086, "backend chi-square = " + fmt(chi) + " (< 15.086, 5 df)");

  double cov = 1.0;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    const SurvivalField f({s, 0.5, 1, Backend::Index, 30});
    cov = std::min(cov, cylinder_coverage(f, 24, static_cast<int>(std::floor(24 * (0.5 - 0.15)))));
  }
  o.require(cov >= 0.999, "min coverage j=24 = " + fmt(cov, 6) + " (>= 0.999)");

  bool mult_ok = true;
  std::uint64_t worst = 0;
  for (int j : {16, 20, 24}) {
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const SurvivalField f({s, 0.5, 1, Backend::Index, 30});
      const auto m = max_cylinder_multiplicity(f, j, j / 2);
      worst = std::max(worst, m);
      mult_ok = mult_ok && m <= static_cast<std::uint64_t>(j);
    }
  }
  o.require(mult_ok, "max multiplicity " + std::to_string(worst) + " (<= j)");
  return o;
}

// Exhaustive maxima over every node, then the same deepening rule as the grid.
std::vector<double> brute_force_grid(const GibbsModel& m, const SurvivalField& f, int J, int T, int deepen) {
  const std::uint64_t cells = std::uint64_t{1} << J;
  std::vector<double> own(cells, kNegInf);
  auto scan = [&](std::uint64_t cell, int j) {
    const int shift = j - J;
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << shift); ++k) {
      const std::uint64_t w = (cell << shift) | k;
      if (f.survives_packed(j, w)) own[cell] = std::max(own[cell], m.mu_log2_packed(j, w));
    }
  };
  for (std::uint64_t c = 0; c < cells; ++c) {
    for (int j = J; j <= T; ++j) scan(c, j);
  }
  auto neighbor_max = [&] {
    std::vector<double> v(cells);
    std::vector<std::uint64_t> nb;
    for (std::uint64_t c = 0; c < cells; ++c) {
      v[c] = own[c];
      packed::neighbors(c, J, 1, nb);
      for (auto u : nb) v[c] = std::max(v[c], own[u]);
    }
    return v;
  };
  const auto first = neighbor_max();
  std::vector<char> deepen_cell(cells, 0);
  std::vector<std::uint64_t> nb;
  for (std::uint64_t c = 0; c < cells; ++c) {
    if (first[c] != kNegInf) continue;
    packed::neighbors(c, J, 1, nb);
    nb.push_back(c);
    for (auto u : nb) {
      if (own[u] == kNegInf) deepen_cell[u] = 1;
    }
  }
  for (int j = T + 1; j <= std::min(T + deepen, f.config().max_depth); ++j) {
    for (std::uint64_t c = 0; c < cells; ++c) {
      if (deepen_cell[c]) scan(c, j);
    }
  }
  return neighbor_max();
}

Outcome small_instance_oracle() {
  Outcome o;
  int compared = 0, equal = 0;
  for (const auto& m : {bern(), markov()}) {
    for (auto backend : {Backend::Hash, Backend::Index}) {
      for (int J = 1; J <= 4; ++J) {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
          const SurvivalField f({seed, 0.5, 1, backend, 14});
          GridOptions opt;
          opt.truncation_depth = 10;
          opt.deepen_levels = 4;
          const auto g = build_capacity_grid(m, f, J, opt);
          ++compared;
          equal += g.values == brute_force_grid(m, f, J, 10, 4);
        }
      }
    }
  }
  o.require(equal == compared, std::to_string(equal) + "/" + std::to_string(compared) + " grids bit-exact");
  return o;
}

Outcome reconstruction_expectation() {
  Outcome o;
  for (double eta : {0.3, 0.7}) {
    const int len = 3, J = 18, seeds = 200;
    double sum = 0, sum2 = 0;
    for (int s = 0; s < seeds; ++s) {
      const SurvivalField f({static_cast<std::uint64_t>(s) + 1, eta, 1, Backend::Hash, J + len});
      HashQuery q(f);
      double mean = 0;
      for (std::uint64_t i = 0; i < 8; ++i) {
        mean += static_cast<double>(count_pairs(q, DyadicWord::from_packed(1, len, i), J)) / 8;
      }
      sum += mean;
      sum2 += mean * mean;
    }
    const double mean = sum / seeds;
    const double se = std::sqrt((sum2 / seeds - mean * mean) / (seeds - 1));
    const double E = expected_pairs(1, eta, len, J);
    o.require(std::abs(mean - E) <= 3 * se,
              "eta=" + fmt(eta, 2) + ": mean " + fmt(mean) + " vs E " + fmt(E) + " (3 SE = " + fmt(3 * se) + ")");
  }
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 16; ++s) seeds.push_back(s);
  const auto etas = arange(0.2, 0.8, 0.025);
  const auto t = fraction_experiment(1, etas, 4, 22, seeds, resolve_threads());
  const double crossing = t.crossing_eta();
  o.require(crossing >= 0.45 && crossing <= 0.60, "fraction crosses 1/2 at eta = " + fmt(crossing) + " (in [0.45, 0.60])");
  return o;
}

struct Captured {
  int code;
  std::string out;
};

Captured sglab(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = sglab::run(args, out, err);
  return {code, out.str()};
}

Outcome determinism() {
  Outcome o;
  const auto root = fs::temp_directory_path() / ("sgl_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const auto model = root / "bernoulli.model";
  std::ofstream(model) << "kind = bernoulli\nd = 1\nweights = 0.2, 0.8\n";

  bool ok = true;
  const auto dir = [&](const std::string& n) { return (root / n).string(); };
  ok = ok && sglab({"simulate", "--model", model.string(), "--eta", "0.5", "--J", "14", "--seed", "3", "--threads",
                    "1", "--out", dir("grid1")})
                     .code == 0;
  ok = ok && sglab({"simulate", "--model", model.string(), "--eta", "0.5", "--J", "14", "--seed", "3", "--threads",
                    "8", "--out", dir("grid8")})
                     .code == 0;
  ok = ok && sglab({"spectrum", "--grid", dir("grid1") + "/grid.bin", "--model", model.string(), "--out",
                    dir("spec")})
                     .code == 0;
  ok = ok && sglab({"compare", "--a", dir("spec") + "/lq.csv", "--a-col", "tau_emp", "--b", dir("spec") + "/lq.csv",
                    "--b-col", "tau_theory", "--out", dir("cmp")})
                     .code == 0;
  o.require(ok, "pipeline ran");
  if (!ok) return o;
  const bool threads_same = sha256_file(root / "grid1" / "grid.bin") == sha256_file(root / "grid8" / "grid.bin");
  o.require(threads_same, "1-thread and 8-thread grids identical");
  int replayed = 0, identical = 0;
  for (const char* stage : {"grid1", "spec", "cmp"}) {
    const auto r = sglab({"replay", "--manifest", dir(stage) + "/manifest.json", "--out", dir(std::string(stage) + "_r")});
    ++replayed;
    identical += r.code == 0 && r.out.find("MISMATCH") == std::string::npos;
  }
  o.require(identical == replayed, std::to_string(identical) + "/" + std::to_string(replayed) + " manifests replay byte-identically");
  fs::remove_all(root);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Legendre pair", 5, legendre_pair},
      {2, "optimization oracle", 60, optimization_oracle},
      {3, "theory self-consistency", 1, self_consistency},
      {4, "homogeneous reproduction", 180, homogeneous_reproduction},
      {5, "non-homogeneous trend", 600, nonhomogeneous_trend},
      {6, "sampler statistics", 120, sampler_statistics},
      {7, "small-instance oracle", 60, small_instance_oracle},
      {8, "reconstruction expectation", 300, reconstruction_expectation},
      {9, "determinism", 120, determinism},
  };
  bool all = true;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < c.limit_seconds, "runtime " + fmt(secs, 3) + " s (< " + fmt(c.limit_seconds, 3) + " s)");
    all = all && o.pass;
    std::printf("criterion %d: %s  %s: %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
