#include "sgl/theory.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sgl/errors.hpp"
#include "sgl/numerics.hpp"

namespace sgl {

namespace {

constexpr double kQCap = GibbsModel::kQCap;
const RootOptions kRoot{1e-12, 200, 60};

}  // namespace

double eta_ell(const GibbsModel& model, double eta) {
  if (model.is_homogeneous()) return eta;
  const double c = model.dim() * (1.0 - eta);
  const double D = model.D_at_H_min();
  return D <= c ? 0.0 : 1.0 - c / D;
}

double eta_r(const GibbsModel& model, double eta) {
  if (model.is_homogeneous()) return eta;
  const double c = model.dim() * (1.0 - eta);
  const double D = model.D_at_H_max();
  return D <= c ? 0.0 : 1.0 - c / D;
}

HomogeneousForms homogeneous_forms(double beta, int dim, double eta) {
  if (!(beta > 0.0)) throw InvalidInput("homogeneous forms need beta > 0");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("eta must lie in (0, 1)");
  return {beta, dim, eta};
}

double HomogeneousForms::tau_M(double q) const {
  if (q <= q_eta_tilde()) return q * beta / eta - dim;
  return q * beta - dim * eta;
}

double HomogeneousForms::D_M(double H) const {
  const double tol = 1e-12 * std::max(1.0, H);
  if (H < beta - tol || H > beta / eta + tol) return kNegInf;
  return dim * eta / beta * H;
}

Theory::Theory(const GibbsModel& model, double eta) : model_(model) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("eta must lie in (0, 1)");
  s_.eta = eta;
  s_.dim = model.dim();
  s_.homogeneous = model.is_homogeneous();
  const auto& e = model.endpoints();
  s_.H_min = e.H_min;
  s_.H_s = e.H_s;
  s_.H_max = e.H_max;
  c_ = model.dim() * (1.0 - eta);
  if (s_.homogeneous) {
    solve_homogeneous();
  } else {
    solve_nonhomogeneous();
  }
}

void Theory::solve_homogeneous() {
  const auto h = homogeneous_forms(s_.H_s, s_.dim, s_.eta);
  s_.eta_ell = s_.eta_r = s_.eta_tilde = s_.eta_tilde_argmin = s_.eta;
  s_.H_ell_of_eta_ell = s_.H_r_of_eta_r = s_.H_ell_tilde = h.beta;
  s_.H_tilde_ell_tilde = h.H_tilde();
  s_.q_eta_tilde = h.q_eta_tilde();
  s_.q_eta_ell_finite = false;
  s_.q_eta_ell = kInf;
  s_.H_ell_zero = h.beta;
  s_.breakpoints = {h.beta, h.beta, h.beta / s_.eta, h.beta / s_.eta};
  s_.tau_at_q_eta_tilde_residual = std::abs(model_.tau(s_.q_eta_tilde) + c_);
}

double Theory::solve_branch(double eta_prime, bool left) const {
  const double lo = left ? s_.eta_ell : s_.eta_r;
  if (eta_prime < lo - 1e-12 || eta_prime > s_.eta + 1e-12) {
    throw InvalidInput("eta' = " + format_real(eta_prime) + " outside [" + format_real(lo) + ", " +
                       format_real(s_.eta) + "]");
  }
  const double target = c_ / (1.0 - std::min(eta_prime, s_.eta));
  if (target >= s_.dim) return s_.H_s;
  auto f = [&](double q) { return g(q) - target; };
  if (left) {
    if (f(kQCap) >= 0.0) return s_.H_min;
    return model_.tau_prime(bisect(f, 0.0, kQCap, kRoot));
  }
  if (f(-kQCap) >= 0.0) return s_.H_max;
  return model_.tau_prime(bisect(f, -kQCap, 0.0, kRoot));
}

double Theory::H_ell(double eta_prime) const {
  if (s_.homogeneous) return s_.H_s;
  return solve_branch(eta_prime, true);
}

double Theory::H_r(double eta_prime) const {
  if (s_.homogeneous) return s_.H_s;
  return solve_branch(eta_prime, false);
}

void Theory::solve_nonhomogeneous() {
  s_.eta_ell = eta_ell(model_, s_.eta);
  s_.eta_r = eta_r(model_, s_.eta);

  // Tangent construction: tau(q) = -d(1-eta) on q > 0.
  const double q = bisect_expanding([&](double x) { return model_.tau(x) + c_; }, 0.0, 1.0, true, false, kRoot);
  const double H = model_.tau_prime(q);
  const double D = g(q);
  s_.q_eta_tilde = q;
  s_.H_ell_tilde = H;
  s_.eta_tilde = 1.0 - c_ / D;
  s_.H_tilde_ell_tilde = (1.0 / s_.eta_tilde - 1.0) * H;

  // Argmin construction over (eta_ell, eta].
  const double lo = s_.eta_ell > 0.0 ? s_.eta_ell : 1e-6 * s_.eta;
  const auto m = golden_min([&](double e) { return H_tilde_ell(e); }, lo, s_.eta, 1e-12);
  s_.eta_tilde_argmin = m.x;
  s_.eta_tilde_agreement = std::abs(m.x - s_.eta_tilde);
  if (s_.eta_tilde_agreement > 1e-5) {
    throw NumericalError("the two constructions of eta~ disagree: argmin " + format_real(m.x) + " vs tangent " +
                         format_real(s_.eta_tilde));
  }

  if (s_.eta_ell > 0.0) {
    s_.q_eta_ell_finite = false;
    s_.q_eta_ell = kInf;
    s_.H_ell_of_eta_ell = s_.H_min;
    s_.H_ell_zero = s_.H_min;
  } else {
    try {
      s_.q_eta_ell = bisect_expanding([&](double x) { return g(x) - c_; }, q, q + 1.0, true, false, kRoot);
      s_.q_eta_ell_finite = true;
      s_.H_ell_zero = model_.tau_prime(s_.q_eta_ell);
    } catch (const NumericalError&) {
      // D_mu(H_min) equals d(1-eta) exactly: the crossing sits at infinity.
      s_.q_eta_ell_finite = false;
      s_.q_eta_ell = kInf;
      s_.H_ell_zero = s_.H_min;
    }
    s_.H_ell_of_eta_ell = s_.H_ell_zero;
  }
  s_.H_r_of_eta_r = s_.eta_r > 0.0 ? s_.H_max : H_r(0.0);
  s_.breakpoints = {s_.H_ell_of_eta_ell, H, H + s_.H_tilde_ell_tilde, s_.H_max + s_.H_tilde_ell_tilde};

  s_.tau_at_q_eta_tilde_residual = std::abs(model_.tau(q) + c_);
  const double h = 1e-4;
  auto d1 = [&](double step) { return (D_mu(H + step) - D_mu(H - step)) / (2.0 * step); };
  const double slope = (4.0 * d1(h / 2) - d1(h)) / 3.0;
  const double DH = D_mu(H);
  s_.tangency_residual = std::abs(slope - (DH - c_) / H);
  s_.middle_coefficient_gap = std::abs(q - s_.eta_tilde * DH / H);
}

double Theory::tau_tilde(double q) const {
  if (s_.homogeneous) return homogeneous_forms(s_.H_s, s_.dim, s_.eta).tau_M(q);
  if (q <= s_.q_eta_tilde) return model_.tau(q) + s_.H_tilde_ell_tilde * q;
  if (s_.q_eta_ell_finite && q >= s_.q_eta_ell) return s_.H_ell_zero * q;
  return model_.tau(q) + c_;
}

double Theory::D_Mmu(double H) const {
  if (s_.homogeneous) return homogeneous_forms(s_.H_s, s_.dim, s_.eta).D_M(H);
  const auto& b = s_.breakpoints;
  if (H < b[0] || H > b[3]) return kNegInf;
  if (H <= b[1]) return D_mu(H) - c_;
  if (H <= b[2]) return s_.q_eta_tilde * H;
  return D_mu(H - s_.H_tilde_ell_tilde);
}

namespace {

struct Candidate {
  double score;  // objective when feasible, else -violation - 1e6
  double alpha, eta_prime;
  char branch;
};

}  // namespace

BruteForceResult D_bruteforce(const Theory& theory, double H, const BruteForceOptions& opt) {
  const auto& s = theory.summary();
  const GibbsModel& model = theory.model();
  BruteForceResult best;
  if (!(H >= 0.0)) throw InvalidInput("H must be nonnegative");

  struct Branch {
    char name;
    double lo;
    std::vector<double> etas, Ht;
  };
  std::vector<Branch> branches;
  for (char name : {'l', 'r'}) {
    Branch br{name, name == 'l' ? s.eta_ell : s.eta_r, {}, {}};
    for (int k = 0; k < opt.eta_points; ++k) {
      // Zero is excluded from the eta' range, so a zero lower end is approached from above.
      const double e = br.lo > 0.0 ? br.lo + (s.eta - br.lo) * k / (opt.eta_points - 1)
                                   : s.eta * (k + 1) / opt.eta_points;
      br.etas.push_back(e);
      br.Ht.push_back(name == 'l' ? theory.H_tilde_ell(e) : theory.H_tilde_r(e));
    }
    branches.push_back(std::move(br));
  }
  std::vector<double> alphas, Ds;
  for (int k = 0; k < opt.alpha_points; ++k) {
    const double a = s.H_min + (s.H_max - s.H_min) * k / std::max(1, opt.alpha_points - 1);
    alphas.push_back(a);
    Ds.push_back(model.tau_star(a));
  }

  auto consider = [&](double value, double a, double e, double delta, char br) {
    if (value > best.value) best = {value, a, e, delta, br};
  };

  // Coarse grid over (alpha, eta', delta).
  std::vector<Candidate> cands;
  for (const auto& br : branches) {
    for (std::size_t ie = 0; ie < br.etas.size(); ++ie) {
      const double e = br.etas[ie];
      for (std::size_t ia = 0; ia < alphas.size(); ++ia) {
        const double a = alphas[ia];
        if (Ds[ia] == kNegInf) continue;
        double best_local = kNegInf, viol = kInf, best_delta = 1.0;
        for (int id = 0; id < opt.delta_points; ++id) {
          const double delta = 1.0 + (1.0 / e - 1.0) * id / std::max(1, opt.delta_points - 1);
          const double excess = (a + br.Ht[ie]) / delta - H;
          if (excess <= 0.0) {
            if (Ds[ia] / delta > best_local) {
              best_local = Ds[ia] / delta;
              best_delta = delta;
            }
          } else {
            viol = std::min(viol, excess);
          }
        }
        if (best_local > kNegInf) {
          consider(best_local, a, e, best_delta, br.name);
          cands.push_back({best_local, a, e, br.name});
        } else {
          cands.push_back({-1e6 - viol, a, e, br.name});
        }
      }
    }
  }
  std::partial_sort(cands.begin(), cands.begin() + std::min<std::size_t>(opt.starts, cands.size()), cands.end(),
                    [](const Candidate& x, const Candidate& y) { return x.score > y.score; });
  cands.resize(std::min<std::size_t>(opt.starts, cands.size()));

  // Nelder-Mead in (alpha, eta') with delta set to its smallest feasible value.
  for (const auto& start : cands) {
    const Branch& br = start.branch == 'l' ? branches[0] : branches[1];
    const double e_lo = br.lo > 0.0 ? br.lo : 1e-9;
    auto project = [&](std::array<double, 2> x) {
      x[0] = std::clamp(x[0], s.H_min, s.H_max);
      x[1] = std::clamp(x[1], e_lo, s.eta);
      return x;
    };
    auto objective = [&](const std::array<double, 2>& raw) {
      const auto x = project(raw);
      const double Dx = model.tau_star(x[0]);
      if (Dx == kNegInf) return 1e9;
      const double Ht = br.name == 'l' ? theory.H_tilde_ell(x[1]) : theory.H_tilde_r(x[1]);
      const double delta = std::max(1.0, (x[0] + Ht) / H);
      const double cap = 1.0 / x[1];
      if (delta > cap) return 1e3 + (delta - cap);
      consider(Dx / delta, x[0], x[1], delta, br.name);
      return -Dx / delta;
    };
    const double sa = 0.02 * (s.H_max - s.H_min) + 1e-6;
    const double se = 0.02 * (s.eta - e_lo) + 1e-9;
    std::array<std::array<double, 2>, 3> simplex = {{{start.alpha, start.eta_prime},
                                                     {start.alpha + sa, start.eta_prime},
                                                     {start.alpha, start.eta_prime + se}}};
    std::array<double, 3> fv{};
    for (int i = 0; i < 3; ++i) fv[i] = objective(simplex[i]);
    for (int it = 0; it < opt.max_iter; ++it) {
      std::array<int, 3> idx = {0, 1, 2};
      std::sort(idx.begin(), idx.end(), [&](int x, int y) { return fv[x] < fv[y]; });
      const auto b = simplex[idx[0]], m = simplex[idx[1]], w = simplex[idx[2]];
      const double fb = fv[idx[0]], fm = fv[idx[1]], fw = fv[idx[2]];
      if (std::abs(fw - fb) < 1e-14 && std::abs(w[0] - b[0]) + std::abs(w[1] - b[1]) < 1e-12) break;
      const std::array<double, 2> cen = {(b[0] + m[0]) / 2, (b[1] + m[1]) / 2};
      auto along = [&](double t) { return std::array<double, 2>{cen[0] + t * (w[0] - cen[0]), cen[1] + t * (w[1] - cen[1])}; };
      const auto r = along(-1.0);
      const double fr = objective(r);
      if (fr < fb) {
        const auto ex = along(-2.0);
        const double fe = objective(ex);
        if (fe < fr) {
          simplex[idx[2]] = ex;
          fv[idx[2]] = fe;
        } else {
          simplex[idx[2]] = r;
          fv[idx[2]] = fr;
        }
      } else if (fr < fm) {
        simplex[idx[2]] = r;
        fv[idx[2]] = fr;
      } else {
        const auto ct = fr < fw ? along(-0.5) : along(0.5);
        const double fc = objective(ct);
        if (fc < std::min(fr, fw)) {
          simplex[idx[2]] = ct;
          fv[idx[2]] = fc;
        } else {
          for (int i : {idx[1], idx[2]}) {
            simplex[i] = {b[0] + 0.5 * (simplex[i][0] - b[0]), b[1] + 0.5 * (simplex[i][1] - b[1])};
            fv[i] = objective(simplex[i]);
          }
        }
      }
    }
  }
  return best;
}

}  // namespace sgl
