#pragma once

#include <array>
#include <functional>
#include <optional>

#include "sgl/gibbs_model.hpp"

namespace sgl {

/// Every derived parameter of the sampled capacity for a (model, eta) pair.
struct TheorySummary {
  double eta = 0.0;
  int dim = 1;
  bool homogeneous = false;
  double H_min = 0.0, H_s = 0.0, H_max = 0.0;
  double eta_ell = 0.0;
  double eta_r = 0.0;
  double H_ell_of_eta_ell = 0.0;
  double H_r_of_eta_r = 0.0;
  /// From the tangent construction; the argmin construction is kept below.
  double eta_tilde = 0.0;
  double eta_tilde_argmin = 0.0;
  double H_ell_tilde = 0.0;        // H_ell(eta_tilde)
  double H_tilde_ell_tilde = 0.0;  // (1/eta_tilde - 1) H_ell(eta_tilde)
  double q_eta_tilde = 0.0;
  bool q_eta_ell_finite = false;
  double q_eta_ell = 0.0;  // +inf when not finite
  /// H_ell(0), the slope of the last free-energy piece (when q_eta_ell is finite).
  double H_ell_zero = 0.0;
  /// [H_ell(eta_ell), H_ell(eta_tilde), H_ell(eta_tilde) + H~, H_max + H~].
  std::array<double, 4> breakpoints{};

  // Self-checks.
  double eta_tilde_agreement = 0.0;   // |argmin - tangent|
  double tau_at_q_eta_tilde_residual = 0.0;  // |tau(q_eta_tilde) + d(1-eta)|
  double tangency_residual = 0.0;
  double middle_coefficient_gap = 0.0;  // |q_eta_tilde - eta_tilde D(H_ell~)/H_ell~|
};

/// Closed forms for M = max over surviving descendants of mu, given eta.
///
/// Construction solves every parameter once; afterwards the object is
/// immutable and safe to share.  Two independent constructions of eta~ must
/// agree within 1e-5, otherwise NumericalError is thrown.
class Theory {
 public:
  Theory(const GibbsModel& model, double eta);

  const GibbsModel& model() const { return model_; }
  const TheorySummary& summary() const { return s_; }
  double eta() const { return s_.eta; }

  /// D_mu(H) = tau_mu^*(H).
  double D_mu(double H) const { return model_.tau_star(H); }

  /// Solution of D_mu(H) = d(1-eta)/(1-eta') on [H_min, H_s].
  double H_ell(double eta_prime) const;
  /// Solution of D_mu(H) = d(1-eta)/(1-eta') on [H_s, H_max].
  double H_r(double eta_prime) const;
  double H_tilde_ell(double eta_prime) const { return (1.0 / eta_prime - 1.0) * H_ell(eta_prime); }
  double H_tilde_r(double eta_prime) const { return (1.0 / eta_prime - 1.0) * H_r(eta_prime); }

  /// Free energy of the sampled capacity (three pieces).
  double tau_tilde(double q) const;
  /// Singularity spectrum of the sampled capacity (piecewise, -inf outside).
  double D_Mmu(double H) const;

 private:
  void solve_nonhomogeneous();
  void solve_homogeneous();
  double g(double q) const { return q * model_.tau_prime(q) - model_.tau(q); }
  double solve_branch(double eta_prime, bool left) const;

  GibbsModel model_;
  TheorySummary s_;
  double c_ = 0.0;  // d(1-eta)
};

double eta_ell(const GibbsModel& model, double eta);
double eta_r(const GibbsModel& model, double eta);

/// Closed forms for a homogeneous capacity with per-level exponent beta.
struct HomogeneousForms {
  double beta;
  int dim;
  double eta;
  double q_eta_tilde() const { return dim * eta / beta; }
  double H_tilde() const { return beta * (1.0 / eta - 1.0); }
  /// q beta/eta - d below q_eta_tilde; beta q - d eta above (the second
  /// branch is tau(q) + d(1-eta), continuous at the transition).
  double tau_M(double q) const;
  /// (d eta / beta) H on [beta, beta/eta], -inf elsewhere.
  double D_M(double H) const;
};

HomogeneousForms homogeneous_forms(double beta, int dim, double eta);

struct BruteForceOptions {
  int alpha_points = 120;
  int eta_points = 120;
  int delta_points = 120;
  int starts = 5;
  int max_iter = 400;
};

struct BruteForceResult {
  double value = -std::numeric_limits<double>::infinity();
  double alpha = 0.0;
  double eta_prime = 0.0;
  double delta = 0.0;
  /// 'l' or 'r' for the branch that attains the value.
  char branch = 'l';
};

/// Numerical sup of D_mu(alpha)/delta over alpha in [H_min, H_max],
/// eta' in [eta_i, eta] minus {0}, 1 <= delta <= 1/eta' and
/// (alpha + H~_i(eta'))/delta <= H, for i in {l, r}.  A test oracle.
BruteForceResult D_bruteforce(const Theory& theory, double H, const BruteForceOptions& opt = {});

}  // namespace sgl
