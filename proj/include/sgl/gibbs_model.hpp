#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sgl/dyadic_word.hpp"

namespace sgl {

enum class BaseKind { Bernoulli, Markov, Homogeneous };

std::string to_string(BaseKind kind);

struct Endpoints {
  double H_min;
  double H_s;
  double H_max;
};

/// Gibbs capacity mu(I_w) = K nu([w])^alpha 2^{-beta_bits |w|} over the
/// 2^d-ary tree, with nu Bernoulli, Markov (memory one) or uniform.
///
/// Immutable after construction; every method is const and thread-safe.
class GibbsModel {
 public:
  static GibbsModel bernoulli(int dim, std::vector<double> weights, double K = 1.0,
                              double alpha = 1.0, double beta_bits = 0.0);
  static GibbsModel markov(int dim, Eigen::VectorXd init, Eigen::MatrixXd transition,
                           double K = 1.0, double alpha = 1.0, double beta_bits = 0.0);
  /// mu(I_w) = K 2^{-beta_bits |w|}.
  static GibbsModel homogeneous(int dim, double beta_bits, double K = 1.0);

  int dim() const { return dim_; }
  int alphabet() const { return 1 << dim_; }
  BaseKind kind() const { return kind_; }
  double K() const { return K_; }
  double alpha() const { return alpha_; }
  double beta_bits() const { return beta_; }
  const std::vector<double>& weights() const { return weights_; }
  const Eigen::VectorXd& init() const { return init_; }
  const Eigen::MatrixXd& transition() const { return trans_; }

  bool is_homogeneous() const { return homogeneous_; }
  /// Non-homogeneous but with base weights within 1e-6 of uniform.
  bool is_near_homogeneous() const { return near_homogeneous_; }

  /// log2 mu(I_w); a finite number for every word.
  double mu_log2(const DyadicWord& w) const;
  /// Same value, bit for bit, for a packed word (see packed:: helpers).
  double mu_log2_packed(int depth, std::uint64_t index) const;

  /// A valid (not necessarily minimal) log2 C for the quasi-Bernoulli bounds.
  double quasi_bernoulli_log2C() const;

  /// Exact free energy tau_mu(q) = beta q + tau_nu(alpha q).
  double tau(double q) const;
  double tau_prime(double q) const;
  /// Legendre spectrum inf_q (Hq - tau(q)); -inf outside [H_min, H_max].
  double tau_star(double H) const;
  /// The q at which tau'(q) = H, clamped to [-q_cap, q_cap].
  double q_of_slope(double H) const;

  const Endpoints& endpoints() const { return endpoints_; }
  /// tau_star at H_min and at H_max.
  double D_at_H_min() const { return D_min_; }
  double D_at_H_max() const { return D_max_; }

  /// Canonical key=value text; its digest identifies the model in manifests.
  std::string canonical_text() const;

  static constexpr double kQCap = 200.0;

 private:
  GibbsModel() = default;
  void finalize();
  double tau_nu(double s) const;
  double tau_nu_prime(double s) const;
  double log2_spectral_radius(double s, double* derivative = nullptr) const;

  int dim_ = 1;
  BaseKind kind_ = BaseKind::Homogeneous;
  double K_ = 1.0;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::vector<double> weights_;
  Eigen::VectorXd init_;
  Eigen::MatrixXd trans_;

  double log2K_ = 0.0;
  std::vector<double> log2_weights_;
  Eigen::VectorXd log2_init_;
  Eigen::MatrixXd log2_trans_;

  bool homogeneous_ = false;
  bool near_homogeneous_ = false;
  /// Slope of tau for homogeneous models.
  double H_hom_ = 0.0;
  Endpoints endpoints_{};
  double D_min_ = 0.0;
  double D_max_ = 0.0;
};

inline double mu_log2(const GibbsModel& m, const DyadicWord& w) { return m.mu_log2(w); }
inline double quasi_bernoulli_log2C(const GibbsModel& m) { return m.quasi_bernoulli_log2C(); }
inline double tau_mu(const GibbsModel& m, double q) { return m.tau(q); }
inline double tau_mu_prime(const GibbsModel& m, double q) { return m.tau_prime(q); }
inline double tau_star(const GibbsModel& m, double H) { return m.tau_star(H); }
inline Endpoints endpoints(const GibbsModel& m) { return m.endpoints(); }

}  // namespace sgl
