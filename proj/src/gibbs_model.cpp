#include "sgl/gibbs_model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <sstream>

#include "sgl/errors.hpp"
#include "sgl/log.hpp"
#include "sgl/numerics.hpp"

namespace sgl {

namespace {

constexpr double kEqualTol = 1e-12;
constexpr double kNearTol = 1e-6;
constexpr double kStochasticTol = 1e-9;

void check_common(int dim, double K, double alpha, double beta) {
  if (dim < 1 || dim > kMaxDimension) throw InvalidInput("dimension out of range");
  if (!(K > 0.0) || !std::isfinite(K)) throw InvalidInput("K must be positive and finite");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidInput("alpha must be nonnegative");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidInput("beta_bits must be nonnegative");
  if (alpha == 0.0 && beta == 0.0) throw InvalidInput("(alpha, beta_bits) must not both be zero");
}

void check_distribution(const double* p, int n, const std::string& what) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(p[i] > 0.0) || !std::isfinite(p[i])) throw InvalidInput(what + ": entries must be positive");
    s += p[i];
  }
  if (std::abs(s - 1.0) > kStochasticTol) throw InvalidInput(what + ": entries must sum to 1");
}

double spread(const double* p, int n) {
  auto [lo, hi] = std::minmax_element(p, p + n);
  return *hi - *lo;
}

}  // namespace

std::string to_string(BaseKind kind) {
  switch (kind) {
    case BaseKind::Bernoulli: return "bernoulli";
    case BaseKind::Markov: return "markov";
    case BaseKind::Homogeneous: return "homogeneous";
  }
  return "?";
}

GibbsModel GibbsModel::bernoulli(int dim, std::vector<double> weights, double K, double alpha,
                                 double beta_bits) {
  check_common(dim, K, alpha, beta_bits);
  if (static_cast<int>(weights.size()) != (1 << dim)) {
    throw InvalidInput("bernoulli model needs 2^d weights");
  }
  check_distribution(weights.data(), static_cast<int>(weights.size()), "weights");
  GibbsModel m;
  m.dim_ = dim;
  m.kind_ = BaseKind::Bernoulli;
  m.K_ = K;
  m.alpha_ = alpha;
  m.beta_ = beta_bits;
  m.weights_ = std::move(weights);
  m.finalize();
  return m;
}

GibbsModel GibbsModel::markov(int dim, Eigen::VectorXd init, Eigen::MatrixXd transition, double K,
                              double alpha, double beta_bits) {
  check_common(dim, K, alpha, beta_bits);
  const int n = 1 << dim;
  if (init.size() != n || transition.rows() != n || transition.cols() != n) {
    throw InvalidInput("markov model needs a 2^d initial vector and a 2^d x 2^d matrix");
  }
  check_distribution(init.data(), n, "init");
  for (int a = 0; a < n; ++a) {
    Eigen::VectorXd row = transition.row(a).transpose();
    check_distribution(row.data(), n, "row " + std::to_string(a));
  }
  GibbsModel m;
  m.dim_ = dim;
  m.kind_ = BaseKind::Markov;
  m.K_ = K;
  m.alpha_ = alpha;
  m.beta_ = beta_bits;
  m.init_ = std::move(init);
  m.trans_ = std::move(transition);
  m.finalize();
  return m;
}

GibbsModel GibbsModel::homogeneous(int dim, double beta_bits, double K) {
  check_common(dim, K, 0.0, beta_bits);
  if (!(beta_bits > 0.0)) throw InvalidInput("homogeneous model needs beta_bits > 0");
  GibbsModel m;
  m.dim_ = dim;
  m.kind_ = BaseKind::Homogeneous;
  m.K_ = K;
  m.alpha_ = 0.0;
  m.beta_ = beta_bits;
  m.finalize();
  return m;
}

void GibbsModel::finalize() {
  const int n = alphabet();
  log2K_ = std::log2(K_);
  bool uniform_base = false;
  double base_spread = 0.0;
  if (kind_ == BaseKind::Bernoulli) {
    log2_weights_.resize(n);
    for (int i = 0; i < n; ++i) log2_weights_[i] = std::log2(weights_[i]);
    base_spread = spread(weights_.data(), n);
    uniform_base = base_spread <= kEqualTol;
  } else if (kind_ == BaseKind::Markov) {
    log2_init_ = init_.unaryExpr([](double x) { return std::log2(x); });
    log2_trans_ = trans_.unaryExpr([](double x) { return std::log2(x); });
    uniform_base = true;
    for (int a = 0; a < n; ++a) {
      Eigen::VectorXd row = trans_.row(a).transpose();
      base_spread = std::max(base_spread, spread(row.data(), n));
      if (std::abs(row.maxCoeff() - 1.0 / n) > kEqualTol || std::abs(row.minCoeff() - 1.0 / n) > kEqualTol) {
        uniform_base = false;
      }
    }
  }
  homogeneous_ = kind_ == BaseKind::Homogeneous || alpha_ == 0.0 || uniform_base;
  near_homogeneous_ = !homogeneous_ && base_spread < kNearTol;
  if (near_homogeneous_) {
    warn("model is within 1e-6 of homogeneous; spectrum breakpoints collide numerically");
  }

  if (homogeneous_) {
    H_hom_ = (kind_ == BaseKind::Homogeneous || alpha_ == 0.0) ? beta_ : beta_ + alpha_ * dim_;
    endpoints_ = {H_hom_, H_hom_, H_hom_};
    D_min_ = D_max_ = dim_;
    return;
  }

  if (kind_ == BaseKind::Bernoulli) {
    const double pmax = *std::max_element(weights_.begin(), weights_.end());
    const double pmin = *std::min_element(weights_.begin(), weights_.end());
    int nmax = 0, nmin = 0;
    for (double p : weights_) {
      if (std::abs(p - pmax) <= kEqualTol) ++nmax;
      if (std::abs(p - pmin) <= kEqualTol) ++nmin;
    }
    endpoints_.H_min = beta_ + alpha_ * (-std::log2(pmax));
    endpoints_.H_max = beta_ + alpha_ * (-std::log2(pmin));
    endpoints_.H_s = tau_prime(0.0);
    D_min_ = std::log2(static_cast<double>(nmax));
    D_max_ = std::log2(static_cast<double>(nmin));
  } else {
    endpoints_.H_min = tau_prime(kQCap);
    endpoints_.H_max = tau_prime(-kQCap);
    endpoints_.H_s = tau_prime(0.0);
    D_min_ = std::clamp(kQCap * endpoints_.H_min - tau(kQCap), 0.0, static_cast<double>(dim_));
    D_max_ = std::clamp(-kQCap * endpoints_.H_max - tau(-kQCap), 0.0, static_cast<double>(dim_));
  }
}

namespace {

// Letter or transition counts for one word, accumulated in a fixed order so
// that packed and unpacked evaluation agree bit for bit.
struct Counts {
  std::array<std::uint64_t, 256> c{};
  int first = -1;
};

}  // namespace

double GibbsModel::mu_log2(const DyadicWord& w) const {
  if (w.dim() != dim_) throw InvalidInput("word dimension does not match the model");
  const int j = w.depth();
  if (kind_ == BaseKind::Homogeneous || j == 0) return log2K_ - beta_ * j;
  const int n = alphabet();
  Counts counts;
  auto letters = w.letters();
  if (kind_ == BaseKind::Bernoulli) {
    for (auto l : letters) ++counts.c[l];
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += static_cast<double>(counts.c[a]) * log2_weights_[a];
    return log2K_ + alpha_ * s - beta_ * j;
  }
  for (int k = 1; k < j; ++k) ++counts.c[letters[k - 1] * n + letters[k]];
  double s = log2_init_[letters[0]];
  for (int a = 0; a < n * n; ++a) {
    if (counts.c[a] != 0) s += static_cast<double>(counts.c[a]) * log2_trans_(a / n, a % n);
  }
  return log2K_ + alpha_ * s - beta_ * j;
}

double GibbsModel::mu_log2_packed(int depth, std::uint64_t index) const {
  if (kind_ == BaseKind::Homogeneous || depth == 0) return log2K_ - beta_ * depth;
  const int n = alphabet();
  Counts counts;
  if (kind_ == BaseKind::Bernoulli) {
    if (dim_ == 1) {
      counts.c[1] = static_cast<std::uint64_t>(std::popcount(index));
      counts.c[0] = static_cast<std::uint64_t>(depth) - counts.c[1];
    } else {
      for (int k = 0; k < depth; ++k) ++counts.c[packed::letter(index, depth, k, dim_)];
    }
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += static_cast<double>(counts.c[a]) * log2_weights_[a];
    return log2K_ + alpha_ * s - beta_ * depth;
  }
  int prev = packed::letter(index, depth, 0, dim_);
  double s = log2_init_[prev];
  for (int k = 1; k < depth; ++k) {
    const int cur = packed::letter(index, depth, k, dim_);
    ++counts.c[prev * n + cur];
    prev = cur;
  }
  for (int a = 0; a < n * n; ++a) {
    if (counts.c[a] != 0) s += static_cast<double>(counts.c[a]) * log2_trans_(a / n, a % n);
  }
  return log2K_ + alpha_ * s - beta_ * depth;
}

double GibbsModel::quasi_bernoulli_log2C() const {
  double c = std::abs(log2K_);
  if (kind_ == BaseKind::Markov && alpha_ > 0.0) {
    const int n = alphabet();
    double worst = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) worst = std::max(worst, std::abs(log2_trans_(a, b) - log2_init_[b]));
    }
    c += alpha_ * worst;
  }
  return c;
}

namespace {

// Perron root and vector of a nonnegative irreducible matrix.  Stops when the
// Collatz-Wielandt bracket min/max (Ax)_i/x_i is tight to 1e-13.  Plain
// power steps (shifted by an eigenvalue estimate, to damp eigenvalues near
// -rho) are followed by inverse steps shifted just above the bracket once
// those stall, e.g. for complex eigenvalues close to the Perron root.
double perron(const Eigen::MatrixXd& A, Eigen::VectorXd& x) {
  const int n = static_cast<int>(A.rows());
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  const double shift = std::max(0.0, es.eigenvalues().real().maxCoeff());
  x = Eigen::VectorXd::Ones(n);
  for (int it = 0; it < 10000; ++it) {
    const Eigen::VectorXd y = A * x;
    const Eigen::ArrayXd ratio = y.array() / x.array();
    const double lo = ratio.minCoeff();
    const double hi = ratio.maxCoeff();
    if (hi - lo <= 1e-13 * hi) return 0.5 * (lo + hi);
    if (it >= 20) {
      const double sigma = hi + 1e-3 * (hi - lo);
      Eigen::MatrixXd S = -A;
      S.diagonal().array() += sigma;
      const Eigen::VectorXd z = S.partialPivLu().solve(x);
      if (z.allFinite() && (z.array() > 0.0).all()) {
        x = z / z.maxCoeff();
        continue;
      }
    }
    const Eigen::VectorXd z = y + shift * x;
    x = z / z.maxCoeff();
  }
  throw NumericalError("Perron iteration did not converge");
}

}  // namespace

double GibbsModel::log2_spectral_radius(double s, double* derivative) const {
  // Entrywise power A_s = pi^s, rescaled so its largest entry is 1.
  Eigen::MatrixXd L = s * log2_trans_;
  const double m = L.maxCoeff();
  const Eigen::MatrixXd A = (L.array() - m).unaryExpr([](double x) { return std::exp2(x); }).matrix();
  Eigen::VectorXd v, u;
  double rho;
  try {
    rho = perron(A, v);
    if (derivative) {
      perron(A.transpose(), u);
      // d log2 rho / ds = u' (A o log2 pi) v / u' A v for left/right Perron vectors.
      const Eigen::MatrixXd dA = A.cwiseProduct(log2_trans_);
      *derivative = u.dot(dA * v) / u.dot(A * v);
    }
  } catch (const NumericalError&) {
    throw NumericalError("Perron iteration did not converge for s = " + format_real(s));
  }
  return m + std::log2(rho);
}

double GibbsModel::tau_nu(double s) const {
  switch (kind_) {
    case BaseKind::Homogeneous: return -static_cast<double>(dim_);
    case BaseKind::Bernoulli: {
      std::array<double, 16> l{};
      const int n = alphabet();
      for (int i = 0; i < n; ++i) l[i] = s * log2_weights_[i];
      return -log2_sum_exp2(std::span<const double>(l.data(), n));
    }
    case BaseKind::Markov: return -log2_spectral_radius(s);
  }
  return 0.0;
}

double GibbsModel::tau_nu_prime(double s) const {
  switch (kind_) {
    case BaseKind::Homogeneous: return 0.0;
    case BaseKind::Bernoulli: {
      const int n = alphabet();
      double m = kNegInf;
      for (int i = 0; i < n; ++i) m = std::max(m, s * log2_weights_[i]);
      double num = 0.0, den = 0.0;
      for (int i = 0; i < n; ++i) {
        const double w = std::exp2(s * log2_weights_[i] - m);
        num += w * log2_weights_[i];
        den += w;
      }
      return -num / den;
    }
    case BaseKind::Markov: {
      double d = 0.0;
      log2_spectral_radius(s, &d);
      return -d;
    }
  }
  return 0.0;
}

double GibbsModel::tau(double q) const {
  if (kind_ == BaseKind::Homogeneous) return beta_ * q - dim_;
  return beta_ * q + tau_nu(alpha_ * q);
}

double GibbsModel::tau_prime(double q) const {
  if (kind_ == BaseKind::Homogeneous) return beta_;
  if (kind_ == BaseKind::Markov) {
    // Differencing in q keeps the step fixed at 1e-5 whatever alpha is.
    const double h = 1e-5;
    auto central = [&](double step) { return (tau(q + step) - tau(q - step)) / (2.0 * step); };
    return (4.0 * central(h / 2) - central(h)) / 3.0;
  }
  return beta_ + alpha_ * tau_nu_prime(alpha_ * q);
}

double GibbsModel::q_of_slope(double H) const {
  auto f = [&](double q) { return tau_prime(q) - H; };
  if (f(kQCap) >= 0.0) return kQCap;
  if (f(-kQCap) <= 0.0) return -kQCap;
  return bisect(f, -kQCap, kQCap, {1e-12, 200, 0});
}

double GibbsModel::tau_star(double H) const {
  if (homogeneous_) return std::abs(H - H_hom_) <= 1e-9 ? static_cast<double>(dim_) : kNegInf;
  const auto& e = endpoints_;
  if (H < e.H_min - 1e-12 || H > e.H_max + 1e-12) return kNegInf;
  if (std::abs(H - e.H_min) <= 1e-12) return D_min_;
  if (std::abs(H - e.H_max) <= 1e-12) return D_max_;
  const double q = q_of_slope(H);
  return H * q - tau(q);
}

std::string GibbsModel::canonical_text() const {
  std::ostringstream os;
  os << "kind=" << to_string(kind_) << "\nd=" << dim_ << '\n';
  auto list = [&](const double* p, int n) {
    for (int i = 0; i < n; ++i) os << (i ? "," : "") << format_real(p[i]);
  };
  const int n = alphabet();
  if (kind_ == BaseKind::Bernoulli) {
    os << "weights=";
    list(weights_.data(), n);
    os << '\n';
  } else if (kind_ == BaseKind::Markov) {
    os << "init=";
    list(init_.data(), n);
    os << "\nrows=";
    for (int a = 0; a < n; ++a) {
      Eigen::VectorXd row = trans_.row(a).transpose();
      if (a) os << ';';
      list(row.data(), n);
    }
    os << '\n';
  }
  os << "K=" << format_real(K_) << "\nalpha=" << format_real(alpha_)
     << "\nbeta_bits=" << format_real(beta_) << '\n';
  return os.str();
}

}  // namespace sgl
