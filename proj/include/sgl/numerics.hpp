#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>

namespace sgl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct RootOptions {
  double tol = 1e-12;
  int max_iter = 200;
  /// Bracket expansion: number of doublings tried when f(lo), f(hi) share a sign.
  int max_expand = 60;
};

/// Root of a continuous f on [lo, hi] by bisection; the endpoints must
/// bracket a sign change (f(lo)*f(hi) <= 0).
double bisect(const std::function<double(double)>& f, double lo, double hi,
              const RootOptions& opt = {});

/// Root of an increasing or decreasing f, expanding [lo, hi] outward by
/// doubling its width until a sign change appears.  `lo_fixed`/`hi_fixed`
/// forbid moving that end.
double bisect_expanding(const std::function<double(double)>& f, double lo, double hi,
                        bool lo_fixed, bool hi_fixed, const RootOptions& opt = {});

struct MinResult {
  double x;
  double fx;
};

/// Golden-section minimization of a unimodal f on [lo, hi].
MinResult golden_min(const std::function<double(double)>& f, double lo, double hi,
                     double tol = 1e-12, int max_iter = 200);

/// log2(sum 2^{x_i}) over finite entries; -inf if none.
double log2_sum_exp2(std::span<const double> xs);

/// Round-trip exact text for a double (17 significant digits, '.' decimal,
/// "inf"/"-inf"/"nan").
std::string format_real(double x);
/// Inverse of format_real; throws InvalidInput on junk.
double parse_real(const std::string& text);

}  // namespace sgl
