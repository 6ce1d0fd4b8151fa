#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgl/capacity_grid.hpp"

namespace sgl {

enum class CurveKind { Tau, TauStar, D, FLower, FUpper };

std::string to_string(CurveKind kind);

/// Sampled function with strictly increasing abscissae; ys may be -inf.
struct Curve {
  std::vector<double> xs;
  std::vector<double> ys;
  CurveKind kind = CurveKind::Tau;
  std::map<std::string, std::string> meta;

  std::size_t size() const { return xs.size(); }
  /// Throws InvalidInput if xs is not strictly increasing or sizes differ.
  void validate() const;
};

/// Evenly spaced grid from lo to hi inclusive (count points).
std::vector<double> linspace(double lo, double hi, std::size_t count);
/// lo, lo+step, ... up to hi (inclusive within step/2).
std::vector<double> arange(double lo, double hi, double step);

/// Finite-volume free energy tau_J(q) = -(1/J) log2 sum 2^{q value} over
/// finite cells.  Throws InvalidInput if every cell is -inf.
Curve lq_spectrum(const CapacityGrid& grid, const std::vector<double>& q_grid, int threads = 1);

struct LdCounts {
  std::vector<std::uint64_t> counts;
  /// log2(count)/J per bin, -inf for empty bins.
  Curve f;
};

/// Counts cells with -value/J in [H - eps, H + eps] for each H.
LdCounts ld_counts(const CapacityGrid& grid, const std::vector<double>& H_bins, double epsilon);

/// Lower and upper envelopes of the estimates over a ladder of grids.
std::pair<Curve, Curve> ld_envelope(const std::vector<const CapacityGrid*>& ladder,
                                    const std::vector<double>& H_bins, double epsilon);

/// Point evaluator of the sampled function, used for refinement when known.
using Evaluator = std::function<double(double)>;

/// inf over x of (H x - f(x)) for a concave sample f, at each H.
///
/// The minimizing sample is refined by golden-section search between its
/// neighbors, using `exact` when given and a local degree-7 interpolant
/// otherwise.  Slopes outside the extreme secant slopes give -inf.
Curve legendre_conjugate_numeric(const Curve& curve, const std::vector<double>& H_grid,
                                 const Evaluator& exact = {});
double conjugate_at(const Curve& curve, double H, const Evaluator& exact = {});

/// Throws InvalidInput naming the first triple that breaks concavity by
/// more than `tol` in the chord condition.
void check_concave(const Curve& curve, double tol = 1e-9);

struct CurveGap {
  double sup = 0.0;
  double mean = 0.0;
  double x_at_sup = 0.0;
  std::size_t points = 0;
};

/// Gaps between two curves sampled on identical abscissae.  Points where
/// both are -inf count as zero gap; where only one is, as +inf.
CurveGap compare_curves(const Curve& a, const Curve& b);
/// Same, restricted to xs in [lo, hi].
CurveGap compare_curves(const Curve& a, const Curve& b, double lo, double hi);

}  // namespace sgl
