#include "sgl/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sgl/numerics.hpp"
#include "sgl/parallel.hpp"

namespace sgl {

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::Tau: return "tau";
    case CurveKind::TauStar: return "tau_star";
    case CurveKind::D: return "D";
    case CurveKind::FLower: return "f_lower";
    case CurveKind::FUpper: return "f_upper";
  }
  return "?";
}

void Curve::validate() const {
  if (xs.size() != ys.size()) throw InvalidInput("curve has mismatched xs/ys sizes");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw InvalidInput("curve abscissae are not strictly increasing at " + format_real(xs[i]));
  }
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return out;
}

std::vector<double> arange(double lo, double hi, double step) {
  if (!(step > 0.0)) throw InvalidInput("grid step must be positive");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + step * static_cast<double>(i));
  return out;
}

namespace {

// Distinct finite values with multiplicities, in increasing order.
std::vector<std::pair<double, double>> value_histogram(const std::vector<double>& values) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) {
    if (x != kNegInf) v.push_back(x);
  }
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t k = i;
    while (k < v.size() && v[k] == v[i]) ++k;
    out.emplace_back(v[i], static_cast<double>(k - i));
    i = k;
  }
  return out;
}

}  // namespace

Curve lq_spectrum(const CapacityGrid& grid, const std::vector<double>& q_grid, int threads) {
  const auto hist = value_histogram(grid.values);
  if (hist.empty()) throw InvalidInput("every cell of the grid is empty; the free energy is undefined");
  Curve c;
  c.kind = CurveKind::Tau;
  c.xs = q_grid;
  c.ys.assign(q_grid.size(), 0.0);
  c.meta["J"] = std::to_string(grid.J);
  c.meta["seed"] = std::to_string(grid.provenance.field.seed);
  parallel_for(q_grid.size(), threads, [&](std::size_t b, std::size_t e, int) {
    std::vector<double> terms(hist.size());
    for (std::size_t i = b; i < e; ++i) {
      const double q = q_grid[i];
      for (std::size_t k = 0; k < hist.size(); ++k) terms[k] = q * hist[k].first + std::log2(hist[k].second);
      c.ys[i] = -log2_sum_exp2(terms) / grid.J;
    }
  });
  c.validate();
  return c;
}

LdCounts ld_counts(const CapacityGrid& grid, const std::vector<double>& H_bins, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  std::vector<double> h;
  h.reserve(grid.values.size());
  for (double v : grid.values) {
    if (v != kNegInf) h.push_back(-v / grid.J);
  }
  std::sort(h.begin(), h.end());
  LdCounts out;
  out.f.kind = CurveKind::D;
  out.f.xs = H_bins;
  out.f.meta["J"] = std::to_string(grid.J);
  out.f.meta["epsilon"] = format_real(epsilon);
  for (double H : H_bins) {
    const auto lo = std::lower_bound(h.begin(), h.end(), H - epsilon);
    const auto hi = std::upper_bound(h.begin(), h.end(), H + epsilon);
    const auto n = static_cast<std::uint64_t>(hi - lo);
    out.counts.push_back(n);
    out.f.ys.push_back(n == 0 ? kNegInf : std::log2(static_cast<double>(n)) / grid.J);
  }
  out.f.validate();
  return out;
}

std::pair<Curve, Curve> ld_envelope(const std::vector<const CapacityGrid*>& ladder, const std::vector<double>& H_bins,
                                    double epsilon) {
  if (ladder.empty()) throw InvalidInput("depth ladder is empty");
  Curve lower, upper;
  lower.kind = CurveKind::FLower;
  upper.kind = CurveKind::FUpper;
  lower.xs = upper.xs = H_bins;
  lower.ys.assign(H_bins.size(), kInf);
  upper.ys.assign(H_bins.size(), kNegInf);
  std::string depths;
  for (const auto* g : ladder) {
    const auto ld = ld_counts(*g, H_bins, epsilon);
    for (std::size_t i = 0; i < H_bins.size(); ++i) {
      lower.ys[i] = std::min(lower.ys[i], ld.f.ys[i]);
      upper.ys[i] = std::max(upper.ys[i], ld.f.ys[i]);
    }
    depths += (depths.empty() ? "" : ",") + std::to_string(g->J);
  }
  lower.meta["depths"] = upper.meta["depths"] = depths;
  return {lower, upper};
}

void check_concave(const Curve& curve, double tol) {
  curve.validate();
  for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
    const double x0 = curve.xs[k - 1], x1 = curve.xs[k], x2 = curve.xs[k + 1];
    const double y0 = curve.ys[k - 1], y1 = curve.ys[k], y2 = curve.ys[k + 1];
    if (!std::isfinite(y0) || !std::isfinite(y1) || !std::isfinite(y2)) {
      throw InvalidInput("concave curve must be finite (x = " + format_real(x1) + ")");
    }
    const double chord = y0 + (y2 - y0) * (x1 - x0) / (x2 - x0);
    if (y1 < chord - tol * std::max(1.0, std::abs(chord))) {
      std::ostringstream os;
      os << "curve is not concave at the triple (" << format_real(x0) << ", " << format_real(y0) << "), ("
         << format_real(x1) << ", " << format_real(y1) << "), (" << format_real(x2) << ", " << format_real(y2) << ")";
      throw InvalidInput(os.str());
    }
  }
}

namespace {

double conjugate_unchecked(const Curve& c, double H, const Evaluator& exact) {
  const std::size_t n = c.size();
  const double s_first = (c.ys[1] - c.ys[0]) / (c.xs[1] - c.xs[0]);
  const double s_last = (c.ys[n - 1] - c.ys[n - 2]) / (c.xs[n - 1] - c.xs[n - 2]);
  const double slack = 1e-12 * std::max(1.0, std::abs(H));
  if (H > s_first + slack || H < s_last - slack) return kNegInf;

  std::size_t k = 0;
  double best = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = H * c.xs[i] - c.ys[i];
    if (g < best) {
      best = g;
      k = i;
    }
  }
  const std::size_t lo = k == 0 ? 0 : k - 1;
  const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
  Evaluator f = exact;
  if (!f) {
    // Lagrange interpolant through up to eight samples around the minimum.
    const std::size_t width = std::min<std::size_t>(8, n);
    const std::size_t first = std::min(k >= 3 ? k - 3 : 0, n - width);
    const std::vector<double> xs(c.xs.begin() + static_cast<std::ptrdiff_t>(first),
                                 c.xs.begin() + static_cast<std::ptrdiff_t>(first + width));
    const std::vector<double> ys(c.ys.begin() + static_cast<std::ptrdiff_t>(first),
                                 c.ys.begin() + static_cast<std::ptrdiff_t>(first + width));
    f = [xs, ys](double x) {
      double sum = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        double l = ys[i];
        for (std::size_t j = 0; j < xs.size(); ++j) {
          if (j != i) l *= (x - xs[j]) / (xs[i] - xs[j]);
        }
        sum += l;
      }
      return sum;
    };
  }
  const auto r = golden_min([&](double x) { return H * x - f(x); }, c.xs[lo], c.xs[hi], 1e-13);
  return std::min(best, r.fx);
}

}  // namespace

double conjugate_at(const Curve& curve, double H, const Evaluator& exact) {
  if (curve.size() < 8) throw InvalidInput("numeric conjugate needs at least 8 samples");
  check_concave(curve);
  return conjugate_unchecked(curve, H, exact);
}

Curve legendre_conjugate_numeric(const Curve& curve, const std::vector<double>& H_grid, const Evaluator& exact) {
  if (curve.size() < 8) throw InvalidInput("numeric conjugate needs at least 8 samples");
  check_concave(curve);
  Curve out;
  out.kind = curve.kind == CurveKind::Tau ? CurveKind::TauStar : CurveKind::Tau;
  out.xs = H_grid;
  out.meta = curve.meta;
  out.ys.reserve(H_grid.size());
  for (double H : H_grid) out.ys.push_back(conjugate_unchecked(curve, H, exact));
  out.validate();
  return out;
}

CurveGap compare_curves(const Curve& a, const Curve& b) { return compare_curves(a, b, kNegInf, kInf); }

CurveGap compare_curves(const Curve& a, const Curve& b, double lo, double hi) {
  a.validate();
  b.validate();
  std::vector<std::string> bad;
  if (a.size() != b.size()) bad.push_back("sizes " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  for (std::size_t i = 0; i < std::min(a.size(), b.size()) && bad.size() < 8; ++i) {
    if (a.xs[i] != b.xs[i]) bad.push_back("x[" + std::to_string(i) + "] " + format_real(a.xs[i]) + " vs " + format_real(b.xs[i]));
  }
  if (!bad.empty()) {
    std::string msg = "curve grids differ:";
    for (const auto& s : bad) msg += " " + s + ";";
    throw InvalidInput(msg);
  }
  CurveGap gap;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.xs[i] < lo || a.xs[i] > hi) continue;
    double g;
    if (a.ys[i] == b.ys[i]) {
      g = 0.0;
    } else if (std::isinf(a.ys[i]) || std::isinf(b.ys[i])) {
      g = kInf;
    } else {
      g = std::abs(a.ys[i] - b.ys[i]);
    }
    if (gap.points == 0 || g > gap.sup) {
      gap.sup = g;
      gap.x_at_sup = a.xs[i];
    }
    total += g;
    ++gap.points;
  }
  gap.mean = gap.points ? total / static_cast<double>(gap.points) : 0.0;
  return gap;
}

}  // namespace sgl
