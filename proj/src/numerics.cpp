#include "sgl/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "sgl/errors.hpp"

namespace sgl {

double bisect(const std::function<double(double)>& f, double lo, double hi, const RootOptions& opt) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi)) {
    throw NumericalError("bisect: endpoints do not bracket a root");
  }
  for (int it = 0; it < opt.max_iter && hi - lo > opt.tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double bisect_expanding(const std::function<double(double)>& f, double lo, double hi,
                        bool lo_fixed, bool hi_fixed, const RootOptions& opt) {
  double flo = f(lo), fhi = f(hi);
  for (int k = 0; k < opt.max_expand && std::signbit(flo) == std::signbit(fhi) && flo != 0.0 &&
                  fhi != 0.0;
       ++k) {
    const double width = hi - lo;
    if (!lo_fixed && !hi_fixed) {
      // Move the end with the smaller magnitude residual.
      if (std::abs(flo) < std::abs(fhi)) {
        lo -= width;
        flo = f(lo);
      } else {
        hi += width;
        fhi = f(hi);
      }
    } else if (!hi_fixed) {
      lo = hi;
      flo = fhi;
      hi += 2 * width;
      fhi = f(hi);
    } else if (!lo_fixed) {
      hi = lo;
      fhi = flo;
      lo -= 2 * width;
      flo = f(lo);
    } else {
      break;
    }
  }
  if (std::signbit(flo) == std::signbit(fhi) && flo != 0.0 && fhi != 0.0) {
    throw NumericalError("bisect_expanding: no sign change found");
  }
  return bisect(f, lo, hi, opt);
}

MinResult golden_min(const std::function<double(double)>& f, double lo, double hi, double tol,
                     int max_iter) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && b - a > tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  MinResult best{c, fc};
  if (fd < best.fx) best = {d, fd};
  for (double x : {lo, hi, 0.5 * (a + b)}) {
    const double fx = f(x);
    if (fx < best.fx) best = {x, fx};
  }
  return best;
}

double log2_sum_exp2(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (double x : xs) {
    if (x != kNegInf) s += std::exp2(x - m);
  }
  return m + std::log2(s);
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& text) {
  if (text == "inf" || text == "+inf") return kInf;
  if (text == "-inf") return kNegInf;
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw InvalidInput("not a real number: '" + text + "'");
  return v;
}

}  // namespace sgl
