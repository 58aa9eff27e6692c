#include "orbitmart/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "orbitmart/error.hpp"

namespace orbitmart::numerics {
namespace {

constexpr double kTiny = 1e-300;

[[noreturn]] void fail(const char* what, double x, double a, double b) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (x=" << x << ", a=" << a << ", b=" << b << ")";
  throw Error(ErrorKind::NumericsFailure, os.str());
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// lgamma(z) minus its Stirling main term (z - 1/2) log z - z + log(2 pi) / 2.
double stirling_correction(double z) {
  if (z < 10.0) return std::lgamma(z) - ((z - 0.5) * std::log(z) - z + kHalfLog2Pi);
  const double w = 1.0 / (z * z);
  return (1.0 / 12 - w * (1.0 / 360 - w * (1.0 / 1260 - w * (1.0 / 1680 - w / 1188)))) / z;
}


// Continued fraction for I_x(a, b) * a * B(a, b) / (x^a y^b), modified Lentz.
double beta_continued_fraction(double x, double a, double b,
                               const Tolerance& tol) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= tol.max_iter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < tol.rel_eps) return h;
  }
  fail("incomplete beta continued fraction did not converge", x, a, b);
}

// x^a y^b / (a B(a, b)), evaluated in log space. For large parameters the
// log-gamma differences cancel badly, so the Stirling main terms are combined
// analytically and only the small corrections are differenced.
double beta_prefix(double x, double y, double a, double b) {
  if (std::max(a, b) < 8.0) {
    return std::exp(a * std::log(x) + b * std::log(y) - log_beta(a, b)) / a;
  }
  const double ab = a + b;
  const double shift = x * b - y * a;  // x (a + b) - a
  const double log_prefix = a * std::log1p(shift / a) + b * std::log1p(-shift / b) +
                            0.5 * (std::log(a) + std::log(b) - std::log(ab)) - kHalfLog2Pi -
                            stirling_correction(a) - stirling_correction(b) +
                            stirling_correction(ab);
  return std::exp(log_prefix) / a;
}

}  // namespace

void Tolerance::validate() const {
  if (!(rel_eps > 0.0 && rel_eps <= 1e-6) || max_iter < 50) {
    throw Error(ErrorKind::InvalidArgument,
                "tolerance requires rel_eps in (0, 1e-6] and max_iter >= 50");
  }
}

double reg_inc_beta(double x, double y, double a, double b,
                    const Tolerance& tol) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorKind::InvalidArgument, "incomplete beta requires a > 0 and b > 0");
  }
  if (!(x >= 0.0 && x <= 1.0) || !(y >= 0.0 && y <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "incomplete beta requires x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return beta_prefix(x, y, a, b) * beta_continued_fraction(x, a, b, tol);
  }
  return 1.0 - beta_prefix(y, x, b, a) * beta_continued_fraction(y, b, a, tol);
}

double reg_inc_beta(double x, double a, double b, const Tolerance& tol) {
  return reg_inc_beta(x, 1.0 - x, a, b, tol);
}

double cap_measure(double c, int m, const Tolerance& tol) {
  if (m < 1) {
    throw Error(ErrorKind::InvalidArgument, "cap_measure requires m >= 1");
  }
  if (std::isnan(c)) {
    throw Error(ErrorKind::InvalidArgument, "cap_measure requires a cosine");
  }
  c = std::clamp(c, -1.0, 1.0);
  if (c >= 1.0 - 1e-12) return 0.0;
  if (c <= -1.0 + 1e-12) return 1.0;
  if (m == 1) return 0.5;
  // sin^2 of the co-latitude, with its complement c^2 kept exact.
  const double sin2 = (1.0 - c) * (1.0 + c);
  const double half = 0.5 * reg_inc_beta(sin2, c * c, 0.5 * (m - 1), 0.5, tol);
  return c >= 0.0 ? half : 1.0 - half;
}

double t_upper_tail(double t, int nu, const Tolerance& tol) {
  if (nu < 1) {
    throw Error(ErrorKind::InvalidArgument, "t_upper_tail requires nu >= 1");
  }
  if (std::isnan(t)) {
    throw Error(ErrorKind::InvalidArgument, "t_upper_tail requires a number");
  }
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double denom = nu + t * t;
  const double half = 0.5 * reg_inc_beta(nu / denom, t * t / denom, 0.5 * nu, 0.5, tol);
  return t >= 0.0 ? half : 1.0 - half;
}

}  // namespace orbitmart::numerics
