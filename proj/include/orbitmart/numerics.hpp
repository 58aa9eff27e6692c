#pragma once

namespace orbitmart::numerics {

/// Convergence controls for the iterative special functions.
struct Tolerance {
  double rel_eps = 1e-12;
  int max_iter = 300;

  /// Throws InvalidArgument unless rel_eps is in (0, 1e-6] and max_iter >= 50.
  void validate() const;
};

/// Regularized incomplete beta function I_x(a, b).
///
/// Evaluated with a modified Lentz continued fraction, switching to
/// 1 - I_{1-x}(b, a) when x > (a + 1) / (a + b + 2). Throws NumericsFailure if
/// the fraction does not converge within `tol.max_iter` iterations.
double reg_inc_beta(double x, double a, double b, const Tolerance& tol = {});

/// Same as reg_inc_beta but takes the complement y = 1 - x separately, so
/// callers that know 1 - x exactly (e.g. c^2 for a cap) do not lose it to
/// cancellation.
double reg_inc_beta(double x, double y, double a, double b,
                    const Tolerance& tol = {});

/// Relative area of the cap {u in S^{m-1} : u_m > c} of the unit sphere in R^m.
///
/// For m >= 2 this is 1/2 I_{1-c^2}((m-1)/2, 1/2) when c >= 0 and its
/// complement when c < 0. For m == 1 the "sphere" is {-1, +1} and the result is
/// the counting measure of {u > c}. `c` is clamped to [-1, 1]; values within
/// 1e-12 of +-1 map to exactly 0 or 1.
double cap_measure(double c, int m, const Tolerance& tol = {});

/// P(T > t) for Student's t with `nu` degrees of freedom.
double t_upper_tail(double t, int nu, const Tolerance& tol = {});

}  // namespace orbitmart::numerics
