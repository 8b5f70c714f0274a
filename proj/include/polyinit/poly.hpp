#pragma once

#include <vector>

namespace polyinit {

/// Closed interval [lo, hi] with lo < hi.
struct Interval {
  double lo = -1.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Throws InvalidArgument unless lo < hi and both are finite.
void check_interval(const Interval& interval);

/// Largest degree accepted by the Legendre routines.
inline constexpr int kMaxLegendreDegree = 30;

/// Classical Legendre polynomial L_n(x) (normalized so L_n(1) = 1), evaluated
/// with the three-term recurrence.
double legendre_eval(int n, double x);

/// L_n pulled back to `domain`: L_n(2(x - lo)/(hi - lo) - 1).
double legendre_eval_shifted(int n, double x, const Interval& domain);

/// Roots of L_n on [-1, 1], sorted ascending. Eigenvalues of the symmetric
/// tridiagonal Jacobi matrix of the Legendre family.
std::vector<double> legendre_roots(int n);

/// Root-factorized univariate polynomial: leading_scale * prod_k (x - roots[k]).
struct UnivariatePoly {
  int degree = 0;
  double leading_scale = 1.0;
  std::vector<double> roots;

  double operator()(double x) const;
};

/// Leading coefficient of L_n, (2n)! / (2^n (n!)^2).
double legendre_leading_coefficient(int n);

/// L_n as leading_scale * prod (x - r_k) on [-1, 1].
UnivariatePoly factorize(int n);

/// Factorization of x -> L_n(2(x - lo)/(hi - lo) - 1): roots are mapped into
/// `domain` and the affine slope is folded into leading_scale.
UnivariatePoly factorize(int n, const Interval& domain);

}  // namespace polyinit
