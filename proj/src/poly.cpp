#include "polyinit/poly.hpp"

#include <cmath>
#include <string>

#include "polyinit/error.hpp"
#include "tridiagonal.hpp"

namespace polyinit {

namespace {

void check_degree(int n, int min_degree) {
  if (n < min_degree || n > kMaxLegendreDegree) {
    throw InvalidArgument("Legendre degree " + std::to_string(n) + " outside [" +
                          std::to_string(min_degree) + ", " +
                          std::to_string(kMaxLegendreDegree) + "]");
  }
}

}  // namespace

void check_interval(const Interval& interval) {
  if (!std::isfinite(interval.lo) || !std::isfinite(interval.hi) || !(interval.lo < interval.hi)) {
    throw InvalidArgument("degenerate interval [" + std::to_string(interval.lo) + ", " +
                          std::to_string(interval.hi) + "]");
  }
}

double legendre_eval(int n, double x) {
  check_degree(n, 0);
  if (n == 0) return 1.0;
  double prev = 1.0;
  double curr = x;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0) * x * curr - k * prev) / (k + 1.0);
    prev = curr;
    curr = next;
  }
  return curr;
}

double legendre_eval_shifted(int n, double x, const Interval& domain) {
  check_interval(domain);
  return legendre_eval(n, 2.0 * (x - domain.lo) / domain.width() - 1.0);
}

std::vector<double> legendre_roots(int n) {
  check_degree(n, 1);
  std::vector<double> diagonal(n, 0.0);
  std::vector<double> off_diagonal(n - 1);
  for (int k = 1; k < n; ++k) {
    off_diagonal[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  }
  std::vector<double> roots;
  try {
    roots = detail::symmetric_tridiagonal_eigenvalues(std::move(diagonal), std::move(off_diagonal));
  } catch (const NumericalError& e) {
    throw NumericalError("legendre_roots(degree " + std::to_string(n) + "): " + e.what());
  }
  for (double r : roots) {
    if (!(std::abs(legendre_eval(n, r)) <= 1e-10)) {
      throw NumericalError("legendre_roots(degree " + std::to_string(n) +
                           "): root check failed at " + std::to_string(r));
    }
  }
  return roots;
}

double UnivariatePoly::operator()(double x) const {
  double value = leading_scale;
  for (double r : roots) value *= (x - r);
  return value;
}

double legendre_leading_coefficient(int n) {
  check_degree(n, 0);
  double scale = 1.0;
  for (int k = 1; k <= n; ++k) scale *= (2.0 * k - 1.0) / k;
  return scale;
}

UnivariatePoly factorize(int n) {
  check_degree(n, 0);
  UnivariatePoly p;
  p.degree = n;
  p.leading_scale = legendre_leading_coefficient(n);
  if (n > 0) p.roots = legendre_roots(n);
  return p;
}

UnivariatePoly factorize(int n, const Interval& domain) {
  check_interval(domain);
  UnivariatePoly p = factorize(n);
  const double slope = 2.0 / domain.width();
  for (double& r : p.roots) r = domain.lo + 0.5 * (r + 1.0) * domain.width();
  p.leading_scale *= std::pow(slope, n);
  return p;
}

}  // namespace polyinit
