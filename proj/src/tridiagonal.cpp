#include "tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polyinit/error.hpp"

namespace polyinit::detail {

std::vector<double> symmetric_tridiagonal_eigenvalues(std::vector<double> d,
                                                      std::vector<double> off_diagonal) {
  const int n = static_cast<int>(d.size());
  if (n == 0) return d;
  if (static_cast<int>(off_diagonal.size()) != n - 1) {
    throw InvalidArgument("tridiagonal: off-diagonal length must be n - 1");
  }
  std::vector<double> e(off_diagonal);
  e.push_back(0.0);

  constexpr int kMaxIterations = 60;
  const double eps = std::numeric_limits<double>::epsilon();

  for (int l = 0; l < n; ++l) {
    int iterations = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (iterations++ == kMaxIterations) {
        throw NumericalError("tridiagonal QL iteration did not converge for eigenvalue " +
                             std::to_string(l) + " of " + std::to_string(n));
      }
      // Wilkinson shift from the leading 2x2 block.
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0;
      double c = 1.0;
      double p = 0.0;
      bool deflated = false;
      for (int i = m - 1; i >= l; --i) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
      }
      if (deflated) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace polyinit::detail
