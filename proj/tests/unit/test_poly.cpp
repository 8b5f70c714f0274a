#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "polyinit/error.hpp"
#include "polyinit/poly.hpp"
#include "tridiagonal.hpp"

using namespace polyinit;

namespace {

// Explicit low-degree Legendre polynomials.
double closed_form(int n, double x) {
  switch (n) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return 0.5 * (3 * x * x - 1);
    case 3: return 0.5 * (5 * x * x * x - 3 * x);
    case 4: return (35 * std::pow(x, 4) - 30 * x * x + 3) / 8;
    case 5: return (63 * std::pow(x, 5) - 70 * std::pow(x, 3) + 15 * x) / 8;
    case 6: return (231 * std::pow(x, 6) - 315 * std::pow(x, 4) + 105 * x * x - 5) / 16;
  }
  return NAN;
}

// Composite Simpson on [-1, 1].
template <typename F>
double simpson(F f, int intervals = 20000) {
  const double h = 2.0 / intervals;
  double sum = f(-1.0) + f(1.0);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(-1.0 + i * h);
  return sum * h / 3.0;
}

double derivative(int n, double x) { return n * (x * legendre_eval(n, x) - legendre_eval(n - 1, x)) / (x * x - 1.0); }

}  // namespace

TEST_SUITE("poly") {
  TEST_CASE("recurrence matches closed forms") {
    for (int n = 0; n <= 6; ++n) {
      for (int k = 0; k <= 100; ++k) {
        const double x = -1.0 + k / 50.0;
        CHECK(legendre_eval(n, x) == doctest::Approx(closed_form(n, x)).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("endpoint values") {
    for (int n = 0; n <= kMaxLegendreDegree; ++n) {
      CHECK(legendre_eval(n, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(legendre_eval(n, -1.0) == doctest::Approx(n % 2 ? -1.0 : 1.0).epsilon(1e-13));
    }
    CHECK(legendre_eval(2, 0.5) == doctest::Approx(-0.125));
    CHECK(legendre_eval(3, 0.0) == 0.0);
  }

  TEST_CASE("orthogonality by quadrature") {
    for (int m = 0; m <= 8; ++m) {
      for (int n = 0; n <= 8; ++n) {
        const double integral = simpson([&](double x) { return legendre_eval(m, x) * legendre_eval(n, x); });
        const double expected = m == n ? 2.0 / (2 * n + 1) : 0.0;
        CHECK(integral == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
      }
    }
  }

  TEST_CASE("shifted evaluation is a pullback") {
    const Interval domain{0.0, 3.0};
    CHECK(legendre_eval_shifted(3, 0.0, domain) == doctest::Approx(-1.0));
    CHECK(legendre_eval_shifted(3, 3.0, domain) == doctest::Approx(1.0));
    CHECK(legendre_eval_shifted(2, 1.5, domain) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(legendre_eval_shifted(2, 0.0, Interval{1.0, 1.0}), InvalidArgument);
  }

  TEST_CASE("roots of small degrees") {
    auto r2 = legendre_roots(2);
    REQUIRE(r2.size() == 2);
    CHECK(r2[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(r2[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
    auto r3 = legendre_roots(3);
    CHECK(r3[0] == doctest::Approx(-std::sqrt(0.6)).epsilon(1e-14));
    CHECK(std::abs(r3[1]) < 1e-14);
    auto r4 = legendre_roots(4);
    const double inner = std::sqrt(3.0 / 7 - 2.0 / 7 * std::sqrt(1.2));
    const double outer = std::sqrt(3.0 / 7 + 2.0 / 7 * std::sqrt(1.2));
    CHECK(r4[0] == doctest::Approx(-outer).epsilon(1e-14));
    CHECK(r4[1] == doctest::Approx(-inner).epsilon(1e-14));
    CHECK(r4[2] == doctest::Approx(inner).epsilon(1e-14));
    CHECK(r4[3] == doctest::Approx(outer).epsilon(1e-14));
    CHECK(legendre_roots(1) == std::vector<double>{0.0});
  }

  TEST_CASE("roots are simple, symmetric, interior and interlacing") {
    std::vector<double> previous;
    for (int n = 1; n <= kMaxLegendreDegree; ++n) {
      const auto roots = legendre_roots(n);
      REQUIRE(roots.size() == static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) {
        CHECK(std::abs(legendre_eval(n, roots[k])) <= 1e-12);
        CHECK(roots[k] > -1.0);
        CHECK(roots[k] < 1.0);
        CHECK(roots[k] == doctest::Approx(-roots[n - 1 - k]).epsilon(1e-13).scale(1.0));
        if (k > 0) CHECK(roots[k] > roots[k - 1]);
      }
      // Between consecutive roots of L_n lies exactly one root of L_{n-1}.
      for (std::size_t k = 0; k < previous.size(); ++k) {
        CHECK(roots[k] < previous[k]);
        CHECK(previous[k] < roots[k + 1]);
      }
      previous = roots;
    }
  }

  TEST_CASE("Gauss quadrature from the roots integrates degree 2n-1 exactly") {
    for (int n : {3, 8, 15, 24}) {
      const auto roots = legendre_roots(n);
      for (int p = 0; p <= 2 * n - 1; ++p) {
        double q = 0.0;
        for (double x : roots) q += 2.0 / ((1 - x * x) * std::pow(derivative(n, x), 2)) * std::pow(x, p);
        const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
        CHECK(q == doctest::Approx(exact).epsilon(1e-11).scale(1.0));
      }
    }
  }

  TEST_CASE("leading coefficient") {
    CHECK(legendre_leading_coefficient(0) == 1.0);
    CHECK(legendre_leading_coefficient(2) == doctest::Approx(1.5));
    CHECK(legendre_leading_coefficient(3) == doctest::Approx(2.5));
    CHECK(legendre_leading_coefficient(6) == doctest::Approx(231.0 / 16));
    for (int n = 1; n <= kMaxLegendreDegree; ++n) {
      const double binomial = std::exp(std::lgamma(2.0 * n + 1) - 2 * std::lgamma(n + 1.0));
      CHECK(legendre_leading_coefficient(n) == doctest::Approx(binomial / std::pow(2.0, n)).epsilon(1e-12));
    }
  }

  TEST_CASE("factorization reproduces the polynomial") {
    for (int n = 0; n <= 20; ++n) {
      const UnivariatePoly p = factorize(n);
      CHECK(p.degree == n);
      for (int k = 0; k <= 64; ++k) {
        const double x = -1.0 + k / 32.0;
        CHECK(p(x) == doctest::Approx(legendre_eval(n, x)).epsilon(1e-11).scale(1.0));
      }
    }
    const Interval domain{-0.5, 2.5};
    for (int n : {1, 4, 9}) {
      const UnivariatePoly p = factorize(n, domain);
      for (double r : p.roots) CHECK(domain.contains(r));
      for (int k = 0; k <= 30; ++k) {
        const double x = domain.lo + k * domain.width() / 30;
        CHECK(p(x) == doctest::Approx(legendre_eval_shifted(n, x, domain)).epsilon(1e-11).scale(1.0));
      }
    }
  }

  TEST_CASE("degree limits") {
    CHECK_THROWS_AS(legendre_eval(-1, 0.0), InvalidArgument);
    CHECK_THROWS_AS(legendre_eval(kMaxLegendreDegree + 1, 0.0), InvalidArgument);
    CHECK_THROWS_AS(legendre_roots(0), InvalidArgument);
    CHECK_THROWS_AS(factorize(-2), InvalidArgument);
    CHECK_THROWS_AS(check_interval({2.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(check_interval({0.0, NAN}), InvalidArgument);
    CHECK(factorize(0).roots.empty());
  }
}

TEST_SUITE("tridiagonal") {
  TEST_CASE("second difference matrix") {
    for (int n : {1, 2, 5, 40}) {
      const auto values = detail::symmetric_tridiagonal_eigenvalues(std::vector<double>(n, 2.0),
                                                                     std::vector<double>(n - 1, -1.0));
      for (int k = 1; k <= n; ++k) {
        const double expected = 2.0 - 2.0 * std::cos(k * M_PI / (n + 1));
        CHECK(values[k - 1] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
      }
    }
  }

  TEST_CASE("agrees with a dense symmetric solver") {
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 25; ++trial) {
      const int n = 2 + trial;
      std::vector<double> diag(n), off(n - 1);
      Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) dense(i, i) = diag[i] = u(gen);
      for (int i = 0; i + 1 < n; ++i) dense(i, i + 1) = dense(i + 1, i) = off[i] = u(gen);
      const auto values = detail::symmetric_tridiagonal_eigenvalues(diag, off);
      const Eigen::VectorXd reference = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense).eigenvalues();
      for (int i = 0; i < n; ++i) CHECK(values[i] == doctest::Approx(reference[i]).epsilon(1e-10).scale(1.0));
    }
  }

  TEST_CASE("zero off-diagonal returns the sorted diagonal") {
    const auto values = detail::symmetric_tridiagonal_eigenvalues({3.0, -1.0, 2.0}, {0.0, 0.0});
    CHECK(values == std::vector<double>{-1.0, 2.0, 3.0});
  }
}
