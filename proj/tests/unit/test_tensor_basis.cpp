#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "polyinit/error.hpp"
#include "polyinit/tensor_basis.hpp"

using namespace polyinit;

namespace {

long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Expansion random_expansion(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> dim_dist(1, 4), degree_dist(0, 5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int d = dim_dist(gen);
  std::vector<Interval> sides;
  for (int i = 0; i < d; ++i) {
    const double lo = 10 * u(gen);
    sides.push_back({lo, lo + 0.1 + std::abs(10 * u(gen))});
  }
  IndexSet set = total_degree_set(d, degree_dist(gen));
  std::vector<double> c;
  for (int k = 0; k < set.size(); ++k) c.push_back(u(gen) * std::pow(10.0, 20 * u(gen)));
  return Expansion(std::move(set), std::move(c), Box{sides});
}

}  // namespace

TEST_SUITE("tensor_basis") {
  TEST_CASE("total degree set size and order") {
    for (int d = 1; d <= 4; ++d) {
      for (int p = 0; p <= 6; ++p) CHECK(total_degree_set(d, p).size() == binomial(p + d, d));
    }
    const IndexSet s = total_degree_set(2, 2);
    const std::vector<std::vector<int>> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    REQUIRE(s.size() == 6);
    for (int k = 0; k < 6; ++k) CHECK(s[k].entries() == expected[k]);
    for (int k = 1; k < total_degree_set(3, 5).size(); ++k) {
      const IndexSet t = total_degree_set(3, 5);
      CHECK(t[k - 1].total_degree() <= t[k].total_degree());
    }
    CHECK(total_degree_set(2, 8).size() == 45);
  }

  TEST_CASE("index validation") {
    CHECK_THROWS_AS(MultiIndex({1, -1}), InvalidArgument);
    CHECK_THROWS_AS(IndexSet(2, {MultiIndex({1, 0}), MultiIndex({1, 0})}), InvalidArgument);
    CHECK_THROWS_AS(IndexSet(2, {MultiIndex({1, 0, 0})}), InvalidArgument);
    CHECK_THROWS_AS(total_degree_set(0, 2), InvalidArgument);
    CHECK_THROWS_AS(total_degree_set(2, -1), InvalidArgument);
    CHECK(MultiIndex({2, 0, 3}).total_degree() == 5);
    CHECK(MultiIndex({2, 0, 3}).to_string() == "(2,0,3)");
  }

  TEST_CASE("expansion validation") {
    const IndexSet s = total_degree_set(2, 1);
    const Box box = Box::cube(2, {-1, 1});
    CHECK_THROWS_AS(Expansion(s, {1.0, 2.0}, box), InvalidArgument);
    CHECK_THROWS_AS(Expansion(s, {1.0, 2.0, 3.0}, Box::cube(1, {-1, 1})), InvalidArgument);
    CHECK_THROWS_AS(Expansion(s, {1.0, NAN, 3.0}, box), InvalidArgument);
  }

  TEST_CASE("basis is a product of shifted Legendre polynomials") {
    const Box box{{{0.0, 2.0}, {-1.0, 3.0}}};
    const MultiIndex index({2, 3});
    for (double x : {0.0, 0.3, 1.0, 2.0}) {
      for (double y : {-1.0, 0.5, 3.0}) {
        const double s = x - 1.0;         // [0, 2] -> [-1, 1]
        const double t = (y - 1.0) / 2.0;  // [-1, 3] -> [-1, 1]
        const double expected = 0.5 * (3 * s * s - 1) * 0.5 * (5 * t * t * t - 3 * t);
        const double p[2] = {x, y};
        CHECK(eval_basis(index, p, box) == doctest::Approx(expected).epsilon(1e-13).scale(1.0));
      }
    }
    const double bad[1] = {0.0};
    CHECK_THROWS_AS(eval_basis(index, bad, box), InvalidArgument);
  }

  TEST_CASE("point and matrix evaluation agree") {
    std::mt19937_64 gen(3);
    const Expansion e = random_expansion(gen);
    Eigen::MatrixXd pts(7, e.dim());
    for (int i = 0; i < 7; ++i) {
      for (int j = 0; j < e.dim(); ++j) {
        pts(i, j) = e.domain.sides[j].lo + (i / 6.0) * e.domain.sides[j].width();
      }
    }
    const Eigen::VectorXd batch = eval_expansion(e, pts);
    for (int i = 0; i < 7; ++i) {
      const Eigen::VectorXd row = pts.row(i).transpose();
      CHECK(batch[i] == eval_expansion(e, std::span<const double>(row.data(), row.size())));
    }
    const Eigen::MatrixXd phi = design_matrix(e.index_set, e.domain, pts);
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(e.coefficients.data(), e.index_set.size());
    CHECK((phi * c - batch).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + batch.cwiseAbs().maxCoeff()));
  }

  TEST_CASE("least squares recovers an exact expansion") {
    const Box box = Box::cube(2, {-1, 1});
    const IndexSet s = total_degree_set(2, 4);
    std::vector<double> truth;
    for (int k = 0; k < s.size(); ++k) truth.push_back(std::sin(1.0 + k));
    const Expansion exact(s, truth, box);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd pts(60, 2);
    for (int i = 0; i < 60; ++i) pts.row(i) << u(gen), u(gen);
    const FitResult fit = fit_least_squares(pts, eval_expansion(exact, pts), s, box);
    for (int k = 0; k < s.size(); ++k) CHECK(fit.expansion.coefficients[k] == doctest::Approx(truth[k]).epsilon(1e-10));
    CHECK(fit.residual_norm <= 1e-10);
  }

  TEST_CASE("least squares matches the normal equations") {
    const Box box = Box::cube(1, {-1, 1});
    const IndexSet s = total_degree_set(1, 6);
    Eigen::MatrixXd pts(33, 1);
    Eigen::VectorXd y(33);
    for (int i = 0; i < 33; ++i) {
      pts(i, 0) = -1.0 + i / 16.0;
      y[i] = 1.0 / (1.0 + 25.0 * pts(i, 0) * pts(i, 0));
    }
    const FitResult fit = fit_least_squares(pts, y, s, box);
    const Eigen::MatrixXd phi = design_matrix(s, box, pts);
    const Eigen::VectorXd normal = (phi.transpose() * phi).ldlt().solve(phi.transpose() * y);
    for (int k = 0; k < s.size(); ++k) {
      CHECK(fit.expansion.coefficients[k] == doctest::Approx(normal[k]).epsilon(1e-9).scale(1.0));
      // Even target: odd coefficients vanish.
      if (k % 2) CHECK(std::abs(fit.expansion.coefficients[k]) < 1e-12);
    }
    CHECK(fit.residual_norm == doctest::Approx((phi * normal - y).norm()).epsilon(1e-9));
  }

  TEST_CASE("least squares failures") {
    const Box box = Box::cube(1, {-1, 1});
    const IndexSet s = total_degree_set(1, 3);
    Eigen::MatrixXd few(3, 1);
    few << -1, 0, 1;
    CHECK_THROWS_AS(fit_least_squares(few, Eigen::VectorXd::Ones(3), s, box), InvalidArgument);
    Eigen::MatrixXd repeated = Eigen::MatrixXd::Constant(6, 1, 0.25);
    repeated(1, 0) = 0.5;
    CHECK_THROWS_AS(fit_least_squares(repeated, Eigen::VectorXd::Ones(6), s, box), NumericalError);
    CHECK_THROWS_AS(fit_least_squares(few, Eigen::VectorXd::Ones(2), total_degree_set(1, 1), box), InvalidArgument);
  }

  TEST_CASE("expansion text round trip is bit exact") {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 50; ++trial) {
      const Expansion e = random_expansion(gen);
      std::stringstream buffer;
      write_expansion(buffer, e);
      const Expansion back = read_expansion(buffer);
      REQUIRE(back.index_set.size() == e.index_set.size());
      CHECK(back.index_set.indices() == e.index_set.indices());
      CHECK(back.coefficients == e.coefficients);
      for (int i = 0; i < e.dim(); ++i) {
        CHECK(back.domain.sides[i].lo == e.domain.sides[i].lo);
        CHECK(back.domain.sides[i].hi == e.domain.sides[i].hi);
      }
    }
  }

  TEST_CASE("malformed expansion files") {
    std::istringstream wrong_header("polyinit-net 1\n");
    CHECK_THROWS_AS(read_expansion(wrong_header), InvalidArgument);
    std::istringstream truncated("polyinit-expansion 1\ndim 1\ndomain -1 1\nterms 2\n0 1.5\n");
    CHECK_THROWS_AS(read_expansion(truncated), InvalidArgument);
    std::istringstream junk("polyinit-expansion 1\ndim 1\ndomain -1 1\nterms 1\n0 abc\n");
    CHECK_THROWS_AS(read_expansion(junk), InvalidArgument);
    CHECK_THROWS_AS(load_expansion("/nonexistent/file"), InvalidArgument);
  }
}
