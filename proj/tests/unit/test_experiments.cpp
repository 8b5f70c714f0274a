#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "polyinit/construct.hpp"
#include "polyinit/error.hpp"
#include "polyinit/experiments.hpp"
#include "test_files.hpp"

using namespace polyinit;
namespace fs = std::filesystem;

namespace {

RungeConfig small_runge() {
  RungeConfig c;
  c.depth = 4;
  c.grid_points = 51;
  c.optimizer.epochs = 20;
  return c;
}

TwoPhaseConfig small_two_phase() {
  TwoPhaseConfig c;
  c.samples = 40;
  c.degree = 3;
  c.depth = 3;
  c.grid_per_axis = 7;
  c.phase1.epochs = 30;
  c.phase2.epochs = 5;
  return c;
}

GenzConfig small_genz() {
  GenzConfig c;
  c.dim = 2;
  c.layers = 3;
  c.train_samples = 30;
  c.validation_samples = 40;
  c.optimizer.epochs = 10;
  return c;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("targets") {
    const double zero = 0.0, one = 1.0;
    CHECK(runge_function()(std::span<const double>(&zero, 1)) == 1.0);
    CHECK(runge_function()(std::span<const double>(&one, 1)) == doctest::Approx(1.0 / 26));
    const double p[2] = {0.5, 0.5};
    CHECK(radial_cosine()(p) == doctest::Approx(-1.0));
    const double q = 0.125;
    CHECK(cos4pi_function()(std::span<const double>(&q, 1)) == doctest::Approx(0.0).scale(1.0));
    const std::vector<double> u(4, 0.5);
    CHECK(genz_function(4)(u) == 1.0);
    const std::vector<double> corner(4, 0.0);
    CHECK(genz_function(4)(corner) == doctest::Approx(std::exp(-10.0)));
    CHECK(genz_function(20).dim() == 20);
  }

  TEST_CASE("sampling") {
    const Samples three = sample(runge_function(), 3, SampleScheme::Equispaced, 0);
    CHECK(three.points(0, 0) == -1.0);
    CHECK(three.points(1, 0) == 0.0);
    CHECK(three.points(2, 0) == 1.0);
    CHECK(three.values[0] == doctest::Approx(1.0 / 26));
    CHECK(three.values[1] == 1.0);

    const Samples a = sample(genz_function(3), 50, SampleScheme::UniformRandom, 9);
    const Samples b = sample(genz_function(3), 50, SampleScheme::UniformRandom, 9);
    const Samples c = sample(genz_function(3), 50, SampleScheme::UniformRandom, 10);
    CHECK(a.points == b.points);
    CHECK(a.values == b.values);
    CHECK(a.points != c.points);
    CHECK(a.points.minCoeff() >= 0.0);
    CHECK(a.points.maxCoeff() < 1.0);
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd x = a.points.row(i).transpose();
      CHECK(a.values[i] == genz_function(3)(std::span<const double>(x.data(), 3)));
    }
    CHECK(sample(radial_cosine(), 25, SampleScheme::Equispaced, 0).size() == 25);
    CHECK_THROWS_AS(sample(radial_cosine(), 24, SampleScheme::Equispaced, 0), InvalidArgument);
    CHECK_THROWS_AS(sample(runge_function(), 0, SampleScheme::UniformRandom, 0), InvalidArgument);
  }

  TEST_CASE("tensor grid ordering") {
    const Eigen::MatrixXd g = tensor_grid(Box::cube(2, {0, 1}), 3);
    REQUIRE(g.rows() == 9);
    CHECK(g(0, 0) == 0.0);
    CHECK(g(1, 0) == 0.0);
    CHECK(g(1, 1) == 0.5);
    CHECK(g(3, 0) == 0.5);
    CHECK(g(8, 0) == 1.0);
    CHECK(g(8, 1) == 1.0);
  }

  TEST_CASE("runge") {
    RungeConfig zero = small_runge();
    zero.optimizer.epochs = 0;
    const ExperimentResult r0 = run_runge(zero);
    const ArmResult& arm = r0.arm("poly_init");
    for (int l = 0; l < arm.initial->depth(); ++l) CHECK(arm.trained->layer(l).weights == arm.initial->layer(l).weights);
    CHECK(arm.trace.train.size() == 1);

    const ExperimentResult r = run_runge(small_runge());
    // Epoch-0 loss vs the surrogate's loss: |sqrt(a) - sqrt(b)| <= bound.
    const double net0 = std::sqrt(r.metrics.at("initial_train_mse"));
    const double poly = std::sqrt(r.metrics.at("expansion_train_mse"));
    CHECK(std::abs(net0 - poly) <= r.metrics.at("construction_bound"));
    CHECK(r.metrics.at("final_train_mse") <= r.metrics.at("initial_train_mse"));
    CHECK(r.grid.rows() == 51);
    CHECK_THROWS_AS(r.arm("missing"), InvalidArgument);
  }

  TEST_CASE("two phase") {
    const ExperimentResult r = run_two_phase(small_two_phase());
    REQUIRE(r.arms.size() == 2);
    const ArmResult& p1 = r.arm("phase1");
    const ArmResult& p2 = r.arm("phase2");
    // Output weights start at zero.
    CHECK(p1.initial->layers().back().weights.cwiseAbs().maxCoeff() == 0.0);
    // Phase 1 touches only the output layer.
    for (int l = 0; l + 1 < p1.initial->depth(); ++l) CHECK(p1.trained->layer(l).weights == p1.initial->layer(l).weights);
    CHECK(p2.initial->layers().back().weights == p1.trained->layers().back().weights);
    CHECK(r.metrics.at("phase1_oracle_loss") <= r.metrics.at("phase1_final_loss") * (1 + 1e-9));
    CHECK(p2.trace.train.front() == doctest::Approx(p1.trace.train.back()).epsilon(1e-12));

    TwoPhaseConfig frozen = small_two_phase();
    frozen.freeze_everything = true;
    const ExperimentResult f = run_two_phase(frozen);
    for (const auto& arm : f.arms)
      for (double loss : arm.trace.train) CHECK(loss == arm.trace.train.front());
  }

  TEST_CASE("cos4pi comparison") {
    Cos4piConfig c;
    c.optimizer.epochs = 5;
    c.grid_points = 101;
    const ExperimentResult r = run_cos4pi_comparison(c);
    const ArmResult& a = r.arm("poly_init");
    const ArmResult& b = r.arm("xavier");
    CHECK(shape_of(*a.initial).hidden == std::vector<int>(6, 4));
    CHECK(shape_of(*b.initial).hidden == shape_of(*a.initial).hidden);
    CHECK(r.training.size() == 80);
    const double bound = squaring_error_bound({-1, 1}, 6);
    for (Eigen::Index k = 0; k < r.grid.rows(); ++k) {
      const double x = r.grid(k, 0);
      CHECK(std::abs(forward(*a.initial, std::span<const double>(&x, 1)) - x * x) <= bound * (1 + 1e-12));
    }
    CHECK(r.metrics.count("poly_init_final_loss") == 1);
    CHECK(r.metrics.count("xavier_final_loss") == 1);
  }

  TEST_CASE("genz") {
    const ExperimentResult r = run_genz(small_genz());
    const ArmResult& a = r.arm("poly_init");
    CHECK(shape_of(*a.initial).hidden == std::vector<int>(3, 12));
    CHECK(shape_of(*r.arm("xavier").initial).hidden == std::vector<int>(3, 12));
    const std::vector<double> u(2, 0.5);
    CHECK(forward(*a.initial, u) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(a.trace.validation.size() == 11);
    CHECK(r.validation->size() == 40);

    GenzConfig bad = small_genz();
    bad.width = 20;
    CHECK_THROWS_AS(run_genz(bad), InvalidArgument);
    CHECK(genz_d20_config().resolved_width() == 156);
    CHECK(GenzConfig{}.resolved_width() == 28);
    CHECK(genz_d4_full_config().layers == 20);
  }

  TEST_CASE("results are a pure function of the configuration") {
    polyinit::testing::TempDir tmp;
    const GenzConfig c = small_genz();
    write_result(run_genz(c), tmp.path / "a");
    write_result(run_genz(c), tmp.path / "b");
    for (const char* name : {"grid.csv", "loss_poly_init.csv", "loss_xavier.csv", "manifest.json"}) {
      CHECK(polyinit::testing::read_file(tmp.path / "a" / name) == polyinit::testing::read_file(tmp.path / "b" / name));
    }
    const std::string manifest = polyinit::testing::read_file(tmp.path / "a" / "manifest.json");
    CHECK(manifest.find("duration") == std::string::npos);
    write_result(run_genz(c), tmp.path / "timed", true);
    CHECK(polyinit::testing::read_file(tmp.path / "timed" / "manifest.json").find("duration") != std::string::npos);

    const std::string loss = polyinit::testing::read_file(tmp.path / "a" / "loss_poly_init.csv");
    CHECK(loss.rfind("epoch,train_loss,val_loss\n0,", 0) == 0);
    const std::string grid = polyinit::testing::read_file(tmp.path / "a" / "grid.csv");
    CHECK(grid.rfind("x1,x2,target,poly_init,xavier\n", 0) == 0);
  }

  TEST_CASE("configuration JSON") {
    RungeConfig r;
    r.seed = 5;
    r.optimizer.batch_size = 4;
    CHECK(to_json(runge_config_from_json(to_json(r))) == to_json(r));
    CHECK(to_json(two_phase_config_from_json(to_json(TwoPhaseConfig{}))) == to_json(TwoPhaseConfig{}));
    CHECK(to_json(cos4pi_config_from_json(to_json(Cos4piConfig{}))) == to_json(Cos4piConfig{}));
    CHECK(to_json(genz_config_from_json(to_json(genz_d20_config()))) == to_json(genz_d20_config()));

    const RungeConfig partial = runge_config_from_json(nlohmann::json{{"samples", 17}});
    CHECK(partial.samples == 17);
    CHECK(partial.degree == RungeConfig{}.degree);
    CHECK_THROWS_AS(runge_config_from_json(nlohmann::json{{"sampels", 17}}), InvalidArgument);
    CHECK_THROWS_AS(runge_config_from_json(nlohmann::json{{"samples", "many"}}), InvalidArgument);
    CHECK_THROWS_AS(runge_config_from_json(nlohmann::json{{"optimizer", {{"learning_rate", -1.0}}}}), InvalidArgument);
    CHECK_THROWS_AS(genz_config_from_json(nlohmann::json::array()), InvalidArgument);
  }
}
