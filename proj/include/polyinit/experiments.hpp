#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyinit/net.hpp"
#include "polyinit/tensor_basis.hpp"

namespace polyinit {

struct TargetFunction {
  std::string name;
  Box domain;
  std::function<double(std::span<const double>)> f;

  int dim() const { return domain.dim(); }
  double operator()(std::span<const double> x) const { return f(x); }
};

/// R(x) = 1 / (1 + 25 x^2) on [-1, 1].
TargetFunction runge_function();
/// T(x1, x2) = cos(2 pi (x1^2 + x2^2)) on [-1, 1]^2.
TargetFunction radial_cosine();
/// cos(4 pi x) on [-1, 1].
TargetFunction cos4pi_function();
/// G(x) = exp(-sum a_i |x_i - u_i|) on [0, 1]^d.
TargetFunction genz_function(int dim, double a = 5.0, double u = 0.5);

enum class SampleScheme { Equispaced, UniformRandom };

/// Equispaced samples form a tensor grid, so `count` must be a perfect
/// d-th power; uniform samples are drawn from Rng(seed).
Samples sample(const TargetFunction& target, int count, SampleScheme scheme, std::uint64_t seed);

/// Dense evaluation grid with `per_axis` points per coordinate.
Eigen::MatrixXd tensor_grid(const Box& domain, int per_axis);

/// Optimizer settings shared by every experiment arm.
struct OptimizerSettings {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  long epochs = 0;
  std::optional<long> batch_size;

  TrainConfig train_config(std::uint64_t seed) const;
};

struct RungeConfig {
  std::uint64_t seed = 0;
  int samples = 33;
  int degree = 6;
  int depth = 8;
  bool keep_block_sparsity = true;
  int grid_points = 1001;
  OptimizerSettings optimizer{1e-4, 0.9, 0.999, 1e-8, 20000, std::nullopt};
};

struct TwoPhaseConfig {
  std::uint64_t seed = 0;
  int samples = 500;
  int degree = 8;
  int depth = 6;
  bool keep_block_sparsity = true;
  bool freeze_everything = false;  ///< diagnostic: no parameter is trainable in either phase
  int grid_per_axis = 101;
  OptimizerSettings phase1{1e-3, 0.9, 0.999, 1e-8, 20000, std::nullopt};
  OptimizerSettings phase2{1e-5, 0.9, 0.999, 1e-8, 300, std::nullopt};
};

struct Cos4piConfig {
  std::uint64_t seed = 0;
  int samples = 80;
  int depth = 6;
  int grid_points = 1001;
  OptimizerSettings optimizer{1e-3, 0.9, 0.999, 1e-8, 20000, std::nullopt};
};

struct GenzConfig {
  std::uint64_t seed = 0;
  int dim = 4;
  int layers = 8;
  int width = 0;  ///< 0: derived as 4 (2 dim - 1)
  int train_samples = 500;
  int validation_samples = 3000;
  double a = 5.0;
  double u = 0.5;
  OptimizerSettings optimizer{1e-3, 0.9, 0.999, 1e-8, 5000, std::nullopt};

  int resolved_width() const { return width > 0 ? width : 4 * (2 * dim - 1); }
};

/// The published d = 20 configuration: 8 layers, 156 nodes, 300 training and
/// 5000 validation samples.
GenzConfig genz_d20_config();
/// The published d = 4 configuration with 20 layers.
GenzConfig genz_d4_full_config();

struct ArmResult {
  std::string name;
  LossTrace trace;
  Eigen::VectorXd grid_values;  ///< trained network on the result grid
  std::optional<DenseNet> initial;
  std::optional<DenseNet> trained;
};

struct ExperimentResult {
  std::string name;
  nlohmann::json config;
  std::uint64_t seed = 0;
  Samples training;
  std::optional<Samples> validation;
  Eigen::MatrixXd grid;  ///< evaluation points, n x d
  Eigen::VectorXd grid_target;
  std::vector<ArmResult> arms;
  std::map<std::string, double> metrics;
  double duration_seconds = 0.0;

  const ArmResult& arm(const std::string& name) const;
};

ExperimentResult run_runge(const RungeConfig& config);
ExperimentResult run_two_phase(const TwoPhaseConfig& config);
ExperimentResult run_cos4pi_comparison(const Cos4piConfig& config);
ExperimentResult run_genz(const GenzConfig& config);

/// Writes loss_<arm>.csv, grid.csv and manifest.json into `dir` (created if
/// missing). Wall-clock durations go into the manifest only when
/// `include_timing` is set, so default output is a pure function of the
/// configuration.
void write_result(const ExperimentResult& result, const std::filesystem::path& dir, bool include_timing = false);

// Configuration <-> JSON. Unknown keys are rejected; missing keys keep the
// values of `base`.
nlohmann::json to_json(const RungeConfig& config);
nlohmann::json to_json(const TwoPhaseConfig& config);
nlohmann::json to_json(const Cos4piConfig& config);
nlohmann::json to_json(const GenzConfig& config);
RungeConfig runge_config_from_json(const nlohmann::json& j, RungeConfig base = {});
TwoPhaseConfig two_phase_config_from_json(const nlohmann::json& j, TwoPhaseConfig base = {});
Cos4piConfig cos4pi_config_from_json(const nlohmann::json& j, Cos4piConfig base = {});
GenzConfig genz_config_from_json(const nlohmann::json& j, GenzConfig base = {});

}  // namespace polyinit
