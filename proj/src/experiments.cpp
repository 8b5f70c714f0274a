#include "polyinit/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "polyinit/construct.hpp"
#include "polyinit/error.hpp"
#include "polyinit/rng.hpp"
#include "text_io.hpp"

namespace polyinit {

namespace {

using nlohmann::json;

// Independent streams for samples, validation and random initialization.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kTrainSamples = 1, kValidationSamples = 2, kXavier = 3, kShuffle = 4 };

Eigen::VectorXd evaluate(const TargetFunction& target, const Eigen::MatrixXd& points) {
  Eigen::VectorXd out(points.rows());
  std::vector<double> x(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    for (Eigen::Index i = 0; i < points.cols(); ++i) x[i] = points(j, i);
    out[j] = target(x);
  }
  return out;
}

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return sum / static_cast<double>(a.size());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ArmResult train_arm(std::string name, const DenseNet& initial, const Samples& training,
                    const Samples* validation, const TrainConfig& train_config, const Eigen::MatrixXd& grid) {
  TrainResult trained = train(initial, training, validation, train_config);
  ArmResult arm;
  arm.name = std::move(name);
  arm.trace = std::move(trained.trace);
  arm.grid_values = forward(trained.net, grid);
  arm.initial = initial;
  arm.trained = std::move(trained.net);
  return arm;
}

// --- JSON helpers -----------------------------------------------------------

class FieldReader {
 public:
  FieldReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw InvalidArgument(context_ + ": expected a JSON object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, std::optional<long>>) {
        out = it->is_null() ? std::nullopt : std::optional<long>(it->get<long>());
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) throw InvalidArgument("not an integer");
        out = it->get<T>();
      } else {
        out = it->get<T>();
      }
    } catch (const std::exception& e) {
      throw InvalidArgument(context_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    known_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!known_.count(it.key())) throw InvalidArgument(context_ + ": unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> known_;
};

json optimizer_json(const OptimizerSettings& o) {
  json j;
  j["learning_rate"] = o.learning_rate;
  j["adam_beta1"] = o.adam_beta1;
  j["adam_beta2"] = o.adam_beta2;
  j["adam_eps"] = o.adam_eps;
  j["epochs"] = o.epochs;
  j["batch_size"] = o.batch_size ? json(*o.batch_size) : json(nullptr);
  return j;
}

void read_optimizer(FieldReader& parent, const char* key, OptimizerSettings& o) {
  const json* j = parent.child(key);
  if (!j) return;
  FieldReader r(*j, key);
  r.read("learning_rate", o.learning_rate);
  r.read("adam_beta1", o.adam_beta1);
  r.read("adam_beta2", o.adam_beta2);
  r.read("adam_eps", o.adam_eps);
  r.read("epochs", o.epochs);
  r.read("batch_size", o.batch_size);
  r.finish();
  o.train_config(0).validate();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidArgument(message);
}

void write_csv_value(std::ostream& out, double v) { out << detail::format_double(v); }

}  // namespace

// --- targets and sampling ---------------------------------------------------

TargetFunction runge_function() {
  return {"runge", Box::cube(1, {-1.0, 1.0}), [](std::span<const double> x) { return 1.0 / (1.0 + 25.0 * x[0] * x[0]); }};
}

TargetFunction radial_cosine() {
  return {"radial_cosine", Box::cube(2, {-1.0, 1.0}), [](std::span<const double> x) {
            return std::cos(2.0 * std::numbers::pi * (x[0] * x[0] + x[1] * x[1]));
          }};
}

TargetFunction cos4pi_function() {
  return {"cos4pi", Box::cube(1, {-1.0, 1.0}),
          [](std::span<const double> x) { return std::cos(4.0 * std::numbers::pi * x[0]); }};
}

TargetFunction genz_function(int dim, double a, double u) {
  require(dim >= 1, "genz: dimension must be >= 1");
  require(std::isfinite(a) && std::isfinite(u), "genz: parameters must be finite");
  return {"genz", Box::cube(dim, {0.0, 1.0}), [a, u](std::span<const double> x) {
            double s = 0.0;
            for (double xi : x) s += a * std::abs(xi - u);
            return std::exp(-s);
          }};
}

Eigen::MatrixXd tensor_grid(const Box& domain, int per_axis) {
  require(per_axis >= 1, "grid needs at least one point per axis");
  const int d = domain.dim();
  long total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  Eigen::MatrixXd grid(total, d);
  for (long k = 0; k < total; ++k) {
    long rest = k;
    // Last coordinate varies fastest.
    for (int i = d - 1; i >= 0; --i) {
      const long idx = rest % per_axis;
      rest /= per_axis;
      const Interval& side = domain.sides[i];
      grid(k, i) = per_axis == 1 ? side.midpoint()
                                 : side.lo + side.width() * static_cast<double>(idx) / (per_axis - 1);
    }
  }
  return grid;
}

Samples sample(const TargetFunction& target, int count, SampleScheme scheme, std::uint64_t seed) {
  require(count >= 1, "sample count must be >= 1");
  const int d = target.dim();
  Samples s;
  if (scheme == SampleScheme::Equispaced) {
    const int per_axis = static_cast<int>(std::lround(std::pow(count, 1.0 / d)));
    long total = 1;
    for (int i = 0; i < d; ++i) total *= per_axis;
    require(total == count, "equispaced sampling needs a perfect " + std::to_string(d) + "-th power count");
    s.points = tensor_grid(target.domain, per_axis);
  } else {
    Rng rng(seed);
    s.points.resize(count, d);
    for (int j = 0; j < count; ++j)
      for (int i = 0; i < d; ++i) s.points(j, i) = rng.uniform(target.domain.sides[i].lo, target.domain.sides[i].hi);
  }
  s.values = evaluate(target, s.points);
  return s;
}

TrainConfig OptimizerSettings::train_config(std::uint64_t seed) const {
  TrainConfig c;
  c.learning_rate = learning_rate;
  c.adam_beta1 = adam_beta1;
  c.adam_beta2 = adam_beta2;
  c.adam_eps = adam_eps;
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.seed = seed;
  return c;
}

GenzConfig genz_d20_config() {
  GenzConfig c;
  c.dim = 20;
  c.layers = 8;
  c.train_samples = 300;
  c.validation_samples = 5000;
  c.optimizer.epochs = 2000;
  return c;
}

GenzConfig genz_d4_full_config() {
  GenzConfig c;
  c.layers = 20;
  return c;
}

const ArmResult& ExperimentResult::arm(const std::string& arm_name) const {
  for (const auto& a : arms)
    if (a.name == arm_name) return a;
  throw InvalidArgument("no arm named " + arm_name);
}

// --- experiments ------------------------------------------------------------

ExperimentResult run_runge(const RungeConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  require(config.samples >= config.degree + 1, "runge: need at least degree + 1 samples");
  require(config.grid_points >= 2, "runge: grid needs at least 2 points");
  const TargetFunction target = runge_function();

  ExperimentResult result;
  result.name = "runge";
  result.config = to_json(config);
  result.seed = config.seed;
  result.training = sample(target, config.samples, SampleScheme::Equispaced, config.seed);

  const FitResult fit = fit_least_squares(result.training.points, result.training.values,
                                          total_degree_set(1, config.degree), target.domain);
  ConstructedNet built = build_expansion_net(fit.expansion, config.depth);

  TrainConfig train_config = config.optimizer.train_config(derive_seed(config.seed, kShuffle));
  if (config.keep_block_sparsity) train_config.freeze = built.layout.freeze_structural_zeros(built.net);

  result.grid = tensor_grid(target.domain, config.grid_points);
  result.grid_target = evaluate(target, result.grid);
  result.arms.push_back(train_arm("poly_init", built.net, result.training, nullptr, train_config, result.grid));

  const Eigen::VectorXd poly_train = eval_expansion(fit.expansion, result.training.points);
  const Eigen::VectorXd poly_grid = eval_expansion(fit.expansion, result.grid);
  const ArmResult& arm = result.arms.back();
  result.metrics["expansion_train_mse"] = mse(poly_train, result.training.values);
  result.metrics["expansion_grid_mse"] = mse(poly_grid, result.grid_target);
  result.metrics["construction_bound"] = built.error_bound;
  result.metrics["fit_residual_norm"] = fit.residual_norm;
  result.metrics["initial_train_mse"] = arm.trace.train.front();
  result.metrics["final_train_mse"] = arm.trace.train.back();
  result.metrics["final_grid_mse"] = mse(arm.grid_values, result.grid_target);
  result.duration_seconds = seconds_since(start);
  return result;
}

ExperimentResult run_two_phase(const TwoPhaseConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const TargetFunction target = radial_cosine();
  ExperimentResult result;
  result.name = "two-phase";
  result.config = to_json(config);
  result.seed = config.seed;
  result.training = sample(target, config.samples, SampleScheme::UniformRandom, derive_seed(config.seed, kTrainSamples));

  const IndexSet index_set = total_degree_set(2, config.degree);
  const Expansion zero(index_set, std::vector<double>(static_cast<std::size_t>(index_set.size()), 0.0), target.domain);
  ConstructedNet built = build_expansion_net(zero, config.depth);

  result.grid = tensor_grid(target.domain, config.grid_per_axis);
  result.grid_target = evaluate(target, result.grid);

  // Phase 1: output layer only.
  TrainConfig phase1 = config.phase1.train_config(derive_seed(config.seed, kShuffle));
  phase1.freeze = config.freeze_everything ? FreezeMask::all(built.net) : FreezeMask::all_but_output(built.net);
  result.arms.push_back(train_arm("phase1", built.net, result.training, nullptr, phase1, result.grid));

  // Closed-form optimum over the same trainable parameters.
  const Eigen::MatrixXd features = hidden_features(built.net, result.training.points);
  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design << features, Eigen::VectorXd::Ones(features.rows());
  const Eigen::VectorXd coeffs = design.completeOrthogonalDecomposition().solve(result.training.values);
  result.metrics["phase1_oracle_loss"] = mse(design * coeffs, result.training.values);

  // Phase 2: all parameters (block sparsity optionally kept).
  TrainConfig phase2 = config.phase2.train_config(derive_seed(config.seed, kShuffle) + 1);
  if (config.freeze_everything) {
    phase2.freeze = FreezeMask::all(built.net);
  } else if (config.keep_block_sparsity) {
    phase2.freeze = built.layout.freeze_structural_zeros(built.net);
  }
  const DenseNet after_phase1 = *result.arms.back().trained;
  result.arms.push_back(train_arm("phase2", after_phase1, result.training, nullptr, phase2, result.grid));

  const auto& p1 = result.arm("phase1");
  const auto& p2 = result.arm("phase2");
  result.metrics["phase1_final_loss"] = p1.trace.train.back();
  result.metrics["phase2_final_loss"] = p2.trace.train.back();
  result.metrics["phase1_grid_mse"] = mse(p1.grid_values, result.grid_target);
  result.metrics["phase2_grid_mse"] = mse(p2.grid_values, result.grid_target);
  result.duration_seconds = seconds_since(start);
  return result;
}

ExperimentResult run_cos4pi_comparison(const Cos4piConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const TargetFunction target = cos4pi_function();
  ExperimentResult result;
  result.name = "cos4pi";
  result.config = to_json(config);
  result.seed = config.seed;
  result.training = sample(target, config.samples, SampleScheme::UniformRandom, derive_seed(config.seed, kTrainSamples));
  result.grid = tensor_grid(target.domain, config.grid_points);
  result.grid_target = evaluate(target, result.grid);

  const SquaringNet squaring = build_squaring_net(target.domain.sides[0], config.depth);
  const DenseNet random = xavier_init(shape_of(squaring.net), derive_seed(config.seed, kXavier));
  const TrainConfig train_config = config.optimizer.train_config(derive_seed(config.seed, kShuffle));
  result.arms.push_back(train_arm("poly_init", squaring.net, result.training, nullptr, train_config, result.grid));
  result.arms.push_back(train_arm("xavier", random, result.training, nullptr, train_config, result.grid));

  result.metrics["construction_bound"] = squaring_error_bound(target.domain.sides[0], config.depth);
  for (const auto& arm : result.arms) {
    result.metrics[arm.name + "_initial_loss"] = arm.trace.train.front();
    result.metrics[arm.name + "_final_loss"] = arm.trace.train.back();
    result.metrics[arm.name + "_grid_mse"] = mse(arm.grid_values, result.grid_target);
  }
  result.duration_seconds = seconds_since(start);
  return result;
}

ExperimentResult run_genz(const GenzConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  require(config.dim >= 1 && config.layers >= 1, "genz: dimension and layers must be >= 1");
  if (config.resolved_width() != 4 * (2 * config.dim - 1)) {
    throw InvalidArgument("genz: polynomial-initialized arm needs width 4(2d-1) = " +
                          std::to_string(4 * (2 * config.dim - 1)) + ", got " + std::to_string(config.width));
  }
  const TargetFunction target = genz_function(config.dim, config.a, config.u);
  ExperimentResult result;
  result.name = "genz";
  result.config = to_json(config);
  result.seed = config.seed;
  result.training = sample(target, config.train_samples, SampleScheme::UniformRandom,
                           derive_seed(config.seed, kTrainSamples));
  result.validation = sample(target, config.validation_samples, SampleScheme::UniformRandom,
                             derive_seed(config.seed, kValidationSamples));
  // A tensor grid is only dense enough in low dimension; otherwise report on
  // the validation points.
  result.grid = config.dim <= 2 ? tensor_grid(target.domain, 101) : result.validation->points;
  result.grid_target = evaluate(target, result.grid);

  const ConstructedNet stilde = build_stilde_net(config.dim, target.domain.sides[0], config.layers);
  const DenseNet random = xavier_init(shape_of(stilde.net), derive_seed(config.seed, kXavier));
  const TrainConfig train_config = config.optimizer.train_config(derive_seed(config.seed, kShuffle));
  result.arms.push_back(train_arm("poly_init", stilde.net, result.training, &*result.validation, train_config, result.grid));
  result.arms.push_back(train_arm("xavier", random, result.training, &*result.validation, train_config, result.grid));

  result.metrics["width"] = config.resolved_width();
  for (const auto& arm : result.arms) {
    result.metrics[arm.name + "_initial_validation_loss"] = arm.trace.validation.front();
    result.metrics[arm.name + "_final_validation_loss"] = arm.trace.validation.back();
    result.metrics[arm.name + "_final_train_loss"] = arm.trace.train.back();
  }
  result.duration_seconds = seconds_since(start);
  return result;
}

// --- output -----------------------------------------------------------------

void write_result(const ExperimentResult& result, const std::filesystem::path& dir, bool include_timing) {
  std::filesystem::create_directories(dir);
  auto open = [&dir](const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw InvalidArgument("cannot write " + (dir / name).string());
    return out;
  };

  for (const auto& arm : result.arms) {
    std::ofstream out = open("loss_" + arm.name + ".csv");
    const bool with_validation = !arm.trace.validation.empty();
    out << (with_validation ? "epoch,train_loss,val_loss\n" : "epoch,train_loss\n");
    for (std::size_t e = 0; e < arm.trace.train.size(); ++e) {
      out << e << ",";
      write_csv_value(out, arm.trace.train[e]);
      if (with_validation) {
        out << ",";
        write_csv_value(out, arm.trace.validation[e]);
      }
      out << "\n";
    }
  }

  {
    std::ofstream out = open("grid.csv");
    const Eigen::Index d = result.grid.cols();
    for (Eigen::Index i = 0; i < d; ++i) out << (d == 1 ? std::string("x") : "x" + std::to_string(i + 1)) << ",";
    out << "target";
    for (const auto& arm : result.arms) out << "," << arm.name;
    out << "\n";
    for (Eigen::Index k = 0; k < result.grid.rows(); ++k) {
      for (Eigen::Index i = 0; i < d; ++i) {
        write_csv_value(out, result.grid(k, i));
        out << ",";
      }
      write_csv_value(out, result.grid_target[k]);
      for (const auto& arm : result.arms) {
        out << ",";
        write_csv_value(out, arm.grid_values[k]);
      }
      out << "\n";
    }
  }

  json manifest;
  manifest["format"] = "polyinit-result";
  manifest["version"] = 1;
  manifest["experiment"] = result.name;
  manifest["seed"] = result.seed;
  manifest["config"] = result.config;
  manifest["training_samples"] = result.training.size();
  if (result.validation) manifest["validation_samples"] = result.validation->size();
  json arms = json::array();
  for (const auto& arm : result.arms) {
    arms.push_back({{"name", arm.name},
                    {"loss_file", "loss_" + arm.name + ".csv"},
                    {"epochs", arm.trace.train.size() - 1},
                    {"shape", arm.initial ? json(shape_of(*arm.initial).hidden) : json(nullptr)}});
  }
  manifest["arms"] = std::move(arms);
  json metrics = json::object();
  for (const auto& [k, v] : result.metrics) metrics[k] = v;
  manifest["metrics"] = std::move(metrics);
  if (include_timing) manifest["duration_seconds"] = result.duration_seconds;
  std::ofstream out = open("manifest.json");
  out << manifest.dump(2) << "\n";
}

// --- configuration JSON -----------------------------------------------------

json to_json(const RungeConfig& c) {
  return {{"seed", c.seed},
          {"samples", c.samples},
          {"degree", c.degree},
          {"depth", c.depth},
          {"keep_block_sparsity", c.keep_block_sparsity},
          {"grid_points", c.grid_points},
          {"optimizer", optimizer_json(c.optimizer)}};
}

json to_json(const TwoPhaseConfig& c) {
  return {{"seed", c.seed},
          {"samples", c.samples},
          {"degree", c.degree},
          {"depth", c.depth},
          {"keep_block_sparsity", c.keep_block_sparsity},
          {"freeze_everything", c.freeze_everything},
          {"grid_per_axis", c.grid_per_axis},
          {"phase1", optimizer_json(c.phase1)},
          {"phase2", optimizer_json(c.phase2)}};
}

json to_json(const Cos4piConfig& c) {
  return {{"seed", c.seed},
          {"samples", c.samples},
          {"depth", c.depth},
          {"grid_points", c.grid_points},
          {"optimizer", optimizer_json(c.optimizer)}};
}

json to_json(const GenzConfig& c) {
  return {{"seed", c.seed},
          {"dim", c.dim},
          {"layers", c.layers},
          {"width", c.resolved_width()},
          {"train_samples", c.train_samples},
          {"validation_samples", c.validation_samples},
          {"a", c.a},
          {"u", c.u},
          {"optimizer", optimizer_json(c.optimizer)}};
}

RungeConfig runge_config_from_json(const json& j, RungeConfig c) {
  FieldReader r(j, "runge");
  r.read("seed", c.seed);
  r.read("samples", c.samples);
  r.read("degree", c.degree);
  r.read("depth", c.depth);
  r.read("keep_block_sparsity", c.keep_block_sparsity);
  r.read("grid_points", c.grid_points);
  read_optimizer(r, "optimizer", c.optimizer);
  r.finish();
  require(c.samples >= 1 && c.degree >= 0 && c.depth >= 1, "runge: invalid configuration");
  return c;
}

TwoPhaseConfig two_phase_config_from_json(const json& j, TwoPhaseConfig c) {
  FieldReader r(j, "two-phase");
  r.read("seed", c.seed);
  r.read("samples", c.samples);
  r.read("degree", c.degree);
  r.read("depth", c.depth);
  r.read("keep_block_sparsity", c.keep_block_sparsity);
  r.read("freeze_everything", c.freeze_everything);
  r.read("grid_per_axis", c.grid_per_axis);
  read_optimizer(r, "phase1", c.phase1);
  read_optimizer(r, "phase2", c.phase2);
  r.finish();
  require(c.samples >= 1 && c.degree >= 0 && c.depth >= 1, "two-phase: invalid configuration");
  return c;
}

Cos4piConfig cos4pi_config_from_json(const json& j, Cos4piConfig c) {
  FieldReader r(j, "cos4pi");
  r.read("seed", c.seed);
  r.read("samples", c.samples);
  r.read("depth", c.depth);
  r.read("grid_points", c.grid_points);
  read_optimizer(r, "optimizer", c.optimizer);
  r.finish();
  require(c.samples >= 1 && c.depth >= 1, "cos4pi: invalid configuration");
  return c;
}

GenzConfig genz_config_from_json(const json& j, GenzConfig c) {
  FieldReader r(j, "genz");
  r.read("seed", c.seed);
  r.read("dim", c.dim);
  r.read("layers", c.layers);
  r.read("width", c.width);
  r.read("train_samples", c.train_samples);
  r.read("validation_samples", c.validation_samples);
  r.read("a", c.a);
  r.read("u", c.u);
  read_optimizer(r, "optimizer", c.optimizer);
  r.finish();
  require(c.dim >= 1 && c.layers >= 1 && c.train_samples >= 1 && c.validation_samples >= 1,
          "genz: invalid configuration");
  return c;
}

}  // namespace polyinit
