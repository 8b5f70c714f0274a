#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace polyinit {

enum class Activation { ReLU, Identity };

struct Layer {
  Eigen::MatrixXd weights;  ///< out x in
  Eigen::VectorXd bias;     ///< out
  Activation activation = Activation::ReLU;

  int in() const { return static_cast<int>(weights.cols()); }
  int out() const { return static_cast<int>(weights.rows()); }
};

/// Fully connected feed-forward network with scalar output. The constructor
/// enforces the shape chain, a final Identity layer and finite parameters.
class DenseNet {
 public:
  DenseNet(int input_dim, std::vector<Layer> layers);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return layers_.back().out(); }
  int depth() const { return static_cast<int>(layers_.size()); }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(int i) const { return layers_[i]; }
  /// Widths of all layers except the output layer.
  std::vector<int> hidden_widths() const;
  long parameter_count() const;

  /// Mutable access for optimizers; callers must keep shapes unchanged.
  Layer& mutable_layer(int i) { return layers_[i]; }

 private:
  int input_dim_;
  std::vector<Layer> layers_;
};

/// Training or validation data: points are n x d, values n.
struct Samples {
  Eigen::MatrixXd points;
  Eigen::VectorXd values;

  Eigen::Index size() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }
};

double forward(const DenseNet& net, std::span<const double> x);
/// One output per row of `points`.
Eigen::VectorXd forward(const DenseNet& net, const Eigen::MatrixXd& points);

/// Activations of the last hidden layer (the inputs of the output layer),
/// one row per point.
Eigen::MatrixXd hidden_features(const DenseNet& net, const Eigen::MatrixXd& points);

/// (1/n) sum (y_i - net(x_i))^2, accumulated sequentially.
double mse_loss(const DenseNet& net, const Samples& samples);

/// Per-layer tensors shaped like the network parameters.
template <typename Scalar>
struct LayerTensors {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> weights;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;
};
using Gradient = std::vector<LayerTensors<double>>;

/// true = parameter is not updated by training.
struct FreezeMask {
  std::vector<LayerTensors<bool>> layers;

  static FreezeMask none(const DenseNet& net);
  static FreezeMask all(const DenseNet& net);
  /// Everything frozen except the final (output) layer.
  static FreezeMask all_but_output(const DenseNet& net);
  bool matches(const DenseNet& net) const;
};

Gradient zero_gradient(const DenseNet& net);

/// Gradient of mse_loss. ReLU uses derivative 0 at a zero pre-activation.
/// Entries frozen in `freeze` are set to 0.
Gradient backward(const DenseNet& net, const Samples& samples, const FreezeMask* freeze = nullptr);

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  long epochs = 0;
  std::optional<long> batch_size;  ///< nullopt: full batch
  std::uint64_t seed = 0;
  std::optional<FreezeMask> freeze;

  void validate() const;
};

struct AdamState {
  Gradient first_moment;
  Gradient second_moment;
  long step = 0;

  static AdamState zeros(const DenseNet& net);
};

/// One bias-corrected ADAM update in place. Frozen parameters are untouched.
void adam_step(DenseNet& net, const Gradient& gradient, AdamState& state, const TrainConfig& config);

struct LossTrace {
  std::vector<double> train;       ///< index 0 is the loss before training
  std::vector<double> validation;  ///< empty when no validation set was given
};

struct TrainResult {
  DenseNet net;
  LossTrace trace;
};

/// Runs `config.epochs` epochs of ADAM. Full-batch by default; minibatches
/// are drawn from a shuffle seeded by `config.seed`. Losses are recorded on
/// the full training (and validation) set before training and after every
/// epoch.
TrainResult train(const DenseNet& net, const Samples& samples, const Samples* validation,
                  const TrainConfig& config);

struct NetShape {
  int input_dim = 1;
  std::vector<int> hidden;  ///< ReLU layer widths
  int output_dim = 1;
};

NetShape shape_of(const DenseNet& net);

/// Weights uniform on +-sqrt(6 / (fan_in + fan_out)), zero biases, ReLU
/// hidden layers and an Identity output layer.
DenseNet xavier_init(const NetShape& shape, std::uint64_t seed);

void write_net(std::ostream& out, const DenseNet& net);
DenseNet read_net(std::istream& in);
void save_net(const std::string& path, const DenseNet& net);
DenseNet load_net(const std::string& path);

}  // namespace polyinit
