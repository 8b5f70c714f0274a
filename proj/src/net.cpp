#include "polyinit/net.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>

#include <Eigen/SparseCore>

#include "polyinit/error.hpp"
#include "polyinit/rng.hpp"
#include "text_io.hpp"

namespace polyinit {

namespace {

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

bool all_finite(const Layer& layer) {
  return layer.weights.allFinite() && layer.bias.allFinite();
}

void apply_activation(Activation act, Eigen::MatrixXd& z) {
  if (act == Activation::ReLU) z = z.cwiseMax(0.0);
}

void check_samples(const DenseNet& net, const Samples& samples) {
  if (samples.size() == 0) throw InvalidArgument("empty sample list");
  if (samples.points.cols() != net.input_dim()) {
    throw InvalidArgument("samples have dimension " + std::to_string(samples.points.cols()) +
                          ", network expects " + std::to_string(net.input_dim()));
  }
  if (samples.values.size() != samples.size()) throw InvalidArgument("point/value count mismatch");
}

double mean_squared(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    const double r = target[i] - predicted[i];
    sum += r * r;
  }
  return sum / static_cast<double>(target.size());
}

struct AdamCoefficients {
  double lr, beta1, beta2, eps, correction1, correction2;

  AdamCoefficients(const TrainConfig& c, long step)
      : lr(c.learning_rate),
        beta1(c.adam_beta1),
        beta2(c.adam_beta2),
        eps(c.adam_eps),
        correction1(1.0 - std::pow(c.adam_beta1, static_cast<double>(step))),
        correction2(1.0 - std::pow(c.adam_beta2, static_cast<double>(step))) {}

  void update(double* param, const double* grad, double* m, double* v, const bool* frozen,
              Eigen::Index n) const {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (frozen && frozen[k]) continue;
      const double g = grad[k];
      m[k] = beta1 * m[k] + (1.0 - beta1) * g;
      v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      param[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
};

// Training engine. Layers in the frozen prefix are evaluated once per input
// set; layers whose trainable-or-nonzero pattern is sparse are stored and
// differentiated as sparse matrices. Both are exact reformulations of the
// dense computation.
class Engine {
 public:
  Engine(const DenseNet& net, const FreezeMask* freeze) : input_dim_(net.input_dim()) {
    const int depth = net.depth();
    first_trainable_ = depth;
    for (int l = 0; l < depth; ++l) {
      const Layer& src = net.layer(l);
      State s;
      s.act = src.activation;
      s.bias = src.bias;
      const int rows = src.out();
      const int cols = src.in();
      Eigen::Array<bool, -1, -1> wfrozen;
      if (freeze) {
        s.bias_frozen = freeze->layers[l].bias.array();
        wfrozen = freeze->layers[l].weights.array();
      } else {
        s.bias_frozen = Eigen::Array<bool, -1, 1>::Constant(rows, false);
        wfrozen = Eigen::Array<bool, -1, -1>::Constant(rows, cols, false);
      }
      const bool layer_frozen = wfrozen.all() && s.bias_frozen.all();
      if (!layer_frozen && first_trainable_ == depth) first_trainable_ = l;

      long pattern = 0;
      for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i)
          if (!wfrozen(i, j) || src.weights(i, j) != 0.0) ++pattern;
      const long total = static_cast<long>(rows) * cols;
      s.sparse = total >= 256 && pattern * 4 < total;
      if (s.sparse) {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(pattern));
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j)
            if (!wfrozen(i, j) || src.weights(i, j) != 0.0) triplets.emplace_back(i, j, src.weights(i, j));
        s.sparse_weights.resize(rows, cols);
        s.sparse_weights.setFromTriplets(triplets.begin(), triplets.end());
        s.sparse_weights.makeCompressed();
        const Eigen::Index nnz = s.sparse_weights.nonZeros();
        s.weight_frozen.resize(nnz);
        s.nz_row.resize(nnz);
        s.nz_col.resize(nnz);
        Eigen::Index k = 0;
        for (int i = 0; i < rows; ++i) {
          for (RowSparse::InnerIterator it(s.sparse_weights, i); it; ++it, ++k) {
            s.nz_row[k] = i;
            s.nz_col[k] = static_cast<int>(it.col());
            s.weight_frozen[k] = wfrozen(i, it.col());
          }
        }
        s.grad_weights = Eigen::VectorXd::Zero(nnz);
      } else {
        s.dense_weights = src.weights;
        s.weight_frozen.resize(total);
        for (long k = 0; k < total; ++k) s.weight_frozen[k] = wfrozen(k % rows, k / rows);
        s.grad_weights = Eigen::VectorXd::Zero(total);
      }
      s.grad_bias = Eigen::VectorXd::Zero(rows);
      s.m_weights = Eigen::VectorXd::Zero(s.grad_weights.size());
      s.v_weights = Eigen::VectorXd::Zero(s.grad_weights.size());
      s.m_bias = Eigen::VectorXd::Zero(rows);
      s.v_bias = Eigen::VectorXd::Zero(rows);
      layers_.push_back(std::move(s));
    }
  }

  // Activations entering the first trainable layer.
  Eigen::MatrixXd prefix(const Eigen::MatrixXd& points) const {
    Eigen::MatrixXd a = points;
    for (int l = 0; l < first_trainable_; ++l) a = affine(l, a, true);
    return a;
  }

  Eigen::VectorXd predict(const Eigen::MatrixXd& prefix_activations) const {
    Eigen::MatrixXd a = prefix_activations;
    for (int l = first_trainable_; l < depth(); ++l) a = affine(l, a, true);
    return a.col(0);
  }

  // Loss on the batch and its gradient, stored in the engine.
  double loss_and_gradient(const Eigen::MatrixXd& prefix_activations, const Eigen::VectorXd& targets) {
    const int depth_ = depth();
    const Eigen::Index n = targets.size();
    if (first_trainable_ == depth_) {
      return mean_squared(prefix_activations.col(0), targets);
    }
    // Forward, keeping pre-activations and activations of trainable layers.
    zs_.resize(depth_);
    acts_.resize(depth_);
    const Eigen::MatrixXd* a = &prefix_activations;
    for (int l = first_trainable_; l < depth_; ++l) {
      zs_[l] = affine(l, *a, false);
      acts_[l] = zs_[l];
      apply_activation(layers_[l].act, acts_[l]);
      a = &acts_[l];
    }
    const Eigen::VectorXd output = acts_[depth_ - 1].col(0);
    const double loss = mean_squared(output, targets);

    Eigen::MatrixXd delta = (2.0 / static_cast<double>(n)) * (output - targets);
    for (int l = depth_ - 1; l >= first_trainable_; --l) {
      State& s = layers_[l];
      if (s.act == Activation::ReLU) delta = (zs_[l].array() > 0.0).select(delta, 0.0);
      const Eigen::MatrixXd& input = l == first_trainable_ ? prefix_activations : acts_[l - 1];
      s.grad_bias = delta.colwise().sum().transpose();
      if (s.sparse) {
        for (Eigen::Index k = 0; k < s.grad_weights.size(); ++k) {
          s.grad_weights[k] = delta.col(s.nz_row[k]).dot(input.col(s.nz_col[k]));
        }
      } else {
        Eigen::Map<Eigen::MatrixXd> g(s.grad_weights.data(), s.dense_weights.rows(),
                                      s.dense_weights.cols());
        g.noalias() = delta.transpose() * input;
      }
      for (Eigen::Index k = 0; k < s.grad_weights.size(); ++k)
        if (s.weight_frozen[k]) s.grad_weights[k] = 0.0;
      for (Eigen::Index k = 0; k < s.grad_bias.size(); ++k)
        if (s.bias_frozen[k]) s.grad_bias[k] = 0.0;
      if (l > first_trainable_) {
        Eigen::MatrixXd next;
        if (s.sparse) {
          next = delta * s.sparse_weights;
        } else {
          next.noalias() = delta * s.dense_weights;
        }
        delta = std::move(next);
      }
    }
    return loss;
  }

  void adam_step(const TrainConfig& config) {
    ++step_;
    const AdamCoefficients adam(config, step_);
    for (int l = first_trainable_; l < depth(); ++l) {
      State& s = layers_[l];
      double* w = s.sparse ? s.sparse_weights.valuePtr() : s.dense_weights.data();
      adam.update(w, s.grad_weights.data(), s.m_weights.data(), s.v_weights.data(),
                  s.weight_frozen.data(), s.grad_weights.size());
      adam.update(s.bias.data(), s.grad_bias.data(), s.m_bias.data(), s.v_bias.data(),
                  s.bias_frozen.data(), s.bias.size());
    }
  }

  Gradient gradient() const {
    Gradient g;
    for (int l = 0; l < depth(); ++l) {
      const State& s = layers_[l];
      LayerTensors<double> t;
      t.weights = Eigen::MatrixXd::Zero(rows(l), cols(l));
      t.bias = Eigen::VectorXd::Zero(rows(l));
      if (l >= first_trainable_) {
        t.bias = s.grad_bias;
        if (s.sparse) {
          for (Eigen::Index k = 0; k < s.grad_weights.size(); ++k)
            t.weights(s.nz_row[k], s.nz_col[k]) = s.grad_weights[k];
        } else {
          t.weights = Eigen::Map<const Eigen::MatrixXd>(s.grad_weights.data(), rows(l), cols(l));
        }
      }
      g.push_back(std::move(t));
    }
    return g;
  }

  DenseNet export_net() const {
    std::vector<Layer> out;
    for (int l = 0; l < depth(); ++l) {
      const State& s = layers_[l];
      Layer layer;
      layer.activation = s.act;
      layer.bias = s.bias;
      layer.weights = s.sparse ? Eigen::MatrixXd(s.sparse_weights) : s.dense_weights;
      out.push_back(std::move(layer));
    }
    return DenseNet(input_dim_, std::move(out));
  }

  bool parameters_finite() const {
    for (const State& s : layers_) {
      if (!s.bias.allFinite()) return false;
      if (s.sparse ? !Eigen::Map<const Eigen::VectorXd>(s.sparse_weights.valuePtr(),
                                                        s.sparse_weights.nonZeros())
                          .allFinite()
                   : !s.dense_weights.allFinite())
        return false;
    }
    return true;
  }

 private:
  struct State {
    Activation act = Activation::ReLU;
    bool sparse = false;
    Eigen::MatrixXd dense_weights;
    RowSparse sparse_weights;
    std::vector<int> nz_row, nz_col;
    Eigen::VectorXd bias;
    Eigen::Array<bool, -1, 1> weight_frozen;
    Eigen::Array<bool, -1, 1> bias_frozen;
    Eigen::VectorXd grad_weights, grad_bias;
    Eigen::VectorXd m_weights, v_weights, m_bias, v_bias;
  };

  int depth() const { return static_cast<int>(layers_.size()); }
  Eigen::Index rows(int l) const { return layers_[l].bias.size(); }
  Eigen::Index cols(int l) const {
    return layers_[l].sparse ? layers_[l].sparse_weights.cols() : layers_[l].dense_weights.cols();
  }

  Eigen::MatrixXd affine(int l, const Eigen::MatrixXd& a, bool activate) const {
    const State& s = layers_[l];
    Eigen::MatrixXd z;
    if (s.sparse) {
      z = a * s.sparse_weights.transpose();
    } else {
      z.noalias() = a * s.dense_weights.transpose();
    }
    z.rowwise() += s.bias.transpose();
    if (activate) apply_activation(s.act, z);
    return z;
  }

  int input_dim_;
  int first_trainable_ = 0;
  long step_ = 0;
  std::vector<State> layers_;
  std::vector<Eigen::MatrixXd> zs_, acts_;
};

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[rows[i]];
  return out;
}

template <typename Scalar>
std::vector<LayerTensors<Scalar>> tensors_like(const DenseNet& net, Scalar value) {
  std::vector<LayerTensors<Scalar>> out;
  for (const Layer& layer : net.layers()) {
    LayerTensors<Scalar> t;
    t.weights = Eigen::Matrix<Scalar, -1, -1>::Constant(layer.out(), layer.in(), value);
    t.bias = Eigen::Matrix<Scalar, -1, 1>::Constant(layer.out(), value);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

DenseNet::DenseNet(int input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ < 1) throw InvalidArgument("network input dimension must be >= 1");
  if (layers_.empty()) throw InvalidArgument("network needs at least one layer");
  int width = input_dim_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.in() != width) {
      throw InvalidArgument("layer " + std::to_string(l) + " expects " + std::to_string(layer.in()) +
                            " inputs but previous width is " + std::to_string(width));
    }
    if (layer.bias.size() != layer.out() || layer.out() < 1) {
      throw InvalidArgument("layer " + std::to_string(l) + " bias/width mismatch");
    }
    if (!all_finite(layer)) throw InvalidArgument("layer " + std::to_string(l) + " has non-finite parameters");
    width = layer.out();
  }
  if (layers_.back().activation != Activation::Identity) {
    throw InvalidArgument("output layer must use the identity activation");
  }
  if (layers_.back().out() != 1) throw InvalidArgument("network output must be scalar");
}

std::vector<int> DenseNet::hidden_widths() const {
  std::vector<int> widths;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) widths.push_back(layers_[l].out());
  return widths;
}

long DenseNet::parameter_count() const {
  long count = 0;
  for (const Layer& layer : layers_) count += layer.weights.size() + layer.bias.size();
  return count;
}

double forward(const DenseNet& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_dim()) {
    throw InvalidArgument("input has dimension " + std::to_string(x.size()) + ", network expects " +
                          std::to_string(net.input_dim()));
  }
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (const Layer& layer : net.layers()) {
    Eigen::VectorXd z = layer.weights * a + layer.bias;
    if (layer.activation == Activation::ReLU) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a[0];
}

Eigen::VectorXd forward(const DenseNet& net, const Eigen::MatrixXd& points) {
  if (points.cols() != net.input_dim()) {
    throw InvalidArgument("points have dimension " + std::to_string(points.cols()) +
                          ", network expects " + std::to_string(net.input_dim()));
  }
  Eigen::MatrixXd a = points;
  for (const Layer& layer : net.layers()) {
    Eigen::MatrixXd z;
    z.noalias() = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    apply_activation(layer.activation, z);
    a = std::move(z);
  }
  return a.col(0);
}

Eigen::MatrixXd hidden_features(const DenseNet& net, const Eigen::MatrixXd& points) {
  if (points.cols() != net.input_dim()) throw InvalidArgument("points have wrong dimension");
  Eigen::MatrixXd a = points;
  for (int l = 0; l + 1 < net.depth(); ++l) {
    const Layer& layer = net.layer(l);
    Eigen::MatrixXd z;
    z.noalias() = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    apply_activation(layer.activation, z);
    a = std::move(z);
  }
  return a;
}

double mse_loss(const DenseNet& net, const Samples& samples) {
  check_samples(net, samples);
  return mean_squared(forward(net, samples.points), samples.values);
}

FreezeMask FreezeMask::none(const DenseNet& net) { return FreezeMask{tensors_like<bool>(net, false)}; }

FreezeMask FreezeMask::all(const DenseNet& net) { return FreezeMask{tensors_like<bool>(net, true)}; }

FreezeMask FreezeMask::all_but_output(const DenseNet& net) {
  FreezeMask mask = all(net);
  mask.layers.back().weights.setConstant(false);
  mask.layers.back().bias.setConstant(false);
  return mask;
}

bool FreezeMask::matches(const DenseNet& net) const {
  if (static_cast<int>(layers.size()) != net.depth()) return false;
  for (int l = 0; l < net.depth(); ++l) {
    if (layers[l].weights.rows() != net.layer(l).out() || layers[l].weights.cols() != net.layer(l).in() ||
        layers[l].bias.size() != net.layer(l).out())
      return false;
  }
  return true;
}

Gradient zero_gradient(const DenseNet& net) { return tensors_like<double>(net, 0.0); }

Gradient backward(const DenseNet& net, const Samples& samples, const FreezeMask* freeze) {
  check_samples(net, samples);
  if (freeze && !freeze->matches(net)) throw InvalidArgument("freeze mask shape mismatch");
  Engine engine(net, freeze);
  engine.loss_and_gradient(engine.prefix(samples.points), samples.values);
  return engine.gradient();
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw InvalidArgument("adam beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw InvalidArgument("adam beta2 must lie in (0, 1)");
  if (!(adam_eps > 0.0)) throw InvalidArgument("adam eps must be positive");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batch_size && *batch_size < 1) throw InvalidArgument("batch size must be >= 1");
}

AdamState AdamState::zeros(const DenseNet& net) {
  return AdamState{zero_gradient(net), zero_gradient(net), 0};
}

void adam_step(DenseNet& net, const Gradient& gradient, AdamState& state, const TrainConfig& config) {
  config.validate();
  const auto same_shape = [&net](const Gradient& g) {
    if (static_cast<int>(g.size()) != net.depth()) return false;
    for (int l = 0; l < net.depth(); ++l) {
      if (g[l].weights.rows() != net.layer(l).out() || g[l].weights.cols() != net.layer(l).in() ||
          g[l].bias.size() != net.layer(l).out())
        return false;
    }
    return true;
  };
  if (!same_shape(gradient) || !same_shape(state.first_moment) || !same_shape(state.second_moment)) {
    throw InvalidArgument("adam_step: gradient/state shapes do not match the network");
  }
  if (config.freeze && !config.freeze->matches(net)) throw InvalidArgument("freeze mask shape mismatch");
  ++state.step;
  const AdamCoefficients adam(config, state.step);
  for (int l = 0; l < net.depth(); ++l) {
    Layer& layer = net.mutable_layer(l);
    const bool* wf = config.freeze ? config.freeze->layers[l].weights.data() : nullptr;
    const bool* bf = config.freeze ? config.freeze->layers[l].bias.data() : nullptr;
    adam.update(layer.weights.data(), gradient[l].weights.data(), state.first_moment[l].weights.data(),
                state.second_moment[l].weights.data(), wf, layer.weights.size());
    adam.update(layer.bias.data(), gradient[l].bias.data(), state.first_moment[l].bias.data(),
                state.second_moment[l].bias.data(), bf, layer.bias.size());
  }
}

TrainResult train(const DenseNet& net, const Samples& samples, const Samples* validation,
                  const TrainConfig& config) {
  config.validate();
  check_samples(net, samples);
  if (validation) check_samples(net, *validation);
  const FreezeMask* freeze = config.freeze ? &*config.freeze : nullptr;
  if (freeze && !freeze->matches(net)) throw InvalidArgument("freeze mask shape mismatch");

  Engine engine(net, freeze);
  const Eigen::MatrixXd train_prefix = engine.prefix(samples.points);
  const Eigen::MatrixXd val_prefix = validation ? engine.prefix(validation->points) : Eigen::MatrixXd();
  LossTrace trace;
  auto record_validation = [&] {
    if (validation) trace.validation.push_back(mean_squared(engine.predict(val_prefix), validation->values));
  };
  auto check_finite = [&](double loss, long epoch) {
    if (!std::isfinite(loss) || !engine.parameters_finite()) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    }
  };

  const Eigen::Index n = samples.size();
  const bool full_batch = !config.batch_size || *config.batch_size >= n;
  if (full_batch) {
    for (long epoch = 0;; ++epoch) {
      const double loss = engine.loss_and_gradient(train_prefix, samples.values);
      check_finite(loss, epoch);
      trace.train.push_back(loss);
      record_validation();
      if (epoch == config.epochs) break;
      engine.adam_step(config);
    }
  } else {
    Rng rng(config.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    trace.train.push_back(mean_squared(engine.predict(train_prefix), samples.values));
    record_validation();
    const auto batch = static_cast<std::size_t>(*config.batch_size);
    for (long epoch = 1; epoch <= config.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(std::min(start + batch, order.size())));
        engine.loss_and_gradient(gather_rows(train_prefix, rows), gather(samples.values, rows));
        engine.adam_step(config);
      }
      const double loss = mean_squared(engine.predict(train_prefix), samples.values);
      check_finite(loss, epoch);
      trace.train.push_back(loss);
      record_validation();
    }
  }
  return TrainResult{engine.export_net(), std::move(trace)};
}

NetShape shape_of(const DenseNet& net) {
  return NetShape{net.input_dim(), net.hidden_widths(), net.output_dim()};
}

DenseNet xavier_init(const NetShape& shape, std::uint64_t seed) {
  if (shape.input_dim < 1 || shape.output_dim < 1) throw InvalidArgument("invalid network shape");
  Rng rng(seed);
  std::vector<Layer> layers;
  int fan_in = shape.input_dim;
  auto make = [&](int fan_out, Activation act) {
    if (fan_out < 1) throw InvalidArgument("layer widths must be >= 1");
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Layer layer;
    layer.activation = act;
    layer.weights.resize(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) layer.weights(i, j) = rng.uniform(-limit, limit);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (int width : shape.hidden) make(width, Activation::ReLU);
  make(shape.output_dim, Activation::Identity);
  return DenseNet(shape.input_dim, std::move(layers));
}

void write_net(std::ostream& out, const DenseNet& net) {
  using detail::format_double;
  out << "polyinit-net 1\n";
  out << "shape " << net.input_dim();
  for (const Layer& layer : net.layers()) out << " " << layer.out();
  out << "\n";
  for (const Layer& layer : net.layers()) {
    out << "layer " << layer.out() << " " << layer.in() << " "
        << (layer.activation == Activation::ReLU ? "relu" : "identity") << "\n";
    for (int i = 0; i < layer.out(); ++i) {
      for (int j = 0; j < layer.in(); ++j) out << format_double(layer.weights(i, j)) << " ";
      out << format_double(layer.bias[i]) << "\n";
    }
  }
}

DenseNet read_net(std::istream& in) {
  using detail::parse_double;
  using detail::parse_long;
  detail::LineReader reader(in);
  std::vector<std::string_view> tokens;
  auto header = reader.expect("polyinit-net", 1);
  if (header[1] != "1") reader.fail("unsupported network format version");
  if (!reader.next(tokens) || tokens.front() != "shape" || tokens.size() < 3) {
    reader.fail("expected 'shape <input> <widths...>'");
  }
  std::vector<long> shape;
  for (std::size_t i = 1; i < tokens.size(); ++i) shape.push_back(parse_long(tokens[i]));
  std::vector<Layer> layers;
  for (std::size_t l = 1; l < shape.size(); ++l) {
    auto t = reader.expect("layer", 3);
    const long out = parse_long(t[1]);
    const long in_dim = parse_long(t[2]);
    Layer layer;
    if (t[3] == "relu") {
      layer.activation = Activation::ReLU;
    } else if (t[3] == "identity") {
      layer.activation = Activation::Identity;
    } else {
      reader.fail("unknown activation '" + std::string(t[3]) + "'");
    }
    if (out != shape[l] || in_dim != shape[l - 1] || out < 1) reader.fail("layer shape disagrees with header");
    layer.weights.resize(out, in_dim);
    layer.bias.resize(out);
    for (long i = 0; i < out; ++i) {
      if (!reader.next(tokens)) reader.fail("missing weight rows");
      if (static_cast<long>(tokens.size()) != in_dim + 1) reader.fail("weight row has wrong length");
      for (long j = 0; j < in_dim; ++j) layer.weights(i, j) = parse_double(tokens[j]);
      layer.bias[i] = parse_double(tokens[in_dim]);
    }
    layers.push_back(std::move(layer));
  }
  if (reader.next(tokens)) reader.fail("trailing content after last layer");
  return DenseNet(static_cast<int>(shape.front()), std::move(layers));
}

void save_net(const std::string& path, const DenseNet& net) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  write_net(out, net);
}

DenseNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  return read_net(in);
}

}  // namespace polyinit
