#include "polyinit/construct.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <ostream>

#include <json.hpp>

#include "polyinit/error.hpp"

namespace polyinit {

namespace {

// Affine expression over the nodes of the builder's current layer.
struct Affine {
  struct Term {
    int node;
    double coeff;
  };
  std::vector<Term> terms;
  double constant = 0.0;

  static Affine node(int index, double coeff = 1.0) { return Affine{{{index, coeff}}, 0.0}; }

  Affine& add(const Affine& other, double scale = 1.0) {
    for (const Term& t : other.terms) terms.push_back({t.node, scale * t.coeff});
    constant += scale * other.constant;
    return *this;
  }
  Affine scaled(double s) const { return Affine{}.add(*this, s); }
  Affine shifted(double c) const {
    Affine out = *this;
    out.constant += c;
    return out;
  }
};

// sum_k coeff_k * node_k
Affine nodes(std::initializer_list<std::pair<int, double>> parts) {
  Affine out;
  for (const auto& [node, coeff] : parts) out.terms.push_back({node, coeff});
  return out;
}

// Assembles a DenseNet layer by layer. Nodes are added to a pending layer as
// activation(affine expression over the current layer); commit() appends it.
class NetBuilder {
 public:
  explicit NetBuilder(int input_dim) : input_dim_(input_dim), width_(input_dim) {}

  static Affine input(int i) { return Affine::node(i); }

  int add_node(const Affine& pre, int group, std::string label) {
    pending_.push_back({pre, group, std::move(label)});
    return static_cast<int>(pending_.size()) - 1;
  }

  void commit(Activation act) {
    if (pending_.empty()) throw std::logic_error("NetBuilder: empty layer");
    Layer layer;
    layer.activation = act;
    layer.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pending_.size()), width_);
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pending_.size()));
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      const Pending& p = pending_[i];
      for (const auto& t : p.pre.terms) {
        if (t.node < 0 || t.node >= width_) throw std::logic_error("NetBuilder: dangling node reference");
        layer.weights(static_cast<Eigen::Index>(i), t.node) += t.coeff;
      }
      layer.bias[static_cast<Eigen::Index>(i)] = p.pre.constant;
      if (blocks.empty() || blocks.back().label != p.label || blocks.back().group != p.group) {
        blocks.push_back(Block{p.label, p.group, static_cast<int>(i), static_cast<int>(i) + 1});
      } else {
        blocks.back().end = static_cast<int>(i) + 1;
      }
    }
    width_ = static_cast<int>(pending_.size());
    layers_.push_back(std::move(layer));
    layout_.layers.push_back(std::move(blocks));
    pending_.clear();
  }

  std::pair<DenseNet, BlockLayout> finish(const Affine& output, std::string kind) {
    add_node(output, Block::kShared, "output");
    commit(Activation::Identity);
    layout_.kind = std::move(kind);
    return {DenseNet(input_dim_, std::move(layers_)), std::move(layout_)};
  }

 private:
  struct Pending {
    Affine pre;
    int group;
    std::string label;
  };
  int input_dim_;
  int width_;
  std::vector<Layer> layers_;
  std::vector<Pending> pending_;
  BlockLayout layout_;
};

// Four ReLU nodes per layer computing the interpolant of x^2 on an interval:
// three refinement nodes carry the hat-function iterate g_i and one
// approximation node carries f_{i-1}. After `depth` steps the output is
// f_depth = f_0 - sum_{i=1}^{depth} C g_i / 4^(i-1).
class SquaringUnit {
 public:
  SquaringUnit(const Interval& interval, int depth) : interval_(interval), depth_(depth) {
    constant_ = 0.25 * interval.width() * interval.width();
  }

  void step(NetBuilder& b, const Affine& input, int group, const std::string& label) {
    int n1, n2, n3, na;
    if (steps_ == 0) {
      const double lo = interval_.lo;
      const double hi = interval_.hi;
      n1 = b.add_node(input.shifted(-lo), group, label);
      n2 = b.add_node(input.shifted(-interval_.midpoint()), group, label);
      n3 = b.add_node(input.shifted(-hi), group, label);
      na = b.add_node(input.scaled(lo + hi).shifted(-lo * hi), group, label);
      const double s = 2.0 / interval_.width();
      g_ = nodes({{n1, s}, {n2, -2.0 * s}, {n3, s}});
    } else {
      const double weight = constant_ / std::pow(4.0, steps_ - 1);
      n1 = b.add_node(g_, group, label);
      n2 = b.add_node(g_.shifted(-0.5), group, label);
      n3 = b.add_node(g_.shifted(-1.0), group, label);
      na = b.add_node(Affine{}.add(f_).add(g_, -weight), group, label);
      g_ = nodes({{n1, 2.0}, {n2, -4.0}, {n3, 2.0}});
    }
    f_ = Affine::node(na);
    ++steps_;
  }

  bool done() const { return steps_ == depth_; }

  Affine output() const {
    if (!done()) throw std::logic_error("SquaringUnit: output requested before final layer");
    return Affine{}.add(f_).add(g_, -constant_ / std::pow(4.0, depth_ - 1));
  }

 private:
  Interval interval_;
  int depth_;
  double constant_;
  int steps_ = 0;
  Affine g_, f_;
};

// x*y ~ 2 f((x+y)/2) - f(x)/2 - f(y)/2 with three squaring units.
class ProductUnit {
 public:
  ProductUnit(const Interval& interval, int depth, Affine x, Affine y)
      : x_(std::move(x)), y_(std::move(y)), sx_(interval, depth), smid_(interval, depth), sy_(interval, depth) {
    mid_ = Affine{}.add(x_, 0.5).add(y_, 0.5);
  }

  void step(NetBuilder& b, int group, const std::string& label, const std::vector<int>& subgroups = {}) {
    const int gx = subgroups.empty() ? group : subgroups[0];
    const int gm = subgroups.empty() ? group : subgroups[1];
    const int gy = subgroups.empty() ? group : subgroups[2];
    sx_.step(b, x_, gx, subgroups.empty() ? label : label + "square(x)");
    smid_.step(b, mid_, gm, subgroups.empty() ? label : label + "square(mid)");
    sy_.step(b, y_, gy, subgroups.empty() ? label : label + "square(y)");
  }

  bool done() const { return sx_.done(); }

  Affine output() const {
    return Affine{}.add(sx_.output(), -0.5).add(smid_.output(), 2.0).add(sy_.output(), -0.5);
  }

 private:
  Affine x_, y_, mid_;
  SquaringUnit sx_, smid_, sy_;
};

// Carries a value with a known lower bound through a ReLU layer exactly:
// v = relu(v + c) - c with v + c >= 0.
class Passthrough {
 public:
  Passthrough(Affine value, double lower_bound, double upper_bound) : value_(std::move(value)) {
    offset_ = lower_bound >= 0.0 ? 0.0 : -lower_bound + 0.1 * std::max(1.0, upper_bound - lower_bound);
  }

  void step(NetBuilder& b, int group, const std::string& label) {
    const int n = b.add_node(value_.shifted(offset_), group, label);
    value_ = Affine::node(n).shifted(-offset_);
  }

  const Affine& value() const { return value_; }

 private:
  Affine value_;
  double offset_;
};

// Rigorous bound on max |prod_k (x - r_k)| over an interval: dense sampling
// plus a Lipschitz margin for the gaps between samples.
double sup_abs_product(const std::vector<double>& roots, const Interval& interval) {
  if (roots.empty()) return 1.0;
  constexpr int kSamples = 4096;
  const double h = interval.width() / kSamples;
  double sup = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double x = interval.lo + i * h;
    double p = 1.0;
    for (double r : roots) p *= x - r;
    sup = std::max(sup, std::abs(p));
  }
  double lipschitz = 0.0;
  for (std::size_t k = 0; k < roots.size(); ++k) {
    double term = 1.0;
    for (std::size_t j = 0; j < roots.size(); ++j) {
      if (j != k) term *= std::max(std::abs(interval.lo - roots[j]), std::abs(interval.hi - roots[j]));
    }
    lipschitz += term;
  }
  return sup + 0.5 * h * lipschitz;
}

// Roots alternately from both ends, so partial products of the chain pair
// up symmetric factors and stay small.
std::vector<double> outside_in(std::vector<double> roots) {
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  std::size_t a = 0, b = roots.size();
  while (a < b) {
    out.push_back(roots[a++]);
    if (a < b) out.push_back(roots[--b]);
  }
  return out;
}

// Bounds for a sequential product chain w_1 * ... * w_n with |w_k| <= bound_k
// and |w_1 * ... * w_s| <= partial_sup_s.
struct ChainBounds {
  std::vector<double> stage_halfwidth;  // M_s for s = 1..n-1
  double product_bound = 0.0;           // sup of the exact product
  double error = 0.0;                   // bound on |chain output - exact product|
};

ChainBounds chain_bounds(const std::vector<double>& factor_bounds, const std::vector<double>& partial_sups,
                         int depth) {
  ChainBounds out;
  double error = 0.0;
  for (std::size_t s = 1; s < factor_bounds.size(); ++s) {
    const double next = factor_bounds[s];
    const double halfwidth = std::max(partial_sups[s - 1] + error, next);
    out.stage_halfwidth.push_back(halfwidth);
    const double block_error = 3.0 * halfwidth * halfwidth / std::pow(4.0, depth);
    error = block_error + next * error;
  }
  out.product_bound = partial_sups.back();
  out.error = error;
  return out;
}

// One monomial sub-network advanced one ReLU layer at a time.
class MonomialChain {
 public:
  struct Factor {
    Affine value;   // over the shift layer
    double lo, hi;  // range of the factor over the domain
  };

  MonomialChain(std::vector<Factor> factors, const std::vector<double>& partial_sups, int depth, int group,
                std::string label)
      : factors_(std::move(factors)), depth_(depth), group_(group), label_(std::move(label)) {
    std::vector<double> bounds;
    for (const auto& f : factors_) bounds.push_back(std::max(std::abs(f.lo), std::abs(f.hi)));
    bounds_ = chain_bounds(bounds, partial_sups, depth);
    partial_ = factors_.front().value;
    partial_lo_ = factors_.front().lo;
    partial_hi_ = factors_.front().hi;
    for (std::size_t k = 1; k < factors_.size(); ++k) {
      waiting_.emplace_back(factors_[k].value, factors_[k].lo, factors_[k].hi);
    }
  }

  int relu_layers() const { return (static_cast<int>(factors_.size()) - 1) * depth_; }
  double error_bound() const { return bounds_.error; }
  /// Bound on |output| over the domain.
  double output_bound() const { return bounds_.product_bound + bounds_.error; }

  void step(NetBuilder& b) {
    if (stage_ < static_cast<int>(factors_.size()) - 1) {
      if (!product_) {
        const double m = bounds_.stage_halfwidth[static_cast<std::size_t>(stage_)];
        product_.emplace(Interval{-m, m}, depth_, partial_, waiting_.front().value());
        waiting_.erase(waiting_.begin());
      }
      const std::string label = label_ + "product" + std::to_string(stage_ + 1);
      product_->step(b, group_, label);
      for (auto& w : waiting_) w.step(b, group_, label_ + "wait");
      if (product_->done()) {
        partial_ = product_->output();
        product_.reset();
        ++stage_;
        partial_lo_ = -output_bound();
        partial_hi_ = output_bound();
      }
      return;
    }
    if (!tail_) tail_.emplace(partial_, partial_lo_, partial_hi_);
    tail_->step(b, group_, label_ + "pad");
  }

  Affine output() const { return tail_ ? tail_->value() : partial_; }

 private:
  std::vector<Factor> factors_;
  int depth_;
  int group_;
  std::string label_;
  ChainBounds bounds_;
  int stage_ = 0;
  Affine partial_;
  double partial_lo_ = 0.0, partial_hi_ = 0.0;
  std::vector<Passthrough> waiting_;
  std::optional<ProductUnit> product_;
  std::optional<Passthrough> tail_;
};

void check_depth(int depth) {
  if (depth < 1) throw InvalidArgument("construction depth must be >= 1");
  if (depth > 30) throw InvalidArgument("construction depth must be <= 30");
}

struct MonomialTerm {
  MultiIndex index;
  std::vector<UnivariatePoly> factors;
  double coefficient;
};

// Shared assembly for build_monomial_net and build_expansion_net. Each term
// becomes a chain of products over its root factors; a last ReLU layer holds
// one node per term carrying A * chain output, so the output weights are the
// coefficients themselves.
ConstructedNet assemble_monomials(const std::vector<MonomialTerm>& terms, double constant,
                                  const Box& domain, int depth, const std::string& kind) {
  const int d = domain.dim();
  NetBuilder builder(d);
  if (terms.empty()) {
    auto [net, layout] = builder.finish(Affine{}.shifted(constant), kind);
    return ConstructedNet{std::move(net), std::move(layout), 0.0};
  }

  // Shift layer: one identity node per root, x_i - r.
  std::vector<MonomialChain> chains;
  std::vector<double> scales;
  double error_bound = 0.0;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const MonomialTerm& term = terms[j];
    const std::string label = "psi" + term.index.to_string() + "/";
    std::vector<MonomialChain::Factor> factors;
    std::vector<double> partial_sups;
    double scale = 1.0;
    double finished_dims = 1.0;  // sup of the product over completed dimensions
    for (int i = 0; i < d; ++i) {
      const Interval& side = domain.sides[i];
      const std::vector<double> roots = outside_in(term.factors[i].roots);
      std::vector<double> prefix;
      for (double r : roots) {
        const int node = builder.add_node(NetBuilder::input(i).shifted(-r), static_cast<int>(j), label + "shift");
        factors.push_back({Affine::node(node), side.lo - r, side.hi - r});
        prefix.push_back(r);
        partial_sups.push_back(finished_dims * sup_abs_product(prefix, side));
      }
      finished_dims *= sup_abs_product(roots, side);
      scale *= term.factors[i].leading_scale;
    }
    chains.emplace_back(std::move(factors), partial_sups, depth, static_cast<int>(j), label);
    scales.push_back(scale);
    error_bound += std::abs(term.coefficient * scale) * chains.back().error_bound();
  }
  builder.commit(Activation::Identity);

  int relu_layers = 0;
  for (const auto& c : chains) relu_layers = std::max(relu_layers, c.relu_layers());
  for (int layer = 0; layer < relu_layers; ++layer) {
    for (auto& c : chains) c.step(builder);
    builder.commit(Activation::ReLU);
  }

  Affine output = Affine{}.shifted(constant);
  std::vector<Passthrough> collapse;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    const double bound = std::abs(scales[j]) * chains[j].output_bound();
    collapse.emplace_back(chains[j].output().scaled(scales[j]), -bound, bound);
    collapse.back().step(builder, static_cast<int>(j), "psi" + terms[j].index.to_string() + "/out");
    output.add(collapse.back().value(), terms[j].coefficient);
  }
  builder.commit(Activation::ReLU);
  auto [net, layout] = builder.finish(output, kind);
  return ConstructedNet{std::move(net), std::move(layout), error_bound};
}

}  // namespace

int BlockLayout::width(int layer) const {
  const auto& blocks = layers.at(static_cast<std::size_t>(layer));
  return blocks.empty() ? 0 : blocks.back().end;
}

int BlockLayout::group_of(int layer, int node) const {
  for (const Block& b : layers.at(static_cast<std::size_t>(layer))) {
    if (node >= b.begin && node < b.end) return b.group;
  }
  throw InvalidArgument("node outside layout");
}

bool BlockLayout::structurally_zero(int layer, int row, int col) const {
  if (layer == 0) return false;  // network inputs are shared
  const int g_row = group_of(layer, row);
  const int g_col = group_of(layer - 1, col);
  return g_row != Block::kShared && g_col != Block::kShared && g_row != g_col;
}

FreezeMask BlockLayout::freeze_structural_zeros(const DenseNet& net) const {
  if (static_cast<int>(layers.size()) != net.depth()) throw InvalidArgument("layout does not match network");
  FreezeMask mask = FreezeMask::none(net);
  for (int l = 1; l < net.depth(); ++l) {
    for (int i = 0; i < net.layer(l).out(); ++i)
      for (int j = 0; j < net.layer(l).in(); ++j) mask.layers[l].weights(i, j) = structurally_zero(l, i, j);
  }
  return mask;
}

double squaring_error_bound(const Interval& interval, int depth) {
  check_interval(interval);
  check_depth(depth);
  return 0.25 * interval.width() * interval.width() / std::pow(4.0, depth);
}

SquaringNet build_squaring_net(const Interval& interval, int depth) {
  check_interval(interval);
  check_depth(depth);
  NetBuilder builder(1);
  SquaringUnit unit(interval, depth);
  for (int l = 0; l < depth; ++l) {
    unit.step(builder, NetBuilder::input(0), 0, "square");
    builder.commit(Activation::ReLU);
  }
  auto [net, layout] = builder.finish(unit.output(), "squaring");

  SquaringPlan plan;
  plan.interval = interval;
  plan.depth = depth;
  plan.constant = 0.25 * interval.width() * interval.width();
  const long count = 1L << depth;
  for (long k = 0; k <= count; ++k) {
    plan.breakpoints.push_back(interval.lo + static_cast<double>(k) * interval.width() / static_cast<double>(count));
  }
  return SquaringNet{std::move(net), std::move(plan), std::move(layout)};
}

double product_error_bound(const Interval& interval, int depth) {
  return 3.0 * squaring_error_bound(interval, depth);
}

ConstructedNet build_product_net(const Interval& interval, int depth) {
  check_interval(interval);
  check_depth(depth);
  NetBuilder builder(2);
  ProductUnit unit(interval, depth, NetBuilder::input(0), NetBuilder::input(1));
  for (int l = 0; l < depth; ++l) {
    unit.step(builder, 0, "", {0, 1, 2});
    builder.commit(Activation::ReLU);
  }
  auto [net, layout] = builder.finish(unit.output(), "product");
  return ConstructedNet{std::move(net), std::move(layout), product_error_bound(interval, depth)};
}

std::vector<UnivariatePoly> legendre_factors(const MultiIndex& index, const Box& domain) {
  if (domain.dim() != index.dim()) throw InvalidArgument("domain dimension mismatch");
  std::vector<UnivariatePoly> factors;
  for (int i = 0; i < index.dim(); ++i) factors.push_back(factorize(index[i], domain.sides[i]));
  return factors;
}

ConstructedNet build_monomial_net(const MultiIndex& index, const std::vector<UnivariatePoly>& factors,
                                  const Box& domain, int depth) {
  check_depth(depth);
  if (index.total_degree() < 1) throw InvalidArgument("monomial network needs total degree >= 1");
  if (domain.dim() != index.dim() || static_cast<int>(factors.size()) != index.dim()) {
    throw InvalidArgument("monomial network: dimension mismatch");
  }
  for (int i = 0; i < index.dim(); ++i) {
    check_interval(domain.sides[i]);
    if (factors[i].degree != index[i] || static_cast<int>(factors[i].roots.size()) != index[i]) {
      throw InvalidArgument("factor " + std::to_string(i) + " does not have degree " + std::to_string(index[i]));
    }
  }
  return assemble_monomials({MonomialTerm{index, factors, 1.0}}, 0.0, domain, depth, "monomial");
}

ConstructedNet build_expansion_net(const Expansion& expansion, int depth) {
  check_depth(depth);
  if (expansion.index_set.size() == 0) throw InvalidArgument("expansion is empty");
  double constant = 0.0;
  std::vector<MonomialTerm> terms;
  for (int k = 0; k < expansion.index_set.size(); ++k) {
    const MultiIndex& index = expansion.index_set[k];
    const double c = expansion.coefficients[static_cast<std::size_t>(k)];
    if (index.total_degree() == 0) {
      constant += c;
      continue;
    }
    terms.push_back(MonomialTerm{index, legendre_factors(index, expansion.domain), c});
  }
  return assemble_monomials(terms, constant, expansion.domain, depth, "expansion");
}

ConstructedNet build_stilde_net(int dim, const Interval& interval, int depth) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  check_interval(interval);
  check_depth(depth);
  NetBuilder builder(dim);
  std::vector<SquaringUnit> units;
  std::vector<Affine> args;
  std::vector<std::string> labels;
  for (int i = 0; i < dim; ++i) {
    args.push_back(NetBuilder::input(i));
    labels.push_back("square(x" + std::to_string(i + 1) + ")");
    if (i + 1 < dim) {
      args.push_back(nodes({{i, 0.5}, {i + 1, 0.5}}));
      labels.push_back("square(mid" + std::to_string(i + 1) + std::to_string(i + 2) + ")");
    }
  }
  for (std::size_t u = 0; u < args.size(); ++u) units.emplace_back(interval, depth);
  for (int l = 0; l < depth; ++l) {
    for (std::size_t u = 0; u < units.size(); ++u) units[u].step(builder, args[u], static_cast<int>(u), labels[u]);
    builder.commit(Activation::ReLU);
  }
  Affine output;
  for (const auto& u : units) output.add(u.output());
  auto [net, layout] = builder.finish(output, "stilde");
  const double bound = static_cast<double>(units.size()) * squaring_error_bound(interval, depth);
  return ConstructedNet{std::move(net), std::move(layout), bound};
}

void write_layout_json(std::ostream& out, const BlockLayout& layout, double error_bound) {
  nlohmann::json j;
  j["format"] = "polyinit-layout";
  j["version"] = 1;
  j["kind"] = layout.kind;
  j["error_bound"] = error_bound;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& blocks : layout.layers) {
    nlohmann::json row = nlohmann::json::array();
    for (const Block& b : blocks) {
      row.push_back({{"label", b.label}, {"group", b.group}, {"begin", b.begin}, {"end", b.end}});
    }
    layers.push_back(std::move(row));
  }
  j["layers"] = std::move(layers);
  out << j.dump(2) << "\n";
}

}  // namespace polyinit
