#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "polyinit/net.hpp"
#include "polyinit/poly.hpp"
#include "polyinit/tensor_basis.hpp"

namespace polyinit {

/// Breakpoint grid of the depth-m piecewise linear interpolant of x^2.
struct SquaringPlan {
  Interval interval;
  int depth = 1;
  std::vector<double> breakpoints;  ///< lo + k (hi - lo) / 2^depth, k = 0..2^depth
  double constant = 0.0;            ///< (hi - lo)^2 / 4
};

/// A contiguous range [begin, end) of nodes in one layer that belongs to one
/// sub-network. Nodes of different groups are not connected at
/// initialization; group kShared (network inputs, output node) connects to
/// everything.
struct Block {
  static constexpr int kShared = -1;

  std::string label;
  int group = kShared;
  int begin = 0;
  int end = 0;
};

/// Sub-network wiring of a constructed net: blocks[l] partitions the output
/// nodes of layer l.
struct BlockLayout {
  std::string kind;
  std::vector<std::vector<Block>> layers;

  int width(int layer) const;
  int group_of(int layer, int node) const;
  /// True when weight (row, col) of layer l joins two different groups.
  bool structurally_zero(int layer, int row, int col) const;
  /// Freezes exactly the structurally zero weights.
  FreezeMask freeze_structural_zeros(const DenseNet& net) const;
};

struct SquaringNet {
  DenseNet net;
  SquaringPlan plan;
  BlockLayout layout;
};

struct ConstructedNet {
  DenseNet net;
  BlockLayout layout;
  double error_bound = 0.0;  ///< sup-norm bound on the construction error over its domain
};

/// (hi - lo)^2 / 4 / 4^depth.
double squaring_error_bound(const Interval& interval, int depth);

/// depth hidden layers of 4 nodes whose output is the piecewise linear
/// interpolant of x^2 on 2^depth + 1 uniform breakpoints.
SquaringNet build_squaring_net(const Interval& interval, int depth);

/// 3 (hi - lo)^2 / 4 / 4^depth: bound on |x y - net(x, y)| for x, y in the interval.
double product_error_bound(const Interval& interval, int depth);

/// Three squaring blocks in parallel on x, (x + y)/2 and y combined as
/// 2 f((x+y)/2) - f(x)/2 - f(y)/2. Two inputs.
ConstructedNet build_product_net(const Interval& interval, int depth);

/// Root factorizations of the shifted Legendre factors of Psi_index on `domain`.
std::vector<UnivariatePoly> legendre_factors(const MultiIndex& index, const Box& domain);

/// Network for prod_i factors[i](x_i): a linear layer of shifted inputs
/// x_i - r, a sequential chain of product blocks, and one ReLU node carrying
/// the scaled product. Requires total degree >= 1 and
/// factors[i].degree == index[i].
ConstructedNet build_monomial_net(const MultiIndex& index, const std::vector<UnivariatePoly>& factors,
                                  const Box& domain, int depth);

/// Monomial networks for every term in parallel, depth-padded with exact
/// passthroughs. The last hidden layer has one node per non-constant term and
/// the output weights are the coefficients.
ConstructedNet build_expansion_net(const Expansion& expansion, int depth);

/// Fully connected net with 4 (2d - 1) nodes per hidden layer initialized to
/// sum x_i^2 + 1/4 sum (x_i + x_{i+1})^2 on [lo, hi]^d.
ConstructedNet build_stilde_net(int dim, const Interval& interval, int depth);

void write_layout_json(std::ostream& out, const BlockLayout& layout, double error_bound);

}  // namespace polyinit
