#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyinit/poly.hpp"

namespace polyinit {

/// Axis-aligned box, one interval per coordinate.
struct Box {
  std::vector<Interval> sides;

  int dim() const { return static_cast<int>(sides.size()); }
  static Box cube(int d, Interval side);
};

/// Degrees (nu_1, ..., nu_d) of a tensor-product basis function.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);

  int dim() const { return static_cast<int>(entries_.size()); }
  int total_degree() const;
  int operator[](int i) const { return entries_[i]; }
  const std::vector<int>& entries() const { return entries_; }
  std::string to_string() const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> entries_;
};

/// Ordered set of distinct multi-indices sharing one dimension.
class IndexSet {
 public:
  IndexSet(int dim, std::vector<MultiIndex> indices);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const MultiIndex& operator[](int i) const { return indices_[i]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }

  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

 private:
  int dim_;
  std::vector<MultiIndex> indices_;
};

/// All indices with total degree <= max_degree, graded lexicographic order
/// (by total degree, then lexicographically descending in the first entry).
IndexSet total_degree_set(int dim, int max_degree);

/// Sum over the index set of c_nu * Psi_nu(x), Psi_nu a tensor product of
/// Legendre polynomials pulled back to `domain`.
struct Expansion {
  IndexSet index_set;
  std::vector<double> coefficients;
  Box domain;

  Expansion(IndexSet index_set, std::vector<double> coefficients, Box domain);

  int dim() const { return index_set.dim(); }
};

double eval_basis(const MultiIndex& index, std::span<const double> x, const Box& domain);

double eval_expansion(const Expansion& expansion, std::span<const double> x);

/// Row-wise evaluation; points are n x d.
Eigen::VectorXd eval_expansion(const Expansion& expansion, const Eigen::MatrixXd& points);

/// Design matrix Phi(j, k) = Psi_{nu_k}(x_j).
Eigen::MatrixXd design_matrix(const IndexSet& index_set, const Box& domain,
                              const Eigen::MatrixXd& points);

struct FitResult {
  Expansion expansion;
  double residual_norm;  ///< ||values - Phi c||_2
};

/// Least-squares coefficients via Householder QR. Throws InvalidArgument when
/// there are fewer samples than indices and NumericalError when the design
/// matrix is numerically rank deficient.
FitResult fit_least_squares(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                            const IndexSet& index_set, const Box& domain);

void write_expansion(std::ostream& out, const Expansion& expansion);
Expansion read_expansion(std::istream& in);
void save_expansion(const std::string& path, const Expansion& expansion);
Expansion load_expansion(const std::string& path);

}  // namespace polyinit
