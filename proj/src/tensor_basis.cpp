#include "polyinit/tensor_basis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>

#include "polyinit/error.hpp"
#include "text_io.hpp"

namespace polyinit {

Box Box::cube(int d, Interval side) {
  check_interval(side);
  if (d < 1) throw InvalidArgument("box dimension must be >= 1");
  return Box{std::vector<Interval>(static_cast<std::size_t>(d), side)};
}

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  for (int e : entries_) {
    if (e < 0) throw InvalidArgument("multi-index entries must be nonnegative");
  }
}

int MultiIndex::total_degree() const { return std::accumulate(entries_.begin(), entries_.end(), 0); }

std::string MultiIndex::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(entries_[i]);
  }
  return s + ")";
}

IndexSet::IndexSet(int dim, std::vector<MultiIndex> indices) : dim_(dim), indices_(std::move(indices)) {
  if (dim_ < 1) throw InvalidArgument("index set dimension must be >= 1");
  std::set<std::vector<int>> seen;
  for (const auto& index : indices_) {
    if (index.dim() != dim_) {
      throw InvalidArgument("multi-index " + index.to_string() + " has wrong dimension");
    }
    if (!seen.insert(index.entries()).second) {
      throw InvalidArgument("duplicate multi-index " + index.to_string());
    }
  }
}

namespace {

// Appends every composition of `remaining` into the slots [pos, d) of `work`,
// larger leading entries first.
void compositions(std::vector<int>& work, int pos, int remaining, std::vector<MultiIndex>& out) {
  const int d = static_cast<int>(work.size());
  if (pos == d - 1) {
    work[pos] = remaining;
    out.emplace_back(work);
    return;
  }
  for (int k = remaining; k >= 0; --k) {
    work[pos] = k;
    compositions(work, pos + 1, remaining - k, out);
  }
}

void check_point(int dim, std::span<const double> x) {
  if (static_cast<int>(x.size()) != dim) {
    throw InvalidArgument("point has dimension " + std::to_string(x.size()) + ", expected " +
                          std::to_string(dim));
  }
}

}  // namespace

IndexSet total_degree_set(int dim, int max_degree) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  if (max_degree < 0) throw InvalidArgument("max degree must be >= 0");
  std::vector<MultiIndex> out;
  std::vector<int> work(static_cast<std::size_t>(dim), 0);
  for (int total = 0; total <= max_degree; ++total) compositions(work, 0, total, out);
  return IndexSet(dim, std::move(out));
}

Expansion::Expansion(IndexSet set, std::vector<double> coeffs, Box box)
    : index_set(std::move(set)), coefficients(std::move(coeffs)), domain(std::move(box)) {
  if (static_cast<int>(coefficients.size()) != index_set.size()) {
    throw InvalidArgument("expansion has " + std::to_string(coefficients.size()) +
                          " coefficients for " + std::to_string(index_set.size()) + " indices");
  }
  if (domain.dim() != index_set.dim()) throw InvalidArgument("expansion domain dimension mismatch");
  for (const auto& side : domain.sides) check_interval(side);
  for (double c : coefficients) {
    if (!std::isfinite(c)) throw InvalidArgument("expansion coefficient is not finite");
  }
}

double eval_basis(const MultiIndex& index, std::span<const double> x, const Box& domain) {
  check_point(index.dim(), x);
  if (domain.dim() != index.dim()) throw InvalidArgument("domain dimension mismatch");
  double value = 1.0;
  for (int i = 0; i < index.dim(); ++i) value *= legendre_eval_shifted(index[i], x[i], domain.sides[i]);
  return value;
}

double eval_expansion(const Expansion& expansion, std::span<const double> x) {
  check_point(expansion.dim(), x);
  double sum = 0.0;
  for (int k = 0; k < expansion.index_set.size(); ++k) {
    sum += expansion.coefficients[k] * eval_basis(expansion.index_set[k], x, expansion.domain);
  }
  return sum;
}

Eigen::VectorXd eval_expansion(const Expansion& expansion, const Eigen::MatrixXd& points) {
  if (points.cols() != expansion.dim()) throw InvalidArgument("points have wrong dimension");
  Eigen::VectorXd out(points.rows());
  std::vector<double> x(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    for (Eigen::Index i = 0; i < points.cols(); ++i) x[i] = points(j, i);
    out[j] = eval_expansion(expansion, x);
  }
  return out;
}

Eigen::MatrixXd design_matrix(const IndexSet& index_set, const Box& domain,
                              const Eigen::MatrixXd& points) {
  if (points.cols() != index_set.dim()) throw InvalidArgument("points have wrong dimension");
  Eigen::MatrixXd phi(points.rows(), index_set.size());
  std::vector<double> x(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index j = 0; j < points.rows(); ++j) {
    for (Eigen::Index i = 0; i < points.cols(); ++i) x[i] = points(j, i);
    for (int k = 0; k < index_set.size(); ++k) phi(j, k) = eval_basis(index_set[k], x, domain);
  }
  return phi;
}

FitResult fit_least_squares(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                            const IndexSet& index_set, const Box& domain) {
  if (points.rows() != values.size()) throw InvalidArgument("point/value count mismatch");
  if (points.rows() < index_set.size()) {
    throw InvalidArgument("least squares needs at least " + std::to_string(index_set.size()) +
                          " samples, got " + std::to_string(points.rows()));
  }
  const Eigen::MatrixXd phi = design_matrix(index_set, domain, points);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(phi);
  const auto r_diag = qr.matrixQR().diagonal().cwiseAbs();
  const double largest = r_diag.maxCoeff();
  for (Eigen::Index k = 0; k < r_diag.size(); ++k) {
    if (!(r_diag[k] >= 1e-12 * largest)) {
      throw NumericalError("design matrix is rank deficient at index " + std::to_string(k) + " " +
                           index_set[static_cast<int>(k)].to_string());
    }
  }
  const Eigen::VectorXd c = qr.solve(values);
  const double residual = (values - phi * c).norm();
  return FitResult{Expansion(index_set, std::vector<double>(c.data(), c.data() + c.size()), domain),
                   residual};
}

void write_expansion(std::ostream& out, const Expansion& e) {
  using detail::format_double;
  out << "polyinit-expansion 1\n";
  out << "dim " << e.dim() << "\n";
  for (const auto& side : e.domain.sides) {
    out << "domain " << format_double(side.lo) << " " << format_double(side.hi) << "\n";
  }
  out << "terms " << e.index_set.size() << "\n";
  for (int k = 0; k < e.index_set.size(); ++k) {
    for (int v : e.index_set[k].entries()) out << v << " ";
    out << format_double(e.coefficients[k]) << "\n";
  }
}

Expansion read_expansion(std::istream& in) {
  using detail::parse_double;
  using detail::parse_long;
  detail::LineReader reader(in);
  auto header = reader.expect("polyinit-expansion", 1);
  if (header[1] != "1") reader.fail("unsupported expansion format version");
  const long dim = parse_long(reader.expect("dim", 1)[1]);
  if (dim < 1) reader.fail("dimension must be >= 1");
  Box domain;
  for (long i = 0; i < dim; ++i) {
    auto t = reader.expect("domain", 2);
    domain.sides.push_back(Interval{parse_double(t[1]), parse_double(t[2])});
  }
  const long terms = parse_long(reader.expect("terms", 1)[1]);
  if (terms < 0) reader.fail("negative term count");
  std::vector<MultiIndex> indices;
  std::vector<double> coefficients;
  std::vector<std::string_view> tokens;
  for (long k = 0; k < terms; ++k) {
    if (!reader.next(tokens)) reader.fail("missing expansion terms");
    if (static_cast<long>(tokens.size()) != dim + 1) reader.fail("term has wrong arity");
    std::vector<int> entries;
    for (long i = 0; i < dim; ++i) entries.push_back(static_cast<int>(parse_long(tokens[i])));
    indices.emplace_back(std::move(entries));
    coefficients.push_back(parse_double(tokens[dim]));
  }
  return Expansion(IndexSet(static_cast<int>(dim), std::move(indices)), std::move(coefficients),
                   std::move(domain));
}

void save_expansion(const std::string& path, const Expansion& expansion) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  write_expansion(out, expansion);
}

Expansion load_expansion(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  return read_expansion(in);
}

}  // namespace polyinit
