#pragma once

#include <vector>

namespace polyinit::detail {

// Eigenvalues of the symmetric tridiagonal matrix with the given diagonal and
// off-diagonal (off_diagonal.size() == diagonal.size() - 1), by implicit QL
// iteration with Wilkinson shifts. Returned in ascending order.
// Throws NumericalError if an eigenvalue fails to converge.
std::vector<double> symmetric_tridiagonal_eigenvalues(std::vector<double> diagonal,
                                                      std::vector<double> off_diagonal);

}  // namespace polyinit::detail
