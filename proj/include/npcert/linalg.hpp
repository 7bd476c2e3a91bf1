#pragma once

#include <cstddef>
#include <vector>

namespace npcert {

// Eigen-decomposition of a small dense real symmetric matrix.
// `values` ascending; column j of `vectors` (stored row-major, n x n) is the
// unit eigenvector for values[j].
struct SymmetricEigenResult {
    std::size_t dim = 0;
    std::vector<double> values;
    std::vector<double> vectors;
};

// Cyclic Jacobi rotations. Intended for the kernel sizes seen here
// (tens of rows); throws numeric_error on non-finite input.
SymmetricEigenResult symmetric_eigen(const std::vector<double>& matrix, std::size_t n,
                                     bool want_vectors = true);

}  // namespace npcert
