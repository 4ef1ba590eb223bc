#pragma once

#include <vector>

#include "vsc/matrix.hpp"

// Data-parallel kernels. Each OpenMP kernel writes independent output
// elements with a serial inner loop, so results are bit-identical for any
// thread count. The serial twins in kernels::serial share the same inner-loop
// order; tests compare the two bitwise and bench/ times them against each other.
namespace vsc::kernels {

/// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
/// C = A^T * B
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
/// C = A * B^T
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

/// D[i][j] = squared Euclidean distance between row i of a and row j of b.
Matrix pairwise_sqdist(const Matrix& a, const Matrix& b);

struct NearestResult {
    std::vector<int> index;      // per point, nearest center (ties to lowest index)
    std::vector<double> sqdist;  // squared distance to that center
};

/// Nearest row of `centers` for every row of `points`.
NearestResult nearest_center(const Matrix& points, const Matrix& centers);

/// L2 norm of every row.
std::vector<double> row_norms(const Matrix& m);

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
Matrix pairwise_sqdist(const Matrix& a, const Matrix& b);
NearestResult nearest_center(const Matrix& points, const Matrix& centers);
std::vector<double> row_norms(const Matrix& m);

}  // namespace serial

}  // namespace vsc::kernels
