#include "vsc/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace vsc::kernels {

namespace {

void check_matmul(const Matrix& a, const Matrix& b, std::size_t inner_a, std::size_t inner_b,
                  const char* what) {
    if (inner_a != inner_b)
        throw std::invalid_argument(std::string(what) + ": inner dimensions disagree (" +
                                    std::to_string(inner_a) + " vs " + std::to_string(inner_b) + ")");
    (void)a;
    (void)b;
}

// Row i of C = A * B. Shared by the parallel and serial entry points so both
// produce bit-identical results.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    const std::size_t k = a.cols(), n = b.cols();
    double* out = c.data() + i * n;
    const double* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
        const double av = arow[p];
        const double* brow = b.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) out[j] += av * brow[j];
    }
}

inline void matmul_at_b_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    // C[i][j] = sum_p A[p][i] * B[p][j]
    const std::size_t rows = a.rows(), ca = a.cols(), n = b.cols();
    double* out = c.data() + i * n;
    for (std::size_t p = 0; p < rows; ++p) {
        const double av = a.data()[p * ca + i];
        const double* brow = b.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) out[j] += av * brow[j];
    }
}

inline void matmul_a_bt_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    const std::size_t k = a.cols(), n = b.rows();
    double* out = c.data() + i * n;
    const double* arow = a.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b.data() + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        out[j] = s;
    }
}

inline void pairwise_row(const Matrix& a, const Matrix& b, Matrix& d, std::size_t i) {
    const std::size_t k = a.cols(), n = b.rows();
    const double* arow = a.data() + i * k;
    double* out = d.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b.data() + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double diff = arow[p] - brow[p];
            s += diff * diff;
        }
        out[j] = s;
    }
}

inline void nearest_one(const Matrix& points, const Matrix& centers, NearestResult& r, std::size_t i) {
    const std::size_t k = points.cols(), n = centers.rows();
    const double* prow = points.data() + i * k;
    int best = 0;
    double best_d = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double* crow = centers.data() + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double diff = prow[p] - crow[p];
            s += diff * diff;
        }
        if (j == 0 || s < best_d) {
            best = static_cast<int>(j);
            best_d = s;
        }
    }
    r.index[i] = best;
    r.sqdist[i] = best_d;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul(a, b, a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    const std::int64_t rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) matmul_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    check_matmul(a, b, a.rows(), b.rows(), "matmul_at_b");
    Matrix c(a.cols(), b.cols());
    const std::int64_t rows = static_cast<std::int64_t>(a.cols());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) matmul_at_b_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    check_matmul(a, b, a.cols(), b.cols(), "matmul_a_bt");
    Matrix c(a.rows(), b.rows());
    const std::int64_t rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) matmul_a_bt_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix pairwise_sqdist(const Matrix& a, const Matrix& b) {
    check_matmul(a, b, a.cols(), b.cols(), "pairwise_sqdist");
    Matrix d(a.rows(), b.rows());
    const std::int64_t rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) pairwise_row(a, b, d, static_cast<std::size_t>(i));
    return d;
}

NearestResult nearest_center(const Matrix& points, const Matrix& centers) {
    check_matmul(points, centers, points.cols(), centers.cols(), "nearest_center");
    if (centers.rows() == 0) throw std::invalid_argument("nearest_center: no centers");
    NearestResult r;
    r.index.resize(points.rows());
    r.sqdist.resize(points.rows());
    const std::int64_t rows = static_cast<std::int64_t>(points.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) nearest_one(points, centers, r, static_cast<std::size_t>(i));
    return r;
}

std::vector<double> row_norms(const Matrix& m) {
    std::vector<double> norms(m.rows());
    const std::int64_t rows = static_cast<std::int64_t>(m.rows());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
        const double* row = m.data() + static_cast<std::size_t>(i) * m.cols();
        double s = 0.0;
        for (std::size_t p = 0; p < m.cols(); ++p) s += row[p] * row[p];
        norms[static_cast<std::size_t>(i)] = std::sqrt(s);
    }
    return norms;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_matmul(a, b, a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
    return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    check_matmul(a, b, a.rows(), b.rows(), "matmul_at_b");
    Matrix c(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) matmul_at_b_row(a, b, c, i);
    return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    check_matmul(a, b, a.cols(), b.cols(), "matmul_a_bt");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) matmul_a_bt_row(a, b, c, i);
    return c;
}

Matrix pairwise_sqdist(const Matrix& a, const Matrix& b) {
    check_matmul(a, b, a.cols(), b.cols(), "pairwise_sqdist");
    Matrix d(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) pairwise_row(a, b, d, i);
    return d;
}

NearestResult nearest_center(const Matrix& points, const Matrix& centers) {
    check_matmul(points, centers, points.cols(), centers.cols(), "nearest_center");
    if (centers.rows() == 0) throw std::invalid_argument("nearest_center: no centers");
    NearestResult r;
    r.index.resize(points.rows());
    r.sqdist.resize(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) nearest_one(points, centers, r, i);
    return r;
}

std::vector<double> row_norms(const Matrix& m) {
    std::vector<double> norms(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.data() + i * m.cols();
        double s = 0.0;
        for (std::size_t p = 0; p < m.cols(); ++p) s += row[p] * row[p];
        norms[i] = std::sqrt(s);
    }
    return norms;
}

}  // namespace serial

}  // namespace vsc::kernels
