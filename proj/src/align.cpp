#include "vsc/align.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "vsc/kernels.hpp"

namespace vsc {

ChamferResult chamfer(const Matrix& a, const Matrix& b) {
    if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("chamfer: empty point set");
    if (a.cols() != b.cols()) throw std::invalid_argument("chamfer: dimension mismatch");
    const Matrix d = kernels::pairwise_sqdist(a, b);

    ChamferResult r;
    r.nn_ab.resize(a.rows());
    r.nn_ba.resize(b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        int best = 0;
        for (std::size_t j = 1; j < b.rows(); ++j)
            if (d(i, j) < d(i, static_cast<std::size_t>(best))) best = static_cast<int>(j);
        r.nn_ab[i] = best;
        r.loss += d(i, static_cast<std::size_t>(best));
    }
    for (std::size_t j = 0; j < b.rows(); ++j) {
        int best = 0;
        for (std::size_t i = 1; i < a.rows(); ++i)
            if (d(i, j) < d(static_cast<std::size_t>(best), j)) best = static_cast<int>(i);
        r.nn_ba[j] = best;
        r.loss += d(static_cast<std::size_t>(best), j);
    }
    return r;
}

Matrix cost_matrix(const Matrix& a, const Matrix& b, CostMode mode) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("cost_matrix: sets differ in size (" + std::to_string(a.rows()) +
                                    " vs " + std::to_string(b.rows()) + ")");
    if (a.cols() != b.cols()) throw std::invalid_argument("cost_matrix: dimension mismatch");
    Matrix d = kernels::pairwise_sqdist(a, b);
    if (mode == CostMode::euclidean)
        for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = std::sqrt(d.data()[i]);
    return d;
}

Assignment min_weight_perfect_matching(const Matrix& cost) {
    if (cost.rows() != cost.cols())
        throw std::invalid_argument("min_weight_perfect_matching: cost matrix is not square");
    const std::size_t n = cost.rows();
    if (n == 0) throw std::invalid_argument("min_weight_perfect_matching: empty cost matrix");
    for (std::size_t i = 0; i < cost.size(); ++i)
        if (!std::isfinite(cost.data()[i]))
            throw std::invalid_argument("min_weight_perfect_matching: non-finite cost");

    // Shortest augmenting path over dual potentials; column n is the virtual
    // start. Runs one Dijkstra-like sweep per row, O(n^3) total. Only adds and
    // subtracts cost entries, so integer costs stay exact.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> matched_row(n + 1, -1), way(n + 1, static_cast<int>(n));
    std::vector<char> used(n + 1);

    for (std::size_t i = 0; i < n; ++i) {
        matched_row[n] = static_cast<int>(i);
        std::size_t j0 = n;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = static_cast<std::size_t>(matched_row[j0]);
            double delta = kInf;
            std::size_t j1 = n;
            for (std::size_t j = 0; j < n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = static_cast<int>(j0);
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[static_cast<std::size_t>(matched_row[j])] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (matched_row[j0] != -1);
        do {
            const std::size_t j1 = static_cast<std::size_t>(way[j0]);
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        } while (j0 != n);
    }

    Assignment a;
    a.pairs.assign(n, -1);
    for (std::size_t j = 0; j < n; ++j)
        if (matched_row[j] >= 0) a.pairs[static_cast<std::size_t>(matched_row[j])] = static_cast<int>(j);
    validate_assignment(cost, a.pairs);
    a.total_cost = matching_loss(cost, a);
    return a;
}

double matching_loss(const Matrix& cost, const Assignment& x) {
    validate_assignment(cost, x.pairs);
    double total = 0.0;
    for (std::size_t i = 0; i < cost.rows(); ++i)
        total += cost(i, static_cast<std::size_t>(x.pairs[i]));
    return total;
}

void validate_assignment(const Matrix& cost, const std::vector<int>& pairs) {
    const std::size_t n = cost.rows();
    if (cost.cols() != n) throw std::invalid_argument("assignment: cost matrix is not square");
    if (pairs.size() != n)
        throw std::invalid_argument("assignment: " + std::to_string(pairs.size()) + " pairs for " +
                                    std::to_string(n) + " rows");
    std::vector<char> hit(n, 0);
    for (int j : pairs) {
        if (j < 0 || static_cast<std::size_t>(j) >= n)
            throw std::invalid_argument("assignment: column index out of range");
        if (hit[static_cast<std::size_t>(j)])
            throw std::invalid_argument("assignment: column " + std::to_string(j) + " used twice");
        hit[static_cast<std::size_t>(j)] = 1;
    }
}

ManyToOneReport many_to_one_report(const std::vector<int>& nn_ab, const std::vector<int>& nn_ba) {
    ManyToOneReport rep;
    std::vector<int> hits_b(nn_ba.size(), 0), hits_a(nn_ab.size(), 0);
    for (int j : nn_ab) {
        if (j < 0 || static_cast<std::size_t>(j) >= nn_ba.size())
            throw std::invalid_argument("many_to_one_report: nn_ab index out of range");
        ++hits_b[static_cast<std::size_t>(j)];
    }
    for (int i : nn_ba) {
        if (i < 0 || static_cast<std::size_t>(i) >= nn_ab.size())
            throw std::invalid_argument("many_to_one_report: nn_ba index out of range");
        ++hits_a[static_cast<std::size_t>(i)];
    }
    for (int h : hits_b)
        if (h >= 2) ++rep.crowded_targets_ab;
    for (int h : hits_a)
        if (h >= 2) ++rep.crowded_targets_ba;

    rep.is_one_to_one = nn_ab.size() == nn_ba.size() && rep.crowded_targets_ab == 0 &&
                        rep.crowded_targets_ba == 0;
    if (rep.is_one_to_one)
        for (std::size_t i = 0; i < nn_ab.size(); ++i)
            if (nn_ba[static_cast<std::size_t>(nn_ab[i])] != static_cast<int>(i)) {
                rep.is_one_to_one = false;
                break;
            }
    return rep;
}

}  // namespace vsc
