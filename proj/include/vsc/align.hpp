#pragma once

#include <vector>

#include "vsc/matrix.hpp"

namespace vsc {

/// How pairwise center distances enter the matching cost. Squared costs give
/// smooth gradients; plain Euclidean is available for ablation.
enum class CostMode { squared, euclidean };

struct ChamferResult {
    double loss = 0.0;
    std::vector<int> nn_ab;  // per row of A, nearest row of B
    std::vector<int> nn_ba;  // per row of B, nearest row of A
};

/// Symmetric Chamfer distance between two point sets (sum of squared
/// nearest-neighbor distances in both directions). Sizes may differ.
/// The argmin index lists are returned so callers can freeze them for
/// differentiation. Nearest-neighbor ties break to the lowest index.
ChamferResult chamfer(const Matrix& a, const Matrix& b);

/// U x U cost matrix between two equal-size center sets.
Matrix cost_matrix(const Matrix& a, const Matrix& b, CostMode mode = CostMode::squared);

/// One-to-one matching between two equal-size sets.
struct Assignment {
    std::vector<int> pairs;  // pairs[i] = column matched to row i; a permutation
    double total_cost = 0.0;
};

/// Exact minimum-weight perfect matching on a square cost matrix
/// (shortest-augmenting-path formulation of the Kuhn-Munkres method, O(n^3)).
Assignment min_weight_perfect_matching(const Matrix& cost);

/// Sum of the cost entries selected by the assignment.
double matching_loss(const Matrix& cost, const Assignment& x);

/// Throws unless `pairs` is a permutation of 0..n-1 matching the cost shape.
void validate_assignment(const Matrix& cost, const std::vector<int>& pairs);

struct ManyToOneReport {
    int crowded_targets_ab = 0;  // rows of B claimed by >= 2 rows of A
    int crowded_targets_ba = 0;  // rows of A claimed by >= 2 rows of B
    bool is_one_to_one = false;  // both maps are permutations and mutually inverse
};

/// Diagnoses many-to-one structure in a pair of nearest-neighbor index lists
/// as returned by chamfer().
ManyToOneReport many_to_one_report(const std::vector<int>& nn_ab, const std::vector<int>& nn_ba);

}  // namespace vsc
