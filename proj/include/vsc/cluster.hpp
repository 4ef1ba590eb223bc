#pragma once

#include <cstdint>
#include <vector>

#include "vsc/matrix.hpp"

namespace vsc {

struct KMeansOptions {
    int restarts = 10;
    int max_iters = 300;
    std::uint64_t seed = 0;
};

struct KMeansResult {
    Matrix centers;                // k x d
    std::vector<int> assignments;  // per point, cluster index
    double inertia = 0.0;          // sum of squared distances to assigned centers
    int best_restart = 0;
    // Inertia after every assignment step, one trace per restart. Non-increasing
    // within each trace.
    std::vector<std::vector<double>> inertia_traces;
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// inertia (ties to the lowest restart index). A run stops at an assignment
/// fixpoint or after max_iters. Empty clusters are repaired by moving the
/// empty center onto the point farthest from its current center, so exactly
/// k clusters always survive. Deterministic given the seed.
KMeansResult kmeans(const Matrix& features, std::size_t k, const KMeansOptions& options = {});

/// Upper bound on cluster-based recognition: each cluster takes the majority
/// true label of its members, every instance inherits its cluster's label,
/// and the result is scored as per-class mean accuracy.
double voting_upper_bound(const std::vector<int>& assignments, const std::vector<int>& true_labels);

}  // namespace vsc
