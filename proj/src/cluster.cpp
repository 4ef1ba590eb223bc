#include "vsc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "vsc/kernels.hpp"
#include "vsc/rng.hpp"

namespace vsc {

namespace {

// Greedy k-means++: each step samples a handful of candidates by squared
// distance and keeps the one that lowers the running potential the most.
Matrix plus_plus_seed(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows(), d = points.cols();
    Matrix centers(k, d);

    const auto sq_to = [&](std::size_t i, std::size_t j) {
        const auto a = points.row(i), b = points.row(j);
        double sq = 0.0;
        for (std::size_t f = 0; f < d; ++f) {
            const double diff = a[f] - b[f];
            sq += diff * diff;
        }
        return sq;
    };

    const std::size_t first = rng.uniform_index(n);
    std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());
    std::vector<double> min_sq(n);
    for (std::size_t i = 0; i < n; ++i) min_sq[i] = sq_to(i, first);

    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
    std::vector<double> cand_sq(n);
    std::vector<double> best_sq(n);
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double sq : min_sq) total += sq;

        std::size_t best_pick = n;
        double best_total = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            std::size_t pick;
            if (total <= 0.0) {
                // All mass on already-chosen points (duplicates); any point works.
                pick = rng.uniform_index(n);
            } else {
                const double r = rng.uniform01() * total;
                double acc = 0.0;
                pick = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += min_sq[i];
                    if (r < acc) {
                        pick = i;
                        break;
                    }
                }
            }
            double cand_total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cand_sq[i] = std::min(min_sq[i], sq_to(i, pick));
                cand_total += cand_sq[i];
            }
            if (best_pick == n || cand_total < best_total) {
                best_pick = pick;
                best_total = cand_total;
                std::swap(best_sq, cand_sq);
            }
        }
        std::copy(points.row(best_pick).begin(), points.row(best_pick).end(), centers.row(c).begin());
        std::swap(min_sq, best_sq);
    }
    return centers;
}

struct LloydRun {
    Matrix centers;
    std::vector<int> assignments;
    double inertia = 0.0;
    std::vector<double> trace;
};

LloydRun lloyd(const Matrix& points, std::size_t k, int max_iters, Rng& rng) {
    const std::size_t n = points.rows(), d = points.cols();
    LloydRun run;
    run.centers = plus_plus_seed(points, k, rng);

    std::vector<int> prev;
    for (int iter = 0; iter < max_iters; ++iter) {
        auto near = kernels::nearest_center(points, run.centers);

        // Empty-cluster repair: plant the center on the worst-fit point so k
        // clusters always survive. Donors must keep at least one member
        // (pigeonhole guarantees one exists). Lowest cluster index first,
        // ties on the earliest point.
        std::vector<std::size_t> counts(k, 0);
        for (int a : near.index) ++counts[static_cast<std::size_t>(a)];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t worst = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[static_cast<std::size_t>(near.index[i])] < 2) continue;
                if (worst == n || near.sqdist[i] > near.sqdist[worst]) worst = i;
            }
            --counts[static_cast<std::size_t>(near.index[worst])];
            near.index[worst] = static_cast<int>(c);
            near.sqdist[worst] = 0.0;
            counts[c] = 1;
            std::copy(points.row(worst).begin(), points.row(worst).end(), run.centers.row(c).begin());
        }

        double inertia = 0.0;
        for (double sq : near.sqdist) inertia += sq;
        run.trace.push_back(inertia);
        run.assignments = near.index;
        run.inertia = inertia;
        if (run.assignments == prev) break;
        prev = run.assignments;

        Matrix sums(k, d);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = static_cast<std::size_t>(run.assignments[i]);
            const auto p = points.row(i);
            auto s = sums.row(c);
            for (std::size_t f = 0; f < d; ++f) s[f] += p[f];
            ++counts[c];
        }
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t f = 0; f < d; ++f)
                run.centers(c, f) = sums(c, f) / static_cast<double>(counts[c]);
    }
    return run;
}

}  // namespace

KMeansResult kmeans(const Matrix& features, std::size_t k, const KMeansOptions& options) {
    if (k == 0) throw std::invalid_argument("kmeans: k is zero");
    if (features.rows() < k)
        throw std::invalid_argument("kmeans: " + std::to_string(features.rows()) + " points for k=" +
                                    std::to_string(k));
    if (options.restarts < 1) throw std::invalid_argument("kmeans: restarts must be positive");
    if (options.max_iters < 1) throw std::invalid_argument("kmeans: max_iters must be positive");

    KMeansResult best;
    for (int r = 0; r < options.restarts; ++r) {
        Rng rng(derive_seed(options.seed, "kmeans", static_cast<std::uint64_t>(r)));
        LloydRun run = lloyd(features, k, options.max_iters, rng);
        best.inertia_traces.push_back(run.trace);
        if (r == 0 || run.inertia < best.inertia) {
            best.centers = std::move(run.centers);
            best.assignments = std::move(run.assignments);
            best.inertia = run.inertia;
            best.best_restart = r;
        }
    }
    return best;
}

double voting_upper_bound(const std::vector<int>& assignments, const std::vector<int>& true_labels) {
    if (assignments.size() != true_labels.size())
        throw std::invalid_argument("voting_upper_bound: size mismatch");
    if (assignments.empty()) throw std::invalid_argument("voting_upper_bound: empty input");

    // Majority true label per cluster, ties to the lowest label.
    std::map<int, std::map<int, std::size_t>> tally;
    for (std::size_t i = 0; i < assignments.size(); ++i) ++tally[assignments[i]][true_labels[i]];
    std::map<int, int> cluster_label;
    for (const auto& [cluster, votes] : tally) {
        int best_label = 0;
        std::size_t best_count = 0;
        for (const auto& [label, count] : votes) {
            if (count > best_count) {
                best_label = label;
                best_count = count;
            }
        }
        cluster_label[cluster] = best_label;
    }

    std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // correct, total
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        auto& [correct, total] = per_class[true_labels[i]];
        if (cluster_label[assignments[i]] == true_labels[i]) ++correct;
        ++total;
    }
    double sum = 0.0;
    for (const auto& [label, counts] : per_class)
        sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
    return sum / static_cast<double>(per_class.size());
}

}  // namespace vsc
