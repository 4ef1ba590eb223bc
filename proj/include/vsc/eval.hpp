#pragma once

#include <vector>

#include "vsc/dataset.hpp"
#include "vsc/embed.hpp"
#include "vsc/matrix.hpp"

namespace vsc {

/// Label every feature row with the class of the Euclidean-nearest center.
/// Distance ties break to the earliest center in the set's order.
std::vector<int> predict_from_centers(const CenterSet& centers, const Matrix& features);

/// Project each candidate class attribute to a synthetic center, then
/// classify by nearest center. Ties break to the earliest candidate.
std::vector<int> predict(const EmbeddingNet& net, const AttributeTable& attrs,
                         const std::vector<int>& candidate_classes, const Matrix& features);

/// Mean over classes of (correct in class / samples in class). Every class
/// in `classes` must have at least one sample in `truth`.
double per_class_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                          const std::vector<int>& classes);

/// H = 2ab / (a+b), 0 when both are 0. Throws on negative input.
double harmonic_mean(double acc_unseen, double acc_seen);

/// Conventional setting: candidates are the unseen classes only, scored on
/// the target instances (requires target labels).
double evaluate_conventional(const EmbeddingNet& net, const Dataset& data);

/// Where seen-class centers come from in the generalized setting.
enum class SeenCenterSource { synthetic, real };

struct GzslResult {
    double acc_unseen = 0.0;
    double acc_seen = 0.0;
    double harmonic = 0.0;
};

/// Generalized setting: candidates are all seen + unseen classes. Unseen
/// accuracy over target instances, seen accuracy over the held-out
/// test_seen_rows, plus their harmonic mean.
GzslResult evaluate_generalized(const EmbeddingNet& net, const Dataset& data,
                                SeenCenterSource seen_centers = SeenCenterSource::synthetic);

}  // namespace vsc
