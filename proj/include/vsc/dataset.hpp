#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "vsc/embed.hpp"
#include "vsc/matrix.hpp"

namespace vsc {

/// Per-instance visual feature vectors, with class labels for source data
/// and optionally for target data (diagnostics and evaluation only).
struct LabeledFeatureSet {
    Matrix features;                          // N x d
    std::optional<std::vector<int>> labels;   // N class ids when present

    std::size_t count() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
};

/// Per-class semantic attribute vectors.
struct AttributeTable {
    Matrix attributes;           // C x m, one row per class
    std::vector<int> class_ids;  // row order

    std::size_t attr_dim() const { return attributes.cols(); }
    /// Row index for a class id; throws on unknown ids.
    std::size_t row_of(int class_id) const;
    /// Attribute rows for the given classes, in the given order.
    Matrix rows_for(const std::vector<int>& classes) const;
};

struct ClassSplit {
    std::vector<int> seen;
    std::vector<int> unseen;
    std::vector<std::size_t> test_seen_rows;  // source rows held out for generalized evaluation

    void validate() const;
};

/// An ordered collection of class centers in visual space. class_ids absent
/// for anonymous cluster centers.
struct CenterSet {
    Matrix centers;  // K x d
    std::optional<std::vector<int>> class_ids;
};

struct Dataset {
    LabeledFeatureSet source;  // seen-class instances, labeled
    LabeledFeatureSet target;  // unseen-class instances; labels only when provided
    AttributeTable attributes;
    ClassSplit split;
};

struct LoadOptions {
    bool normalize = false;  // L2-normalize feature and attribute rows at load
};

/// Loads a dataset directory:
///   features_seen.csv    rows "label,f1,...,fd"
///   features_unseen.csv  rows "f1,...,fd"
///   labels_unseen.csv    optional, one integer per line, row-aligned with features_unseen.csv
///   attributes.csv       rows "class_id,a1,...,am" covering all split classes
///   split.txt            "seen: id id ...", "unseen: id id ...",
///                        optional "test_seen_rows: i i ..." (0-based rows of features_seen.csv)
/// All cross-file consistency checks run before the dataset is returned.
Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Writes the same file layout (full-precision decimal text).
void save_dataset(const std::filesystem::path& dir, const Dataset& data);

/// Mean feature vector per requested class, ordered as `classes`.
/// Centers are plain means of the (possibly normalized) rows; they are not
/// re-normalized. Throws if a class has no instances.
CenterSet compute_real_centers(const LabeledFeatureSet& data, const std::vector<int>& classes);

/// Each output row = input row / its L2 norm. Throws on zero-norm rows.
Matrix l2_normalize_rows(const Matrix& m);

/// Synthetic domain-shift dataset. Class attributes are unit vectors drawn
/// uniformly on the sphere. Seen-class centers are G(attribute) for a random
/// two-layer ground-truth map G (scaled so the mean pairwise center distance
/// is 1); unseen-class centers get an extra random shift of magnitude
/// `delta`. Instances are center + N(0, sigma^2) per coordinate.
struct SynthParams {
    std::size_t seen = 20;
    std::size_t unseen = 10;
    std::size_t feature_dim = 32;
    std::size_t attr_dim = 16;
    std::size_t per_class = 50;
    double sigma = 0.05;        // instance noise
    double delta = 0.5;         // unseen-center shift magnitude
    std::uint64_t seed = 0;
    double test_seen_fraction = 0.2;  // seen rows reserved as test_seen_rows
};

struct SynthGroundTruth {
    EmbeddingNet map;         // the generator map G
    CenterSet seen_centers;   // G(attrs), seen order
    CenterSet unseen_centers; // G(attrs) + shift, unseen order
    Dataset dataset;          // in-memory copy of what was written
};

/// Writes the dataset directory and returns the ground truth used to build it.
/// Deterministic given the seed; identical seeds produce byte-identical files.
SynthGroundTruth generate_synthetic(const std::filesystem::path& out_dir, const SynthParams& params);

}  // namespace vsc
