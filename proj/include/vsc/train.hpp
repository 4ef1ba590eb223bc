#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vsc/align.hpp"
#include "vsc/cluster.hpp"
#include "vsc/dataset.hpp"
#include "vsc/embed.hpp"

namespace vsc {

enum class Method { vcl, cdvsc, bmvsc };

Method method_from_string(const std::string& name);
std::string method_name(Method m);

struct TrainConfig {
    Method method = Method::vcl;
    double beta = 1.0;             // structure weight, ignored by vcl
    double weight_decay = 5e-4;
    double learning_rate = 1e-4;
    std::size_t epochs = 1000;
    std::uint64_t seed = 0;
    std::size_t hidden = 0;        // 0 means same as the feature dimension
    double negative_slope = 0.2;
    bool final_activation = true;
    CostMode cost = CostMode::squared;
    int kmeans_restarts = 10;
    int kmeans_max_iters = 300;
    bool diagnostics = true;       // record center-matching curves when target labels exist

    void validate() const;
};

struct TrainLogRow {
    std::size_t epoch = 0;
    double mse = 0.0;
    double structure = 0.0;
    double reg = 0.0;
    double total = 0.0;
    // Diagnostics against real unseen centers, -1 when unavailable.
    int right_matches = -1;
    double center_dist = -1.0;
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
    // Matching permutation per epoch (bmvsc only).
    std::vector<std::vector<int>> assignments;
    double clustering_inertia = -1.0;
    bool has_diagnostics = false;
};

struct TrainResult {
    EmbeddingNet net;
    TrainLog log;
};

/// Called after every epoch's update with the current weights.
using EpochObserver = std::function<void(std::size_t epoch, const EmbeddingNet& net)>;

/// Full-batch training over class centers. Real seen centers and (for the
/// transductive methods) k-means cluster centers are computed once up front;
/// each epoch recomputes the frozen alignment structure from the current
/// projections, then takes one Adam step on the total loss.
TrainResult train(const TrainConfig& config, const LabeledFeatureSet& source,
                  const LabeledFeatureSet& target, const AttributeTable& attrs,
                  const ClassSplit& split, const EpochObserver& observer = {});

TrainResult train(const TrainConfig& config, const Dataset& data, const EpochObserver& observer = {});

struct BetaSelection {
    double beta = 0.0;
    double cv_accuracy = 0.0;
    std::vector<std::pair<double, double>> table;  // (beta, mean accuracy) in grid order
};

/// Cross-validated structure weight: seen classes are repeatedly partitioned
/// into pseudo-seen / pseudo-unseen, training treats the pseudo-unseen
/// instances as unlabeled targets, and the grid value with the best mean
/// pseudo-unseen accuracy wins. Ties break to the smaller beta.
BetaSelection select_beta(const std::vector<double>& grid, const TrainConfig& config,
                          const LabeledFeatureSet& source, const AttributeTable& attrs,
                          const ClassSplit& split, std::size_t folds);

/// CSV columns: epoch,mse,structure,reg,total[,right_matches,center_dist]
void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log);

}  // namespace vsc
