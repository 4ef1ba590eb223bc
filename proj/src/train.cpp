#include "vsc/train.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "vsc/eval.hpp"
#include "vsc/io_util.hpp"
#include "vsc/kernels.hpp"
#include "vsc/rng.hpp"

namespace vsc {

Method method_from_string(const std::string& name) {
    if (name == "vcl") return Method::vcl;
    if (name == "cdvsc") return Method::cdvsc;
    if (name == "bmvsc") return Method::bmvsc;
    throw std::invalid_argument("unknown method '" + name + "' (expected vcl|cdvsc|bmvsc)");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::vcl: return "vcl";
        case Method::cdvsc: return "cdvsc";
        case Method::bmvsc: return "bmvsc";
    }
    throw std::invalid_argument("unknown method");
}

void TrainConfig::validate() const {
    if (beta < 0.0) throw std::invalid_argument("train: beta must be >= 0");
    if (weight_decay < 0.0) throw std::invalid_argument("train: weight_decay must be >= 0");
    if (learning_rate <= 0.0) throw std::invalid_argument("train: learning_rate must be positive");
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (negative_slope < 0.0 || negative_slope >= 1.0)
        throw std::invalid_argument("train: negative_slope outside [0, 1)");
    if (kmeans_restarts < 1) throw std::invalid_argument("train: kmeans_restarts must be >= 1");
    if (kmeans_max_iters < 1) throw std::invalid_argument("train: kmeans_max_iters must be >= 1");
}

namespace {

LabeledFeatureSet drop_rows(const LabeledFeatureSet& data, const std::vector<std::size_t>& rows) {
    if (rows.empty()) return data;
    std::set<std::size_t> skip(rows.begin(), rows.end());
    LabeledFeatureSet out;
    out.features = Matrix(data.count() - skip.size(), data.dim());
    if (data.labels) out.labels = std::vector<int>();
    std::size_t w = 0;
    for (std::size_t r = 0; r < data.count(); ++r) {
        if (skip.count(r)) continue;
        const auto src = data.features.row(r);
        std::copy(src.begin(), src.end(), out.features.row(w).begin());
        if (data.labels) out.labels->push_back((*data.labels)[r]);
        ++w;
    }
    return out;
}

double mean_row_distance(const Matrix& a, const Matrix& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double sq = 0.0;
        for (std::size_t c = 0; c < a.cols(); ++c) {
            const double diff = a(i, c) - b(i, c);
            sq += diff * diff;
        }
        sum += std::sqrt(sq);
    }
    return sum / static_cast<double>(a.rows());
}

}  // namespace

TrainResult train(const TrainConfig& config, const LabeledFeatureSet& source,
                  const LabeledFeatureSet& target, const AttributeTable& attrs,
                  const ClassSplit& split, const EpochObserver& observer) {
    config.validate();
    split.validate();
    if (!source.labels) throw std::invalid_argument("train: source must be labeled");
    const bool transductive = config.method != Method::vcl;
    if (transductive && target.count() == 0)
        throw std::invalid_argument("train: " + method_name(config.method) +
                                    " needs target features");
    if (target.count() > 0 && target.dim() != source.dim())
        throw std::invalid_argument("train: feature dimensions differ between source (" +
                                    std::to_string(source.dim()) + ") and target (" +
                                    std::to_string(target.dim()) + ")");
    for (std::size_t r : split.test_seen_rows)
        if (r >= source.count())
            throw std::invalid_argument("train: test_seen_row " + std::to_string(r) + " out of range");

    const std::size_t feature_dim = source.dim();
    const std::size_t hidden = config.hidden ? config.hidden : feature_dim;
    const std::size_t num_unseen = split.unseen.size();

    const LabeledFeatureSet train_source = drop_rows(source, split.test_seen_rows);
    const CenterSet real_seen = compute_real_centers(train_source, split.seen);
    const Matrix seen_attrs = attrs.rows_for(split.seen);
    const Matrix unseen_attrs = attrs.rows_for(split.unseen);

    TrainResult result;
    result.net = EmbeddingNet::random_init(attrs.attr_dim(), hidden, feature_dim,
                                           config.negative_slope, derive_seed(config.seed, "init"));
    result.net.final_activation = config.final_activation;
    EmbeddingNet& net = result.net;
    TrainLog& log = result.log;

    Matrix cluster_centers;
    if (transductive) {
        KMeansOptions ko;
        ko.restarts = config.kmeans_restarts;
        ko.max_iters = config.kmeans_max_iters;
        ko.seed = config.seed;
        auto km = kmeans(target.features, num_unseen, ko);
        cluster_centers = std::move(km.centers);
        log.clustering_inertia = km.inertia;
    }

    // Diagnostics compare against real unseen centers, knowable only when the
    // target carries labels (synthetic data or benchmark test sets).
    const bool diagnose = config.diagnostics && target.labels.has_value() && target.count() > 0;
    Matrix real_unseen;
    std::vector<int> reference_pairs;
    if (diagnose) {
        real_unseen = compute_real_centers(target, split.unseen).centers;
        if (transductive)
            reference_pairs =
                min_weight_perfect_matching(cost_matrix(real_unseen, cluster_centers)).pairs;
    }
    log.has_diagnostics = diagnose;

    AdamParams adam;
    adam.learning_rate = config.learning_rate;
    adam.weight_decay = config.weight_decay;
    AdamState state = AdamState::init(net, adam);

    LossSpec spec;
    spec.seen_attrs = &seen_attrs;
    spec.seen_targets = &real_seen.centers;
    spec.weight_decay = config.weight_decay;
    spec.cost = config.cost;
    if (transductive) {
        spec.structure = config.method == Method::cdvsc ? LossSpec::Structure::chamfer
                                                        : LossSpec::Structure::matching;
        spec.unseen_attrs = &unseen_attrs;
        spec.cluster_centers = &cluster_centers;
        spec.beta = config.beta;
    }

    log.rows.reserve(config.epochs);
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        Matrix projected;
        if (transductive || diagnose) projected = forward(net, unseen_attrs);

        if (config.method == Method::cdvsc) {
            auto ch = chamfer(projected, cluster_centers);
            spec.nn_ab = std::move(ch.nn_ab);
            spec.nn_ba = std::move(ch.nn_ba);
        } else if (config.method == Method::bmvsc) {
            auto assignment =
                min_weight_perfect_matching(cost_matrix(projected, cluster_centers, config.cost));
            spec.assignment = assignment.pairs;
            log.assignments.push_back(std::move(assignment.pairs));
        }

        LossBreakdown breakdown;
        const Gradients grads = grad_total(net, spec, &breakdown);
        if (!std::isfinite(breakdown.total))
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));

        TrainLogRow row;
        row.epoch = epoch;
        row.mse = breakdown.mse;
        row.structure = breakdown.structure;
        row.reg = breakdown.reg;
        row.total = breakdown.total;
        if (diagnose) {
            row.center_dist = mean_row_distance(projected, real_unseen);
            if (config.method == Method::bmvsc) {
                int right = 0;
                for (std::size_t i = 0; i < num_unseen; ++i)
                    if (log.assignments.back()[i] == reference_pairs[i]) ++right;
                row.right_matches = right;
            } else if (config.method == Method::cdvsc) {
                int right = 0;
                for (std::size_t i = 0; i < num_unseen; ++i)
                    if (spec.nn_ab[i] == reference_pairs[i]) ++right;
                row.right_matches = right;
            }
        }
        log.rows.push_back(row);

        try {
            adam_step(net, grads, state);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(std::string(e.what()) + " at epoch " + std::to_string(epoch));
        }
        if (observer) observer(epoch, net);
    }
    return result;
}

TrainResult train(const TrainConfig& config, const Dataset& data, const EpochObserver& observer) {
    return train(config, data.source, data.target, data.attributes, data.split, observer);
}

BetaSelection select_beta(const std::vector<double>& grid, const TrainConfig& config,
                          const LabeledFeatureSet& source, const AttributeTable& attrs,
                          const ClassSplit& split, std::size_t folds) {
    if (grid.empty()) throw std::invalid_argument("select_beta: empty grid");
    if (folds < 2) throw std::invalid_argument("select_beta: need at least 2 folds");
    if (!source.labels) throw std::invalid_argument("select_beta: source must be labeled");
    const std::size_t n_seen = split.seen.size();
    // Every fold's pseudo-unseen side needs >= 2 classes and the remaining
    // pseudo-seen side must be nonempty.
    if (n_seen < 2 * folds + 1)
        throw std::invalid_argument("select_beta: too few seen classes for " +
                                    std::to_string(folds) + " folds");

    const LabeledFeatureSet pool = drop_rows(source, split.test_seen_rows);

    std::vector<int> shuffled = split.seen;
    Rng rng(derive_seed(config.seed, "beta-folds"));
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);

    struct Fold {
        LabeledFeatureSet source;
        LabeledFeatureSet target;   // labels withheld from training
        std::vector<int> truth;
        ClassSplit split;
    };
    std::vector<Fold> fold_data(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        Fold& fold = fold_data[f];
        const std::size_t lo = f * n_seen / folds, hi = (f + 1) * n_seen / folds;
        std::set<int> held;
        for (std::size_t i = lo; i < hi; ++i) held.insert(shuffled[i]);
        for (int c : split.seen)
            (held.count(c) ? fold.split.unseen : fold.split.seen).push_back(c);

        std::vector<std::vector<double>> src_rows, tgt_rows;
        fold.source.labels = std::vector<int>();
        for (std::size_t r = 0; r < pool.count(); ++r) {
            const int label = (*pool.labels)[r];
            const auto row = pool.features.row(r);
            if (held.count(label)) {
                tgt_rows.emplace_back(row.begin(), row.end());
                fold.truth.push_back(label);
            } else {
                src_rows.emplace_back(row.begin(), row.end());
                fold.source.labels->push_back(label);
            }
        }
        fold.source.features = Matrix(src_rows.size(), pool.dim());
        for (std::size_t r = 0; r < src_rows.size(); ++r)
            std::copy(src_rows[r].begin(), src_rows[r].end(), fold.source.features.row(r).begin());
        fold.target.features = Matrix(tgt_rows.size(), pool.dim());
        for (std::size_t r = 0; r < tgt_rows.size(); ++r)
            std::copy(tgt_rows[r].begin(), tgt_rows[r].end(), fold.target.features.row(r).begin());
    }

    BetaSelection selection;
    bool first = true;
    for (double beta : grid) {
        double acc_sum = 0.0;
        for (std::size_t f = 0; f < folds; ++f) {
            const Fold& fold = fold_data[f];
            TrainConfig fold_config = config;
            fold_config.beta = beta;
            fold_config.diagnostics = false;
            fold_config.seed = derive_seed(config.seed, "beta-fold", f);
            const TrainResult run =
                train(fold_config, fold.source, fold.target, attrs, fold.split);
            const auto pred =
                predict(run.net, attrs, fold.split.unseen, fold.target.features);
            acc_sum += per_class_accuracy(pred, fold.truth, fold.split.unseen);
        }
        const double mean_acc = acc_sum / static_cast<double>(folds);
        selection.table.emplace_back(beta, mean_acc);
        if (first || mean_acc > selection.cv_accuracy ||
            (mean_acc == selection.cv_accuracy && beta < selection.beta)) {
            selection.beta = beta;
            selection.cv_accuracy = mean_acc;
            first = false;
        }
    }
    return selection;
}

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
    std::string out = log.has_diagnostics ? "epoch,mse,structure,reg,total,right_matches,center_dist\n"
                                          : "epoch,mse,structure,reg,total\n";
    for (const auto& row : log.rows) {
        out += std::to_string(row.epoch);
        out += ',';
        out += format_sig(row.mse);
        out += ',';
        out += format_sig(row.structure);
        out += ',';
        out += format_sig(row.reg);
        out += ',';
        out += format_sig(row.total);
        if (log.has_diagnostics) {
            out += ',';
            out += std::to_string(row.right_matches);
            out += ',';
            out += format_sig(row.center_dist);
        }
        out += '\n';
    }
    write_text_file(path, out);
}

}  // namespace vsc
