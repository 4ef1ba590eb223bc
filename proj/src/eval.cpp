#include "vsc/eval.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "vsc/kernels.hpp"

namespace vsc {

namespace {

// Classes from `order` that actually appear in `truth`, keeping order. Eq. 9
// averages over the classes present in the test set.
std::vector<int> present_classes(const std::vector<int>& order, const std::vector<int>& truth) {
    const std::set<int> seen_labels(truth.begin(), truth.end());
    std::vector<int> out;
    for (int c : order)
        if (seen_labels.count(c)) out.push_back(c);
    return out;
}

}  // namespace

std::vector<int> predict_from_centers(const CenterSet& centers, const Matrix& features) {
    if (centers.centers.rows() == 0) throw std::invalid_argument("predict: no centers");
    if (features.cols() != centers.centers.cols())
        throw std::invalid_argument("predict: feature dimension " + std::to_string(features.cols()) +
                                    " does not match center dimension " +
                                    std::to_string(centers.centers.cols()));
    if (centers.class_ids && centers.class_ids->size() != centers.centers.rows())
        throw std::invalid_argument("predict: class id count does not match centers");

    const auto near = kernels::nearest_center(features, centers.centers);
    std::vector<int> labels(near.index.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        labels[i] = centers.class_ids ? (*centers.class_ids)[static_cast<std::size_t>(near.index[i])]
                                      : near.index[i];
    return labels;
}

std::vector<int> predict(const EmbeddingNet& net, const AttributeTable& attrs,
                         const std::vector<int>& candidate_classes, const Matrix& features) {
    if (candidate_classes.empty()) throw std::invalid_argument("predict: empty candidate set");
    CenterSet centers;
    centers.centers = forward(net, attrs.rows_for(candidate_classes));
    centers.class_ids = candidate_classes;
    return predict_from_centers(centers, features);
}

double per_class_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                          const std::vector<int>& classes) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("per_class_accuracy: prediction/truth size mismatch");
    if (classes.empty()) throw std::invalid_argument("per_class_accuracy: empty class list");

    std::map<int, std::pair<std::size_t, std::size_t>> tally;  // correct, total
    for (int c : classes) tally[c];
    if (tally.size() != classes.size())
        throw std::invalid_argument("per_class_accuracy: duplicate class in list");
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto it = tally.find(truth[i]);
        if (it == tally.end())
            throw std::invalid_argument("per_class_accuracy: truth label " +
                                        std::to_string(truth[i]) + " not in class list");
        if (pred[i] == truth[i]) ++it->second.first;
        ++it->second.second;
    }
    double sum = 0.0;
    for (const auto& [c, counts] : tally) {
        if (counts.second == 0)
            throw std::invalid_argument("per_class_accuracy: class " + std::to_string(c) +
                                        " has no samples");
        sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
    }
    return sum / static_cast<double>(classes.size());
}

double harmonic_mean(double acc_unseen, double acc_seen) {
    if (acc_unseen < 0.0 || acc_seen < 0.0)
        throw std::invalid_argument("harmonic_mean: negative accuracy");
    const double denom = acc_unseen + acc_seen;
    if (denom == 0.0) return 0.0;
    return 2.0 * acc_unseen * acc_seen / denom;
}

double evaluate_conventional(const EmbeddingNet& net, const Dataset& data) {
    if (!data.target.labels)
        throw std::invalid_argument("conventional evaluation needs labels_unseen.csv");
    const auto pred = predict(net, data.attributes, data.split.unseen, data.target.features);
    const auto classes = present_classes(data.split.unseen, *data.target.labels);
    if (classes.empty()) throw std::invalid_argument("conventional evaluation: no labeled instances");
    return per_class_accuracy(pred, *data.target.labels, classes);
}

GzslResult evaluate_generalized(const EmbeddingNet& net, const Dataset& data,
                                SeenCenterSource seen_centers) {
    if (data.split.test_seen_rows.empty())
        throw std::invalid_argument("generalized evaluation needs test_seen_rows in split.txt");
    if (!data.target.labels)
        throw std::invalid_argument("generalized evaluation needs labels_unseen.csv");
    if (!data.source.labels) throw std::invalid_argument("generalized evaluation: unlabeled source");

    std::vector<int> candidates = data.split.seen;
    candidates.insert(candidates.end(), data.split.unseen.begin(), data.split.unseen.end());

    CenterSet centers;
    centers.class_ids = candidates;
    if (seen_centers == SeenCenterSource::synthetic) {
        centers.centers = forward(net, data.attributes.rows_for(candidates));
    } else {
        // Real seen centers from training rows only; unseen stay synthetic.
        const std::set<std::size_t> test_rows(data.split.test_seen_rows.begin(),
                                              data.split.test_seen_rows.end());
        LabeledFeatureSet train_rows;
        train_rows.features = Matrix(data.source.count() - test_rows.size(), data.source.dim());
        train_rows.labels = std::vector<int>();
        std::size_t w = 0;
        for (std::size_t r = 0; r < data.source.count(); ++r) {
            if (test_rows.count(r)) continue;
            const auto src = data.source.features.row(r);
            std::copy(src.begin(), src.end(), train_rows.features.row(w).begin());
            train_rows.labels->push_back((*data.source.labels)[r]);
            ++w;
        }
        const CenterSet real = compute_real_centers(train_rows, data.split.seen);
        const Matrix synth = forward(net, data.attributes.rows_for(data.split.unseen));
        centers.centers = Matrix(candidates.size(), data.source.dim());
        for (std::size_t i = 0; i < data.split.seen.size(); ++i) {
            const auto src = real.centers.row(i);
            std::copy(src.begin(), src.end(), centers.centers.row(i).begin());
        }
        for (std::size_t i = 0; i < data.split.unseen.size(); ++i) {
            const auto src = synth.row(i);
            std::copy(src.begin(), src.end(),
                      centers.centers.row(data.split.seen.size() + i).begin());
        }
    }

    GzslResult result;

    const auto pred_unseen = predict_from_centers(centers, data.target.features);
    const auto unseen_classes = present_classes(data.split.unseen, *data.target.labels);
    if (unseen_classes.empty())
        throw std::invalid_argument("generalized evaluation: no labeled unseen instances");
    result.acc_unseen = per_class_accuracy(pred_unseen, *data.target.labels, unseen_classes);

    Matrix test_features(data.split.test_seen_rows.size(), data.source.dim());
    std::vector<int> test_truth;
    for (std::size_t i = 0; i < data.split.test_seen_rows.size(); ++i) {
        const std::size_t r = data.split.test_seen_rows[i];
        if (r >= data.source.count())
            throw std::invalid_argument("generalized evaluation: test_seen_row out of range");
        const auto src = data.source.features.row(r);
        std::copy(src.begin(), src.end(), test_features.row(i).begin());
        test_truth.push_back((*data.source.labels)[r]);
    }
    const auto pred_seen = predict_from_centers(centers, test_features);
    const auto seen_classes = present_classes(data.split.seen, test_truth);
    if (seen_classes.empty())
        throw std::invalid_argument("generalized evaluation: no seen test instances");
    result.acc_seen = per_class_accuracy(pred_seen, test_truth, seen_classes);

    result.harmonic = harmonic_mean(result.acc_unseen, result.acc_seen);
    return result;
}

}  // namespace vsc
