#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vsc/train.hpp"

using vsc::Matrix;

namespace {

std::filesystem::path scratch_dir() {
    return std::filesystem::temp_directory_path() / "vsc_train_tests";
}

/// Noise-free, shift-free data where the attribute-to-feature map is exactly
/// linear, so a regression-only run can fit it to machine precision.
const vsc::Dataset& exact_data() {
    static const vsc::Dataset data = [] {
        const auto dir = scratch_dir() / "exact";
        std::filesystem::remove_all(dir);
        vsc::SynthParams p;
        p.seen = 6;
        p.unseen = 2;
        p.feature_dim = 8;
        p.attr_dim = 4;
        p.per_class = 5;
        p.sigma = 0.0;
        p.delta = 0.0;
        p.seed = 3;
        vsc::generate_synthetic(dir, p);
        return vsc::load_dataset(dir);
    }();
    return data;
}

/// Noisy data with a projection-domain shift large enough that the structure
/// term visibly changes what training converges to.
const vsc::Dataset& shift_data() {
    static const vsc::Dataset data = [] {
        const auto dir = scratch_dir() / "shift";
        std::filesystem::remove_all(dir);
        vsc::SynthParams p;
        p.seen = 10;
        p.unseen = 3;
        p.feature_dim = 16;
        p.attr_dim = 8;
        p.per_class = 20;
        p.sigma = 0.05;
        p.delta = 0.5;
        p.seed = 2;
        vsc::generate_synthetic(dir, p);
        return vsc::load_dataset(dir);
    }();
    return data;
}

struct Trajectory {
    std::vector<Matrix> w1, w2;
};

vsc::EpochObserver recorder(Trajectory& t) {
    return [&t](std::size_t, const vsc::EmbeddingNet& net) {
        t.w1.push_back(net.w1);
        t.w2.push_back(net.w2);
    };
}

bool is_permutation_of_targets(const std::vector<int>& pairs, std::size_t n) {
    if (pairs.size() != n) return false;
    auto sorted = pairs;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i)
        if (sorted[i] != static_cast<int>(i)) return false;
    return true;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("method names round-trip") {
    for (auto m : {vsc::Method::vcl, vsc::Method::cdvsc, vsc::Method::bmvsc})
        CHECK(vsc::method_from_string(vsc::method_name(m)) == m);
    CHECK(vsc::method_name(vsc::Method::bmvsc) == "bmvsc");
    CHECK_THROWS_AS(vsc::method_from_string("vscl"), std::invalid_argument);
    CHECK_THROWS_WITH(vsc::method_from_string("vscl"),
                      "unknown method 'vscl' (expected vcl|cdvsc|bmvsc)");
}

TEST_CASE("train config rejects out-of-range values") {
    vsc::TrainConfig base;
    CHECK_NOTHROW(base.validate());

    auto c = base;
    c.beta = -0.1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = base;
    c.weight_decay = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = base;
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = base;
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = base;
    c.negative_slope = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = base;
    c.kmeans_restarts = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = base;
    c.kmeans_max_iters = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("train validates dataset wiring") {
    vsc::Dataset data;
    data.source.features = Matrix::from_rows({{1.0, 0.0}, {1.2, 0.0}, {3.0, 0.0}, {3.2, 0.0}});
    data.source.labels = std::vector<int>{1, 1, 2, 2};
    data.target.features = Matrix::from_rows({{0.0, 1.0}, {0.0, 1.2}});
    data.attributes.attributes = Matrix::from_rows({{1.0, 0.0}, {3.0, 0.0}, {0.0, 1.0}});
    data.attributes.class_ids = {1, 2, 8};
    data.split.seen = {1, 2};
    data.split.unseen = {8};

    vsc::TrainConfig config;
    config.learning_rate = 1e-2;
    config.epochs = 3;

    SUBCASE("a tiny hand-built dataset trains") {
        const auto r = vsc::train(config, data);
        CHECK(r.log.rows.size() == 3);
        // Unlabeled target: loss curves only, no matching diagnostics.
        CHECK_FALSE(r.log.has_diagnostics);
        CHECK(r.log.rows.back().right_matches == -1);
    }
    SUBCASE("source must carry labels") {
        data.source.labels.reset();
        CHECK_THROWS_WITH_AS(vsc::train(config, data), "train: source must be labeled",
                             std::invalid_argument);
    }
    SUBCASE("transductive methods need target features") {
        config.method = vsc::Method::cdvsc;
        data.target = vsc::LabeledFeatureSet{};
        CHECK_THROWS_WITH_AS(vsc::train(config, data), "train: cdvsc needs target features",
                             std::invalid_argument);
    }
    SUBCASE("feature widths must agree") {
        data.target.features = Matrix::from_rows({{0.0, 1.0, 2.0}});
        CHECK_THROWS_AS(vsc::train(config, data), std::invalid_argument);
    }
    SUBCASE("held-out seen rows must exist") {
        data.split.test_seen_rows = {99};
        CHECK_THROWS_WITH_AS(vsc::train(config, data), "train: test_seen_row 99 out of range",
                             std::invalid_argument);
    }
}

TEST_CASE("zero structure weight reproduces the plain regression trajectory") {
    const auto& data = shift_data();
    vsc::TrainConfig config;
    config.beta = 0.0;
    config.learning_rate = 2e-2;
    config.epochs = 50;
    config.seed = 4;

    Trajectory vcl, cdvsc, bmvsc;
    config.method = vsc::Method::vcl;
    const auto r_vcl = vsc::train(config, data, recorder(vcl));
    config.method = vsc::Method::cdvsc;
    const auto r_cd = vsc::train(config, data, recorder(cdvsc));
    config.method = vsc::Method::bmvsc;
    const auto r_bm = vsc::train(config, data, recorder(bmvsc));

    REQUIRE(vcl.w1.size() == config.epochs);
    REQUIRE(cdvsc.w1.size() == config.epochs);
    REQUIRE(bmvsc.w1.size() == config.epochs);
    for (std::size_t e = 0; e < config.epochs; ++e) {
        // Bitwise equality: with beta 0 the structure term may not perturb a
        // single ulp of the update.
        CHECK(vcl.w1[e] == cdvsc.w1[e]);
        CHECK(vcl.w2[e] == cdvsc.w2[e]);
        CHECK(vcl.w1[e] == bmvsc.w1[e]);
        CHECK(vcl.w2[e] == bmvsc.w2[e]);
    }
    for (std::size_t e = 0; e < config.epochs; ++e) {
        CHECK(r_vcl.log.rows[e].mse == r_bm.log.rows[e].mse);
        CHECK(r_vcl.log.rows[e].reg == r_bm.log.rows[e].reg);
        CHECK(r_vcl.log.rows[e].total == r_bm.log.rows[e].total);
        CHECK(r_vcl.log.rows[e].total == r_cd.log.rows[e].total);
    }
}

TEST_CASE("logged losses decompose into their parts") {
    const auto& data = shift_data();
    vsc::TrainConfig config;
    config.learning_rate = 2e-2;
    config.weight_decay = 1e-4;
    config.epochs = 150;

    config.method = vsc::Method::cdvsc;
    config.beta = 0.002;
    const auto cd = vsc::train(config, data);

    config.method = vsc::Method::bmvsc;
    config.beta = 0.008;
    config.cost = vsc::CostMode::euclidean;
    const auto bm = vsc::train(config, data);

    for (const auto* log : {&cd.log, &bm.log}) {
        REQUIRE(log->rows.size() == config.epochs);
        for (std::size_t i = 0; i < log->rows.size(); ++i) {
            const auto& row = log->rows[i];
            CHECK(row.epoch == i + 1);
            const double beta = log == &cd.log ? 0.002 : 0.008;
            CHECK(std::abs(row.total - (row.mse + beta * row.structure + row.reg)) <= 1e-9);
            CHECK(row.mse >= 0.0);
            CHECK(row.structure >= 0.0);
            CHECK(row.reg >= 0.0);
        }
    }
}

TEST_CASE("loss trends down over training") {
    const auto& data = shift_data();
    vsc::TrainConfig config;
    config.method = vsc::Method::cdvsc;
    config.beta = 0.002;
    config.learning_rate = 2e-2;
    config.weight_decay = 1e-4;
    config.epochs = 1000;
    config.seed = 1;
    const auto r = vsc::train(config, data);

    auto median_total = [&](std::size_t lo, std::size_t hi) {
        std::vector<double> v;
        for (std::size_t i = lo; i < hi; ++i) v.push_back(r.log.rows[i].total);
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    CHECK(median_total(800, 1000) < median_total(0, 200));

    // Chamfer diagnostics: nearest-neighbour agreement with the reference
    // matching, no per-epoch assignments (those are matching-only).
    CHECK(r.log.has_diagnostics);
    CHECK(r.log.assignments.empty());
    CHECK(r.log.clustering_inertia > 0.0);
    for (const auto& row : r.log.rows) {
        CHECK(row.right_matches >= 0);
        CHECK(row.right_matches <= 3);
        CHECK(row.center_dist >= 0.0);
    }
}

TEST_CASE("training is deterministic in the seed") {
    const auto& data = shift_data();
    vsc::TrainConfig config;
    config.method = vsc::Method::cdvsc;
    config.beta = 0.002;
    config.learning_rate = 2e-2;
    config.epochs = 80;
    config.seed = 9;

    const auto a = vsc::train(config, data);
    const auto b = vsc::train(config, data);
    CHECK(a.net.w1 == b.net.w1);
    CHECK(a.net.w2 == b.net.w2);
    REQUIRE(a.log.rows.size() == b.log.rows.size());
    for (std::size_t i = 0; i < a.log.rows.size(); ++i)
        CHECK(a.log.rows[i].total == b.log.rows[i].total);

    config.seed = 10;
    const auto c = vsc::train(config, data);
    CHECK_FALSE(c.net.w1 == a.net.w1);
}

TEST_CASE("regression-only training fits clean separable data") {
    const auto& data = exact_data();
    vsc::TrainConfig config;
    config.method = vsc::Method::vcl;
    config.learning_rate = 1e-2;
    config.weight_decay = 0.0;
    config.epochs = 1000;
    const auto r = vsc::train(config, data);
    CHECK(r.log.rows.back().mse < 1e-3);

    // hidden = 0 falls back to the feature dimension.
    CHECK(r.net.w1.rows() == 4);
    CHECK(r.net.w1.cols() == 8);
    CHECK(r.net.w2.rows() == 8);
    CHECK(r.net.w2.cols() == 8);
}

TEST_CASE("divergence reports the offending epoch") {
    const auto& data = exact_data();
    vsc::TrainConfig config;
    config.method = vsc::Method::vcl;
    config.learning_rate = 1e100;
    config.epochs = 50;
    try {
        vsc::train(config, data);
        FAIL("expected training to diverge");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("matching log tracks the reference assignment") {
    const auto& data = shift_data();
    vsc::TrainConfig config;
    config.method = vsc::Method::bmvsc;
    config.beta = 0.008;
    config.learning_rate = 2e-2;
    config.weight_decay = 1e-4;
    config.epochs = 600;
    config.cost = vsc::CostMode::euclidean;
    config.hidden = 12;
    const auto r = vsc::train(config, data);

    CHECK(r.net.w1.rows() == 8);
    CHECK(r.net.w1.cols() == 12);
    CHECK(r.net.w2.rows() == 12);
    CHECK(r.net.w2.cols() == 16);

    CHECK(r.log.has_diagnostics);
    CHECK(r.log.clustering_inertia > 0.0);
    REQUIRE(r.log.assignments.size() == config.epochs);
    for (const auto& pairs : r.log.assignments) CHECK(is_permutation_of_targets(pairs, 3));

    for (const auto& row : r.log.rows) {
        CHECK(row.right_matches >= 0);
        CHECK(row.right_matches <= 3);
        CHECK(row.center_dist > 0.0);
    }
    // By the end every synthetic center sits nearest its own cluster and the
    // centers have closed most of the initial gap.
    CHECK(r.log.rows.back().right_matches == 3);
    CHECK(r.log.rows.back().center_dist < 0.25 * r.log.rows.front().center_dist);

    SUBCASE("regression-only logs carry no matching columns") {
        vsc::TrainConfig plain;
        plain.method = vsc::Method::vcl;
        plain.learning_rate = 2e-2;
        plain.epochs = 5;
        const auto v = vsc::train(plain, data);
        CHECK(v.log.has_diagnostics);  // labeled target: center distance only
        CHECK(v.log.assignments.empty());
        CHECK(v.log.clustering_inertia == -1.0);
        for (const auto& row : v.log.rows) {
            CHECK(row.right_matches == -1);
            CHECK(row.center_dist >= 0.0);
        }
    }
    SUBCASE("diagnostics can be switched off") {
        vsc::TrainConfig quiet = config;
        quiet.epochs = 5;
        quiet.diagnostics = false;
        const auto q = vsc::train(quiet, data);
        CHECK_FALSE(q.log.has_diagnostics);
        for (const auto& row : q.log.rows) {
            CHECK(row.right_matches == -1);
            CHECK(row.center_dist == -1.0);
        }
    }
}

TEST_CASE("cross-validation picks the structure weight that wins") {
    const auto& data = shift_data();
    vsc::TrainConfig config;
    config.method = vsc::Method::bmvsc;
    config.learning_rate = 2e-2;
    config.weight_decay = 1e-4;
    config.epochs = 300;
    config.cost = vsc::CostMode::euclidean;

    const auto sel =
        vsc::select_beta({0.0, 0.008}, config, data.source, data.attributes, data.split, 2);
    REQUIRE(sel.table.size() == 2);
    CHECK(sel.table[0].first == 0.0);
    CHECK(sel.table[1].first == 0.008);
    CHECK(sel.table[1].second > sel.table[0].second);
    CHECK(sel.beta == 0.008);
    CHECK(sel.cv_accuracy == sel.table[1].second);

    SUBCASE("a single-entry grid is returned as-is") {
        const auto one =
            vsc::select_beta({0.25}, config, data.source, data.attributes, data.split, 2);
        CHECK(one.beta == 0.25);
    }
    SUBCASE("ties break to the smaller weight") {
        // vcl ignores beta entirely, so every grid point scores the same.
        vsc::TrainConfig flat = config;
        flat.method = vsc::Method::vcl;
        flat.epochs = 150;
        const auto tie =
            vsc::select_beta({0.5, 0.1, 0.3}, flat, data.source, data.attributes, data.split, 2);
        CHECK(tie.beta == 0.1);
        CHECK(tie.table[0].second == tie.table[1].second);
        CHECK(tie.table[1].second == tie.table[2].second);
    }
}

TEST_CASE("cross-validation validates its inputs") {
    const auto& data = shift_data();
    vsc::TrainConfig config;
    CHECK_THROWS_WITH_AS(
        vsc::select_beta({}, config, data.source, data.attributes, data.split, 2),
        "select_beta: empty grid", std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        vsc::select_beta({0.1}, config, data.source, data.attributes, data.split, 1),
        "select_beta: need at least 2 folds", std::invalid_argument);

    auto unlabeled = data.source;
    unlabeled.labels.reset();
    CHECK_THROWS_WITH_AS(
        vsc::select_beta({0.1}, config, unlabeled, data.attributes, data.split, 2),
        "select_beta: source must be labeled", std::invalid_argument);

    // 6 seen classes support 2 folds (needs 5) but not 3 (needs 7).
    const auto& small = exact_data();
    CHECK_THROWS_WITH_AS(
        vsc::select_beta({0.1}, config, small.source, small.attributes, small.split, 3),
        "select_beta: too few seen classes for 3 folds", std::invalid_argument);
}

TEST_CASE("train log csv spells out both layouts") {
    vsc::TrainLog log;
    vsc::TrainLogRow r1;
    r1.epoch = 1;
    r1.mse = 0.5;
    r1.structure = 0.125;
    r1.reg = 0.25;
    r1.total = 0.875;
    r1.right_matches = 2;
    r1.center_dist = 1.5;
    vsc::TrainLogRow r2;
    r2.epoch = 2;
    r2.mse = 0.03125;
    r2.structure = 0.0;
    r2.reg = 0.25;
    r2.total = 0.28125;
    r2.right_matches = 3;
    r2.center_dist = 0.75;
    log.rows = {r1, r2};

    const auto dir = scratch_dir() / "csv";
    std::filesystem::create_directories(dir);

    log.has_diagnostics = true;
    vsc::write_train_log_csv(dir / "diag.csv", log);
    CHECK(slurp(dir / "diag.csv") ==
          "epoch,mse,structure,reg,total,right_matches,center_dist\n"
          "1,0.5,0.125,0.25,0.875,2,1.5\n"
          "2,0.03125,0,0.25,0.28125,3,0.75\n");

    log.has_diagnostics = false;
    vsc::write_train_log_csv(dir / "plain.csv", log);
    CHECK(slurp(dir / "plain.csv") ==
          "epoch,mse,structure,reg,total\n"
          "1,0.5,0.125,0.25,0.875\n"
          "2,0.03125,0,0.25,0.28125\n");
}
