#include <atomic>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "vsc/align.hpp"
#include "vsc/cluster.hpp"
#include "vsc/dataset.hpp"
#include "vsc/embed.hpp"
#include "vsc/eval.hpp"
#include "vsc/io_util.hpp"
#include "vsc/train.hpp"

namespace {

using vsc::format_sig;

struct GenOptions {
    std::string out;
    vsc::SynthParams params;
};

void run_gen_synth(const GenOptions& opt) {
    vsc::generate_synthetic(opt.out, opt.params);
    std::cout << "wrote " << opt.out << " (seen=" << opt.params.seen
              << " unseen=" << opt.params.unseen << " d=" << opt.params.feature_dim
              << " m=" << opt.params.attr_dim << " per_class=" << opt.params.per_class << ")\n";
}

struct TrainOptions {
    std::string data;
    std::string method = "vcl";
    std::string cost = "squared";
    vsc::TrainConfig config;
    bool normalize = false;
    bool diagnostics = true;
    std::string out;
    std::string log;
    std::string beta_grid;
    std::size_t folds = 3;
};

vsc::CostMode parse_cost(const std::string& cost) {
    if (cost == "squared") return vsc::CostMode::squared;
    if (cost == "euclidean") return vsc::CostMode::euclidean;
    throw std::invalid_argument("unknown cost mode '" + cost + "' (expected squared|euclidean)");
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    for (const auto field : vsc::split_csv_line(text))
        grid.push_back(vsc::parse_double(field, "--beta-grid"));
    return grid;
}

void run_train(TrainOptions& opt) {
    opt.config.method = vsc::method_from_string(opt.method);
    opt.config.cost = parse_cost(opt.cost);
    opt.config.diagnostics = opt.diagnostics;
    const auto data = vsc::load_dataset(opt.data, {.normalize = opt.normalize});

    if (!opt.beta_grid.empty()) {
        const auto selection = vsc::select_beta(parse_grid(opt.beta_grid), opt.config, data.source,
                                                data.attributes, data.split, opt.folds);
        for (const auto& [beta, acc] : selection.table)
            std::cout << "beta " << format_sig(beta) << ": cv_accuracy " << format_sig(acc) << "\n";
        std::cout << "selected beta " << format_sig(selection.beta) << "\n";
        opt.config.beta = selection.beta;
    }

    const auto result = vsc::train(opt.config, data);
    const auto& last = result.log.rows.back();
    if (result.log.clustering_inertia >= 0.0)
        std::cout << "clustering inertia " << format_sig(result.log.clustering_inertia) << "\n";
    std::cout << "epoch " << last.epoch << ": mse " << format_sig(last.mse) << ", structure "
              << format_sig(last.structure) << ", reg " << format_sig(last.reg) << ", total "
              << format_sig(last.total) << "\n";
    if (!opt.out.empty()) vsc::save_model(result.net, opt.out);
    if (!opt.log.empty()) vsc::write_train_log_csv(opt.log, result.log);
}

struct EvalOptions {
    std::string data;
    std::string model;
    std::string mode = "conventional";
    std::string seen_centers = "synthetic";
    std::string out;
    bool normalize = false;
};

void run_eval(const EvalOptions& opt) {
    const auto data = vsc::load_dataset(opt.data, {.normalize = opt.normalize});
    const auto net = vsc::load_model(opt.model);
    if (opt.mode == "conventional") {
        const double acc = vsc::evaluate_conventional(net, data);
        std::cout << "acc " << format_sig(acc) << "\n";
        if (!opt.out.empty()) vsc::write_text_file(opt.out, "acc\n" + format_sig(acc) + "\n");
    } else if (opt.mode == "generalized") {
        vsc::SeenCenterSource source;
        if (opt.seen_centers == "synthetic") {
            source = vsc::SeenCenterSource::synthetic;
        } else if (opt.seen_centers == "real") {
            source = vsc::SeenCenterSource::real;
        } else {
            throw std::invalid_argument("unknown --gzsl-seen-centers '" + opt.seen_centers +
                                        "' (expected synthetic|real)");
        }
        const auto r = vsc::evaluate_generalized(net, data, source);
        std::cout << "acc_unseen " << format_sig(r.acc_unseen) << "\nacc_seen "
                  << format_sig(r.acc_seen) << "\nharmonic " << format_sig(r.harmonic) << "\n";
        if (!opt.out.empty())
            vsc::write_text_file(opt.out, "acc_unseen,acc_seen,harmonic\n" +
                                              format_sig(r.acc_unseen) + "," + format_sig(r.acc_seen) +
                                              "," + format_sig(r.harmonic) + "\n");
    } else {
        throw std::invalid_argument("unknown --mode '" + opt.mode +
                                    "' (expected conventional|generalized)");
    }
}

struct ClusterOptions {
    std::string data;
    std::string centers;
    std::string assignments;
    vsc::KMeansOptions kmeans;
    bool normalize = false;
};

void run_cluster(const ClusterOptions& opt) {
    const auto data = vsc::load_dataset(opt.data, {.normalize = opt.normalize});
    const auto result = vsc::kmeans(data.target.features, data.split.unseen.size(), opt.kmeans);
    std::cout << "k " << data.split.unseen.size() << ", inertia " << format_sig(result.inertia)
              << ", best_restart " << result.best_restart << "\n";
    if (data.target.labels)
        std::cout << "voting_upper_bound "
                  << format_sig(vsc::voting_upper_bound(result.assignments, *data.target.labels))
                  << "\n";
    if (!opt.centers.empty()) {
        std::string out;
        for (std::size_t r = 0; r < result.centers.rows(); ++r) {
            for (std::size_t c = 0; c < result.centers.cols(); ++c) {
                if (c) out += ',';
                out += format_sig(result.centers(r, c));
            }
            out += '\n';
        }
        vsc::write_text_file(opt.centers, out);
    }
    if (!opt.assignments.empty()) {
        std::string out;
        for (int a : result.assignments) {
            out += std::to_string(a);
            out += '\n';
        }
        vsc::write_text_file(opt.assignments, out);
    }
}

struct MatchReportOptions {
    std::string data;
    std::string model;
    std::string cost = "squared";
    vsc::KMeansOptions kmeans;
    bool normalize = false;
};

void run_match_report(const MatchReportOptions& opt) {
    const auto data = vsc::load_dataset(opt.data, {.normalize = opt.normalize});
    const auto net = vsc::load_model(opt.model);
    const auto projected = vsc::forward(net, data.attributes.rows_for(data.split.unseen));
    const auto km = vsc::kmeans(data.target.features, data.split.unseen.size(), opt.kmeans);

    const auto cost = vsc::cost_matrix(projected, km.centers, parse_cost(opt.cost));
    const auto assignment = vsc::min_weight_perfect_matching(cost);
    for (std::size_t i = 0; i < assignment.pairs.size(); ++i)
        std::cout << i << " -> " << assignment.pairs[i] << " : "
                  << format_sig(cost(i, static_cast<std::size_t>(assignment.pairs[i]))) << "\n";
    std::cout << "total " << format_sig(assignment.total_cost) << "\n";

    const auto ch = vsc::chamfer(projected, km.centers);
    const auto rep = vsc::many_to_one_report(ch.nn_ab, ch.nn_ba);
    std::cout << "chamfer crowded_targets_ab " << rep.crowded_targets_ab << "\n"
              << "chamfer crowded_targets_ba " << rep.crowded_targets_ba << "\n"
              << "chamfer one_to_one " << (rep.is_one_to_one ? "yes" : "no") << "\n";
}

struct SuiteOptions {
    std::string suite;
    std::string out;
    std::string mode = "conventional";
    std::string cost = "squared";
    vsc::TrainConfig config;
    bool normalize = false;
    bool timings = false;
    unsigned jobs = 1;
};

struct SuiteRow {
    std::string dataset;
    std::string method;
    double beta = 0.0;
    std::uint64_t seed = 0;
};

void run_suite(const SuiteOptions& opt) {
    if (opt.mode != "conventional" && opt.mode != "generalized")
        throw std::invalid_argument("unknown --mode '" + opt.mode +
                                    "' (expected conventional|generalized)");
    const auto lines = vsc::read_lines(opt.suite);
    const auto base = std::filesystem::path(opt.suite).parent_path();
    std::vector<SuiteRow> rows;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = vsc::trim(lines[i]);
        if (line.empty() || line.starts_with('#')) continue;
        if (line == "dataset,method,beta,seed") continue;
        const auto fields = vsc::split_csv_line(line);
        const std::string where = opt.suite + ":" + std::to_string(i + 1);
        if (fields.size() != 4)
            throw std::invalid_argument(where + ": expected dataset,method,beta,seed");
        SuiteRow row;
        row.dataset = std::string(vsc::trim(fields[0]));
        row.method = std::string(vsc::trim(fields[1]));
        row.beta = vsc::parse_double(fields[2], where);
        row.seed = static_cast<std::uint64_t>(vsc::parse_int(fields[3], where));
        rows.push_back(std::move(row));
    }

    struct Outcome {
        bool ok = false;
        std::string error;
        double acc = 0.0;
        vsc::GzslResult gzsl;
        double seconds = 0.0;
    };
    std::vector<Outcome> outcomes(rows.size());

    const auto run_row = [&](std::size_t idx) {
        Outcome& out = outcomes[idx];
        const auto start = std::chrono::steady_clock::now();
        try {
            const SuiteRow& row = rows[idx];
            auto dir = std::filesystem::path(row.dataset);
            if (dir.is_relative()) dir = base / dir;
            const auto data = vsc::load_dataset(dir, {.normalize = opt.normalize});
            vsc::TrainConfig config = opt.config;
            config.method = vsc::method_from_string(row.method);
            config.cost = parse_cost(opt.cost);
            config.beta = row.beta;
            config.seed = row.seed;
            config.diagnostics = false;
            const auto result = vsc::train(config, data);
            if (opt.mode == "conventional")
                out.acc = vsc::evaluate_conventional(result.net, data);
            else
                out.gzsl = vsc::evaluate_generalized(result.net, data);
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    const unsigned jobs = std::max(1u, opt.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) run_row(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (unsigned w = 0; w < jobs; ++w)
            workers.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1))
                    run_row(i);
            });
        for (auto& t : workers) t.join();
    }

    std::string csv = "dataset,method,beta,seed,status";
    csv += opt.mode == "conventional" ? ",acc" : ",acc_unseen,acc_seen,harmonic";
    if (opt.timings) csv += ",seconds";
    csv += '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const auto& out = outcomes[i];
        csv += row.dataset + "," + row.method + "," + format_sig(row.beta) + "," +
               std::to_string(row.seed) + ",";
        csv += out.ok ? "ok" : "error";
        if (opt.mode == "conventional") {
            csv += ",";
            if (out.ok) csv += format_sig(out.acc);
        } else {
            if (out.ok)
                csv += "," + format_sig(out.gzsl.acc_unseen) + "," + format_sig(out.gzsl.acc_seen) +
                       "," + format_sig(out.gzsl.harmonic);
            else
                csv += ",,,";
        }
        if (opt.timings) csv += "," + format_sig(out.seconds);
        csv += '\n';
        if (!out.ok)
            std::cerr << "suite row " << i + 1 << " (" << row.dataset << "," << row.method
                      << "): " << out.error << "\n";
    }
    if (opt.out.empty())
        std::cout << csv;
    else
        vsc::write_text_file(opt.out, csv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transductive zero-shot learning with visual structure constraints"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-synth", "Generate a synthetic domain-shift dataset");
    gen_cmd->add_option("--out", gen.out, "Output dataset directory")->required();
    gen_cmd->add_option("--seen", gen.params.seen, "Seen class count");
    gen_cmd->add_option("--unseen", gen.params.unseen, "Unseen class count");
    gen_cmd->add_option("--feature-dim", gen.params.feature_dim, "Visual feature dimension");
    gen_cmd->add_option("--attr-dim", gen.params.attr_dim, "Attribute dimension");
    gen_cmd->add_option("--per-class", gen.params.per_class, "Instances per class");
    gen_cmd->add_option("--sigma", gen.params.sigma, "Instance noise");
    gen_cmd->add_option("--delta", gen.params.delta, "Unseen center shift magnitude");
    gen_cmd->add_option("--seed", gen.params.seed, "Master seed");
    gen_cmd->add_option("--test-seen-fraction", gen.params.test_seen_fraction,
                        "Seen rows held out per class");
    gen_cmd->callback([&] { run_gen_synth(gen); });

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "Train an embedding net");
    train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
    train_cmd->add_option("--method", tr.method, "vcl|cdvsc|bmvsc")->required();
    train_cmd->add_option("--beta", tr.config.beta, "Structure weight");
    train_cmd->add_option("--lr", tr.config.learning_rate, "Learning rate");
    train_cmd->add_option("--epochs", tr.config.epochs, "Training epochs");
    train_cmd->add_option("--weight-decay", tr.config.weight_decay, "Weight decay");
    train_cmd->add_option("--seed", tr.config.seed, "Master seed");
    train_cmd->add_option("--restarts", tr.config.kmeans_restarts, "K-means restarts");
    train_cmd->add_option("--max-iters", tr.config.kmeans_max_iters, "K-means iteration cap");
    train_cmd->add_option("--cost", tr.cost, "squared|euclidean");
    train_cmd->add_option("--hidden", tr.config.hidden, "Hidden width (0 = feature dim)");
    train_cmd->add_option("--out", tr.out, "Model output path");
    train_cmd->add_option("--log", tr.log, "Training log CSV path");
    train_cmd->add_option("--beta-grid", tr.beta_grid, "Select beta by cross-validation first");
    train_cmd->add_option("--folds", tr.folds, "Cross-validation folds");
    train_cmd->add_flag("--normalize", tr.normalize, "L2-normalize features and attributes at load");
    train_cmd->add_flag("!--no-diagnostics", tr.diagnostics, "Skip matching diagnostics");
    train_cmd->add_flag("!--no-final-activation", tr.config.final_activation,
                        "Drop the output-layer activation");
    train_cmd->callback([&] { run_train(tr); });

    EvalOptions ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model");
    eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
    eval_cmd->add_option("--model", ev.model, "Model path")->required();
    eval_cmd->add_option("--mode", ev.mode, "conventional|generalized");
    eval_cmd->add_option("--gzsl-seen-centers", ev.seen_centers, "synthetic|real");
    eval_cmd->add_option("--out", ev.out, "Report CSV path");
    eval_cmd->add_flag("--normalize", ev.normalize, "L2-normalize features and attributes at load");
    eval_cmd->callback([&] { run_eval(ev); });

    ClusterOptions cl;
    auto* cluster_cmd = app.add_subcommand("cluster", "K-means on the unseen features (k = U)");
    cluster_cmd->add_option("--data", cl.data, "Dataset directory")->required();
    cluster_cmd->add_option("--restarts", cl.kmeans.restarts, "Restarts");
    cluster_cmd->add_option("--max-iters", cl.kmeans.max_iters, "Iteration cap");
    cluster_cmd->add_option("--seed", cl.kmeans.seed, "Master seed");
    cluster_cmd->add_option("--centers", cl.centers, "Write centers CSV here");
    cluster_cmd->add_option("--assignments", cl.assignments, "Write assignments here");
    cluster_cmd->add_flag("--normalize", cl.normalize, "L2-normalize features and attributes at load");
    cluster_cmd->callback([&] { run_cluster(cl); });

    MatchReportOptions mr;
    auto* match_cmd = app.add_subcommand("match-report", "Matching and Chamfer diagnostics");
    match_cmd->add_option("--data", mr.data, "Dataset directory")->required();
    match_cmd->add_option("--model", mr.model, "Model path")->required();
    match_cmd->add_option("--cost", mr.cost, "squared|euclidean");
    match_cmd->add_option("--restarts", mr.kmeans.restarts, "K-means restarts");
    match_cmd->add_option("--max-iters", mr.kmeans.max_iters, "K-means iteration cap");
    match_cmd->add_option("--seed", mr.kmeans.seed, "Master seed");
    match_cmd->add_flag("--normalize", mr.normalize, "L2-normalize features and attributes at load");
    match_cmd->callback([&] { run_match_report(mr); });

    SuiteOptions su;
    auto* suite_cmd = app.add_subcommand("suite", "Run a suite of experiments");
    suite_cmd->add_option("--suite", su.suite, "Suite CSV (dataset,method,beta,seed)")->required();
    suite_cmd->add_option("--out", su.out, "Summary CSV path (stdout when omitted)");
    suite_cmd->add_option("--mode", su.mode, "conventional|generalized");
    suite_cmd->add_option("--lr", su.config.learning_rate, "Learning rate");
    suite_cmd->add_option("--epochs", su.config.epochs, "Training epochs");
    suite_cmd->add_option("--weight-decay", su.config.weight_decay, "Weight decay");
    suite_cmd->add_option("--restarts", su.config.kmeans_restarts, "K-means restarts");
    suite_cmd->add_option("--max-iters", su.config.kmeans_max_iters, "K-means iteration cap");
    suite_cmd->add_option("--cost", su.cost, "squared|euclidean");
    suite_cmd->add_option("--hidden", su.config.hidden, "Hidden width (0 = feature dim)");
    suite_cmd->add_option("--jobs", su.jobs, "Parallel rows");
    suite_cmd->add_flag("--timings", su.timings, "Append per-row runtime column");
    suite_cmd->add_flag("--normalize", su.normalize, "L2-normalize features and attributes at load");
    suite_cmd->callback([&] { run_suite(su); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
