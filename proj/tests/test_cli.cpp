#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "vsc_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs the CLI with the given argument string, capturing exit code and both
/// streams through shell redirection.
RunResult run(const std::string& args) {
    static int counter = 0;
    const auto out_path = scratch_dir() / ("stdout_" + std::to_string(counter) + ".txt");
    const auto err_path = scratch_dir() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = std::string(VSC_CLI_PATH) + " " + args + " > " + out_path.string() +
                            " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

double value_after(const std::string& line, const std::string& prefix) {
    REQUIRE(starts_with(line, prefix));
    return std::stod(line.substr(prefix.size()));
}

const std::vector<std::string> kDatasetFiles = {
    "features_seen.csv", "features_unseen.csv", "labels_unseen.csv", "attributes.csv", "split.txt"};

const std::string kGenArgs =
    "--seen 6 --unseen 2 --feature-dim 8 --attr-dim 4 --per-class 6 "
    "--sigma 0.02 --delta 0.3 --seed 5";

/// Dataset shared across cases; generated once through the CLI itself.
std::string dataset_dir() {
    static const std::string dir = [] {
        const auto d = scratch_dir() / "ds";
        run("gen-synth --out " + d.string() + " " + kGenArgs);
        return d.string();
    }();
    return dir;
}

std::string train_model(const std::string& tag, const std::string& extra) {
    const auto model = (scratch_dir() / (tag + ".json")).string();
    const auto r = run("train --data " + dataset_dir() + " --method vcl --lr 2e-2 --epochs 120 " +
                       extra + " --out " + model);
    REQUIRE(r.code == 0);
    return model;
}

}  // namespace

TEST_CASE("argument errors exit with code 1") {
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("gen-synth").code == 1);                       // missing --out
    CHECK(run("eval --data somewhere").code == 1);           // missing --model
    CHECK(run("cluster --data x --bogus-flag 3").code == 1);
    const auto help = run("--help");
    CHECK(help.code == 0);
    CHECK(help.out.find("gen-synth") != std::string::npos);
}

TEST_CASE("gen-synth writes a complete dataset deterministically") {
    const auto dir_a = (scratch_dir() / "gen_a").string();
    const auto dir_b = (scratch_dir() / "gen_b").string();
    const auto a = run("gen-synth --out " + dir_a + " " + kGenArgs);
    const auto b = run("gen-synth --out " + dir_b + " " + kGenArgs);
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    CHECK(a.out == "wrote " + dir_a + " (seen=6 unseen=2 d=8 m=4 per_class=6)\n");
    for (const auto& name : kDatasetFiles) {
        CAPTURE(name);
        const auto bytes = slurp(fs::path(dir_a) / name);
        CHECK_FALSE(bytes.empty());
        CHECK(bytes == slurp(fs::path(dir_b) / name));
    }
}

TEST_CASE("train reports the final losses and writes model and log") {
    const auto model = (scratch_dir() / "m_train.json").string();
    const auto log = (scratch_dir() / "m_train_log.csv").string();
    const auto r = run("train --data " + dataset_dir() +
                       " --method vcl --lr 2e-2 --epochs 120 --out " + model + " --log " + log);
    CHECK(r.code == 0);
    const auto out_lines = lines_of(r.out);
    REQUIRE(out_lines.size() == 1);
    CHECK(starts_with(out_lines[0], "epoch 120: mse "));
    CHECK(out_lines[0].find(", total ") != std::string::npos);

    const auto log_lines = lines_of(slurp(log));
    REQUIRE(log_lines.size() == 121);
    CHECK(log_lines[0] == "epoch,mse,structure,reg,total,right_matches,center_dist");
    CHECK(starts_with(log_lines[1], "1,"));
    CHECK(starts_with(log_lines[120], "120,"));

    SUBCASE("training is reproducible byte for byte") {
        const auto model2 = (scratch_dir() / "m_train2.json").string();
        const auto log2 = (scratch_dir() / "m_train2_log.csv").string();
        const auto r2 = run("train --data " + dataset_dir() +
                            " --method vcl --lr 2e-2 --epochs 120 --out " + model2 + " --log " +
                            log2);
        CHECK(r2.code == 0);
        CHECK(slurp(model) == slurp(model2));
        CHECK(slurp(log) == slurp(log2));
    }
    SUBCASE("transductive training reports the clustering inertia") {
        const auto r2 = run("train --data " + dataset_dir() +
                            " --method bmvsc --beta 0.008 --lr 2e-2 --epochs 40");
        CHECK(r2.code == 0);
        const auto lines = lines_of(r2.out);
        REQUIRE(lines.size() == 2);
        CHECK(starts_with(lines[0], "clustering inertia "));
        CHECK(starts_with(lines[1], "epoch 40: "));
    }
    SUBCASE("diagnostics can be dropped from the log") {
        const auto log3 = (scratch_dir() / "m_quiet_log.csv").string();
        const auto r3 = run("train --data " + dataset_dir() +
                            " --method vcl --lr 2e-2 --epochs 5 --no-diagnostics --log " + log3);
        CHECK(r3.code == 0);
        CHECK(lines_of(slurp(log3))[0] == "epoch,mse,structure,reg,total");
    }
}

TEST_CASE("train can pick beta by cross-validation") {
    const auto r = run("train --data " + dataset_dir() +
                       " --method bmvsc --beta-grid 0,0.008 --folds 2 --lr 2e-2 --epochs 120");
    CHECK(r.code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() >= 4);
    CHECK(starts_with(lines[0], "beta 0: cv_accuracy "));
    CHECK(starts_with(lines[1], "beta 0.008: cv_accuracy "));
    CHECK(starts_with(lines[2], "selected beta "));
    const double chosen = value_after(lines[2], "selected beta ");
    CHECK((chosen == 0.0 || chosen == 0.008));
}

TEST_CASE("eval prints accuracy in both modes") {
    const auto model = train_model("m_eval", "");
    const auto report = (scratch_dir() / "eval_report.csv").string();

    const auto conv =
        run("eval --data " + dataset_dir() + " --model " + model + " --out " + report);
    CHECK(conv.code == 0);
    const auto conv_lines = lines_of(conv.out);
    REQUIRE(conv_lines.size() == 1);
    const double acc = value_after(conv_lines[0], "acc ");
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(slurp(report) == "acc\n" + conv_lines[0].substr(4) + "\n");

    const auto gz = run("eval --data " + dataset_dir() + " --model " + model +
                        " --mode generalized --out " + report);
    CHECK(gz.code == 0);
    const auto gz_lines = lines_of(gz.out);
    REQUIRE(gz_lines.size() == 3);
    const double acc_u = value_after(gz_lines[0], "acc_unseen ");
    const double acc_s = value_after(gz_lines[1], "acc_seen ");
    const double h = value_after(gz_lines[2], "harmonic ");
    CHECK(acc_u >= 0.0);
    CHECK(acc_s >= 0.0);
    CHECK(h <= std::max(acc_u, acc_s));
    const auto file_lines = lines_of(slurp(report));
    REQUIRE(file_lines.size() == 2);
    CHECK(file_lines[0] == "acc_unseen,acc_seen,harmonic");

    SUBCASE("real seen centers are accepted too") {
        const auto real = run("eval --data " + dataset_dir() + " --model " + model +
                              " --mode generalized --gzsl-seen-centers real");
        CHECK(real.code == 0);
        CHECK(lines_of(real.out).size() == 3);
    }
}

TEST_CASE("cluster reports inertia and the voting bound") {
    const auto centers = (scratch_dir() / "centers.csv").string();
    const auto assignments = (scratch_dir() / "assignments.txt").string();
    const auto r = run("cluster --data " + dataset_dir() + " --centers " + centers +
                       " --assignments " + assignments);
    CHECK(r.code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(starts_with(lines[0], "k 2, inertia "));
    CHECK(lines[0].find(", best_restart ") != std::string::npos);
    const double bound = value_after(lines[1], "voting_upper_bound ");
    CHECK(bound >= 0.0);
    CHECK(bound <= 1.0);

    const auto center_lines = lines_of(slurp(centers));
    REQUIRE(center_lines.size() == 2);
    for (const auto& line : center_lines)
        CHECK(std::count(line.begin(), line.end(), ',') == 7);
    const auto assign_lines = lines_of(slurp(assignments));
    CHECK(assign_lines.size() == 12);  // 2 unseen classes x 6 rows
    for (const auto& line : assign_lines) CHECK((line == "0" || line == "1"));
}

TEST_CASE("match-report pairs every projected center with a cluster") {
    const auto model = train_model("m_match", "");
    const auto r = run("match-report --data " + dataset_dir() + " --model " + model);
    CHECK(r.code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 6);  // 2 pair lines, total, 3 chamfer lines
    std::vector<int> targets;
    for (int i = 0; i < 2; ++i) {
        CHECK(starts_with(lines[i], std::to_string(i) + " -> "));
        targets.push_back(lines[i][5] - '0');
    }
    std::sort(targets.begin(), targets.end());
    CHECK(targets == std::vector<int>{0, 1});
    CHECK(starts_with(lines[2], "total "));
    CHECK(starts_with(lines[3], "chamfer crowded_targets_ab "));
    CHECK(starts_with(lines[4], "chamfer crowded_targets_ba "));
    CHECK((lines[5] == "chamfer one_to_one yes" || lines[5] == "chamfer one_to_one no"));
}

TEST_CASE("runtime failures exit with code 2 and explain themselves") {
    const auto missing = run("eval --data /nonexistent/ds --model /nonexistent/m.json");
    CHECK(missing.code == 2);
    CHECK(starts_with(missing.err, "error: "));

    const auto bad_method = run("train --data " + dataset_dir() + " --method vscl");
    CHECK(bad_method.code == 2);
    CHECK(bad_method.err.find("unknown method") != std::string::npos);

    const auto bad_cost =
        run("train --data " + dataset_dir() + " --method bmvsc --cost manhattan");
    CHECK(bad_cost.code == 2);
    CHECK(bad_cost.err.find("unknown cost mode") != std::string::npos);

    SUBCASE("attribute width mismatches are caught at eval time") {
        const auto model = train_model("m_mismatch", "");
        const auto wide = (scratch_dir() / "ds_wide").string();
        REQUIRE(run("gen-synth --out " + wide +
                    " --seen 6 --unseen 2 --feature-dim 8 --attr-dim 5 --per-class 6 --seed 5")
                    .code == 0);
        const auto r = run("eval --data " + wide + " --model " + model);
        CHECK(r.code == 2);
        CHECK(starts_with(r.err, "error: "));
        CHECK(r.err.find("does not match") != std::string::npos);
    }
}

TEST_CASE("suite runs every row and flags the broken ones") {
    const auto suite_dir = scratch_dir() / "suite";
    fs::create_directories(suite_dir);
    REQUIRE(run("gen-synth --out " + (suite_dir / "ds").string() + " " + kGenArgs).code == 0);

    std::ofstream(suite_dir / "rows.csv")
        << "dataset,method,beta,seed\n"
        << "# quick smoke rows\n"
        << "\n"
        << "ds,vcl,0,1\n"
        << "ds,bmvsc,0.008,1\n"
        << "missing,vcl,0,1\n";

    const std::string common = " --lr 2e-2 --epochs 100";
    const auto r = run("suite --suite " + (suite_dir / "rows.csv").string() + common);
    CHECK(r.code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "dataset,method,beta,seed,status,acc");
    CHECK(starts_with(lines[1], "ds,vcl,0,1,ok,"));
    CHECK(starts_with(lines[2], "ds,bmvsc,0.008,1,ok,"));
    CHECK(lines[3] == "missing,vcl,0,1,error,");
    CHECK(value_after(lines[1].substr(0, lines[1].size()), "ds,vcl,0,1,ok,") >= 0.0);
    CHECK(r.err.find("suite row 3 (missing,vcl):") != std::string::npos);

    SUBCASE("reruns and parallel runs reproduce the same table") {
        const auto again = run("suite --suite " + (suite_dir / "rows.csv").string() + common);
        CHECK(again.out == r.out);
        const auto parallel =
            run("suite --suite " + (suite_dir / "rows.csv").string() + common + " --jobs 2");
        CHECK(parallel.out == r.out);
    }
    SUBCASE("the table can be written to a file instead") {
        const auto out_csv = (suite_dir / "summary.csv").string();
        const auto saved =
            run("suite --suite " + (suite_dir / "rows.csv").string() + common + " --out " + out_csv);
        CHECK(saved.code == 0);
        CHECK(saved.out.empty());
        CHECK(slurp(out_csv) == r.out);
    }
    SUBCASE("generalized mode swaps in the three-metric columns") {
        const auto gz = run("suite --suite " + (suite_dir / "rows.csv").string() + common +
                            " --mode generalized");
        CHECK(gz.code == 0);
        const auto gz_lines = lines_of(gz.out);
        REQUIRE(gz_lines.size() == 4);
        CHECK(gz_lines[0] == "dataset,method,beta,seed,status,acc_unseen,acc_seen,harmonic");
        CHECK(gz_lines[3] == "missing,vcl,0,1,error,,,");
    }
    SUBCASE("timings add a trailing column") {
        const auto timed = run("suite --suite " + (suite_dir / "rows.csv").string() + common +
                               " --timings");
        CHECK(timed.code == 0);
        const auto timed_lines = lines_of(timed.out);
        CHECK(timed_lines[0] == "dataset,method,beta,seed,status,acc,seconds");
        CHECK(std::count(timed_lines[1].begin(), timed_lines[1].end(), ',') == 6);
    }
    SUBCASE("malformed rows are rejected up front") {
        std::ofstream(suite_dir / "bad.csv") << "ds,vcl,0\n";
        const auto bad = run("suite --suite " + (suite_dir / "bad.csv").string());
        CHECK(bad.code == 2);
        CHECK(bad.err.find("expected dataset,method,beta,seed") != std::string::npos);
    }
}
