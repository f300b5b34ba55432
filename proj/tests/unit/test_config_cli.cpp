#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "soauc/soauc.hpp"

using namespace soauc;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SOAUC_FIXTURE_DIR;

struct Run {
    int code;
    std::string out;
};

// Runs the CLI inside `dir` with the dataset root pointing at the fixtures;
// stderr is folded into the captured output.
Run cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = "cd '" + dir.string() + "' && SOAUC_DATA_ROOT='" + kFixtures.string() + "' '" +
                            SOAUC_CLI_PATH + "' " + args + " 2>&1";
    Run r{0, {}};
    FILE* p = popen(cmd.c_str(), "r");
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("soauc_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

std::string cfg(const std::string& name) { return "--config '" + (kFixtures / name).string() + "'"; }

}  // namespace

TEST(Config, MissingLambdaNamesField) {
    const auto c = load_run_config(kFixtures / "missing_lambda.json");
    try {
        validate_for(c, Command::Train);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "hyperparameters.lambda");
    }
}

TEST(Config, UnknownKeyRejectedWithPath) {
    try {
        load_run_config(kFixtures / "unknown_key.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "hyperparameters.lamda");
        EXPECT_NE(std::string(e.what()).find("lamda"), std::string::npos);
    }
}

TEST(Config, ParsesSections) {
    const auto j = nlohmann::json::parse(R"({
        "dataset": {"path": "x.libsvm", "positive": [3, 4], "dimension": 8},
        "algorithm": "okauc-m",
        "hyperparameters": {"lambda": 0.5, "kernel_width": 2, "budget_pos": 7},
        "grid": {"mode": "full", "lambda": [-1, 1]},
        "flags": {"eviction_rule": "paper_literal", "strict_ties": true, "scale_scope": "train_only"},
        "protocol": {"partitions": 2, "folds": 3},
        "seed": 9
    })");
    const auto c = parse_run_config(j);
    EXPECT_EQ(c.settings.algorithm, Algorithm::OkaucM);
    EXPECT_EQ(c.dataset->rule.mode, PositiveRule::Mode::Explicit);
    EXPECT_EQ(*c.dataset->dimension, 8u);
    EXPECT_EQ(c.grid.lambdas, (std::vector<double>{0.5, 2.0}));
    EXPECT_EQ(c.grid.etas.size(), 21u);
    EXPECT_EQ(c.settings.eviction, EvictionRule::MinAbsKernel);
    EXPECT_EQ(c.settings.budget_pos, 7u);
    EXPECT_TRUE(c.budgets_given);
    EXPECT_TRUE(c.strict_ties);
    EXPECT_EQ(c.scale_scope, ScaleScope::TrainOnly);
    EXPECT_EQ(c.partitions, 2u);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_NO_THROW(validate_for(c, Command::Train));

    EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"algorithm": "svm"})")), ConfigError);
    EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"algorithm": "oauc-m", "hyperparameters": {"lambda": -1}})")),
                 ConfigError);
    EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"algorithm": "oauc-m", "grid": {"lambda": [0.5]}})")),
                 ConfigError);
}

TEST(Config, DataRootEnvResolvesRelativePaths) {
    setenv(kDataRootEnv, "/data/root", 1);
    EXPECT_EQ(resolve_dataset_path("a/b.txt"), fs::path("/data/root/a/b.txt"));
    EXPECT_EQ(resolve_dataset_path("/abs/c.txt"), fs::path("/abs/c.txt"));
    unsetenv(kDataRootEnv);
    EXPECT_EQ(resolve_dataset_path("a/b.txt"), fs::path("a/b.txt"));
}

TEST(Snapshot, RoundTripContinuesIdentically) {
    const auto stream = gaussian_unit_ball_stream(120, 3, 60);
    const std::span<const LabeledInstance> all(stream);
    for (Algorithm a : {Algorithm::OaucM, Algorithm::OaucS, Algorithm::OkaucM, Algorithm::Perceptron,
                        Algorithm::PassiveAggressive}) {
        AlgorithmSettings s;
        s.algorithm = a;
        s.budget_pos = s.budget_neg = 10;
        const Hyperparams h{0.5, 0.1, 0.8, 0.5};
        auto model = train_one_pass(s, h, all.first(60), 3);
        auto restored = model_from_json(nlohmann::json::parse(to_json(model).dump()));
        for (const auto& z : all.subspan(60)) {
            std::visit([&](auto& m) { m.step(z); }, model.variant());
            std::visit([&](auto& m) { m.step(z); }, restored.variant());
        }
        for (const auto& z : stream) EXPECT_EQ(model.score(z.x), restored.score(z.x)) << to_string(a);
    }
}

TEST(Cli, TrainWritesSnapshotAndIsDeterministic) {
    const auto dir = scratch("train");
    const auto a = cli("train " + cfg("train_oauc_m.json"), dir);
    ASSERT_EQ(a.code, 0) << a.out;
    EXPECT_TRUE(fs::exists(dir / "model.json"));
    const auto snap = nlohmann::json::parse(slurp(dir / "model.json"));
    EXPECT_EQ(snap.at("algorithm"), "oauc-m");
    EXPECT_EQ(snap.at("model").at("model"), "linear");
    EXPECT_NE(a.out.find("train_n=16 test_n=4"), std::string::npos) << a.out;

    const auto b = cli("train " + cfg("train_oauc_m.json") + " --out again.json", dir);
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(slurp(dir / "model.json"), slurp(dir / "again.json"));

    const auto c = cli("train " + cfg("train_oauc_m.json") + " --seed 4 --out other.json", dir);
    EXPECT_NE(c.out.find("seed=4"), std::string::npos);
}

TEST(Cli, MissingLambdaFailsWithFieldPath) {
    const auto r = cli("train " + cfg("missing_lambda.json"), scratch("missing"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("hyperparameters.lambda"), std::string::npos) << r.out;
}

TEST(Cli, ExperimentCsvRows) {
    const auto dir = scratch("experiment");
    const auto r = cli("experiment " + cfg("experiment_oauc_m.json") + " --threads 2 --out exp.csv", dir);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines_of(slurp(dir / "exp.csv"));
    ASSERT_EQ(rows.size(), 22u);
    EXPECT_EQ(rows.front(), "kind,seed,fold,lambda,eta,kernel_width,c,auc,seconds,mean,stddev");
    EXPECT_EQ(rows.back().rfind("summary,", 0), 0u);
    EXPECT_FALSE(fs::exists(dir / "exp.csv.tmp"));
}

TEST(Cli, RegretSingleInstanceIsHeaderOnly) {
    const auto dir = scratch("regret1");
    const auto r = cli("regret " + cfg("regret_single.json") + " --out r.csv", dir);
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(lines_of(slurp(dir / "r.csv")), std::vector<std::string>{"t,cumulative_regret,bound_value"});
}

TEST(Cli, RegretRowsRespectBound) {
    const auto dir = scratch("regret2");
    const auto r = cli("regret " + cfg("regret_oauc_m.json") + " --out r.csv", dir);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines_of(slurp(dir / "r.csv"));
    ASSERT_GT(rows.size(), 100u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        double t, reg, bound;
        ASSERT_EQ(std::sscanf(rows[i].c_str(), "%lf,%lf,%lf", &t, &reg, &bound), 3);
        EXPECT_LE(reg, bound) << rows[i];
    }
}

TEST(Cli, FiniteBufferKernelRegretOmitsBound) {
    const auto dir = scratch("regret3");
    const auto r = cli("regret " + cfg("regret_okauc_finite.json") + " --out r.csv", dir);
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("warning"), std::string::npos);
    EXPECT_NE(r.out.find("unbounded buffers"), std::string::npos);
    EXPECT_EQ(lines_of(slurp(dir / "r.csv")).front(), "t,cumulative_regret");
}

TEST(Cli, VerifyPasses) {
    const auto r = cli("verify", scratch("verify"));
    EXPECT_EQ(r.code, 0) << r.out;
    const auto rows = lines_of(r.out);
    EXPECT_EQ(rows.size(), 8u);
    for (const auto& l : rows) {
        EXPECT_EQ(l.rfind("PASS ", 0), 0u) << l;
        EXPECT_NE(l.find("checks="), std::string::npos);
    }
}

TEST(Cli, UnknownSubcommandFails) {
    EXPECT_NE(cli("frobnicate", scratch("bad")).code, 0);
}

TEST(Verify, SignFlipInHingeWeightIsCaught) {
    const ClassifierStep mutated = [](const Kernel& k, SupportBuffer& cmp, SupportBuffer& same,
                                      const LabeledInstance& z, LossKind loss, double lambda, double eta) {
        auto upd = update_classifier(k, cmp, same, z, loss, lambda, eta);
        if (upd && loss == LossKind::HingeSecondOrder) upd->incoming_alpha = -upd->incoming_alpha;
        return upd;
    };
    EXPECT_TRUE(verify_gram_basis().passed());
    const auto r = verify_gram_basis(mutated);
    EXPECT_FALSE(r.passed());
    EXPECT_GT(r.failures, 50u);
    EXPECT_FALSE(r.first_failure.empty());
}
