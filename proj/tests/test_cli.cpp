#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "prenas/cli.hpp"

using namespace prenas;
using namespace prenas::cli;
namespace fs = std::filesystem;

namespace {

// ctest runs each case in its own process, possibly concurrently.
fs::path scratch_root() {
    struct Root {
        fs::path path = fs::temp_directory_path() / ("prenas_cli_" + std::to_string(::getpid()));
        Root() { fs::create_directories(path); }
        ~Root() {
            std::error_code ec;
            fs::remove_all(path, ec);
        }
    };
    static const Root root;
    return root.path;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = scratch_root() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Every NB201 cell scored by the synthetic landscape, as benchmark JSONL.
const fs::path& synthetic_table() {
    static const fs::path path = [] {
        const fs::path p = scratch_dir("table") / "nb201.jsonl";
        std::ofstream out(p);
        for (const auto& g : enumerate_nb201()) {
            const EvalResult e = synthetic_eval(g, {});
            out << to_benchmark_json({canonical_string(g), "cifar10", e.val_acc * 100, *e.test_acc * 100}) << '\n';
        }
        return p;
    }();
    return path;
}

int run_binary(const std::string& args, std::string* output = nullptr) {
    const fs::path log = scratch_root() / "binary.log";
    const std::string cmd = std::string(PRENAS_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Enumerate, Nb201) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_enumerate("3,0,2,1,1,4", "nb201", out, err), 0);
    EXPECT_NE(out.str().find("count 24\n"), std::string::npos);
    EXPECT_NE(out.str().find("op edge=0 3->0"), std::string::npos);
}

TEST(Enumerate, Darts) {
    Rng rng = make_rng(1);
    const std::string g = canonical_string(random_genotype(space_ref(SpaceKind::DartsLike), rng));
    std::ostringstream out, err;
    EXPECT_EQ(cmd_enumerate(g, "darts", out, err), 0);
    EXPECT_NE(out.str().find("count 68\n"), std::string::npos);
}

TEST(Enumerate, Malformed) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_enumerate("3,0,zz,1,1,4", "nb201", out, err), 1);
    EXPECT_NE(err.str().find("zz"), std::string::npos);
}

TEST(Search, MissingBenchmark) {
    SearchOptions o;
    o.benchmark = (scratch_root() / "missing.jsonl").string();
    o.out = scratch_dir("missing").string();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_search(o, out, err), 2);
    EXPECT_NE(err.str().find(o.benchmark), std::string::npos);
}

TEST(Search, BadConfig) {
    const fs::path dir = scratch_dir("badcfg");
    std::ofstream(dir / "bad.ini") << "[search]\ncycles = many\n";
    SearchOptions o;
    o.config = (dir / "bad.ini").string();
    o.out = dir.string();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_search(o, out, err), 1);
    const std::string msg = err.str();
    EXPECT_EQ(std::count(msg.begin(), msg.end(), '\n'), 1);
}

TEST(Search, OracleRunWritesArtifacts) {
    SearchOptions o;
    o.benchmark = synthetic_table().string();
    o.out = scratch_dir("oracle").string();
    o.seed = 7;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_search(o, out, err), 0) << err.str();
    EXPECT_EQ(out.str().rfind("best ", 0), 0u);
    EXPECT_NE(out.str().find(" val="), std::string::npos);
    EXPECT_NE(out.str().find(" test="), std::string::npos);
    for (const char* f : {"manifest.json", "history.jsonl", "summary.csv"}) EXPECT_TRUE(fs::exists(fs::path(o.out) / f));
    const auto manifest = nlohmann::json::parse(slurp(fs::path(o.out) / "manifest.json"));
    EXPECT_EQ(manifest.at("seed"), 7);
    EXPECT_EQ(manifest.at("config").at("search").at("population_size"), 20);
    std::istringstream hist(slurp(fs::path(o.out) / "history.jsonl"));
    std::string line;
    int members = 0;
    while (std::getline(hist, line)) members += nlohmann::json::parse(line).at("kind") == "member";
    EXPECT_LE(members, 120);
}

TEST(Search, SameSeedSameFiles) {
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
        SearchOptions o;
        o.evaluator = "synthetic";
        o.seed = 7;
        o.out = scratch_dir("same" + std::to_string(rep)).string();
        std::ostringstream out, err;
        ASSERT_EQ(cmd_search(o, out, err), 0) << err.str();
        const std::string h = slurp(fs::path(o.out) / "history.jsonl") + slurp(fs::path(o.out) / "summary.csv");
        if (rep == 0)
            first = h;
        else
            EXPECT_EQ(h, first);
    }
}

TEST(PredictorEval, TooLarge) {
    PredictorEvalOptions o;
    o.benchmark = synthetic_table().string();
    o.train_n = 15625;
    o.test_n = 10;
    std::ostringstream out, err;
    EXPECT_EQ(cmd_predictor_eval(o, out, err), 2);
    EXPECT_NE(err.str().find("overlap"), std::string::npos);
}

TEST(PredictorEval, SmallRun) {
    PredictorEvalOptions o;
    o.benchmark = synthetic_table().string();
    o.repeats = 3;
    o.forest.n_trees = 20;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_predictor_eval(o, out, err), 0) << err.str();
    EXPECT_EQ(out.str().rfind("predictor,mean_spearman", 0), 0u);
    EXPECT_NE(out.str().find("\nrandom_forest,"), std::string::npos);
    EXPECT_NE(out.str().find("\nlinear,"), std::string::npos);
}

TEST(Ingest, ValidWithCommasInGenotype) {
    const fs::path dir = scratch_dir("ingest");
    std::ofstream(dir / "raw.csv") << "genotype,dataset,val_acc,test_acc\n"
                                      "3,0,2,1,1,4,cifar10,91.5,92.0\n"
                                      "\"1,1,1,1,1,1\",cifar10,80,81\n";
    std::ostringstream out, err;
    ASSERT_EQ(cmd_ingest((dir / "raw.csv").string(), (dir / "out.jsonl").string(), false, "nb201", out, err), 0)
        << err.str();
    EXPECT_NE(out.str().find("entries 2"), std::string::npos);
    EXPECT_NE(out.str().find("rejected 0"), std::string::npos);
    const OracleTable t = load_benchmark((dir / "out.jsonl").string());
    EXPECT_EQ(t.size(), 2u);
}

TEST(Ingest, DuplicateAndLenient) {
    const fs::path dir = scratch_dir("ingest_dup");
    std::ofstream(dir / "raw.csv") << "genotype,dataset,val_acc,test_acc\n"
                                      "3,0,2,1,1,4,cifar10,91.5,92.0\n"
                                      "3,0,2,1,1,4,cifar10,90,90\n"
                                      "9,9,9,9,9,9,cifar10,1,1\n"
                                      "1,1,1,1,1,1,cifar10,80,81\n";
    std::ostringstream out, err;
    EXPECT_EQ(cmd_ingest((dir / "raw.csv").string(), (dir / "out.jsonl").string(), false, "nb201", out, err), 2);
    EXPECT_NE(err.str().find("line 3"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "out.jsonl"));

    std::ostringstream out2, err2;
    EXPECT_EQ(cmd_ingest((dir / "raw.csv").string(), (dir / "out.jsonl").string(), true, "nb201", out2, err2), 0);
    EXPECT_NE(out2.str().find("entries 2"), std::string::npos);
    EXPECT_NE(out2.str().find("rejected 2"), std::string::npos);
}

TEST(Replicate, EmptySeeds) {
    ReplicateOptions o;
    o.base.evaluator = "synthetic";
    o.base.out = scratch_dir("rep_empty").string();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_replicate(o, out, err), 1);
    EXPECT_THROW(parse_seed_list({"1,x"}), ConfigError);
    EXPECT_EQ(parse_seed_list({"1,4-6", "9"}), (std::vector<std::uint64_t>{1, 4, 5, 6, 9}));
}

TEST(Replicate, SingleSeedMatchesSearch) {
    ReplicateOptions o;
    o.base.benchmark = synthetic_table().string();
    o.base.out = scratch_dir("rep_one").string();
    o.seeds = {5};
    std::ostringstream out, err;
    ASSERT_EQ(cmd_replicate(o, out, err), 0) << err.str();

    SearchOptions s = o.base;
    s.seed = 5;
    s.out = scratch_dir("rep_one_ref").string();
    std::ostringstream sout, serr;
    ASSERT_EQ(cmd_search(s, sout, serr), 0);
    EXPECT_EQ(slurp(fs::path(o.base.out) / "seed_5" / "history.jsonl"), slurp(fs::path(s.out) / "history.jsonl"));

    // aggregate mean equals that run's best test accuracy, std 0
    const std::string line = sout.str().substr(0, sout.str().find('\n'));
    const std::string test = line.substr(line.find("test=") + 5);
    const std::string agg = slurp(fs::path(o.base.out) / "aggregate.csv");
    const auto row = agg.find("best_test,");
    ASSERT_NE(row, std::string::npos);
    std::stringstream cells(agg.substr(row + 10));
    double mean = 0, sd = -1;
    char comma = 0;
    cells >> mean >> comma >> sd;
    EXPECT_NEAR(mean, std::stod(test), 0.005);
    EXPECT_EQ(sd, 0.0);
}

TEST(Replicate, ParallelMatchesSequential) {
    ReplicateOptions o;
    o.base.evaluator = "synthetic";
    o.seeds = {1, 2, 3, 4};
    o.base.out = scratch_dir("rep_seq").string();
    std::ostringstream a, e1;
    ASSERT_EQ(cmd_replicate(o, a, e1), 0);
    o.jobs = 3;
    o.base.out = scratch_dir("rep_par").string();
    std::ostringstream b, e2;
    ASSERT_EQ(cmd_replicate(o, b, e2), 0);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Binary, ExitCodes) {
    std::string out;
    EXPECT_EQ(run_binary("enumerate 0,0,0,0,0,0", &out), 0);
    EXPECT_NE(out.find("count 24"), std::string::npos);
    EXPECT_EQ(run_binary("enumerate 0,0,q,0,0,0", &out), 1);
    EXPECT_EQ(run_binary("search --benchmark /nonexistent/nb201.jsonl --out " + scratch_dir("bin").string(), &out), 2);
    EXPECT_NE(out.find("/nonexistent/nb201.jsonl"), std::string::npos);
    EXPECT_EQ(run_binary("replicate --evaluator synthetic --out " + scratch_dir("bin2").string()), 1);
    EXPECT_EQ(run_binary("search --strategy nonsense --evaluator synthetic --out " + scratch_dir("bin3").string()), 1);
    EXPECT_EQ(run_binary("no-such-command"), 1);
    EXPECT_EQ(run_binary("search --evaluator synthetic --seed 3 --out " + scratch_dir("bin4").string(), &out), 0);
    EXPECT_EQ(out.rfind("best ", 0), 0u);
}

TEST(Binary, DataDirEnvironment) {
    const fs::path dir = synthetic_table().parent_path();
    const std::string env = "PRENAS_DATA_DIR=" + dir.string() + " ";
    const fs::path log = scratch_root() / "env.log";
    const std::string cmd = env + PRENAS_CLI + " search --seed 1 --out " + scratch_dir("env").string() + " > " +
                            log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 0) << slurp(log);
}

TEST(Configs, ShippedFilesParse) {
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(PRENAS_CONFIG_DIR)) {
        if (entry.path().extension() != ".ini") continue;
        SCOPED_TRACE(entry.path().string());
        EXPECT_NO_THROW(load_run_config(entry.path().string()));
        ++seen;
    }
    EXPECT_EQ(seen, 3);
}
