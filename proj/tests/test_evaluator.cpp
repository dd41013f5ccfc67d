#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "prenas/evaluator.hpp"
#include "prenas/evaluators.hpp"

using namespace prenas;
namespace fs = std::filesystem;

namespace {

const SearchSpace& nb201() { return space_ref(SpaceKind::NB201Like); }

fs::path write_temp(const std::string& name, const std::string& body) {
    const fs::path p = fs::temp_directory_path() / ("prenas_eval_" + name);
    std::ofstream(p) << body;
    return p;
}

std::string load_error(const fs::path& p) {
    try {
        load_benchmark(p.string());
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

const char* kThree =
    R"({"genotype":"3,0,2,1,1,4","dataset":"cifar10","val_acc":91.5,"test_acc":92.25})"
    "\n"
    R"({"genotype":"1,1,1,1,1,1","dataset":"cifar10","val_acc":80,"test_acc":81})"
    "\n"
    R"({"genotype":"3,0,2,1,1,4","dataset":"cifar100","val_acc":70,"test_acc":71})"
    "\n";

}  // namespace

TEST(Benchmark, LoadsThreeLines) {
    const OracleTable t = load_benchmark(write_temp("three.jsonl", kThree).string());
    EXPECT_EQ(t.size(), 3u);
    EXPECT_EQ(t.genotype_count(), 2u);
    EXPECT_EQ(t.keys("cifar10").size(), 2u);
    EXPECT_DOUBLE_EQ(t.find("3,0,2,1,1,4", "cifar10")->val_acc, 0.915);
    EXPECT_DOUBLE_EQ(t.find("3,0,2,1,1,4", "cifar10")->test_acc, 0.9225);
}

TEST(Benchmark, OutOfRange) {
    const auto p = write_temp("range.jsonl", std::string(kThree) +
                                                 R"({"genotype":"0,0,0,0,0,0","dataset":"cifar10","val_acc":101.0,"test_acc":1})" "\n");
    EXPECT_EQ(load_error(p), "accuracy out of range at line 4");
}

TEST(Benchmark, Malformed) {
    EXPECT_EQ(load_error(write_temp("bad.jsonl", "{not json\n")), "malformed JSON at line 1");
    EXPECT_NE(load_error(write_temp("nokey.jsonl", R"({"genotype":"0,0,0,0,0,0","dataset":"c","val_acc":1})" "\n"))
                  .find("test_acc"),
              std::string::npos);
    EXPECT_NE(load_error(write_temp("badg.jsonl", R"({"genotype":"9,0,0,0,0,0","dataset":"c","val_acc":1,"test_acc":1})" "\n"))
                  .find("line 1"),
              std::string::npos);
}

TEST(Benchmark, DuplicateAndMissing) {
    const std::string line = R"({"genotype":"0,0,0,0,0,0","dataset":"c","val_acc":1,"test_acc":1})" "\n";
    EXPECT_NE(load_error(write_temp("dup.jsonl", line + line)).find("duplicate"), std::string::npos);
    const std::string missing = (fs::temp_directory_path() / "prenas_no_such_file.jsonl").string();
    EXPECT_NE(load_error(missing).find(missing), std::string::npos);
}

TEST(Benchmark, RowRoundTrip) {
    BenchmarkRow row{"3,0,2,1,1,4", "cifar10", 91.5, 92.25};
    const BenchmarkRow back = parse_benchmark_json(to_benchmark_json(row), 1, nb201());
    EXPECT_EQ(back.genotype, row.genotype);
    EXPECT_EQ(back.dataset, row.dataset);
    EXPECT_EQ(back.val_pct, row.val_pct);
    EXPECT_EQ(back.test_pct, row.test_pct);
}

TEST(Oracle, Lookup) {
    const OracleTable t = load_benchmark(write_temp("three2.jsonl", kThree).string());
    const Genotype g = parse_string("3,0,2,1,1,4", nb201());
    const EvalResult r = oracle_eval(t, g, "cifar10");
    EXPECT_DOUBLE_EQ(r.val_acc, 0.915);
    EXPECT_DOUBLE_EQ(*r.test_acc, 0.9225);
    EXPECT_EQ(r.cost, 0.0);
    const EvalResult again = oracle_eval(t, g, "cifar10");
    EXPECT_EQ(again.val_acc, r.val_acc);
    EXPECT_THROW(oracle_eval(t, parse_string("4,4,4,4,4,4", nb201()), "cifar10"), MissingGenotype);
    EXPECT_THROW(oracle_eval(t, g, "imagenet"), MissingGenotype);
}

TEST(Synthetic, Deterministic) {
    LandscapeParams p;
    Rng rng = make_rng(1);
    for (int i = 0; i < 50; ++i) {
        const Genotype g = random_genotype(nb201(), rng);
        const EvalResult a = synthetic_eval(g, p, 1), b = synthetic_eval(g, p, 2);
        EXPECT_EQ(a.val_acc, b.val_acc);
        EXPECT_EQ(*a.test_acc, *b.test_acc);
        EXPECT_GE(a.val_acc, p.floor);
        EXPECT_LE(a.val_acc, p.ceiling);
    }
}

TEST(Synthetic, AdditiveWithoutInteractions) {
    // With no pairwise terms the logit is a sum of per-(edge, op) scores, so
    // swapping one edge's op shifts every genotype by the same amount and a
    // larger score on that edge means higher fitness.
    LandscapeParams p;
    p.interaction_scale = 0.0;
    Rng rng = make_rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const Genotype a = random_genotype(nb201(), rng);
        const Genotype b = random_genotype(nb201(), rng);
        auto with_edge0 = [](const Genotype& g, int op) {
            std::vector<Edge> e(g.edges().begin(), g.edges().end());
            e[0].op = op;
            return Genotype(g.space(), e);
        };
        const double da = landscape_logit(with_edge0(a, 3), p) - landscape_logit(with_edge0(a, 1), p);
        const double db = landscape_logit(with_edge0(b, 3), p) - landscape_logit(with_edge0(b, 1), p);
        EXPECT_NEAR(da, db, 1e-12);
        const double fa = synthetic_eval(with_edge0(a, 3), p).val_acc - synthetic_eval(with_edge0(a, 1), p).val_acc;
        EXPECT_EQ(da > 0, fa > 0);
    }
}

TEST(Synthetic, UniqueArgmaxOverNb201) {
    LandscapeParams p;
    double best = -1;
    int count = 0;
    std::set<double> values;
    for (const auto& g : enumerate_nb201()) {
        const double v = synthetic_eval(g, p).val_acc;
        values.insert(v);
        if (v > best) {
            best = v;
            count = 1;
        } else if (v == best) {
            ++count;
        }
    }
    EXPECT_EQ(count, 1);
    EXPECT_GT(values.size(), 15000u);
}

TEST(Synthetic, Noise) {
    LandscapeParams p;
    p.noise_sigma = 0.01;
    const Genotype g = parse_string("3,0,2,1,1,4", nb201());
    EXPECT_EQ(synthetic_eval(g, p, 5).val_acc, synthetic_eval(g, p, 5).val_acc);
    EXPECT_NE(synthetic_eval(g, p, 5).val_acc, synthetic_eval(g, p, 6).val_acc);
}

TEST(Evaluators, OracleAndSynthetic) {
    auto table = std::make_shared<const OracleTable>(load_benchmark(write_temp("three3.jsonl", kThree).string()));
    OracleEvaluator oracle(table, "cifar10");
    EXPECT_DOUBLE_EQ(oracle.evaluate(parse_string("1,1,1,1,1,1", nb201()), 0).val_acc, 0.80);
    EXPECT_EQ(oracle.child_kind(), EvalKind::OracleQuery);
    SyntheticEvaluator synth({});
    const Genotype g = parse_string("1,1,1,1,1,1", nb201());
    EXPECT_EQ(synth.evaluate(g, 0).val_acc, synthetic_eval(g, {}).val_acc);
}
