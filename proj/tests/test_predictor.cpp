#include <gtest/gtest.h>

#include <set>

#include "prenas/predictor.hpp"
#include "prenas/stats.hpp"

using namespace prenas;

namespace {

const SearchSpace& nb201() { return space_ref(SpaceKind::NB201Like); }
const SearchSpace& darts() { return space_ref(SpaceKind::DartsLike); }

ForestParams single_tree() {
    ForestParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.max_features_per_split = 0;
    return p;
}

}  // namespace

TEST(Features, AllNoneLayout) {
    const FeatureRow row = featurize(parse_string("0,0,0,0,0,0", nb201()));
    ASSERT_EQ(row.size(), 30u);
    for (std::size_t i = 0; i < row.size(); ++i) EXPECT_EQ(row[i], i % 5 == 0 ? 1.0 : 0.0) << i;
}

TEST(Features, Nb201Injective) {
    std::set<FeatureRow> rows;
    for (const auto& g : enumerate_nb201()) rows.insert(featurize(g));
    EXPECT_EQ(rows.size(), 15625u);
}

TEST(Features, DartsInjectiveAndSized) {
    Rng rng = make_rng(1);
    std::set<std::string> keys;
    std::set<FeatureRow> rows;
    for (int i = 0; i < 5000; ++i) {
        const Genotype g = random_genotype(darts(), rng);
        const FeatureRow r = featurize(g);
        ASSERT_EQ(r.size(), feature_count(darts(), FeatureMode::OneHot));
        keys.insert(canonical_string(g));
        rows.insert(r);
    }
    EXPECT_EQ(keys.size(), rows.size());
}

TEST(Forest, TwoPointRecall) {
    TrainingSet data;
    const Genotype a = parse_string("1,1,1,1,1,1", nb201());
    const Genotype b = parse_string("1,1,1,1,1,3", nb201());
    data.add(a, 0.5);
    data.add(b, 0.9);
    const Forest f = fit_forest(data, single_tree());
    EXPECT_EQ(predict(f, a), 0.5);
    EXPECT_EQ(predict(f, b), 0.9);
}

TEST(Forest, ConstantTargets) {
    Rng rng = make_rng(2);
    TrainingSet data;
    for (int i = 0; i < 40; ++i) data.add(random_genotype(nb201(), rng), 0.7);
    ForestParams p;
    p.seed = 3;
    const Forest f = fit_forest(data, p);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(predict(f, random_genotype(nb201(), rng)), 0.7);
}

TEST(Forest, PredictionsWithinTargetRange) {
    Rng rng = make_rng(4);
    std::uniform_real_distribution<double> u(0.80, 0.95);
    TrainingSet data;
    for (int i = 0; i < 60; ++i) data.add(random_genotype(darts(), rng), u(rng));
    ForestParams p;
    p.seed = 5;
    const Forest f = fit_forest(data, p);
    const double lo = *std::min_element(data.targets.begin(), data.targets.end());
    const double hi = *std::max_element(data.targets.begin(), data.targets.end());
    for (int i = 0; i < 500; ++i) {
        const double y = predict(f, random_genotype(darts(), rng));
        EXPECT_GE(y, lo);
        EXPECT_LE(y, hi);
    }
}

TEST(Forest, MemorisesDistinctRows) {
    Rng rng = make_rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TrainingSet data;
    std::set<std::string> seen;
    std::vector<Genotype> gs;
    while (gs.size() < 150) {
        Genotype g = random_genotype(nb201(), rng);
        if (!seen.insert(canonical_string(g)).second) continue;
        data.add(g, u(rng));
        gs.push_back(g);
    }
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        ForestParams p = single_tree();
        p.seed = seed;
        const Forest f = fit_forest(data, p);
        for (std::size_t i = 0; i < gs.size(); ++i) ASSERT_EQ(predict(f, gs[i]), data.targets[i]);
    }
}

TEST(Forest, XorNeedsZeroGainSplit) {
    TrainingSet data;
    data.add(FeatureRow{0, 0}, 0.0);
    data.add(FeatureRow{1, 1}, 0.0);
    data.add(FeatureRow{0, 1}, 1.0);
    data.add(FeatureRow{1, 0}, 1.0);
    const Forest f = fit_forest(data, single_tree());
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(f.predict_row(data.rows[i]), data.targets[i]);
}

TEST(Forest, Deterministic) {
    Rng rng = make_rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TrainingSet data;
    for (int i = 0; i < 80; ++i) data.add(random_genotype(nb201(), rng), u(rng));
    ForestParams p;
    p.seed = 11;
    const Forest a = fit_forest(data, p), b = fit_forest(data, p);
    for (int i = 0; i < 200; ++i) {
        const Genotype g = random_genotype(nb201(), rng);
        EXPECT_EQ(predict(a, g), predict(b, g));
    }
}

TEST(Forest, DominantFeatureRanking) {
    // target driven by the op on edge 5, plus a weaker edge-0 effect
    Rng rng = make_rng(8);
    auto target = [](const Genotype& g) { return 0.5 + 0.08 * g.edge(5).op + 0.01 * g.edge(0).op; };
    TrainingSet data;
    for (int i = 0; i < 100; ++i) {
        const Genotype g = random_genotype(nb201(), rng);
        data.add(g, target(g));
    }
    ForestParams p;
    p.seed = 9;
    const Forest f = fit_forest(data, p);
    std::vector<double> pred, truth;
    for (int i = 0; i < 200; ++i) {
        const Genotype g = random_genotype(nb201(), rng);
        pred.push_back(predict(f, g));
        truth.push_back(target(g));
    }
    EXPECT_GT(*spearman(pred, truth), 0.9);
}

TEST(Forest, Errors) {
    TrainingSet empty;
    EXPECT_THROW(fit_forest(empty, {}), std::invalid_argument);
    TrainingSet data;
    data.add(parse_string("1,1,1,1,1,1", nb201()), 1.5);
    EXPECT_THROW(fit_forest(data, {}), std::invalid_argument);
    TrainingSet ok;
    ok.add(parse_string("1,1,1,1,1,1", nb201()), 0.5);
    const Forest f = fit_forest(ok, {});
    Rng rng = make_rng(1);
    EXPECT_THROW(predict(f, random_genotype(darts(), rng)), std::invalid_argument);
}

TEST(Linear, RecoversExactTarget) {
    Rng rng = make_rng(10);
    std::normal_distribution<double> n(0.0, 1.0);
    TrainingSet data;
    for (int i = 0; i < 50; ++i) {
        FeatureRow r(5);
        for (auto& v : r) v = n(rng);
        const double y = 0.5 + 0.1 * r[0];
        data.add(std::move(r), y);
    }
    const LinearModel m = fit_linear(data);
    EXPECT_NEAR(m.intercept, 0.5, 1e-8);
    EXPECT_NEAR(m.coef[0], 0.1, 1e-8);
    for (int j = 1; j < 5; ++j) EXPECT_NEAR(m.coef[j], 0.0, 1e-8);
    for (std::size_t i = 0; i < data.size(); ++i) EXPECT_NEAR(m.predict_row(data.rows[i]), data.targets[i], 1e-8);
}

TEST(Linear, IdenticalRowsGiveMean) {
    TrainingSet data;
    const Genotype g = parse_string("2,2,2,2,2,2", nb201());
    for (double y : {0.2, 0.4, 0.9}) data.add(g, y);
    const LinearModel m = fit_linear(data);
    EXPECT_NEAR(predict_linear(m, g), 0.5, 1e-12);
}

TEST(Linear, OneHotRankDeficient) {
    Rng rng = make_rng(12);
    TrainingSet data;
    auto target = [](const Genotype& g) { return 0.3 + 0.05 * g.edge(2).op; };
    for (int i = 0; i < 100; ++i) {
        const Genotype g = random_genotype(nb201(), rng);
        data.add(g, target(g));
    }
    const LinearModel m = fit_linear(data);
    for (int i = 0; i < 50; ++i) {
        const Genotype g = random_genotype(nb201(), rng);
        EXPECT_NEAR(predict_linear(m, g), target(g), 1e-6);
    }
}
