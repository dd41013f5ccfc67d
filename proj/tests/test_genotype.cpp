#include <gtest/gtest.h>

#include <set>
#include <string>

#include "prenas/genotype.hpp"
#include "prenas/rng.hpp"

using namespace prenas;

namespace {

const SearchSpace& nb201() { return space_ref(SpaceKind::NB201Like); }
const SearchSpace& darts() { return space_ref(SpaceKind::DartsLike); }

Genotype example_nb201() {
    return Genotype(nb201(), {{0, 1, 3}, {0, 2, 0}, {1, 2, 2}, {0, 3, 1}, {1, 3, 1}, {2, 3, 4}});
}

bool has_message(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& m : v)
        if (m.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(Space, Nb201Shape) {
    EXPECT_EQ(nb201().num_ops(), 5);
    EXPECT_EQ(nb201().num_edges(), 6);
    EXPECT_EQ(nb201().size(), 15625.0);
    EXPECT_EQ(nb201().name(), "nb201");
}

TEST(Space, DartsShape) {
    EXPECT_EQ(darts().num_ops(), 8);
    EXPECT_EQ(darts().num_intermediates, 4);
    EXPECT_EQ(darts().num_edges(), 8);
    // 1*3*6*10 predecessor pairs times 7^8 op choices
    EXPECT_DOUBLE_EQ(darts().size(), 180.0 * 5764801.0);
    EXPECT_NEAR(darts().size(), 1.04e9, 0.01e9);
}

TEST(Space, FromName) {
    EXPECT_EQ(&space_from_name("nb201"), &nb201());
    EXPECT_EQ(&space_from_name("darts"), &darts());
    EXPECT_EQ(space_from_name("darts+none").none_policy, NonePolicy::Allow);
    EXPECT_THROW(space_from_name("nope"), std::exception);
}

TEST(Validate, Nb201Ok) { EXPECT_TRUE(validate(example_nb201()).empty()); }

TEST(Validate, EdgeCount) {
    Genotype g(nb201(), {{0, 1, 3}, {0, 2, 0}, {1, 2, 2}, {0, 3, 1}, {1, 3, 1}});
    EXPECT_TRUE(has_message(validate(g), "edge count 5 ≠ 6"));
}

TEST(Validate, DartsInDegree) {
    Genotype g(darts(), {{0, 2, 0}, {1, 2, 0}, {0, 3, 0}, {1, 3, 0}, {2, 3, 0}, {0, 4, 0}, {0, 5, 0}, {1, 5, 0}});
    const auto v = validate(g);
    EXPECT_TRUE(has_message(v, "in-degree 3 ≠ 2"));
    EXPECT_TRUE(has_message(v, "in-degree 1 ≠ 2"));
}

TEST(Validate, DartsRejectsNoneUnderExclude) {
    Rng rng = make_rng(1);
    Genotype g = random_genotype(darts(), rng);
    std::vector<Edge> edges(g.edges().begin(), g.edges().end());
    edges[0].op = darts().none_op();
    EXPECT_FALSE(is_valid(Genotype(darts(), edges)));
}

TEST(Matrix, ExampleCells) {
    const AdjMatrix m = to_matrix(example_nb201());
    ASSERT_EQ(m.dim, 4);
    EXPECT_EQ(m.at(0, 1), 3);
    EXPECT_EQ(m.at(0, 2), 0);
    EXPECT_EQ(m.at(1, 2), 2);
    EXPECT_EQ(m.at(0, 3), 1);
    EXPECT_EQ(m.at(1, 3), 1);
    EXPECT_EQ(m.at(2, 3), 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j <= i; ++j) EXPECT_EQ(m.at(i, j), 0);
}

TEST(Matrix, AllNone) {
    const Genotype g = parse_string("0,0,0,0,0,0", nb201());
    const AdjMatrix m = to_matrix(g);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) EXPECT_EQ(m.at(i, j), nb201().none_op());
    EXPECT_EQ(from_matrix(m, nb201()), g);
}

TEST(Matrix, DartsRoundTrip) {
    Rng rng = make_rng(99);
    for (int i = 0; i < 10000; ++i) {
        const Genotype g = random_genotype(darts(), rng);
        ASSERT_EQ(from_matrix(to_matrix(g), darts()), g) << canonical_string(g);
    }
}

TEST(Matrix, SharedPredecessorPacks) {
    // node 2 fed twice by node 0 (ops 1 and 4)
    Genotype g(darts(), {{0, 2, 4}, {0, 2, 1}, {0, 3, 0}, {1, 3, 0}, {2, 4, 0}, {3, 4, 0}, {0, 5, 0}, {4, 5, 0}});
    ASSERT_TRUE(is_valid(g));
    const AdjMatrix m = to_matrix(g);
    EXPECT_EQ(m.at(0, 2), (1 + 1) + kPackBase * (4 + 1));
    EXPECT_EQ(from_matrix(m, darts()), g);
}

TEST(Matrix, RejectsLowerTriangle) {
    AdjMatrix m = to_matrix(example_nb201());
    m.at(3, 0) = 1;
    EXPECT_THROW(from_matrix(m, nb201()), ParseError);
}

TEST(String, ExampleRoundTrip) {
    const Genotype g = example_nb201();
    EXPECT_EQ(canonical_string(g), "3,0,2,1,1,4");
    EXPECT_EQ(parse_string("3,0,2,1,1,4", nb201()), g);
}

TEST(String, Errors) {
    auto message = [](const std::string& text, const SearchSpace& s) {
        try {
            parse_string(text, s);
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("", nb201()).find("empty genotype string"), std::string::npos);
    EXPECT_NE(message("3,0,x,1,1,4", nb201()).find("'x'"), std::string::npos);
    EXPECT_NE(message("3,0,2,1,1", nb201()).find("expected 6"), std::string::npos);
    EXPECT_NE(message("3,0,2,1,1,5", nb201()).find("out of range"), std::string::npos);
    EXPECT_FALSE(message("garbage", darts()).empty());
}

TEST(String, DartsRoundTrip) {
    Rng rng = make_rng(5);
    for (int i = 0; i < 2000; ++i) {
        const Genotype g = random_genotype(darts(), rng);
        ASSERT_EQ(parse_string(canonical_string(g), darts()), g);
    }
}

TEST(Enumerate, Nb201Exhaustive) {
    const auto all = enumerate_nb201();
    ASSERT_EQ(all.size(), 15625u);
    std::set<std::string> strings;
    std::set<std::vector<int>> matrices;
    for (const auto& g : all) {
        ASSERT_TRUE(is_valid(g));
        const auto s = canonical_string(g);
        strings.insert(s);
        matrices.insert(to_matrix(g).cells);
        ASSERT_EQ(parse_string(s, nb201()), g);
        ASSERT_EQ(from_matrix(to_matrix(g), nb201()), g);
    }
    EXPECT_EQ(strings.size(), 15625u);
    EXPECT_EQ(matrices.size(), 15625u);
}

TEST(Random, Deterministic) {
    Rng a = make_rng(42), b = make_rng(42);
    EXPECT_EQ(random_genotype(nb201(), a), random_genotype(nb201(), b));
}

TEST(Random, Nb201OpFrequencies) {
    Rng rng = make_rng(2024);
    std::array<std::array<int, 5>, 6> counts{};
    constexpr int n = 10000;
    for (int i = 0; i < n; ++i) {
        const Genotype g = random_genotype(nb201(), rng);
        for (std::size_t e = 0; e < 6; ++e) ++counts[e][static_cast<std::size_t>(g.edge(e).op)];
    }
    for (const auto& per_edge : counts)
        for (int c : per_edge) EXPECT_NEAR(c / static_cast<double>(n), 0.2, 0.02);
}

TEST(Random, DartsAlwaysValid) {
    Rng rng = make_rng(3);
    for (int i = 0; i < 10000; ++i) ASSERT_TRUE(is_valid(random_genotype(darts(), rng)));
}
