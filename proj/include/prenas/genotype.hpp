/**
 * @file genotype.hpp
 * @brief Cell search spaces, genotypes and their matrix/string encodings.
 *
 * Two cell spaces are provided:
 *
 *  - NB201Like: 4 nodes (input, two intermediates, output), a complete DAG of
 *    6 edges, each carrying one of 5 ops (none included). 5^6 = 15625 cells.
 *  - DartsLike: 2 inputs, 4 intermediates and an implicit output node. Each
 *    intermediate has exactly two incoming edges from earlier nodes, each
 *    carrying one of the 7 non-none ops.
 *
 * Genotype edges are always held in canonical order, sorted by
 * (dst, src, op). For NB201Like this is the order
 * (0,1) (0,2) (1,2) (0,3) (1,3) (2,3), which is also the order of the ops in
 * the canonical string.
 */

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prenas/error.hpp"
#include "prenas/rng.hpp"

namespace prenas {

enum class SpaceKind { NB201Like, DartsLike };
enum class InDegreeRule { Complete, FixedTwo };

/// Whether op mutation may place `none` on a DartsLike edge.
enum class NonePolicy { Exclude, Allow };

enum class OpClass { None, Skip, Conv, Pool };

struct SearchSpace {
    SpaceKind kind = SpaceKind::NB201Like;
    int num_inputs = 1;
    int num_intermediates = 2;
    std::vector<std::string> ops;
    InDegreeRule in_degree_rule = InDegreeRule::Complete;
    NonePolicy none_policy = NonePolicy::Allow;

    int num_ops() const { return static_cast<int>(ops.size()); }
    int num_nodes() const { return num_inputs + num_intermediates + 1; }
    int output_node() const { return num_nodes() - 1; }
    bool is_input(int node) const { return node >= 0 && node < num_inputs; }
    bool is_intermediate(int node) const {
        return node >= num_inputs && node < num_inputs + num_intermediates;
    }

    int num_edges() const {
        if (in_degree_rule == InDegreeRule::Complete) return num_nodes() * (num_nodes() - 1) / 2;
        return 2 * num_intermediates;
    }

    int none_op() const {
        auto it = std::find(ops.begin(), ops.end(), "none");
        return static_cast<int>(it - ops.begin());
    }

    bool none_on_edges() const {
        return kind == SpaceKind::NB201Like || none_policy == NonePolicy::Allow;
    }

    bool op_allowed(int op) const {
        if (op < 0 || op >= num_ops()) return false;
        return none_on_edges() || op != none_op();
    }

    /// Ops an edge may carry, in vocabulary order.
    std::vector<int> edge_ops() const {
        std::vector<int> out;
        for (int op = 0; op < num_ops(); ++op)
            if (op_allowed(op)) out.push_back(op);
        return out;
    }

    OpClass op_class(int op) const {
        const std::string& name = ops.at(static_cast<std::size_t>(op));
        if (name == "none") return OpClass::None;
        if (name.starts_with("skip")) return OpClass::Skip;
        if (name.find("pool") != std::string::npos) return OpClass::Pool;
        return OpClass::Conv;
    }

    /// Number of legal predecessors of a node (DartsLike intermediates).
    int num_predecessors(int node) const { return node; }

    /// Total number of distinct cells.
    double size() const {
        const double per_edge = static_cast<double>(edge_ops().size());
        if (in_degree_rule == InDegreeRule::Complete) return std::pow(per_edge, num_edges());
        double pairs = 1.0;
        for (int i = 1; i <= num_intermediates; ++i) pairs *= (i + 1) * i / 2.0;
        return pairs * std::pow(per_edge, num_edges());
    }

    std::string name() const {
        std::string n = kind == SpaceKind::NB201Like ? "nb201" : "darts";
        if (kind == SpaceKind::DartsLike && none_policy == NonePolicy::Allow) n += "+none";
        return n;
    }

    friend bool operator==(const SearchSpace& a, const SearchSpace& b) {
        return a.kind == b.kind && a.none_policy == b.none_policy;
    }
};

inline SearchSpace make_space(SpaceKind kind, NonePolicy policy = NonePolicy::Exclude) {
    SearchSpace s;
    s.kind = kind;
    if (kind == SpaceKind::NB201Like) {
        s.num_inputs = 1;
        s.num_intermediates = 2;
        s.ops = {"none", "skip_connect", "conv_1x1", "conv_3x3", "avg_pool_3x3"};
        s.in_degree_rule = InDegreeRule::Complete;
        s.none_policy = NonePolicy::Allow;
    } else {
        s.num_inputs = 2;
        s.num_intermediates = 4;
        s.ops = {"sep_conv_3x3", "sep_conv_5x5", "dil_conv_3x3", "dil_conv_5x5",
                 "max_pool_3x3", "avg_pool_3x3", "skip_connect", "none"};
        s.in_degree_rule = InDegreeRule::FixedTwo;
        s.none_policy = policy;
    }
    return s;
}

/// Process-lifetime instance of a space. Genotypes point at these.
inline const SearchSpace& space_ref(SpaceKind kind, NonePolicy policy = NonePolicy::Exclude) {
    static const std::array<SearchSpace, 3> spaces{
        make_space(SpaceKind::NB201Like),
        make_space(SpaceKind::DartsLike, NonePolicy::Exclude),
        make_space(SpaceKind::DartsLike, NonePolicy::Allow),
    };
    if (kind == SpaceKind::NB201Like) return spaces[0];
    return policy == NonePolicy::Exclude ? spaces[1] : spaces[2];
}

inline const SearchSpace& space_ref(const SearchSpace& s) {
    return space_ref(s.kind, s.none_policy);
}

inline const SearchSpace& space_from_name(std::string_view name) {
    if (name == "nb201") return space_ref(SpaceKind::NB201Like);
    if (name == "darts") return space_ref(SpaceKind::DartsLike);
    if (name == "darts+none") return space_ref(SpaceKind::DartsLike, NonePolicy::Allow);
    throw ConfigError("unknown search space '" + std::string(name) + "' (expected nb201, darts or darts+none)");
}

struct Edge {
    int src = 0;
    int dst = 0;
    int op = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Canonical edge order.
inline bool edge_less(const Edge& a, const Edge& b) {
    if (a.dst != b.dst) return a.dst < b.dst;
    if (a.src != b.src) return a.src < b.src;
    return a.op < b.op;
}

class Genotype {
public:
    /// Empty NB201Like genotype; invalid until assigned.
    Genotype() : space_(&space_ref(SpaceKind::NB201Like)) {}

    Genotype(const SearchSpace& space, std::vector<Edge> edges)
        : space_(&space_ref(space)), edges_(std::move(edges)) {
        std::sort(edges_.begin(), edges_.end(), edge_less);
    }

    const SearchSpace& space() const { return *space_; }
    std::span<const Edge> edges() const { return edges_; }
    std::size_t size() const { return edges_.size(); }
    const Edge& edge(std::size_t i) const { return edges_.at(i); }

    friend bool operator==(const Genotype& a, const Genotype& b) {
        return *a.space_ == *b.space_ && a.edges_ == b.edges_;
    }

private:
    const SearchSpace* space_;
    std::vector<Edge> edges_;
};

/// All violated invariants; empty iff the genotype is valid.
inline std::vector<std::string> validate(const Genotype& g) {
    std::vector<std::string> v;
    const SearchSpace& s = g.space();
    if (s.kind != SpaceKind::NB201Like && s.kind != SpaceKind::DartsLike) {
        v.push_back("unknown search space");
        return v;
    }
    const int n = s.num_nodes();
    if (static_cast<int>(g.size()) != s.num_edges())
        v.push_back("edge count " + std::to_string(g.size()) + " ≠ " + std::to_string(s.num_edges()));

    std::vector<int> in_degree(static_cast<std::size_t>(n), 0);
    for (const Edge& e : g.edges()) {
        const std::string tag = "edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ")";
        if (e.src < 0 || e.dst >= n || e.src >= e.dst) {
            v.push_back(tag + " is not a forward edge");
            continue;
        }
        if (!s.op_allowed(e.op)) v.push_back(tag + " op " + std::to_string(e.op) + " not allowed");
        ++in_degree[static_cast<std::size_t>(e.dst)];
        if (s.in_degree_rule == InDegreeRule::FixedTwo && !s.is_intermediate(e.dst))
            v.push_back(tag + " targets a non-intermediate node");
    }

    if (s.in_degree_rule == InDegreeRule::Complete) {
        std::vector<int> seen(static_cast<std::size_t>(n * n), 0);
        for (const Edge& e : g.edges())
            if (e.src >= 0 && e.dst < n && e.src < e.dst) ++seen[static_cast<std::size_t>(e.src * n + e.dst)];
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                int c = seen[static_cast<std::size_t>(i * n + j)];
                if (c != 1)
                    v.push_back("node pair (" + std::to_string(i) + "," + std::to_string(j) + ") has " +
                                std::to_string(c) + " edges");
            }
    } else {
        for (int node = s.num_inputs; node < s.num_inputs + s.num_intermediates; ++node) {
            int d = in_degree[static_cast<std::size_t>(node)];
            if (d != 2)
                v.push_back("node " + std::to_string(node) + " in-degree " + std::to_string(d) + " ≠ 2");
        }
    }
    if (!std::is_sorted(g.edges().begin(), g.edges().end(), edge_less))
        v.push_back("edges not in canonical order");
    return v;
}

inline bool is_valid(const Genotype& g) { return validate(g).empty(); }

inline void require_valid(const Genotype& g) {
    auto v = validate(g);
    if (v.empty()) return;
    std::string msg = "invalid genotype:";
    for (const auto& s : v) msg += " " + s + ";";
    throw ParseError(msg);
}

// ---------------------------------------------------------------------------
// Adjacency matrix

/// Strictly upper-triangular op matrix, 0 = no edge.
///
/// NB201Like cells hold the op index directly (none == 0 == no edge).
/// DartsLike cells hold op+1. When both incoming edges of a node share the
/// same predecessor, the cell packs both as (lo+1) + 9*(hi+1) with lo <= hi.
struct AdjMatrix {
    int dim = 0;
    std::vector<int> cells;

    AdjMatrix() = default;
    explicit AdjMatrix(int d) : dim(d), cells(static_cast<std::size_t>(d * d), 0) {}

    int at(int i, int j) const { return cells.at(static_cast<std::size_t>(i * dim + j)); }
    int& at(int i, int j) { return cells.at(static_cast<std::size_t>(i * dim + j)); }

    friend bool operator==(const AdjMatrix&, const AdjMatrix&) = default;
};

inline constexpr int kPackBase = 9;

inline AdjMatrix to_matrix(const Genotype& g) {
    const SearchSpace& s = g.space();
    AdjMatrix m(s.num_nodes());
    if (s.kind == SpaceKind::NB201Like) {
        for (const Edge& e : g.edges()) m.at(e.src, e.dst) = e.op;
        return m;
    }
    for (const Edge& e : g.edges()) {
        int& cell = m.at(e.src, e.dst);
        if (cell == 0)
            cell = e.op + 1;
        else
            cell = cell + kPackBase * (e.op + 1);  // canonical order puts the lower op first
    }
    return m;
}

inline Genotype from_matrix(const AdjMatrix& m, const SearchSpace& space) {
    const SearchSpace& s = space_ref(space);
    if (m.dim != s.num_nodes())
        throw ParseError("matrix dimension " + std::to_string(m.dim) + " does not match space (" +
                         std::to_string(s.num_nodes()) + ")");
    if (static_cast<int>(m.cells.size()) != m.dim * m.dim) throw ParseError("matrix cell count mismatch");
    for (int i = 0; i < m.dim; ++i)
        for (int j = 0; j <= i; ++j)
            if (m.at(i, j) != 0)
                throw ParseError("nonzero cell at (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") below the diagonal");

    std::vector<Edge> edges;
    auto check_op = [&](int op, int i, int j) {
        if (!s.op_allowed(op))
            throw ParseError("op index " + std::to_string(op) + " out of vocabulary at (" + std::to_string(i) +
                             "," + std::to_string(j) + ")");
    };
    for (int i = 0; i < m.dim; ++i)
        for (int j = i + 1; j < m.dim; ++j) {
            const int cell = m.at(i, j);
            if (s.kind == SpaceKind::NB201Like) {
                check_op(cell, i, j);
                edges.push_back({i, j, cell});
                continue;
            }
            if (cell == 0) continue;
            if (cell < 0) throw ParseError("negative matrix cell");
            const int lo = cell % kPackBase - 1;
            const int hi = cell / kPackBase - 1;
            if (lo < 0) throw ParseError("malformed packed cell " + std::to_string(cell));
            check_op(lo, i, j);
            edges.push_back({i, j, lo});
            if (hi >= 0) {
                check_op(hi, i, j);
                if (hi < lo) throw ParseError("packed cell ops out of order");
                edges.push_back({i, j, hi});
            }
        }
    Genotype g(s, std::move(edges));
    require_valid(g);
    return g;
}

// ---------------------------------------------------------------------------
// Canonical string

inline std::string canonical_string(const Genotype& g) {
    const SearchSpace& s = g.space();
    std::string out;
    if (s.kind == SpaceKind::NB201Like) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(g.edge(i).op);
        }
        return out;
    }
    int current = -1;
    for (const Edge& e : g.edges()) {
        if (current != -1) out += (e.dst == current) ? ',' : '|';
        current = e.dst;
        out += std::to_string(e.src) + ':' + std::to_string(e.op);
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

inline int parse_int(std::string_view token) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size())
        throw ParseError("malformed token '" + std::string(token) + "'");
    return value;
}

}  // namespace detail

inline Genotype parse_string(std::string_view text, const SearchSpace& space) {
    const SearchSpace& s = space_ref(space);
    if (text.empty()) throw ParseError("empty genotype string");
    std::vector<Edge> edges;
    if (s.kind == SpaceKind::NB201Like) {
        auto tokens = detail::split(text, ',');
        if (static_cast<int>(tokens.size()) != s.num_edges())
            throw ParseError("expected " + std::to_string(s.num_edges()) + " ops, got " +
                             std::to_string(tokens.size()));
        static constexpr std::array<std::pair<int, int>, 6> order{{{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 3}}};
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const int op = detail::parse_int(tokens[i]);
            if (!s.op_allowed(op))
                throw ParseError("op index " + std::to_string(op) + " out of range in token '" +
                                 std::string(tokens[i]) + "'");
            edges.push_back({order[i].first, order[i].second, op});
        }
    } else {
        auto nodes = detail::split(text, '|');
        if (static_cast<int>(nodes.size()) != s.num_intermediates)
            throw ParseError("expected " + std::to_string(s.num_intermediates) + " nodes, got " +
                             std::to_string(nodes.size()));
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const int dst = s.num_inputs + static_cast<int>(k);
            for (auto pair : detail::split(nodes[k], ',')) {
                auto colon = pair.find(':');
                if (colon == std::string_view::npos)
                    throw ParseError("malformed token '" + std::string(pair) + "' (expected src:op)");
                const int src = detail::parse_int(pair.substr(0, colon));
                const int op = detail::parse_int(pair.substr(colon + 1));
                if (src < 0 || src >= dst)
                    throw ParseError("source " + std::to_string(src) + " out of range in token '" +
                                     std::string(pair) + "'");
                if (!s.op_allowed(op))
                    throw ParseError("op index " + std::to_string(op) + " out of range in token '" +
                                     std::string(pair) + "'");
                edges.push_back({src, dst, op});
            }
        }
    }
    Genotype g(s, std::move(edges));
    require_valid(g);
    return g;
}

// ---------------------------------------------------------------------------
// Generation

inline Genotype random_genotype(const SearchSpace& space, Rng& rng) {
    const SearchSpace& s = space_ref(space);
    const std::vector<int> ops = s.edge_ops();
    std::uniform_int_distribution<std::size_t> pick_op(0, ops.size() - 1);
    std::vector<Edge> edges;
    if (s.kind == SpaceKind::NB201Like) {
        for (int j = 1; j < s.num_nodes(); ++j)
            for (int i = 0; i < j; ++i) edges.push_back({i, j, 0});
        std::sort(edges.begin(), edges.end(), edge_less);
        for (Edge& e : edges) e.op = ops[pick_op(rng)];
        return Genotype(s, std::move(edges));
    }
    for (int k = 0; k < s.num_intermediates; ++k) {
        const int dst = s.num_inputs + k;
        const int preds = dst;
        // Uniform over unordered pairs of distinct predecessors.
        int a = std::uniform_int_distribution<int>(0, preds - 1)(rng);
        int b = std::uniform_int_distribution<int>(0, preds - 2)(rng);
        if (b >= a) ++b;
        if (b < a) std::swap(a, b);
        const int op_a = ops[pick_op(rng)];
        const int op_b = ops[pick_op(rng)];
        edges.push_back({a, dst, op_a});
        edges.push_back({b, dst, op_b});
    }
    return Genotype(s, std::move(edges));
}

/// Every NB201Like cell, in lexicographic order of the op string.
inline std::vector<Genotype> enumerate_nb201() {
    const SearchSpace& s = space_ref(SpaceKind::NB201Like);
    std::vector<Genotype> out;
    out.reserve(15625);
    static constexpr std::array<std::pair<int, int>, 6> order{{{0, 1}, {0, 2}, {1, 2}, {0, 3}, {1, 3}, {2, 3}}};
    for (int code = 0; code < 15625; ++code) {
        std::vector<Edge> edges;
        int rest = code;
        std::array<int, 6> ops{};
        for (int i = 5; i >= 0; --i) {
            ops[static_cast<std::size_t>(i)] = rest % 5;
            rest /= 5;
        }
        for (std::size_t i = 0; i < 6; ++i) edges.push_back({order[i].first, order[i].second, ops[i]});
        out.emplace_back(s, std::move(edges));
    }
    return out;
}

}  // namespace prenas
