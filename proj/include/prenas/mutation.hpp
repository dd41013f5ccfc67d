/**
 * @file mutation.hpp
 * @brief Operation/connection mutation, one-step neighbourhoods and budgeted
 *        child sampling.
 *
 * Counts per parent:
 *   NB201Like  6 edges x 4 alternative ops = 24, no rewiring.
 *   DartsLike  8 edges x 6 alternative ops = 48 op children, plus
 *              sum_{i=1..4} 2*i = 20 rewired children. With NonePolicy::Allow
 *              the op alternatives become 7 per edge, giving 56 + 20 = 76.
 */

#pragma once

#include <algorithm>
#include <string>
#include <unordered_set>
#include <vector>

#include "prenas/error.hpp"
#include "prenas/genotype.hpp"
#include "prenas/rng.hpp"

namespace prenas {

enum class MutationKind { Op, Connection };

/// One edge attribute change. `edge_index` is a position in the parent's
/// canonical edge list; values are op indices or source-node indices.
struct MutationRecord {
    MutationKind kind = MutationKind::Op;
    int edge_index = 0;
    int old_value = 0;
    int new_value = 0;

    friend bool operator==(const MutationRecord&, const MutationRecord&) = default;
};

inline std::string to_string(const MutationRecord& r) {
    return std::string(r.kind == MutationKind::Op ? "op" : "conn") + " edge=" + std::to_string(r.edge_index) +
           " " + std::to_string(r.old_value) + "->" + std::to_string(r.new_value);
}

struct Child {
    Genotype genotype;
    MutationRecord record;
};

/// The parent edge as it looks after the mutation.
inline Edge mutated_edge(const Genotype& parent, const MutationRecord& r) {
    if (r.edge_index < 0 || r.edge_index >= static_cast<int>(parent.size()))
        throw std::invalid_argument("mutation edge index out of range");
    Edge e = parent.edge(static_cast<std::size_t>(r.edge_index));
    int& field = r.kind == MutationKind::Op ? e.op : e.src;
    if (field != r.old_value) throw std::invalid_argument("mutation record does not match parent: " + to_string(r));
    field = r.new_value;
    return e;
}

/// Applies a record; throws if the result is not a valid genotype.
inline Genotype apply_mutation(const Genotype& parent, const MutationRecord& r) {
    std::vector<Edge> edges(parent.edges().begin(), parent.edges().end());
    edges[static_cast<std::size_t>(r.edge_index)] = mutated_edge(parent, r);
    Genotype child(parent.space(), std::move(edges));
    require_valid(child);
    return child;
}

inline std::vector<Child> op_mutations(const Genotype& parent) {
    const SearchSpace& s = parent.space();
    std::vector<Child> out;
    const auto ops = s.edge_ops();
    for (std::size_t i = 0; i < parent.size(); ++i) {
        const int current = parent.edge(i).op;
        for (int op : ops) {
            if (op == current) continue;
            MutationRecord r{MutationKind::Op, static_cast<int>(i), current, op};
            out.push_back({apply_mutation(parent, r), r});
        }
    }
    return out;
}

/// Rewires one edge to a different legal predecessor, keeping its op.
/// Empty for complete-DAG spaces.
inline std::vector<Child> conn_mutations(const Genotype& parent) {
    const SearchSpace& s = parent.space();
    std::vector<Child> out;
    if (s.in_degree_rule == InDegreeRule::Complete) return out;
    for (std::size_t i = 0; i < parent.size(); ++i) {
        const Edge& e = parent.edge(i);
        for (int src = 0; src < s.num_predecessors(e.dst); ++src) {
            if (src == e.src) continue;
            MutationRecord r{MutationKind::Connection, static_cast<int>(i), e.src, src};
            out.push_back({apply_mutation(parent, r), r});
        }
    }
    return out;
}

/// Union of op and connection mutations, first occurrence kept per genotype.
inline std::vector<Child> neighborhood(const Genotype& parent) {
    std::vector<Child> all = op_mutations(parent);
    auto conn = conn_mutations(parent);
    all.insert(all.end(), std::make_move_iterator(conn.begin()), std::make_move_iterator(conn.end()));

    std::unordered_set<std::string> seen;
    std::vector<Child> out;
    out.reserve(all.size());
    for (auto& c : all)
        if (seen.insert(canonical_string(c.genotype)).second) out.push_back(std::move(c));
    return out;
}

/// Up to `budget` distinct neighbours of `parent` that are absent from
/// `history` (keyed by canonical string), sampled uniformly without
/// replacement. Throws ParentExhausted when nothing is available.
inline std::vector<Child> sample_children(const Genotype& parent, int budget, Rng& rng,
                                          const std::unordered_set<std::string>& history) {
    if (budget < 1) throw std::invalid_argument("mutation budget must be >= 1");
    std::vector<Child> available;
    for (auto& c : neighborhood(parent))
        if (!history.contains(canonical_string(c.genotype))) available.push_back(std::move(c));
    if (available.empty()) throw ParentExhausted("parent exhausted: " + canonical_string(parent));

    std::shuffle(available.begin(), available.end(), rng);
    if (available.size() > static_cast<std::size_t>(budget))
        available.erase(available.begin() + budget, available.end());
    return available;
}

}  // namespace prenas
