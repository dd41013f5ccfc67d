/**
 * @file evaluator.hpp
 * @brief Ground-truth fitness providers: tabular benchmark lookups and a
 *        deterministic synthetic landscape.
 *
 * Benchmark files are JSONL, one object per line:
 *
 *     {"genotype":"3,0,2,1,1,4","dataset":"cifar10","val_acc":91.23,"test_acc":93.87}
 *
 * Accuracies are percentages in [0, 100] on disk and fractions in memory.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "prenas/error.hpp"
#include "prenas/genotype.hpp"
#include "prenas/predictor.hpp"
#include "prenas/rng.hpp"

namespace prenas {

struct EvalResult {
    double val_acc = 0;
    std::optional<double> test_acc;
    double cost = 0;  // epochs trained, 0 for lookups
};

struct Accuracy {
    double val_acc = 0;
    double test_acc = 0;
};

/// Canonical genotype string -> dataset label -> accuracies (fractions).
class OracleTable {
public:
    explicit OracleTable(const SearchSpace& space = space_ref(SpaceKind::NB201Like)) : space_(&space_ref(space)) {}

    /// Returns false if (genotype, dataset) is already present.
    bool insert(const std::string& genotype, const std::string& dataset, Accuracy acc) {
        auto& per_dataset = rows_[genotype];
        if (!per_dataset.emplace(dataset, acc).second) return false;
        ++entries_;
        return true;
    }

    const Accuracy* find(const std::string& genotype, const std::string& dataset) const {
        auto it = rows_.find(genotype);
        if (it == rows_.end()) return nullptr;
        auto jt = it->second.find(dataset);
        return jt == it->second.end() ? nullptr : &jt->second;
    }

    /// Genotype keys carrying `dataset`, sorted.
    std::vector<std::string> keys(const std::string& dataset) const {
        std::vector<std::string> out;
        for (const auto& [g, per] : rows_)
            if (per.contains(dataset)) out.push_back(g);
        return out;
    }

    const SearchSpace& space() const { return *space_; }
    std::size_t size() const { return entries_; }
    std::size_t genotype_count() const { return rows_.size(); }
    const std::map<std::string, std::map<std::string, Accuracy>>& rows() const { return rows_; }

private:
    const SearchSpace* space_;
    std::map<std::string, std::map<std::string, Accuracy>> rows_;
    std::size_t entries_ = 0;
};

namespace detail {

inline double percent_field(const nlohmann::json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw DataError(std::string("missing or non-numeric '") + key + "' at line " + std::to_string(line));
    const double v = it->get<double>();
    if (!(v >= 0.0 && v <= 100.0)) throw DataError("accuracy out of range at line " + std::to_string(line));
    return v;
}

}  // namespace detail

/// One benchmark row after validation. Shared by the JSONL loader and the
/// CSV ingester.
struct BenchmarkRow {
    std::string genotype;  // canonical form
    std::string dataset;
    double val_pct = 0;
    double test_pct = 0;
};

inline BenchmarkRow parse_benchmark_json(const std::string& text, std::size_t line, const SearchSpace& space) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        throw DataError("malformed JSON at line " + std::to_string(line));
    }
    if (!obj.is_object()) throw DataError("expected a JSON object at line " + std::to_string(line));
    auto g = obj.find("genotype");
    auto d = obj.find("dataset");
    if (g == obj.end() || !g->is_string() || d == obj.end() || !d->is_string())
        throw DataError("missing 'genotype' or 'dataset' at line " + std::to_string(line));
    BenchmarkRow row;
    try {
        row.genotype = canonical_string(parse_string(g->get<std::string>(), space));
    } catch (const ParseError& e) {
        throw DataError(std::string(e.what()) + " at line " + std::to_string(line));
    }
    row.dataset = d->get<std::string>();
    row.val_pct = detail::percent_field(obj, "val_acc", line);
    row.test_pct = detail::percent_field(obj, "test_acc", line);
    return row;
}

inline std::string to_benchmark_json(const BenchmarkRow& row) {
    nlohmann::ordered_json obj;
    obj["genotype"] = row.genotype;
    obj["dataset"] = row.dataset;
    obj["val_acc"] = row.val_pct;
    obj["test_acc"] = row.test_pct;
    return obj.dump();
}

inline OracleTable load_benchmark(const std::string& path,
                                  const SearchSpace& space = space_ref(SpaceKind::NB201Like)) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open benchmark file '" + path + "'");
    OracleTable table(space);
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        const BenchmarkRow row = parse_benchmark_json(text, line, space);
        if (!table.insert(row.genotype, row.dataset, {row.val_pct / 100.0, row.test_pct / 100.0}))
            throw DataError("duplicate genotype key '" + row.genotype + "' (" + row.dataset + ") at line " +
                            std::to_string(line));
    }
    return table;
}

inline EvalResult oracle_eval(const OracleTable& table, const Genotype& g, const std::string& dataset) {
    const std::string key = canonical_string(g);
    const Accuracy* acc = table.find(key, dataset);
    if (acc == nullptr) throw MissingGenotype("genotype " + key + " not in table for dataset " + dataset);
    return EvalResult{acc->val_acc, acc->test_acc, 0.0};
}

// ---------------------------------------------------------------------------
// Synthetic landscape

/// Accuracy-like fitness built from hashed coefficients over the one-hot
/// features of a genotype:
///
///   z   = bias + op_scale * sum_f w(f) + interaction_scale * sum_{f<g} v(f, g)
///   val = floor + (ceiling - floor) * sigmoid(z)
///
/// where f, g range over the active one-hot features and w, v are uniform in
/// [-1, 1) derived from the landscape seed.
struct LandscapeParams {
    std::uint64_t seed = 2021;
    double bias = 0.5;
    double op_scale = 1.0;
    double interaction_scale = 0.25;
    double floor = 0.10;
    double ceiling = 0.95;
    double noise_sigma = 0.0;
    double test_offset_scale = 0.1;  // logit-space spread between val and test
};

namespace detail {

inline double hashed_coefficient(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    const std::uint64_t h = mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) ^ mix64(a * 0x100000001b3ULL + b));
    return 2.0 * unit_from_hash(h) - 1.0;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// Noise-free logit of a genotype under the landscape.
inline double landscape_logit(const Genotype& g, const LandscapeParams& p) {
    const FeatureRow row = featurize(g, FeatureMode::OneHot);
    std::vector<std::uint64_t> active;
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] != 0.0) active.push_back(i);
    const std::uint64_t space_tag = g.space().kind == SpaceKind::NB201Like ? 1 : 2;
    double z = p.bias;
    for (auto f : active) z += p.op_scale * detail::hashed_coefficient(p.seed + space_tag, f, 0xffff);
    for (std::size_t i = 0; i < active.size(); ++i)
        for (std::size_t j = i + 1; j < active.size(); ++j)
            z += p.interaction_scale * detail::hashed_coefficient(p.seed + space_tag, active[i] + 1, active[j] + 1);
    return z;
}

/// Deterministic for noise_sigma == 0. Otherwise val_acc carries Gaussian
/// observation noise drawn from `call_seed`.
inline EvalResult synthetic_eval(const Genotype& g, const LandscapeParams& p, std::uint64_t call_seed = 0) {
    const double z = landscape_logit(g, p);
    const double span = p.ceiling - p.floor;
    double val = p.floor + span * detail::sigmoid(z);

    std::uint64_t key = 0xcbf29ce484222325ULL;
    for (char c : canonical_string(g)) key = (key ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    const double offset = p.test_offset_scale * (2.0 * unit_from_hash(mix64(key ^ p.seed)) - 1.0);
    const double test = p.floor + span * detail::sigmoid(z + offset);

    if (p.noise_sigma > 0.0) {
        Rng rng{derive_seed(call_seed, key)};
        val += std::normal_distribution<double>(0.0, p.noise_sigma)(rng);
    }
    return EvalResult{std::clamp(val, 0.0, 1.0), std::clamp(test, 0.0, 1.0), 0.0};
}

}  // namespace prenas
