/**
 * @file config.hpp
 * @brief INI-style run configuration with [search], [predictor] and
 *        [evaluator] sections. Every key is optional; an empty file gives
 *        the NB201 oracle protocol (P=20, C=20, S=10, factor 1.2).
 */

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "prenas/error.hpp"
#include "prenas/evaluators.hpp"
#include "prenas/search.hpp"

namespace prenas {

enum class EvaluatorKind { Oracle, Synthetic, Trainer };

inline EvaluatorKind parse_evaluator_kind(const std::string& s) {
    if (s == "oracle") return EvaluatorKind::Oracle;
    if (s == "synthetic") return EvaluatorKind::Synthetic;
    if (s == "trainer") return EvaluatorKind::Trainer;
    throw ConfigError("unknown evaluator '" + s + "' (expected oracle, synthetic or trainer)");
}

inline const char* to_string(EvaluatorKind k) {
    switch (k) {
        case EvaluatorKind::Oracle: return "oracle";
        case EvaluatorKind::Synthetic: return "synthetic";
        case EvaluatorKind::Trainer: return "trainer";
    }
    return "?";
}

struct EvaluatorConfig {
    EvaluatorKind kind = EvaluatorKind::Oracle;
    std::string benchmark;  // empty: $PRENAS_DATA_DIR/nb201.jsonl
    std::string dataset = "cifar10";
    LandscapeParams landscape;
    BlobParams blobs;
    int scratch_epochs = 20;
};

struct RunConfig {
    SearchConfig search;
    EvaluatorConfig evaluator;
};

inline constexpr const char* kDefaultBenchmarkName = "nb201.jsonl";

/// Explicit path, else $PRENAS_DATA_DIR/nb201.jsonl, else ./nb201.jsonl.
inline std::string resolve_benchmark_path(const std::string& explicit_path) {
    if (!explicit_path.empty()) return explicit_path;
    if (const char* dir = std::getenv("PRENAS_DATA_DIR"); dir != nullptr && *dir != '\0')
        return (std::filesystem::path(dir) / kDefaultBenchmarkName).string();
    return kDefaultBenchmarkName;
}

namespace detail {

inline std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("malformed number '" + item + "' in list '" + text + "'");
        }
    }
    return out;
}

template <typename T>
T get_value(const boost::property_tree::ptree& tree, const std::string& path, T fallback) {
    auto node = tree.get_optional<std::string>(path);
    if (!node) return fallback;
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (*node == "true" || *node == "1" || *node == "on") return true;
            if (*node == "false" || *node == "0" || *node == "off") return false;
            throw std::invalid_argument(*node);
        } else if constexpr (std::is_same_v<T, std::string>) {
            return *node;
        } else if constexpr (std::is_floating_point_v<T>) {
            std::size_t used = 0;
            T v = static_cast<T>(std::stod(*node, &used));
            if (used != node->size()) throw std::invalid_argument(*node);
            return v;
        } else {
            std::size_t used = 0;
            long long v = std::stoll(*node, &used);
            if (used != node->size()) throw std::invalid_argument(*node);
            return static_cast<T>(v);
        }
    } catch (const std::exception&) {
        throw ConfigError("invalid value '" + *node + "' for key " + path);
    }
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    static const std::map<std::string, std::set<std::string>> known{
        {"search",
         {"space", "population_size", "cycles", "sample_size", "initial_mutation_times", "mutation_factor",
          "quantiles", "strategy", "seed"}},
        {"predictor", {"n_trees", "min_samples_leaf", "max_features", "bootstrap", "features"}},
        {"evaluator",
         {"kind", "benchmark", "dataset", "landscape_seed", "noise_sigma", "interaction_scale", "width",
          "classes", "train_size", "val_size", "separation", "nonlinearity", "clusters", "data_seed",
          "scratch_epochs"}},
    };
    for (const auto& [section, body] : tree) {
        auto it = known.find(section);
        if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, value] : body)
            if (!it->second.contains(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }

    using detail::get_value;
    RunConfig c;
    SearchConfig& s = c.search;
    s.space = &space_from_name(get_value<std::string>(tree, "search.space", "nb201"));
    s.population_size = get_value(tree, "search.population_size", s.population_size);
    s.cycles = get_value(tree, "search.cycles", s.cycles);
    s.sample_size = get_value(tree, "search.sample_size", s.sample_size);
    s.initial_mutation_times = get_value(tree, "search.initial_mutation_times", s.initial_mutation_times);
    s.mutation_factor = get_value(tree, "search.mutation_factor", s.mutation_factor);
    if (auto q = tree.get_optional<std::string>("search.quantiles")) s.quantiles = detail::parse_double_list(*q);
    s.strategy = SelectionStrategy::parse(get_value<std::string>(tree, "search.strategy", "percentile"));
    s.seed = get_value<std::uint64_t>(tree, "search.seed", s.seed);

    s.predictor.n_trees = get_value(tree, "predictor.n_trees", s.predictor.n_trees);
    s.predictor.min_samples_leaf = get_value(tree, "predictor.min_samples_leaf", s.predictor.min_samples_leaf);
    s.predictor.max_features_per_split = get_value(tree, "predictor.max_features", s.predictor.max_features_per_split);
    s.predictor.bootstrap = get_value(tree, "predictor.bootstrap", s.predictor.bootstrap);
    const std::string features = get_value<std::string>(tree, "predictor.features", "onehot");
    if (features == "onehot")
        s.features = FeatureMode::OneHot;
    else if (features == "raw")
        s.features = FeatureMode::RawMatrix;
    else
        throw ConfigError("unknown feature mode '" + features + "' (expected onehot or raw)");

    EvaluatorConfig& e = c.evaluator;
    e.kind = parse_evaluator_kind(get_value<std::string>(tree, "evaluator.kind", "oracle"));
    e.benchmark = get_value<std::string>(tree, "evaluator.benchmark", "");
    e.dataset = get_value<std::string>(tree, "evaluator.dataset", e.dataset);
    e.landscape.seed = get_value<std::uint64_t>(tree, "evaluator.landscape_seed", e.landscape.seed);
    e.landscape.noise_sigma = get_value(tree, "evaluator.noise_sigma", e.landscape.noise_sigma);
    e.landscape.interaction_scale = get_value(tree, "evaluator.interaction_scale", e.landscape.interaction_scale);
    e.blobs.dim = get_value(tree, "evaluator.width", e.blobs.dim);
    e.blobs.classes = get_value(tree, "evaluator.classes", e.blobs.classes);
    e.blobs.n_train = get_value(tree, "evaluator.train_size", e.blobs.n_train);
    e.blobs.n_val = get_value(tree, "evaluator.val_size", e.blobs.n_val);
    e.blobs.separation = get_value(tree, "evaluator.separation", e.blobs.separation);
    e.blobs.nonlinearity = get_value(tree, "evaluator.nonlinearity", e.blobs.nonlinearity);
    e.blobs.clusters_per_class = get_value(tree, "evaluator.clusters", e.blobs.clusters_per_class);
    e.blobs.seed = get_value<std::uint64_t>(tree, "evaluator.data_seed", e.blobs.seed);
    e.scratch_epochs = get_value(tree, "evaluator.scratch_epochs", e.scratch_epochs);
    if (e.scratch_epochs < 2) throw ConfigError("scratch_epochs must be >= 2");
    if (e.landscape.noise_sigma < 0) throw ConfigError("noise_sigma must be >= 0");

    s.check();
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    if (path.empty()) {
        std::istringstream empty;
        return parse_run_config(empty);
    }
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return parse_run_config(in);
}

/// Snapshot of every effective setting, for run manifests.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
    const SearchConfig& s = c.search;
    const EvaluatorConfig& e = c.evaluator;
    nlohmann::ordered_json j;
    j["search"] = {{"space", s.space->name()},
                   {"population_size", s.population_size},
                   {"cycles", s.cycles},
                   {"sample_size", s.sample_size},
                   {"initial_mutation_times", s.start_mutation_times()},
                   {"mutation_factor", s.mutation_factor},
                   {"quantiles", s.quantiles},
                   {"strategy", s.strategy.str()},
                   {"seed", s.seed}};
    j["predictor"] = {{"n_trees", s.predictor.n_trees},
                      {"min_samples_leaf", s.predictor.min_samples_leaf},
                      {"max_features", s.predictor.max_features_per_split},
                      {"bootstrap", s.predictor.bootstrap},
                      {"features", s.features == FeatureMode::OneHot ? "onehot" : "raw"}};
    j["evaluator"] = {{"kind", to_string(e.kind)},
                      {"benchmark", e.benchmark},
                      {"dataset", e.dataset},
                      {"landscape_seed", e.landscape.seed},
                      {"noise_sigma", e.landscape.noise_sigma},
                      {"interaction_scale", e.landscape.interaction_scale},
                      {"width", e.blobs.dim},
                      {"classes", e.blobs.classes},
                      {"train_size", e.blobs.n_train},
                      {"val_size", e.blobs.n_val},
                      {"separation", e.blobs.separation},
                      {"nonlinearity", e.blobs.nonlinearity},
                      {"clusters", e.blobs.clusters_per_class},
                      {"data_seed", e.blobs.seed},
                      {"scratch_epochs", e.scratch_epochs}};
    return j;
}

/// Shared, immutable evaluation inputs; one instance can back many runs.
struct EvaluatorInputs {
    std::shared_ptr<const OracleTable> table;
    std::shared_ptr<const ClassificationData> data;
};

/// Loads the benchmark table or builds the synthetic dataset as needed.
inline EvaluatorInputs prepare_evaluator_inputs(const RunConfig& c) {
    EvaluatorInputs in;
    switch (c.evaluator.kind) {
        case EvaluatorKind::Oracle:
            in.table = std::make_shared<const OracleTable>(
                load_benchmark(resolve_benchmark_path(c.evaluator.benchmark), *c.search.space));
            if (in.table->keys(c.evaluator.dataset).empty())
                throw DataError("benchmark has no rows for dataset '" + c.evaluator.dataset + "'");
            break;
        case EvaluatorKind::Trainer:
            in.data = std::make_shared<const ClassificationData>(make_blob_dataset(c.evaluator.blobs));
            break;
        case EvaluatorKind::Synthetic: break;
    }
    return in;
}

inline std::unique_ptr<Evaluator> make_evaluator(const RunConfig& c, const EvaluatorInputs& in) {
    switch (c.evaluator.kind) {
        case EvaluatorKind::Oracle: return std::make_unique<OracleEvaluator>(in.table, c.evaluator.dataset);
        case EvaluatorKind::Synthetic: return std::make_unique<SyntheticEvaluator>(c.evaluator.landscape);
        case EvaluatorKind::Trainer:
            return std::make_unique<TrainerEvaluator>(in.data, TrainConfig::scratch(c.evaluator.scratch_epochs),
                                                      TrainConfig::inherit(c.evaluator.scratch_epochs));
    }
    throw ConfigError("unknown evaluator kind");
}

}  // namespace prenas
