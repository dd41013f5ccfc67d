/**
 * @file search.hpp
 * @brief Predictor-assisted elitist evolution over cell genotypes.
 *
 * One cycle:
 *   1. fit the forest on the whole history
 *   2. tournament-select a parent (sample S, keep the fittest)
 *   3. draw `mutation_times` unseen one-step children
 *   4. predict every child
 *   5. pick representatives (percentiles of the prediction by default)
 *   6. evaluate the representatives for real and append them to the history
 *   7. Spearman between predicted and true fitness of the representatives
 *   8. grow `mutation_times` by `mutation_factor` if Spearman beat the last cycle
 *   9. add the truly-best representative to the population
 *  10. drop the population's worst member
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "prenas/error.hpp"
#include "prenas/evaluators.hpp"
#include "prenas/genotype.hpp"
#include "prenas/mutation.hpp"
#include "prenas/predictor.hpp"
#include "prenas/rng.hpp"
#include "prenas/stats.hpp"

namespace prenas {

struct SelectionStrategy {
    enum class Kind { Percentile, TopK, Random };
    Kind kind = Kind::Percentile;
    int count = 5;  // k for TopK, n for Random

    static SelectionStrategy parse(const std::string& text) {
        if (text == "percentile") return {};
        auto colon = text.find(':');
        const std::string head = text.substr(0, colon);
        if ((head == "topk" || head == "random") && colon != std::string::npos) {
            int n = 0;
            try {
                std::size_t used = 0;
                n = std::stoi(text.substr(colon + 1), &used);
                if (used != text.size() - colon - 1) n = 0;
            } catch (const std::exception&) {
                n = 0;
            }
            if (n < 1) throw ConfigError("strategy count must be a positive integer in '" + text + "'");
            return {head == "topk" ? Kind::TopK : Kind::Random, n};
        }
        throw ConfigError("unknown strategy '" + text + "' (expected percentile, topk:k or random:n)");
    }

    std::string str() const {
        switch (kind) {
            case Kind::Percentile: return "percentile";
            case Kind::TopK: return "topk:" + std::to_string(count);
            case Kind::Random: return "random:" + std::to_string(count);
        }
        return "?";
    }
};

struct SearchConfig {
    const SearchSpace* space = &space_ref(SpaceKind::NB201Like);
    int population_size = 20;
    int cycles = 20;
    int sample_size = 10;
    int initial_mutation_times = 0;  // 0 means "equal to sample_size"
    double mutation_factor = 1.2;
    std::vector<double> quantiles{1.0, 0.75, 0.5, 0.25, 0.0};
    SelectionStrategy strategy;
    ForestParams predictor;
    FeatureMode features = FeatureMode::OneHot;
    std::uint64_t seed = 0;

    int start_mutation_times() const { return initial_mutation_times > 0 ? initial_mutation_times : sample_size; }

    void check() const {
        if (space == nullptr) throw ConfigError("search space not set");
        if (population_size < 1) throw ConfigError("population_size must be >= 1");
        if (sample_size < 1 || sample_size > population_size)
            throw ConfigError("sample_size must satisfy 1 <= S <= population_size");
        if (cycles < 0) throw ConfigError("cycles must be >= 0");
        if (initial_mutation_times < 0) throw ConfigError("initial_mutation_times must be >= 0");
        if (!(mutation_factor >= 1.0)) throw ConfigError("mutation_factor must be >= 1");
        if (quantiles.empty()) throw ConfigError("quantiles must not be empty");
        for (double q : quantiles)
            if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantiles must lie in [0, 1]");
        if (!std::is_sorted(quantiles.begin(), quantiles.end()) &&
            !std::is_sorted(quantiles.rbegin(), quantiles.rend()))
            throw ConfigError("quantiles must be sorted");
        if (predictor.n_trees < 1) throw ConfigError("predictor n_trees must be >= 1");
        if (predictor.min_samples_leaf < 1) throw ConfigError("predictor min_samples_leaf must be >= 1");
    }
};

struct PopulationMember {
    int id = 0;  // position in the history
    Genotype genotype;
    std::string key;  // canonical string
    double true_fitness = 0;
    std::optional<double> test_acc;
    std::optional<double> predicted_fitness;
    int birth_cycle = 0;
    EvalKind eval_kind = EvalKind::OracleQuery;
    int parent_id = -1;
    std::optional<MutationRecord> mutation;
    double cost = 0;
};

struct CycleReport {
    int cycle = 0;
    int parent_id = -1;
    std::string parent;
    int children_generated = 0;
    int representatives = 0;
    std::optional<double> spearman;
    int mutation_times = 0;       // budget used this cycle
    int next_mutation_times = 0;  // budget after the feedback step
    std::optional<double> best_child;
    double pop_best = 0;
    double pop_mean = 0;
    bool skipped = false;
};

struct SearchReport {
    PopulationMember best;
    std::vector<PopulationMember> history;
    std::vector<CycleReport> cycles;
    std::size_t true_evaluations = 0;
    double total_cost = 0;
};

// ---------------------------------------------------------------------------
// Selection

/// Tournament: S members drawn without replacement, fittest wins. Ties go
/// to the earliest birth cycle, then the smaller canonical string.
inline std::size_t select_parent(const std::vector<PopulationMember>& population, int sample_size, Rng& rng) {
    if (population.empty()) throw std::invalid_argument("select_parent: empty population");
    const std::size_t s = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, sample_size)), population.size());
    std::vector<std::size_t> idx(population.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < s; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
        std::swap(idx[k], idx[pick(rng)]);
    }
    std::size_t best = idx[0];
    for (std::size_t k = 1; k < s; ++k) {
        const auto& a = population[idx[k]];
        const auto& b = population[best];
        if (a.true_fitness > b.true_fitness ||
            (a.true_fitness == b.true_fitness &&
             (a.birth_cycle < b.birth_cycle || (a.birth_cycle == b.birth_cycle && a.key < b.key))))
            best = idx[k];
    }
    return best;
}

/// Indices into `predicted` of the representatives.
///
/// Percentile: children sorted ascending by prediction (ties by key), one
/// pick per quantile at round-half-up(q * (n - 1)), duplicates dropped.
/// TopK: the k highest predictions. Random: n uniform picks.
inline std::vector<std::size_t> select_representatives(const std::vector<double>& predicted,
                                                       const std::vector<std::string>& keys,
                                                       const SelectionStrategy& strategy,
                                                       const std::vector<double>& quantiles, Rng& rng) {
    if (predicted.empty()) throw std::invalid_argument("select_representatives: no children");
    const std::size_t n = predicted.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto ascending = [&](std::size_t a, std::size_t b) {
        if (predicted[a] != predicted[b]) return predicted[a] < predicted[b];
        return keys.empty() ? a < b : keys[a] < keys[b];
    };

    std::vector<std::size_t> out;
    switch (strategy.kind) {
        case SelectionStrategy::Kind::Percentile: {
            std::sort(order.begin(), order.end(), ascending);
            std::vector<std::size_t> positions;
            for (double q : quantiles) positions.push_back(quantile_index(n, q));
            std::sort(positions.begin(), positions.end());
            positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
            for (auto p : positions) out.push_back(order[p]);
            break;
        }
        case SelectionStrategy::Kind::TopK: {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ascending(b, a); });
            order.resize(std::min(n, static_cast<std::size_t>(strategy.count)));
            out = order;
            break;
        }
        case SelectionStrategy::Kind::Random: {
            const std::size_t k = std::min(n, static_cast<std::size_t>(strategy.count));
            for (std::size_t i = 0; i < k; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n - 1);
                std::swap(order[i], order[pick(rng)]);
            }
            order.resize(k);
            out = order;
            break;
        }
    }
    return out;
}

/// Selected positions in ascending prediction order, for checking the
/// percentile rule in isolation.
inline std::vector<std::size_t> percentile_positions(std::size_t n, const std::vector<double>& quantiles) {
    std::vector<std::size_t> positions;
    for (double q : quantiles) positions.push_back(quantile_index(n, q));
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    return positions;
}

// ---------------------------------------------------------------------------
// Search state

class Search {
public:
    Search(SearchConfig cfg, Evaluator& evaluator)
        : cfg_(std::move(cfg)), evaluator_(&evaluator), rng_(make_rng(cfg_.seed, 0x5ea2c4)) {
        cfg_.check();
        mutation_times_ = cfg_.start_mutation_times();
    }

    /// Random distinct genotypes until the population holds P members.
    void init_population() {
        while (static_cast<int>(population_.size()) < cfg_.population_size) {
            Genotype g = random_genotype(*cfg_.space, rng_);
            const std::string key = canonical_string(g);
            if (seen_.contains(key)) continue;
            const EvalResult r = evaluate(g, key, nullptr, nullptr);
            PopulationMember m = record(std::move(g), key, r, evaluator_->initial_kind(), -1, std::nullopt);
            population_.push_back(m);
        }
    }

    CycleReport run_cycle() {
        ++cycle_;
        CycleReport report;
        report.cycle = cycle_;
        report.mutation_times = mutation_times_;

        // 1. predictor on the whole history
        TrainingSet data;
        data.mode = cfg_.features;
        for (const auto& m : history_) data.add(m.genotype, m.true_fitness);
        ForestParams fp = cfg_.predictor;
        fp.seed = derive_seed(cfg_.seed, 0xf00000ULL + static_cast<std::uint64_t>(cycle_));
        const Forest forest = fit_forest(data, fp);

        // 2-3. parent and children; an exhausted parent is replaced up to S times
        std::optional<std::size_t> parent_pos;
        std::vector<Child> children;
        for (int attempt = 0; attempt <= cfg_.sample_size && !parent_pos; ++attempt) {
            const std::size_t pos = select_parent(population_, cfg_.sample_size, rng_);
            try {
                children = sample_children(population_[pos].genotype, mutation_times_, rng_, seen_);
                parent_pos = pos;
            } catch (const ParentExhausted&) {
            }
        }
        if (!parent_pos) {
            report.skipped = true;
            report.next_mutation_times = mutation_times_;
            fill_population_stats(report);
            cycles_.push_back(report);
            return report;
        }
        const PopulationMember parent = population_[*parent_pos];
        report.parent_id = parent.id;
        report.parent = parent.key;
        report.children_generated = static_cast<int>(children.size());

        // 4. predictions
        std::vector<double> predicted;
        std::vector<std::string> keys;
        for (const auto& c : children) {
            predicted.push_back(predict(forest, c.genotype));
            keys.push_back(canonical_string(c.genotype));
        }

        // 5-6. representatives, evaluated for real
        const auto reps = select_representatives(predicted, keys, cfg_.strategy, cfg_.quantiles, rng_);
        std::vector<double> rep_pred, rep_true;
        std::vector<int> rep_ids;
        for (auto i : reps) {
            const Child& c = children[i];
            const EvalResult r = evaluate(c.genotype, keys[i], &parent.genotype, &c.record);
            PopulationMember m =
                record(c.genotype, keys[i], r, evaluator_->child_kind(), parent.id, c.record);
            history_.back().predicted_fitness = predicted[i];
            rep_pred.push_back(predicted[i]);
            rep_true.push_back(m.true_fitness);
            rep_ids.push_back(m.id);
        }
        report.representatives = static_cast<int>(reps.size());

        // 7-8. Spearman feedback
        report.spearman = spearman(rep_pred, rep_true);
        if (report.spearman && previous_spearman_ && *report.spearman > *previous_spearman_) {
            const int cap = static_cast<int>(neighborhood(parent.genotype).size());
            const int grown = static_cast<int>(std::ceil(mutation_times_ * cfg_.mutation_factor - 1e-9));
            mutation_times_ = std::max(mutation_times_, std::min(grown, cap));
        }
        previous_spearman_ = report.spearman;
        report.next_mutation_times = mutation_times_;

        // 9. elitist insertion of the truly best representative
        int best_id = rep_ids.front();
        for (int id : rep_ids) {
            const auto& a = history_[static_cast<std::size_t>(id)];
            const auto& b = history_[static_cast<std::size_t>(best_id)];
            if (a.true_fitness > b.true_fitness || (a.true_fitness == b.true_fitness && a.key < b.key)) best_id = id;
        }
        report.best_child = history_[static_cast<std::size_t>(best_id)].true_fitness;
        population_.push_back(history_[static_cast<std::size_t>(best_id)]);

        // 10. remove the worst; ties go to the oldest, then the smaller key
        auto worst = population_.begin();
        for (auto it = population_.begin(); it != population_.end(); ++it) {
            if (it->true_fitness < worst->true_fitness ||
                (it->true_fitness == worst->true_fitness &&
                 (it->birth_cycle < worst->birth_cycle ||
                  (it->birth_cycle == worst->birth_cycle && it->key < worst->key))))
                worst = it;
        }
        population_.erase(worst);

        fill_population_stats(report);
        cycles_.push_back(report);
        return report;
    }

    SearchReport report() const {
        SearchReport r;
        r.history = history_;
        r.cycles = cycles_;
        r.true_evaluations = history_.size();
        for (const auto& m : history_) r.total_cost += m.cost;
        r.best = *std::max_element(history_.begin(), history_.end(), [](const auto& a, const auto& b) {
            if (a.true_fitness != b.true_fitness) return a.true_fitness < b.true_fitness;
            return a.id > b.id;  // earliest wins
        });
        return r;
    }

    const std::vector<PopulationMember>& population() const { return population_; }
    const std::vector<PopulationMember>& history() const { return history_; }
    int mutation_times() const { return mutation_times_; }
    const SearchConfig& config() const { return cfg_; }

private:
    EvalResult evaluate(const Genotype& g, const std::string& key, const Genotype* parent,
                        const MutationRecord* rec) {
        const std::uint64_t seed = derive_seed(cfg_.seed, 0xe000000ULL + history_.size());
        try {
            EvalResult r = parent ? evaluator_->evaluate_child(g, *parent, *rec, seed) : evaluator_->evaluate(g, seed);
            if (!(r.val_acc >= 0.0 && r.val_acc <= 1.0)) throw std::runtime_error("val_acc outside [0, 1]");
            return r;
        } catch (const MissingGenotype& e) {
            throw DataError("evaluating " + key + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("evaluating " + key + ": " + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error("evaluating " + key + ": " + e.what());
        }
    }

    PopulationMember record(Genotype g, const std::string& key, const EvalResult& r, EvalKind kind, int parent_id,
                            std::optional<MutationRecord> mutation) {
        PopulationMember m{static_cast<int>(history_.size()), std::move(g), key, r.val_acc, r.test_acc,
                           std::nullopt, cycle_, kind, parent_id, mutation, r.cost};
        history_.push_back(m);
        seen_.insert(key);
        return m;
    }

    void fill_population_stats(CycleReport& report) const {
        double best = population_.front().true_fitness, sum = 0;
        for (const auto& m : population_) {
            best = std::max(best, m.true_fitness);
            sum += m.true_fitness;
        }
        report.pop_best = best;
        report.pop_mean = sum / static_cast<double>(population_.size());
    }

    SearchConfig cfg_;
    Evaluator* evaluator_;
    Rng rng_;
    std::vector<PopulationMember> population_;
    std::vector<PopulationMember> history_;
    std::unordered_set<std::string> seen_;
    std::vector<CycleReport> cycles_;
    int cycle_ = 0;
    int mutation_times_ = 0;
    std::optional<double> previous_spearman_;
};

inline SearchReport run_search(const SearchConfig& cfg, Evaluator& evaluator) {
    Search search(cfg, evaluator);
    search.init_population();
    for (int c = 0; c < cfg.cycles; ++c) search.run_cycle();
    return search.report();
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::ordered_json to_json(const PopulationMember& m) {
    nlohmann::ordered_json j;
    j["kind"] = "member";
    j["id"] = m.id;
    j["genotype"] = m.key;
    j["true_fitness"] = m.true_fitness;
    j["test_acc"] = m.test_acc ? nlohmann::ordered_json(*m.test_acc) : nlohmann::ordered_json(nullptr);
    j["predicted_fitness"] =
        m.predicted_fitness ? nlohmann::ordered_json(*m.predicted_fitness) : nlohmann::ordered_json(nullptr);
    j["birth_cycle"] = m.birth_cycle;
    j["eval_kind"] = to_string(m.eval_kind);
    j["parent_id"] = m.parent_id;
    if (m.mutation)
        j["mutation"] = {{"type", m.mutation->kind == MutationKind::Op ? "op" : "conn"},
                         {"edge_index", m.mutation->edge_index},
                         {"old", m.mutation->old_value},
                         {"new", m.mutation->new_value}};
    j["cost"] = m.cost;
    return j;
}

inline nlohmann::ordered_json to_json(const CycleReport& c) {
    nlohmann::ordered_json j;
    j["kind"] = "cycle";
    j["cycle"] = c.cycle;
    j["parent_id"] = c.parent_id;
    j["parent"] = c.parent;
    j["children"] = c.children_generated;
    j["representatives"] = c.representatives;
    j["spearman"] = c.spearman ? nlohmann::ordered_json(*c.spearman) : nlohmann::ordered_json(nullptr);
    j["mutation_times"] = c.mutation_times;
    j["next_mutation_times"] = c.next_mutation_times;
    j["best_child"] = c.best_child ? nlohmann::ordered_json(*c.best_child) : nlohmann::ordered_json(nullptr);
    j["pop_best"] = c.pop_best;
    j["pop_mean"] = c.pop_mean;
    j["skipped"] = c.skipped;
    return j;
}

/// Members of cycle 0, then for each cycle its members followed by its
/// cycle record.
inline void write_history_jsonl(const SearchReport& r, std::ostream& out) {
    std::size_t next = 0;
    auto flush_members = [&](int cycle) {
        while (next < r.history.size() && r.history[next].birth_cycle <= cycle)
            out << to_json(r.history[next++]).dump() << '\n';
    };
    flush_members(0);
    for (const auto& c : r.cycles) {
        flush_members(c.cycle);
        out << to_json(c).dump() << '\n';
    }
    flush_members(std::numeric_limits<int>::max());
}

inline void write_summary_csv(const SearchReport& r, std::ostream& out) {
    out << "cycle,spearman,mutation_times,pop_best,pop_mean\n";
    out << std::setprecision(10);
    for (const auto& c : r.cycles) {
        out << c.cycle << ',';
        if (c.spearman) out << *c.spearman;
        out << ',' << c.mutation_times << ',' << c.pop_best << ',' << c.pop_mean << '\n';
    }
}

}  // namespace prenas
