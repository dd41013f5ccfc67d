/**
 * @file evaluators.hpp
 * @brief The evaluation contract used by the search loop and its three
 *        implementations: tabular oracle, synthetic landscape and the toy
 *        trainer with weight inheritance.
 */

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "prenas/evaluator.hpp"
#include "prenas/genotype.hpp"
#include "prenas/mutation.hpp"
#include "prenas/trainer.hpp"

namespace prenas {

enum class EvalKind { InitTrain, InheritTrain, OracleQuery };

inline const char* to_string(EvalKind k) {
    switch (k) {
        case EvalKind::InitTrain: return "init_train";
        case EvalKind::InheritTrain: return "inherit_train";
        case EvalKind::OracleQuery: return "oracle_query";
    }
    return "?";
}

class Evaluator {
public:
    virtual ~Evaluator() = default;

    /// Initial-population evaluation.
    virtual EvalResult evaluate(const Genotype& g, std::uint64_t seed) = 0;

    /// Evaluation of a child produced from `parent` by `record`. The parent
    /// has always been evaluated before.
    virtual EvalResult evaluate_child(const Genotype& child, const Genotype& /*parent*/,
                                      const MutationRecord& /*record*/, std::uint64_t seed) {
        return evaluate(child, seed);
    }

    virtual EvalKind initial_kind() const { return EvalKind::OracleQuery; }
    virtual EvalKind child_kind() const { return EvalKind::OracleQuery; }
};

class OracleEvaluator final : public Evaluator {
public:
    OracleEvaluator(std::shared_ptr<const OracleTable> table, std::string dataset)
        : table_(std::move(table)), dataset_(std::move(dataset)) {}

    EvalResult evaluate(const Genotype& g, std::uint64_t) override { return oracle_eval(*table_, g, dataset_); }

private:
    std::shared_ptr<const OracleTable> table_;
    std::string dataset_;
};

class SyntheticEvaluator final : public Evaluator {
public:
    explicit SyntheticEvaluator(LandscapeParams params) : params_(params) {}

    EvalResult evaluate(const Genotype& g, std::uint64_t seed) override { return synthetic_eval(g, params_, seed); }

private:
    LandscapeParams params_;
};

/// Scratch-trains the initial population and inherit-trains children from
/// their parent's trained model. Keeps every trained model by genotype key.
class TrainerEvaluator final : public Evaluator {
public:
    TrainerEvaluator(std::shared_ptr<const ClassificationData> data, TrainConfig scratch, TrainConfig inherit)
        : data_(std::move(data)), scratch_(scratch), inherit_(inherit) {}

    EvalResult evaluate(const Genotype& g, std::uint64_t seed) override {
        Rng rng = make_rng(seed, 1);
        CellModel m = realize(g, data_->dim(), data_->classes, rng);
        EvalResult r = train(m, scratch_, *data_, rng);
        models_.insert_or_assign(canonical_string(g), std::move(m));
        return r;
    }

    EvalResult evaluate_child(const Genotype& child, const Genotype& parent, const MutationRecord& record,
                              std::uint64_t seed) override {
        auto it = models_.find(canonical_string(parent));
        if (it == models_.end()) return evaluate(child, seed);
        Rng rng = make_rng(seed, 2);
        CellModel m = inherit_weights(it->second, parent, child, record, rng);
        EvalResult r = train(m, inherit_, *data_, rng);
        models_.insert_or_assign(canonical_string(child), std::move(m));
        return r;
    }

    EvalKind initial_kind() const override { return EvalKind::InitTrain; }
    EvalKind child_kind() const override { return EvalKind::InheritTrain; }

    const CellModel* model(const std::string& key) const {
        auto it = models_.find(key);
        return it == models_.end() ? nullptr : &it->second;
    }

private:
    std::shared_ptr<const ClassificationData> data_;
    TrainConfig scratch_;
    TrainConfig inherit_;
    std::map<std::string, CellModel> models_;
};

}  // namespace prenas
