/**
 * @file predictor.hpp
 * @brief Surrogate accuracy predictors: genotype featurisation, CART
 *        regression trees, a bagged random forest and a ridge-damped linear
 *        baseline.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "prenas/genotype.hpp"
#include "prenas/rng.hpp"

namespace prenas {

using FeatureRow = std::vector<double>;

/// OneHot: one hot bit per edge slot. RawMatrix: upper-triangular cells of
/// the adjacency matrix as ordinal values (ablation only).
enum class FeatureMode { OneHot, RawMatrix };

inline std::size_t feature_count(const SearchSpace& s, FeatureMode mode) {
    if (mode == FeatureMode::RawMatrix) return static_cast<std::size_t>(s.num_nodes() * (s.num_nodes() - 1) / 2);
    const std::size_t nops = s.edge_ops().size();
    if (s.kind == SpaceKind::NB201Like) return static_cast<std::size_t>(s.num_edges()) * nops;
    std::size_t n = 0;
    for (int k = 0; k < s.num_intermediates; ++k) n += 2 * static_cast<std::size_t>(s.num_inputs + k) * nops;
    return n;
}

inline FeatureRow featurize(const Genotype& g, FeatureMode mode = FeatureMode::OneHot) {
    const SearchSpace& s = g.space();
    FeatureRow row(feature_count(s, mode), 0.0);
    if (mode == FeatureMode::RawMatrix) {
        const AdjMatrix m = to_matrix(g);
        std::size_t k = 0;
        for (int i = 0; i < m.dim; ++i)
            for (int j = i + 1; j < m.dim; ++j) row[k++] = m.at(i, j);
        return row;
    }
    const auto ops = s.edge_ops();
    const std::size_t nops = ops.size();
    auto op_slot = [&](int op) {
        return static_cast<std::size_t>(std::find(ops.begin(), ops.end(), op) - ops.begin());
    };
    if (s.kind == SpaceKind::NB201Like) {
        for (std::size_t e = 0; e < g.size(); ++e) row[e * nops + op_slot(g.edge(e).op)] = 1.0;
        return row;
    }
    // Per intermediate node: two slots, each a one-hot over (predecessor, op).
    std::size_t offset = 0;
    std::size_t e = 0;
    for (int k = 0; k < s.num_intermediates; ++k) {
        const int dst = s.num_inputs + k;
        const std::size_t block = static_cast<std::size_t>(dst) * nops;
        for (int slot = 0; slot < 2 && e < g.size(); ++slot, ++e) {
            const Edge& edge = g.edge(e);
            row[offset + static_cast<std::size_t>(edge.src) * nops + op_slot(edge.op)] = 1.0;
            offset += block;
        }
    }
    return row;
}

/// Feature rows with targets, all drawn from one space.
struct TrainingSet {
    const SearchSpace* space = nullptr;
    FeatureMode mode = FeatureMode::OneHot;
    std::vector<FeatureRow> rows;
    std::vector<double> targets;

    void add(const Genotype& g, double target) {
        if (space == nullptr) space = &g.space();
        if (!(*space == g.space())) throw std::invalid_argument("training set mixes search spaces");
        rows.push_back(featurize(g, mode));
        targets.push_back(target);
    }
    void add(FeatureRow row, double target) {
        rows.push_back(std::move(row));
        targets.push_back(target);
    }
    std::size_t size() const { return rows.size(); }
};

// ---------------------------------------------------------------------------
// CART regression tree

/// Column-major copy of a feature matrix; tree fitting scans columns.
struct FeatureColumns {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    explicit FeatureColumns(const std::vector<FeatureRow>& x)
        : rows(x.size()), cols(x.empty() ? 0 : x.front().size()), data(rows * cols) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) data[c * rows + r] = x[r][c];
    }
    const double* column(std::size_t c) const { return data.data() + c * rows; }
};

class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 for leaves
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;  // mean target of the training rows reaching the node
    };

    /// Variance-reduction CART over `sample` (row indices, repeats allowed).
    /// At each node, non-constant features are drawn in random order until
    /// `max_features` have been inspected; ties in gain go to the lowest
    /// feature index.
    static RegressionTree fit(const FeatureColumns& x, std::span<const double> y, std::vector<std::size_t> sample,
                              int min_samples_leaf, int max_features, Rng& rng) {
        RegressionTree t;
        if (sample.empty()) throw std::invalid_argument("regression tree: empty sample");
        Scratch scratch(x.cols, sample.size());
        t.build(x, y, sample, 0, sample.size(), std::max(1, min_samples_leaf), max_features, rng, scratch);
        return t;
    }

    static RegressionTree fit(const std::vector<FeatureRow>& x, std::span<const double> y,
                              std::vector<std::size_t> sample, int min_samples_leaf, int max_features, Rng& rng) {
        return fit(FeatureColumns(x), y, std::move(sample), min_samples_leaf, max_features, rng);
    }

    double predict(std::span<const double> row) const {
        int i = 0;
        while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
            const Node& n = nodes_[static_cast<std::size_t>(i)];
            i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(i)].value;
    }

    const std::vector<Node>& nodes() const { return nodes_; }

private:
    struct Scratch {
        std::vector<std::size_t> features;
        std::vector<std::pair<double, double>> column;
        Scratch(std::size_t p, std::size_t n) : features(p), column(n) {}
    };

    int build(const FeatureColumns& x, std::span<const double> y, std::vector<std::size_t>& idx, std::size_t begin,
              std::size_t end, int min_leaf, int max_features, Rng& rng, Scratch& scratch) {
        const std::size_t m = end - begin;
        double sum = 0;
        double lo = y[idx[begin]], hi = lo;
        for (std::size_t i = begin; i < end; ++i) {
            const double v = y[idx[i]];
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{-1, 0.0, -1, -1, std::clamp(sum / static_cast<double>(m), lo, hi)});
        if (m < 2 * static_cast<std::size_t>(min_leaf) || lo == hi) return id;

        const std::size_t p = x.cols;
        auto& features = scratch.features;
        std::iota(features.begin(), features.end(), 0);

        const double parent_score = sum * sum / static_cast<double>(m);
        // Any split of a non-constant feature beats no split, so distinct
        // rows with distinct targets always end in separate leaves.
        double best_gain = -std::numeric_limits<double>::infinity();
        int best_feature = -1;
        double best_threshold = 0;
        int inspected = 0;

        auto consider = [&](std::size_t f, std::size_t nl, double left_sum, double threshold) {
            const std::size_t nr = m - nl;
            if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) return;
            const double right_sum = sum - left_sum;
            const double gain = left_sum * left_sum / static_cast<double>(nl) +
                                right_sum * right_sum / static_cast<double>(nr) - parent_score;
            const bool better = gain > best_gain * (1 + 1e-12) + 1e-15;
            const bool tie_lower = std::abs(gain - best_gain) <= 1e-12 * std::max(1.0, std::abs(gain)) &&
                                   best_feature >= 0 && static_cast<int>(f) < best_feature;
            if (better || tie_lower) {
                best_gain = gain;
                best_feature = static_cast<int>(f);
                best_threshold = threshold;
            }
        };

        for (std::size_t k = 0; k < p && inspected < max_features; ++k) {
            // Lazy Fisher-Yates draw.
            std::uniform_int_distribution<std::size_t> pick(k, p - 1);
            std::swap(features[k], features[pick(rng)]);
            const std::size_t f = features[k];
            const double* col = x.column(f);

            double cmin = col[idx[begin]], cmax = cmin;
            for (std::size_t i = begin; i < end; ++i) {
                cmin = std::min(cmin, col[idx[i]]);
                cmax = std::max(cmax, col[idx[i]]);
            }
            if (cmin == cmax) continue;  // constant here, not counted
            ++inspected;

            // Two-valued columns (one-hot bits) have a single candidate split.
            std::size_t n_lo = 0;
            double lo_sum = 0;
            bool two_valued = true;
            for (std::size_t i = begin; i < end && two_valued; ++i) {
                const double v = col[idx[i]];
                if (v == cmin) {
                    ++n_lo;
                    lo_sum += y[idx[i]];
                } else if (v != cmax) {
                    two_valued = false;
                }
            }
            if (two_valued) {
                consider(f, n_lo, lo_sum, 0.5 * (cmin + cmax));
                continue;
            }

            auto& column = scratch.column;
            for (std::size_t i = begin; i < end; ++i) column[i - begin] = {col[idx[i]], y[idx[i]]};
            std::sort(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(m));
            double left_sum = 0;
            for (std::size_t i = 0; i + 1 < m; ++i) {
                left_sum += column[i].second;
                if (column[i].first == column[i + 1].first) continue;
                consider(f, i + 1, left_sum, 0.5 * (column[i].first + column[i + 1].first));
            }
        }
        if (best_feature < 0) return id;

        const double* col = x.column(static_cast<std::size_t>(best_feature));
        auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                  idx.begin() + static_cast<std::ptrdiff_t>(end),
                                  [&](std::size_t r) { return col[r] <= best_threshold; });
        const std::size_t split = static_cast<std::size_t>(mid - idx.begin());
        nodes_[static_cast<std::size_t>(id)].feature = best_feature;
        nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
        const int left = build(x, y, idx, begin, split, min_leaf, max_features, rng, scratch);
        nodes_[static_cast<std::size_t>(id)].left = left;
        const int right = build(x, y, idx, split, end, min_leaf, max_features, rng, scratch);
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Random forest

struct ForestParams {
    int n_trees = 100;
    int min_samples_leaf = 1;
    int max_features_per_split = 0;  // 0 selects ceil(p / 3)
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

class Forest {
public:
    double predict_row(std::span<const double> row) const {
        double s = 0;
        for (const auto& t : trees_) s += t.predict(row);
        return std::clamp(s / static_cast<double>(trees_.size()), target_min_, target_max_);
    }

    const std::vector<RegressionTree>& trees() const { return trees_; }
    const ForestParams& params() const { return params_; }
    const SearchSpace* space() const { return space_; }
    FeatureMode mode() const { return mode_; }
    double target_min() const { return target_min_; }
    double target_max() const { return target_max_; }

private:
    friend Forest fit_forest(const TrainingSet&, const ForestParams&);
    std::vector<RegressionTree> trees_;
    ForestParams params_;
    const SearchSpace* space_ = nullptr;
    FeatureMode mode_ = FeatureMode::OneHot;
    double target_min_ = 0, target_max_ = 0;
};

namespace detail {

inline void check_training_set(const TrainingSet& data, std::size_t min_rows) {
    if (data.size() < min_rows)
        throw std::invalid_argument("predictor needs at least " + std::to_string(min_rows) + " rows, got " +
                                    std::to_string(data.size()));
    if (data.rows.size() != data.targets.size()) throw std::invalid_argument("row/target count mismatch");
    const std::size_t p = data.rows.front().size();
    for (const auto& r : data.rows)
        if (r.size() != p) throw std::invalid_argument("ragged feature rows");
}

}  // namespace detail

/// Each tree draws from its own stream derived from (seed, tree index), so
/// the result does not depend on fitting order.
inline Forest fit_forest(const TrainingSet& data, const ForestParams& params) {
    detail::check_training_set(data, 1);
    if (params.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
    for (double t : data.targets)
        if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("forest targets must lie in [0, 1]");

    Forest f;
    f.params_ = params;
    f.space_ = data.space;
    f.mode_ = data.mode;
    auto [lo, hi] = std::minmax_element(data.targets.begin(), data.targets.end());
    f.target_min_ = *lo;
    f.target_max_ = *hi;

    const std::size_t n = data.size();
    const std::size_t p = data.rows.front().size();
    const int max_features = params.max_features_per_split > 0
                                 ? params.max_features_per_split
                                 : static_cast<int>(std::max<std::size_t>(1, (p + 2) / 3));
    const FeatureColumns columns(data.rows);
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(t));
        std::vector<std::size_t> sample(n);
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> draw(0, n - 1);
            for (auto& s : sample) s = draw(rng);
        } else {
            std::iota(sample.begin(), sample.end(), 0);
        }
        f.trees_.push_back(RegressionTree::fit(columns, data.targets, std::move(sample),
                                               params.min_samples_leaf, max_features, rng));
    }
    return f;
}

inline double predict(const Forest& f, const Genotype& g) {
    if (f.space() != nullptr && !(*f.space() == g.space()))
        throw std::invalid_argument("forest was trained on space " + f.space()->name() + ", genotype is " +
                                    g.space().name());
    return f.predict_row(featurize(g, f.mode()));
}

// ---------------------------------------------------------------------------
// Linear baseline

struct LinearModel {
    double intercept = 0;
    Eigen::VectorXd coef;
    const SearchSpace* space = nullptr;
    FeatureMode mode = FeatureMode::OneHot;

    double predict_row(std::span<const double> row) const {
        double y = intercept;
        for (Eigen::Index i = 0; i < coef.size(); ++i) y += coef[i] * row[static_cast<std::size_t>(i)];
        return y;
    }
};

/// Least squares on centred features with a small ridge term, so rank
/// deficient designs (one-hot blocks, repeated rows) stay solvable. The
/// intercept is not penalised.
inline LinearModel fit_linear(const TrainingSet& data, double ridge = 1e-10) {
    detail::check_training_set(data, 2);
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto p = static_cast<Eigen::Index>(data.rows.front().size());
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) x(i, j) = data.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        y[i] = data.targets[static_cast<std::size_t>(i)];
    }
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    x.rowwise() -= x_mean;
    y.array() -= y_mean;

    Eigen::MatrixXd gram = x.transpose() * x;
    const double scale = std::max(1.0, gram.trace() / static_cast<double>(std::max<Eigen::Index>(p, 1)));
    gram.diagonal().array() += ridge * scale;

    LinearModel m;
    m.coef = gram.ldlt().solve(x.transpose() * y);
    m.intercept = y_mean - x_mean.dot(m.coef);
    m.space = data.space;
    m.mode = data.mode;
    return m;
}

inline double predict_linear(const LinearModel& m, const Genotype& g) {
    if (m.space != nullptr && !(*m.space == g.space()))
        throw std::invalid_argument("linear model was trained on a different search space");
    return m.predict_row(featurize(g, m.mode));
}

}  // namespace prenas
