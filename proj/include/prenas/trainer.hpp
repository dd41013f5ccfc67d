/**
 * @file trainer.hpp
 * @brief Desk-scale differentiable realisation of cell genotypes, SGD
 *        training and parent-to-child weight inheritance.
 *
 * A cell maps a feature vector x in R^d to a class score:
 *
 *   input node(s)   h = x
 *   conv-class edge ReLU(W h), W a learned d x d matrix
 *   skip edge       h
 *   none edge       0
 *   pool edge       P h, P a fixed circulant 3-tap averaging matrix
 *   node value      sum of incoming edge outputs
 *   cell output     NB201Like: the output node; DartsLike: sum of intermediates
 *   logits          H * output + b
 *
 * Parameters are keyed by edge identity (src, dst, slot), where slot counts
 * earlier edges with the same (src, dst) pair in canonical order.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "prenas/error.hpp"
#include "prenas/evaluator.hpp"
#include "prenas/genotype.hpp"
#include "prenas/mutation.hpp"
#include "prenas/rng.hpp"

namespace prenas {

// ---------------------------------------------------------------------------
// Synthetic classification data

struct BlobParams {
    int dim = 8;
    int classes = 3;
    int n_train = 2000;
    int n_val = 500;
    double separation = 3.0;
    double nonlinearity = 1.0;  // warps the features through a random tanh layer
    std::uint64_t seed = 7;
    int clusters_per_class = 3;  // 1 gives linearly separable blobs
};

/// Column-major samples: each column of `*_x` is one feature vector.
struct ClassificationData {
    Eigen::MatrixXd train_x;
    std::vector<int> train_y;
    Eigen::MatrixXd val_x;
    std::vector<int> val_y;
    int classes = 0;

    int dim() const { return static_cast<int>(train_x.rows()); }
};

/// Gaussian blobs (`clusters_per_class` per class) passed through
/// x + a * tanh(M x) for a fixed random M.
inline ClassificationData make_blob_dataset(const BlobParams& p) {
    if (p.dim < 1 || p.classes < 2 || p.n_train < 1 || p.n_val < 1 || p.clusters_per_class < 1)
        throw std::invalid_argument("blob dataset: invalid size parameters");
    Rng rng = make_rng(p.seed, 0xb10b);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double center_scale = p.separation / std::sqrt(2.0);
    const int n_centers = p.classes * p.clusters_per_class;
    Eigen::MatrixXd centers(p.dim, n_centers);
    for (int k = 0; k < n_centers; ++k) {
        Eigen::VectorXd c(p.dim);
        for (int i = 0; i < p.dim; ++i) c[i] = normal(rng);
        centers.col(k) = c.normalized() * center_scale * std::sqrt(2.0);
    }
    Eigen::MatrixXd mix(p.dim, p.dim);
    for (int i = 0; i < p.dim; ++i)
        for (int j = 0; j < p.dim; ++j) mix(i, j) = normal(rng) * 1.5 / std::sqrt(static_cast<double>(p.dim));

    auto draw = [&](int n, Eigen::MatrixXd& x, std::vector<int>& y) {
        x.resize(p.dim, n);
        y.resize(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s) {
            const int k = s % p.classes;
            const int cluster = p.clusters_per_class == 1
                                    ? 0
                                    : std::uniform_int_distribution<int>(0, p.clusters_per_class - 1)(rng);
            Eigen::VectorXd v = centers.col(k + p.classes * cluster);
            for (int i = 0; i < p.dim; ++i) v[i] += normal(rng);
            if (p.nonlinearity != 0.0) v += p.nonlinearity * (mix * v).array().tanh().matrix();
            x.col(s) = v;
            y[static_cast<std::size_t>(s)] = k;
        }
    };
    ClassificationData d;
    d.classes = p.classes;
    draw(p.n_train, d.train_x, d.train_y);
    draw(p.n_val, d.val_x, d.val_y);
    return d;
}

// ---------------------------------------------------------------------------
// Model

struct EdgeKey {
    int src = 0;
    int dst = 0;
    int slot = 0;
    auto operator<=>(const EdgeKey&) const = default;
};

/// Keys of every edge, aligned with g.edges().
inline std::vector<EdgeKey> edge_keys(const Genotype& g) {
    std::vector<EdgeKey> keys;
    keys.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Edge& e = g.edge(i);
        int slot = 0;
        for (std::size_t j = 0; j < i; ++j)
            if (g.edge(j).src == e.src && g.edge(j).dst == e.dst) ++slot;
        keys.push_back({e.src, e.dst, slot});
    }
    return keys;
}

inline bool has_parameters(const SearchSpace& s, int op) { return s.op_class(op) == OpClass::Conv; }

struct CellModel {
    Genotype genotype;
    int width = 0;
    std::map<EdgeKey, Eigen::MatrixXd> params;
    Eigen::MatrixXd head_w;  // classes x width
    Eigen::VectorXd head_b;

    int classes() const { return static_cast<int>(head_w.rows()); }
};

namespace detail {

inline Eigen::MatrixXd kaiming(int rows, int cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(cols)));
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

inline Eigen::MatrixXd pool_matrix(int d) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int off : {-1, 0, 1}) p(i, ((i + off) % d + d) % d) += 1.0 / 3.0;
    return p;
}

}  // namespace detail

/// Fresh model with Normal(0, sqrt(2/d)) weights and a zero head bias.
inline CellModel realize(const Genotype& g, int width, int classes, Rng& rng) {
    if (width < 1) throw std::invalid_argument("realize: width must be >= 1");
    if (classes < 2) throw std::invalid_argument("realize: need at least 2 classes");
    require_valid(g);
    CellModel m{g, width, {}, {}, {}};
    const auto keys = edge_keys(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (has_parameters(g.space(), g.edge(i).op)) m.params[keys[i]] = detail::kaiming(width, width, rng);
    m.head_w = detail::kaiming(classes, width, rng);
    m.head_b = Eigen::VectorXd::Zero(classes);
    return m;
}

// ---------------------------------------------------------------------------
// Forward / backward

struct Gradients {
    std::map<EdgeKey, Eigen::MatrixXd> params;
    Eigen::MatrixXd head_w;
    Eigen::VectorXd head_b;
};

namespace detail {

struct ForwardPass {
    std::vector<Eigen::MatrixXd> nodes;
    std::vector<Eigen::MatrixXd> preact;  // per edge, conv edges only
    Eigen::MatrixXd output;
    Eigen::MatrixXd logits;
};

inline ForwardPass forward(const CellModel& m, const Eigen::MatrixXd& x) {
    const Genotype& g = m.genotype;
    const SearchSpace& s = g.space();
    if (x.rows() != m.width) throw std::invalid_argument("input dimension does not match model width");
    const auto keys = edge_keys(g);
    const Eigen::MatrixXd pool = pool_matrix(m.width);

    ForwardPass f;
    f.nodes.assign(static_cast<std::size_t>(s.num_nodes()), Eigen::MatrixXd::Zero(m.width, x.cols()));
    f.preact.resize(g.size());
    for (int i = 0; i < s.num_inputs; ++i) f.nodes[static_cast<std::size_t>(i)] = x;
    for (std::size_t e = 0; e < g.size(); ++e) {
        const Edge& edge = g.edge(e);
        const Eigen::MatrixXd& h = f.nodes[static_cast<std::size_t>(edge.src)];
        auto& dst = f.nodes[static_cast<std::size_t>(edge.dst)];
        switch (s.op_class(edge.op)) {
            case OpClass::None: break;
            case OpClass::Skip: dst += h; break;
            case OpClass::Pool: dst += pool * h; break;
            case OpClass::Conv:
                f.preact[e] = m.params.at(keys[e]) * h;
                dst += f.preact[e].cwiseMax(0.0);
                break;
        }
    }
    if (s.kind == SpaceKind::NB201Like) {
        f.output = f.nodes[static_cast<std::size_t>(s.output_node())];
    } else {
        f.output = Eigen::MatrixXd::Zero(m.width, x.cols());
        for (int n = s.num_inputs; n < s.num_inputs + s.num_intermediates; ++n)
            f.output += f.nodes[static_cast<std::size_t>(n)];
    }
    f.logits = (m.head_w * f.output).colwise() + m.head_b;
    return f;
}

/// Column-wise softmax probabilities and mean cross-entropy.
inline double softmax_xent(const Eigen::MatrixXd& logits, std::span<const int> y, Eigen::MatrixXd& probs) {
    probs = logits;
    double loss = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const double mx = probs.col(c).maxCoeff();
        probs.col(c) = (probs.col(c).array() - mx).exp();
        const double z = probs.col(c).sum();
        probs.col(c) /= z;
        loss -= std::log(std::max(probs(y[static_cast<std::size_t>(c)], c), 1e-300));
    }
    return loss / static_cast<double>(logits.cols());
}

}  // namespace detail

inline Eigen::MatrixXd forward_logits(const CellModel& m, const Eigen::MatrixXd& x) {
    return detail::forward(m, x).logits;
}

/// Mean cross-entropy over the columns of x; fills `grads` when non-null.
inline double loss_and_gradients(const CellModel& m, const Eigen::MatrixXd& x, std::span<const int> y,
                                 Gradients* grads) {
    if (static_cast<std::size_t>(x.cols()) != y.size()) throw std::invalid_argument("label count mismatch");
    const detail::ForwardPass f = detail::forward(m, x);
    Eigen::MatrixXd probs;
    const double loss = detail::softmax_xent(f.logits, y, probs);
    if (grads == nullptr) return loss;

    const Genotype& g = m.genotype;
    const SearchSpace& s = g.space();
    const auto keys = edge_keys(g);
    const Eigen::MatrixXd pool = detail::pool_matrix(m.width);

    Eigen::MatrixXd dlogits = probs;
    for (Eigen::Index c = 0; c < dlogits.cols(); ++c) dlogits(y[static_cast<std::size_t>(c)], c) -= 1.0;
    dlogits /= static_cast<double>(x.cols());

    grads->head_w = dlogits * f.output.transpose();
    grads->head_b = dlogits.rowwise().sum();
    grads->params.clear();
    const Eigen::MatrixXd dout = m.head_w.transpose() * dlogits;

    std::vector<Eigen::MatrixXd> dnode(static_cast<std::size_t>(s.num_nodes()),
                                       Eigen::MatrixXd::Zero(m.width, x.cols()));
    if (s.kind == SpaceKind::NB201Like) {
        dnode[static_cast<std::size_t>(s.output_node())] = dout;
    } else {
        for (int n = s.num_inputs; n < s.num_inputs + s.num_intermediates; ++n)
            dnode[static_cast<std::size_t>(n)] = dout;
    }
    // Edges are sorted by destination, so walking them backwards finishes
    // every node's gradient before it is propagated further.
    for (std::size_t e = g.size(); e-- > 0;) {
        const Edge& edge = g.edge(e);
        const Eigen::MatrixXd& up = dnode[static_cast<std::size_t>(edge.dst)];
        auto& down = dnode[static_cast<std::size_t>(edge.src)];
        switch (s.op_class(edge.op)) {
            case OpClass::None: break;
            case OpClass::Skip: down += up; break;
            case OpClass::Pool: down += pool.transpose() * up; break;
            case OpClass::Conv: {
                const Eigen::MatrixXd dz = up.cwiseProduct((f.preact[e].array() > 0.0).cast<double>().matrix());
                grads->params[keys[e]] = dz * f.nodes[static_cast<std::size_t>(edge.src)].transpose();
                down += m.params.at(keys[e]).transpose() * dz;
                break;
            }
        }
    }
    return loss;
}

inline double classification_accuracy(const CellModel& m, const Eigen::MatrixXd& x, std::span<const int> y) {
    if (x.cols() == 0) throw std::invalid_argument("accuracy of an empty split");
    const Eigen::MatrixXd logits = forward_logits(m, x);
    std::size_t hits = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        Eigen::Index arg = 0;
        logits.col(c).maxCoeff(&arg);
        if (arg == y[static_cast<std::size_t>(c)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.cols());
}

// ---------------------------------------------------------------------------
// Training

enum class TrainMode { Scratch, Inherit };

/// Scratch: cosine-annealed learning rate. Inherit: constant learning rate,
/// half the epochs.
struct TrainConfig {
    TrainMode mode = TrainMode::Scratch;
    int epochs = 20;
    double learning_rate = 0.025;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int batch_size = 128;

    static TrainConfig scratch(int epochs = 20) { return {TrainMode::Scratch, epochs, 0.025, 0.9, 1e-4, 128}; }
    static TrainConfig inherit(int scratch_epochs = 20) {
        return {TrainMode::Inherit, std::max(1, scratch_epochs / 2), 0.01, 0.9, 1e-4, 128};
    }
};

/// Mini-batch momentum SGD. Returns the final validation accuracy; cost is
/// the number of epochs. When `epoch_loss` is given, the full training loss
/// after each epoch is appended to it.
inline EvalResult train(CellModel& m, const TrainConfig& cfg, const ClassificationData& data, Rng& rng,
                        std::vector<double>* epoch_loss = nullptr) {
    const auto n = static_cast<std::size_t>(data.train_x.cols());
    if (n == 0 || data.val_x.cols() == 0) throw std::invalid_argument("train: empty dataset");
    if (cfg.epochs < 0 || cfg.batch_size < 1) throw std::invalid_argument("train: invalid configuration");

    std::map<EdgeKey, Eigen::MatrixXd> vel;
    for (const auto& [k, w] : m.params) vel[k] = Eigen::MatrixXd::Zero(w.rows(), w.cols());
    Eigen::MatrixXd vel_w = Eigen::MatrixXd::Zero(m.head_w.rows(), m.head_w.cols());
    Eigen::VectorXd vel_b = Eigen::VectorXd::Zero(m.head_b.size());

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Gradients grads;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.learning_rate;
        if (cfg.mode == TrainMode::Scratch)
            lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * epoch / static_cast<double>(cfg.epochs)));
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<Eigen::Index> cols(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
            const Eigen::MatrixXd xb = data.train_x(Eigen::all, cols);
            std::vector<int> yb;
            yb.reserve(cols.size());
            for (auto c : cols) yb.push_back(data.train_y[static_cast<std::size_t>(c)]);

            const double loss = loss_and_gradients(m, xb, yb, &grads);
            if (!std::isfinite(loss)) throw Divergence("divergence: non-finite loss in epoch " + std::to_string(epoch));

            for (auto& [k, w] : m.params) {
                Eigen::MatrixXd& v = vel.at(k);
                v = cfg.momentum * v + grads.params.at(k) + cfg.weight_decay * w;
                w -= lr * v;
            }
            vel_w = cfg.momentum * vel_w + grads.head_w + cfg.weight_decay * m.head_w;
            m.head_w -= lr * vel_w;
            vel_b = cfg.momentum * vel_b + grads.head_b;
            m.head_b -= lr * vel_b;
        }
        if (epoch_loss != nullptr) {
            const double full = loss_and_gradients(m, data.train_x, data.train_y, nullptr);
            if (!std::isfinite(full)) throw Divergence("divergence: non-finite loss in epoch " + std::to_string(epoch));
            epoch_loss->push_back(full);
        }
    }
    return EvalResult{classification_accuracy(m, data.val_x, data.val_y), std::nullopt,
                      static_cast<double>(cfg.epochs)};
}

// ---------------------------------------------------------------------------
// Weight inheritance

/// Child model for `child_g = apply_mutation(parent_g, record)`. Every child
/// edge that matches an unchanged parent edge by (src, dst, op) takes that
/// edge's tensor; the mutated edge, whether its op or its source changed, is
/// drawn fresh from Normal(0, sqrt(2/d)). The head is copied.
inline CellModel inherit_weights(const CellModel& parent_model, const Genotype& parent_g, const Genotype& child_g,
                                 const MutationRecord& record, Rng& rng) {
    if (!(parent_model.genotype == parent_g)) throw std::invalid_argument("parent model does not realise parent genotype");
    Genotype expected = apply_mutation(parent_g, record);
    if (!(expected == child_g)) throw std::invalid_argument("mutation record does not map parent to child");

    const auto parent_keys = edge_keys(parent_g);
    const auto child_keys = edge_keys(child_g);
    std::vector<bool> consumed(parent_g.size(), false);
    consumed[static_cast<std::size_t>(record.edge_index)] = true;

    CellModel child{child_g, parent_model.width, {}, parent_model.head_w, parent_model.head_b};
    const SearchSpace& s = child_g.space();
    for (std::size_t i = 0; i < child_g.size(); ++i) {
        const Edge& e = child_g.edge(i);
        int match = -1;
        for (std::size_t j = 0; j < parent_g.size(); ++j)
            if (!consumed[j] && parent_g.edge(j) == e) {
                match = static_cast<int>(j);
                break;
            }
        if (match >= 0) consumed[static_cast<std::size_t>(match)] = true;
        if (!has_parameters(s, e.op)) continue;
        if (match >= 0)
            child.params[child_keys[i]] = parent_model.params.at(parent_keys[static_cast<std::size_t>(match)]);
        else
            child.params[child_keys[i]] = detail::kaiming(child.width, child.width, rng);
    }
    return child;
}

}  // namespace prenas
