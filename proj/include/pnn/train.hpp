#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "pnn/dataio.hpp"
#include "pnn/errors.hpp"
#include "pnn/metrics.hpp"
#include "pnn/network.hpp"
#include "pnn/rng.hpp"

namespace pnn {

enum class TrainMethod { A, B };

inline const char* to_string(TrainMethod m) { return m == TrainMethod::A ? "A" : "B"; }

/// Training schedule and hyperparameters. Method A trains the sub-networks
/// separately for epochs_separate epochs, connects them, then trains the
/// whole network for epochs_joint more. Method B connects before any
/// training and runs epochs_joint epochs.
struct TrainConfig {
    TrainMethod method = TrainMethod::A;
    std::size_t epochs_separate = 60;
    std::size_t epochs_joint = 40;
    double eta = 0.1;        // learning rate
    double lambda = 5.0;     // L2 coefficient
    std::size_t batch_size = 10;
    std::uint64_t seed = 1;
    ActivationKind activation = ActivationKind::Sigmoid;
    ActivationKind head = ActivationKind::Sigmoid;
    std::size_t train_size = 0;  // n in the L2 decay factor; 0 = data size
};

// Stream ids for child generators (derived as seed XOR id, see rng.hpp).
// Initialization of sub-network i uses 1+i, its separate-phase shuffles use
// 101+i, joint-phase shuffles use 201.
inline constexpr std::uint64_t kInitStreamBase = 1;
inline constexpr std::uint64_t kSeparateShuffleStreamBase = 101;
inline constexpr std::uint64_t kJointShuffleStream = 201;

/// Cross-entropy cost C = -sum_j [y_j ln a_j + (1-y_j) ln(1-a_j)].
/// Activations are clamped to [1e-12, 1-1e-12] so the cost stays finite;
/// gradients never need the clamp because the sigmoid-head delta is a - y.
inline double cost(const Vector& output_activation, const Vector& target) {
    if (output_activation.size() != target.size())
        throw DimensionError(detail::msg("cost: activation length ", output_activation.size(),
                                         " vs target length ", target.size()));
    double c = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) {
        const double a = std::clamp(output_activation.data[j], 1e-12, 1.0 - 1e-12);
        const double y = target.data[j];
        c -= y * std::log(a) + (1.0 - y) * std::log(1.0 - a);
    }
    return c;
}

/// Partial derivatives of the per-example cost, shaped like the model.
struct FnnGradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

struct SubnetGradients {
    std::vector<Matrix> hidden_weights;
    std::vector<Vector> hidden_biases;
    Matrix output_block;
};

struct PnnGradients {
    std::vector<SubnetGradients> subnets;
    Vector shared_output_bias;
};

inline FnnGradients zero_gradients(const FnnModel& model) {
    FnnGradients g;
    for (const auto& w : model.weights) g.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : model.biases) g.biases.emplace_back(b.size());
    return g;
}

inline PnnGradients zero_gradients(const PnnModel& model) {
    PnnGradients g;
    for (const auto& s : model.subnets) {
        SubnetGradients sg;
        for (const auto& w : s.hidden_weights) sg.hidden_weights.emplace_back(w.rows, w.cols);
        for (const auto& b : s.hidden_biases) sg.hidden_biases.emplace_back(b.size());
        sg.output_block = Matrix(s.output_block.rows, s.output_block.cols);
        g.subnets.push_back(std::move(sg));
    }
    g.shared_output_bias = Vector(model.output_size());
    return g;
}

namespace detail {

inline void add_outer_into(Matrix& acc, const Vector& a, const Vector& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        double* row = acc.data.data() + i * acc.cols;
        const double ai = a.data[i];
        for (std::size_t j = 0; j < b.size(); ++j) row[j] += ai * b.data[j];
    }
}

inline void add_into(Vector& acc, const Vector& v) {
    for (std::size_t i = 0; i < v.size(); ++i) acc.data[i] += v.data[i];
}

/// delta for the output layer. The sigmoid head with cross-entropy cost
/// simplifies to a - y exactly; other heads (sensitivity studies only)
/// go through the chain rule with clamped activations.
inline Vector output_delta(ActivationKind head, const Vector& z, const Vector& a,
                           const Vector& target) {
    Vector delta(a.size());
    if (head == ActivationKind::Sigmoid) {
        for (std::size_t j = 0; j < a.size(); ++j) delta.data[j] = a.data[j] - target.data[j];
        return delta;
    }
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double aj = std::clamp(a.data[j], 1e-12, 1.0 - 1e-12);
        const double dc = (aj - target.data[j]) / (aj * (1.0 - aj));
        delta.data[j] = dc * activate_prime(head, z.data[j]);
    }
    return delta;
}

/// Propagates delta one layer down: (W^T delta) elementwise f'(z_prev).
inline Vector backstep(const Matrix& w, const Vector& delta, ActivationKind kind,
                       const Vector& z_prev) {
    Vector down = transpose_matvec(w, delta);
    for (std::size_t i = 0; i < down.size(); ++i)
        down.data[i] *= activate_prime(kind, z_prev.data[i]);
    return down;
}

}  // namespace detail

/// Adds the exact gradient of the unregularized per-example cost into `acc`.
inline void backprop_accumulate(const FnnModel& model, const Vector& input, const Vector& target,
                                FnnGradients& acc) {
    const FnnForward fwd = forward_fnn(model, input);
    const std::size_t layers = model.layer_count();
    Vector delta =
        detail::output_delta(model.head, fwd.zs.back(), fwd.activations.back(), target);
    for (std::size_t l = layers; l-- > 0;) {
        detail::add_into(acc.biases[l], delta);
        const Vector& below = l == 0 ? input : fwd.activations[l - 1];
        detail::add_outer_into(acc.weights[l], delta, below);
        if (l > 0)
            delta = detail::backstep(model.weights[l], delta, model.activation, fwd.zs[l - 1]);
    }
}

inline FnnGradients backprop(const FnnModel& model, const Vector& input, const Vector& target) {
    FnnGradients g = zero_gradients(model);
    backprop_accumulate(model, input, target, g);
    return g;
}

inline FnnGradients backprop(const FnnModel& model, const Example& example) {
    return backprop(model, example.pixels, one_hot(example.label));
}

/// PNN backprop: the output delta is shared; it feeds the shared bias and
/// each output block, then propagates backward into every hidden stack
/// independently (there are no parameters linking hidden layers of
/// different sub-networks).
inline void backprop_accumulate(const PnnModel& model, const Vector& input, const Vector& target,
                                PnnGradients& acc) {
    const PnnForward fwd = forward_pnn(model, input);
    const Vector out_delta =
        detail::output_delta(model.head, fwd.output_z, fwd.output_activation, target);
    detail::add_into(acc.shared_output_bias, out_delta);
    for (std::size_t i = 0; i < model.subnet_count(); ++i) {
        const SubnetStack& s = model.subnets[i];
        const HiddenTrace& trace = fwd.hidden[i];
        detail::add_outer_into(acc.subnets[i].output_block, out_delta, trace.last_activation());
        Vector delta = detail::backstep(s.output_block, out_delta, model.activation,
                                        trace.zs.back());
        for (std::size_t l = s.hidden_weights.size(); l-- > 0;) {
            detail::add_into(acc.subnets[i].hidden_biases[l], delta);
            const Vector& below = l == 0 ? input : trace.activations[l - 1];
            detail::add_outer_into(acc.subnets[i].hidden_weights[l], delta, below);
            if (l > 0)
                delta = detail::backstep(s.hidden_weights[l], delta, model.activation,
                                         trace.zs[l - 1]);
        }
    }
}

inline PnnGradients backprop(const PnnModel& model, const Vector& input, const Vector& target) {
    PnnGradients g = zero_gradients(model);
    backprop_accumulate(model, input, target, g);
    return g;
}

inline PnnGradients backprop(const PnnModel& model, const Example& example) {
    return backprop(model, example.pixels, one_hot(example.label));
}

namespace detail {

inline void zero_fill(Matrix& m) { std::fill(m.data.begin(), m.data.end(), 0.0); }
inline void zero_fill(Vector& v) { std::fill(v.data.begin(), v.data.end(), 0.0); }

inline void zero_fill(FnnGradients& g) {
    for (auto& w : g.weights) zero_fill(w);
    for (auto& b : g.biases) zero_fill(b);
}

inline void zero_fill(PnnGradients& g) {
    for (auto& s : g.subnets) {
        for (auto& w : s.hidden_weights) zero_fill(w);
        for (auto& b : s.hidden_biases) zero_fill(b);
        zero_fill(s.output_block);
    }
    zero_fill(g.shared_output_bias);
}

/// w <- decay * w - step * gsum, b <- b - step * gsum. L2 decay applies to
/// weights only.
inline void apply_weight(Matrix& w, const Matrix& gsum, double decay, double step) {
    for (std::size_t i = 0; i < w.data.size(); ++i)
        w.data[i] = decay * w.data[i] - step * gsum.data[i];
}

inline void apply_bias(Vector& b, const Vector& gsum, double step) {
    for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] -= step * gsum.data[i];
}

template <class Model, class Grads, class AccumulateFn, class ApplyFn>
void sgd_epoch_impl(Model& model, std::span<const Example> data, const TrainConfig& cfg,
                    Rng& rng, Grads& scratch, AccumulateFn&& accumulate, ApplyFn&& apply) {
    if (data.empty()) throw ConfigError("sgd_epoch: training data is empty");
    if (cfg.batch_size == 0 || cfg.batch_size > data.size())
        throw ConfigError(detail::msg("sgd_epoch: batch size ", cfg.batch_size,
                                      " invalid for ", data.size(), " examples"));
    const double n =
        static_cast<double>(cfg.train_size > 0 ? cfg.train_size : data.size());
    const double decay = 1.0 - cfg.eta * cfg.lambda / n;

    std::vector<std::uint32_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t len = std::min(cfg.batch_size, order.size() - start);
        zero_fill(scratch);
        for (std::size_t k = 0; k < len; ++k) {
            const Example& ex = data[order[start + k]];
            accumulate(model, ex.pixels, one_hot(ex.label), scratch);
        }
        apply(model, scratch, decay, cfg.eta / static_cast<double>(len));
    }
}

}  // namespace detail

/// One epoch of mini-batch stochastic gradient descent with L2
/// regularization: data is shuffled, and per batch
///   w <- (1 - eta*lambda/n) w - (eta/batch_len) sum grad_w
///   b <- b - (eta/batch_len) sum grad_b
/// where n is the training-set size. A trailing partial batch is processed
/// as its own batch.
inline void sgd_epoch(FnnModel& model, std::span<const Example> data, const TrainConfig& cfg,
                      Rng& rng) {
    FnnGradients scratch = zero_gradients(model);
    detail::sgd_epoch_impl(
        model, data, cfg, rng, scratch,
        [](const FnnModel& m, const Vector& x, const Vector& y, FnnGradients& g) {
            backprop_accumulate(m, x, y, g);
        },
        [](FnnModel& m, const FnnGradients& g, double decay, double step) {
            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                detail::apply_weight(m.weights[l], g.weights[l], decay, step);
                detail::apply_bias(m.biases[l], g.biases[l], step);
            }
        });
}

/// PNN epoch: identical update rule; the shared output bias is trainable,
/// the frozen per-sub-network bias copies are never touched.
inline void sgd_epoch(PnnModel& model, std::span<const Example> data, const TrainConfig& cfg,
                      Rng& rng) {
    PnnGradients scratch = zero_gradients(model);
    detail::sgd_epoch_impl(
        model, data, cfg, rng, scratch,
        [](const PnnModel& m, const Vector& x, const Vector& y, PnnGradients& g) {
            backprop_accumulate(m, x, y, g);
        },
        [](PnnModel& m, const PnnGradients& g, double decay, double step) {
            for (std::size_t i = 0; i < m.subnets.size(); ++i) {
                SubnetStack& s = m.subnets[i];
                const SubnetGradients& sg = g.subnets[i];
                for (std::size_t l = 0; l < s.hidden_weights.size(); ++l) {
                    detail::apply_weight(s.hidden_weights[l], sg.hidden_weights[l], decay, step);
                    detail::apply_bias(s.hidden_biases[l], sg.hidden_biases[l], step);
                }
                detail::apply_weight(s.output_block, sg.output_block, decay, step);
            }
            detail::apply_bias(m.shared_output_bias, g.shared_output_bias, step);
        });
}

/// End-of-epoch notification. `model` points at the current parallel
/// network: during method A's separate phase this is a throwaway connection
/// of the current sub-networks, evaluated for the reference columns of the
/// metrics table (those rows have no meaning as joint-training results).
struct EpochEvent {
    std::size_t epoch = 0;
    EpochMetrics metrics;
    const PnnModel* model = nullptr;
    bool alpha_improved = false;      // alpha_para strictly improved (joint phase only)
    bool connection_boundary = false; // fired once when method A connects
};

using EpochSink = std::function<void(const EpochEvent&)>;

struct TrainResult {
    std::vector<EpochMetrics> history;
    PnnModel final_model;
    PnnModel best_model;       // highest alpha_para over the joint phase
    std::size_t best_epoch = 0;
    double best_alpha = 0.0;
};

namespace detail {

struct BestTracker {
    PnnModel model;
    std::size_t epoch = 0;
    double alpha = -1.0;

    bool observe(const PnnModel& m, std::size_t e, double a) {
        if (a <= alpha) return false;
        model = m;
        epoch = e;
        alpha = a;
        return true;
    }
};

}  // namespace detail

/// Method A: train each sub-network separately for epochs_separate epochs,
/// connect, then train the whole network jointly for epochs_joint epochs.
/// Metrics are recorded every epoch; best-model tracking starts at the
/// connection.
inline TrainResult run_method_A(const std::vector<std::vector<std::size_t>>& archs,
                                const TrainConfig& cfg, const Dataset& data,
                                const EpochSink& sink = {}) {
    if (archs.size() < 2)
        throw ConfigError(detail::msg("need at least 2 sub-networks, got ", archs.size()));
    if (cfg.epochs_separate < 1)
        throw ConfigError("method A needs epochs_separate >= 1");
    if (data.train.empty() || data.eval.empty())
        throw ConfigError("training and evaluation sets must be nonempty");

    const Rng base(cfg.seed);
    TrainConfig run_cfg = cfg;
    if (run_cfg.train_size == 0) run_cfg.train_size = data.train.size();

    std::vector<FnnModel> nets;
    std::vector<Rng> shuffle_rngs;
    for (std::size_t i = 0; i < archs.size(); ++i) {
        Rng init_rng = base.child(kInitStreamBase + i);
        nets.push_back(init_fnn(archs[i], cfg.activation, init_rng, cfg.head));
        shuffle_rngs.push_back(base.child(kSeparateShuffleStreamBase + i));
    }

    TrainResult result;
    detail::BestTracker best;

    for (std::size_t epoch = 0; epoch < cfg.epochs_separate; ++epoch) {
        for (std::size_t i = 0; i < nets.size(); ++i)
            sgd_epoch(nets[i], data.train, run_cfg, shuffle_rngs[i]);
        const PnnModel reference = connect(nets);
        EpochEvent ev;
        ev.epoch = epoch;
        ev.metrics = evaluate_metrics(reference, data.eval, epoch);
        ev.model = &reference;
        result.history.push_back(ev.metrics);
        if (sink) sink(ev);
    }

    PnnModel pnn = connect(nets);
    {
        EpochEvent ev;
        ev.epoch = cfg.epochs_separate;
        ev.metrics = result.history.back();
        ev.model = &pnn;
        ev.connection_boundary = true;
        if (sink) sink(ev);
    }

    Rng joint_rng = base.child(kJointShuffleStream);
    for (std::size_t j = 0; j < cfg.epochs_joint; ++j) {
        const std::size_t epoch = cfg.epochs_separate + j;
        sgd_epoch(pnn, data.train, run_cfg, joint_rng);
        EpochEvent ev;
        ev.epoch = epoch;
        ev.metrics = evaluate_metrics(pnn, data.eval, epoch);
        ev.model = &pnn;
        ev.alpha_improved = best.observe(pnn, epoch, ev.metrics.alpha_para);
        result.history.push_back(ev.metrics);
        if (sink) sink(ev);
    }

    if (cfg.epochs_joint == 0) {
        // no joint phase: the freshly connected network is the optimum, and
        // its metrics are the final separate-phase row
        best.observe(pnn, cfg.epochs_separate - 1, result.history.back().alpha_para);
    }

    result.final_model = std::move(pnn);
    result.best_model = std::move(best.model);
    result.best_epoch = best.epoch;
    result.best_alpha = best.alpha;
    return result;
}

/// Method B: connect freshly initialized sub-networks before any training
/// and train jointly for epochs_joint epochs.
inline TrainResult run_method_B(const std::vector<std::vector<std::size_t>>& archs,
                                const TrainConfig& cfg, const Dataset& data,
                                const EpochSink& sink = {}) {
    if (archs.size() < 2)
        throw ConfigError(detail::msg("need at least 2 sub-networks, got ", archs.size()));
    if (cfg.epochs_separate != 0)
        throw ConfigError("method B trains jointly from the start; epochs_separate must be 0");
    if (cfg.epochs_joint < 1) throw ConfigError("method B needs epochs_joint >= 1");
    if (data.train.empty() || data.eval.empty())
        throw ConfigError("training and evaluation sets must be nonempty");

    const Rng base(cfg.seed);
    TrainConfig run_cfg = cfg;
    if (run_cfg.train_size == 0) run_cfg.train_size = data.train.size();

    std::vector<FnnModel> nets;
    for (std::size_t i = 0; i < archs.size(); ++i) {
        Rng init_rng = base.child(kInitStreamBase + i);
        nets.push_back(init_fnn(archs[i], cfg.activation, init_rng, cfg.head));
    }
    PnnModel pnn = connect(nets);

    TrainResult result;
    detail::BestTracker best;
    Rng joint_rng = base.child(kJointShuffleStream);
    for (std::size_t epoch = 0; epoch < cfg.epochs_joint; ++epoch) {
        sgd_epoch(pnn, data.train, run_cfg, joint_rng);
        EpochEvent ev;
        ev.epoch = epoch;
        ev.metrics = evaluate_metrics(pnn, data.eval, epoch);
        ev.model = &pnn;
        ev.alpha_improved = best.observe(pnn, epoch, ev.metrics.alpha_para);
        result.history.push_back(ev.metrics);
        if (sink) sink(ev);
    }

    result.final_model = std::move(pnn);
    result.best_model = std::move(best.model);
    result.best_epoch = best.epoch;
    result.best_alpha = best.alpha;
    return result;
}

/// Dispatch on cfg.method.
inline TrainResult run_training(const std::vector<std::vector<std::size_t>>& archs,
                                const TrainConfig& cfg, const Dataset& data,
                                const EpochSink& sink = {}) {
    return cfg.method == TrainMethod::A ? run_method_A(archs, cfg, data, sink)
                                        : run_method_B(archs, cfg, data, sink);
}

}  // namespace pnn
