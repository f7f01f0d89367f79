#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pnn/errors.hpp"
#include "pnn/linalg.hpp"
#include "pnn/rng.hpp"

namespace pnn {

enum class ActivationKind { Sigmoid, ReLU, Tanh };

inline const char* to_string(ActivationKind k) {
    switch (k) {
        case ActivationKind::Sigmoid: return "sigmoid";
        case ActivationKind::ReLU: return "relu";
        case ActivationKind::Tanh: return "tanh";
    }
    return "?";
}

inline ActivationKind activation_from_string(const std::string& name) {
    if (name == "sigmoid") return ActivationKind::Sigmoid;
    if (name == "relu") return ActivationKind::ReLU;
    if (name == "tanh") return ActivationKind::Tanh;
    throw ConfigError(detail::msg("unknown activation '", name, "', expected sigmoid|relu|tanh"));
}

inline double activate(ActivationKind k, double z) {
    switch (k) {
        case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case ActivationKind::ReLU: return z > 0.0 ? z : 0.0;
        case ActivationKind::Tanh: return std::tanh(z);
    }
    return 0.0;
}

/// Derivative with respect to z. ReLU at z = 0 is defined as 0.
inline double activate_prime(ActivationKind k, double z) {
    switch (k) {
        case ActivationKind::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
        case ActivationKind::ReLU: return z > 0.0 ? 1.0 : 0.0;
        case ActivationKind::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
    }
    return 0.0;
}

inline Vector activate(ActivationKind k, const Vector& z) {
    Vector out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out.data[i] = activate(k, z.data[i]);
    return out;
}

/// Fully-connected network [n_0, ..., n_m]: layer l maps n_{l-1} inputs to
/// n_l outputs through weights[l-1] (n_l x n_{l-1}) and biases[l-1].
/// `activation` applies to hidden layers; the output layer uses `head`,
/// which stays sigmoid by default so the cross-entropy cost is well-defined
/// for every hidden activation kind.
struct FnnModel {
    std::vector<std::size_t> arch;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    ActivationKind activation = ActivationKind::Sigmoid;
    ActivationKind head = ActivationKind::Sigmoid;

    std::size_t layer_count() const { return weights.size(); }
    std::size_t input_size() const { return arch.front(); }
    std::size_t output_size() const { return arch.back(); }
};

/// Gaussian initialization: biases ~ N(0,1); a weight into a neuron with
/// fan-in k ~ N(0, 1/k). Draw order is fixed (per layer: bias vector, then
/// weight matrix row-major) so runs are seed-reproducible.
inline FnnModel init_fnn(const std::vector<std::size_t>& arch, ActivationKind activation,
                         Rng& rng, ActivationKind head = ActivationKind::Sigmoid) {
    if (arch.size() < 3)
        throw ConfigError(detail::msg("architecture needs input, at least one hidden and output "
                                      "layer; got ", arch.size(), " sizes"));
    for (std::size_t n : arch)
        if (n == 0) throw ConfigError("architecture contains a zero-width layer");

    FnnModel model;
    model.arch = arch;
    model.activation = activation;
    model.head = head;
    for (std::size_t l = 1; l < arch.size(); ++l) {
        Vector b(arch[l]);
        for (auto& x : b.data) x = rng.gaussian(0.0, 1.0);
        model.biases.push_back(std::move(b));

        const double stddev = 1.0 / std::sqrt(static_cast<double>(arch[l - 1]));
        Matrix w(arch[l], arch[l - 1]);
        for (auto& x : w.data) x = rng.gaussian(0.0, stddev);
        model.weights.push_back(std::move(w));
    }
    return model;
}

/// Total number of learnable parameters (all weights plus all biases).
inline std::size_t param_count(const FnnModel& model) {
    std::size_t n = 0;
    for (const auto& w : model.weights) n += w.rows * w.cols;
    for (const auto& b : model.biases) n += b.size();
    return n;
}

/// Full forward trace: weighted inputs z and activations per layer,
/// index l-1 holding layer l (the input layer is not stored).
struct FnnForward {
    std::vector<Vector> zs;
    std::vector<Vector> activations;

    const Vector& output() const { return activations.back(); }
};

inline FnnForward forward_fnn(const FnnModel& model, const Vector& input) {
    if (input.size() != model.input_size())
        throw DimensionError(detail::msg("forward: input has length ", input.size(),
                                         ", network expects ", model.input_size()));
    FnnForward fwd;
    fwd.zs.reserve(model.layer_count());
    fwd.activations.reserve(model.layer_count());
    const Vector* x = &input;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        Vector z = add(matvec(model.weights[l], *x), model.biases[l]);
        const ActivationKind kind =
            (l + 1 == model.layer_count()) ? model.head : model.activation;
        fwd.activations.push_back(activate(kind, z));
        fwd.zs.push_back(std::move(z));
        x = &fwd.activations.back();
    }
    return fwd;
}

/// One sub-network inside a parallel connection: its private hidden stack
/// plus the block of output-layer weights w_i that maps its last hidden
/// layer into the shared output layer.
struct SubnetStack {
    std::vector<std::size_t> arch;       // original [n_0, ..., n_m] labels
    std::vector<Matrix> hidden_weights;  // layers 1 .. m-1
    std::vector<Vector> hidden_biases;
    Matrix output_block;                 // n_m x last-hidden size

    std::size_t last_hidden_size() const { return output_block.cols; }
};

/// Parallel-connected network: k >= 2 sub-networks share the input and
/// output layers with no connections between their hidden layers. The output
/// bias b is shared and trainable; the per-sub-network biases b_i are kept
/// as frozen copies from the moment of connection for own-bias evaluation.
struct PnnModel {
    std::vector<SubnetStack> subnets;
    Vector shared_output_bias;
    std::vector<Vector> sub_output_biases;
    ActivationKind activation = ActivationKind::Sigmoid;
    ActivationKind head = ActivationKind::Sigmoid;

    std::size_t input_size() const { return subnets.front().arch.front(); }
    std::size_t output_size() const { return shared_output_bias.size(); }
    std::size_t subnet_count() const { return subnets.size(); }
};

/// Connects trained (or fresh) networks in parallel. Hidden stacks and
/// output blocks are copied verbatim; the shared output bias becomes the
/// elementwise sum of the sub-network output biases, which are also retained
/// as frozen copies.
inline PnnModel connect(const std::vector<FnnModel>& models) {
    if (models.size() < 2)
        throw ConfigError(detail::msg("connect: need at least 2 networks, got ", models.size()));
    const std::size_t n0 = models.front().input_size();
    const std::size_t nm = models.front().output_size();
    for (const auto& m : models) {
        if (m.layer_count() < 2)
            throw ConfigError("connect: every network needs at least one hidden layer");
        if (m.input_size() != n0 || m.output_size() != nm)
            throw DimensionError(detail::msg("connect: network is ", m.input_size(), "->",
                                             m.output_size(), " but the first is ", n0, "->", nm));
        if (m.activation != models.front().activation || m.head != models.front().head)
            throw ConfigError("connect: networks use different activation kinds");
    }

    PnnModel pnn;
    pnn.activation = models.front().activation;
    pnn.head = models.front().head;
    pnn.shared_output_bias = Vector(nm);
    for (const auto& m : models) {
        SubnetStack s;
        s.arch = m.arch;
        const std::size_t last = m.layer_count() - 1;
        for (std::size_t l = 0; l < last; ++l) {
            s.hidden_weights.push_back(m.weights[l]);
            s.hidden_biases.push_back(m.biases[l]);
        }
        s.output_block = m.weights[last];
        pnn.subnets.push_back(std::move(s));
        pnn.sub_output_biases.push_back(m.biases[last]);
        pnn.shared_output_bias = add(pnn.shared_output_bias, m.biases[last]);
    }
    return pnn;
}

/// Hidden-stack forward of one sub-network; returns z and activation per
/// hidden layer.
struct HiddenTrace {
    std::vector<Vector> zs;
    std::vector<Vector> activations;

    const Vector& last_activation() const { return activations.back(); }
};

inline HiddenTrace forward_hidden(const PnnModel& model, std::size_t subnet, const Vector& input) {
    const SubnetStack& s = model.subnets[subnet];
    HiddenTrace trace;
    trace.zs.reserve(s.hidden_weights.size());
    trace.activations.reserve(s.hidden_weights.size());
    const Vector* x = &input;
    for (std::size_t l = 0; l < s.hidden_weights.size(); ++l) {
        Vector z = add(matvec(s.hidden_weights[l], *x), s.hidden_biases[l]);
        trace.activations.push_back(activate(model.activation, z));
        trace.zs.push_back(std::move(z));
        x = &trace.activations.back();
    }
    return trace;
}

/// z = sum_i w_i . x_i + b over the given last-hidden activations, in
/// sub-network order.
inline Vector combine_output_z(const PnnModel& model, const std::vector<Vector>& last_hidden) {
    Vector z(model.output_size());
    for (std::size_t i = 0; i < model.subnets.size(); ++i) {
        const Vector contribution = matvec(model.subnets[i].output_block, last_hidden[i]);
        for (std::size_t j = 0; j < z.size(); ++j) z.data[j] += contribution.data[j];
    }
    return add(z, model.shared_output_bias);
}

struct PnnForward {
    std::vector<HiddenTrace> hidden;  // one per sub-network
    Vector output_z;
    Vector output_activation;

    const Vector& last_hidden(std::size_t subnet) const {
        return hidden[subnet].last_activation();
    }
};

inline PnnForward forward_pnn(const PnnModel& model, const Vector& input) {
    if (input.size() != model.input_size())
        throw DimensionError(detail::msg("forward: input has length ", input.size(),
                                         ", network expects ", model.input_size()));
    PnnForward fwd;
    fwd.hidden.reserve(model.subnet_count());
    std::vector<Vector> last;
    last.reserve(model.subnet_count());
    for (std::size_t i = 0; i < model.subnet_count(); ++i) {
        fwd.hidden.push_back(forward_hidden(model, i, input));
        last.push_back(fwd.hidden.back().last_activation());
    }
    fwd.output_z = combine_output_z(model, last);
    fwd.output_activation = activate(model.head, fwd.output_z);
    return fwd;
}

/// Which bias enters a masked forward pass: the kept sub-network's own
/// frozen bias b_i, or the shared trained bias b.
enum class BiasMode { Own, Shared };

inline const char* to_string(BiasMode m) { return m == BiasMode::Own ? "own" : "shared"; }

inline BiasMode bias_mode_from_string(const std::string& name) {
    if (name == "own") return BiasMode::Own;
    if (name == "shared") return BiasMode::Shared;
    throw ConfigError(detail::msg("unknown mask mode '", name, "', expected own|shared"));
}

/// Masked output z for sub-network `keep` given its last hidden activation:
/// z = w_keep . x_keep + b_keep (Own) or + b (Shared). Equivalent to zeroing
/// the other sub-networks' output blocks.
inline Vector masked_output_z(const PnnModel& model, std::size_t keep, BiasMode mode,
                              const Vector& last_hidden) {
    const Vector& bias =
        mode == BiasMode::Own ? model.sub_output_biases[keep] : model.shared_output_bias;
    return add(matvec(model.subnets[keep].output_block, last_hidden), bias);
}

struct MaskedOutput {
    Vector z;
    Vector activation;
};

/// Forward pass through sub-network `keep` only.
inline MaskedOutput forward_masked(const PnnModel& model, const Vector& input, std::size_t keep,
                                   BiasMode mode) {
    if (keep >= model.subnet_count())
        throw ConfigError(detail::msg("forward_masked: sub-network index ", keep,
                                      " out of range, model has ", model.subnet_count()));
    const HiddenTrace trace = forward_hidden(model, keep, input);
    MaskedOutput out;
    out.z = masked_output_z(model, keep, mode, trace.last_activation());
    out.activation = activate(model.head, out.z);
    return out;
}

/// Argmax classification; ties break toward the lowest index.
inline int classify(const Vector& output_activation) {
    if (output_activation.size() == 0) throw DimensionError("classify: empty activation vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < output_activation.size(); ++i)
        if (output_activation.data[i] > output_activation.data[best]) best = i;
    return static_cast<int>(best);
}

}  // namespace pnn
