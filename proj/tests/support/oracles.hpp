#pragma once

// Test-only oracles. The finite-difference path goes through the forward
// pass and cost only, independent of the backpropagation code it checks.

#include <cmath>
#include <cstddef>
#include <vector>

#include "pnn/pnn.hpp"

namespace testsupport {

/// Every learnable parameter as a mutable pointer, in a fixed order
/// (weights then biases for plain networks; per sub-network hidden weights,
/// hidden biases and output block, then the shared bias for parallel ones).
/// Frozen sub-network biases are not learnable and are excluded.
inline std::vector<double*> parameter_view(pnn::FnnModel& m) {
    std::vector<double*> ps;
    for (auto& w : m.weights)
        for (auto& v : w.data) ps.push_back(&v);
    for (auto& b : m.biases)
        for (auto& v : b.data) ps.push_back(&v);
    return ps;
}

inline std::vector<double*> parameter_view(pnn::PnnModel& m) {
    std::vector<double*> ps;
    for (auto& s : m.subnets) {
        for (auto& w : s.hidden_weights)
            for (auto& v : w.data) ps.push_back(&v);
        for (auto& b : s.hidden_biases)
            for (auto& v : b.data) ps.push_back(&v);
        for (auto& v : s.output_block.data) ps.push_back(&v);
    }
    for (auto& v : m.shared_output_bias.data) ps.push_back(&v);
    return ps;
}

/// Gradients flattened in the same order as parameter_view.
inline std::vector<double> gradient_view(const pnn::FnnGradients& g) {
    std::vector<double> out;
    for (const auto& w : g.weights) out.insert(out.end(), w.data.begin(), w.data.end());
    for (const auto& b : g.biases) out.insert(out.end(), b.data.begin(), b.data.end());
    return out;
}

inline std::vector<double> gradient_view(const pnn::PnnGradients& g) {
    std::vector<double> out;
    for (const auto& s : g.subnets) {
        for (const auto& w : s.hidden_weights) out.insert(out.end(), w.data.begin(), w.data.end());
        for (const auto& b : s.hidden_biases) out.insert(out.end(), b.data.begin(), b.data.end());
        out.insert(out.end(), s.output_block.data.begin(), s.output_block.data.end());
    }
    out.insert(out.end(), g.shared_output_bias.data.begin(), g.shared_output_bias.data.end());
    return out;
}

inline double example_cost(const pnn::FnnModel& m, const pnn::Vector& x, const pnn::Vector& y) {
    return pnn::cost(pnn::forward_fnn(m, x).output(), y);
}

inline double example_cost(const pnn::PnnModel& m, const pnn::Vector& x, const pnn::Vector& y) {
    return pnn::cost(pnn::forward_pnn(m, x).output_activation, y);
}

/// Smallest |z| over all hidden weighted inputs; keeps ReLU finite
/// differences away from the kink at z = 0.
inline double min_abs_hidden_z(const pnn::FnnModel& m, const pnn::Vector& x) {
    const auto fwd = pnn::forward_fnn(m, x);
    double best = 1e300;
    for (std::size_t l = 0; l + 1 < fwd.zs.size(); ++l)
        for (double z : fwd.zs[l].data) best = std::min(best, std::abs(z));
    return best;
}

inline double min_abs_hidden_z(const pnn::PnnModel& m, const pnn::Vector& x) {
    const auto fwd = pnn::forward_pnn(m, x);
    double best = 1e300;
    for (const auto& trace : fwd.hidden)
        for (const auto& z : trace.zs)
            for (double v : z.data) best = std::min(best, std::abs(v));
    return best;
}

/// Max over all parameters of |analytic - central difference| /
/// max(1, |analytic|, |numeric|).
template <class Model>
double max_relative_gradient_error(Model model, const pnn::Vector& x, const pnn::Vector& y,
                                   double h = 1e-5) {
    const auto analytic = gradient_view(pnn::backprop(model, x, y));
    const auto params = parameter_view(model);
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = *params[k];
        *params[k] = saved + h;
        const double up = example_cost(model, x, y);
        *params[k] = saved - h;
        const double down = example_cost(model, x, y);
        *params[k] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({1.0, std::abs(analytic[k]), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
    }
    return worst;
}

/// Uniformly random input vector with entries in [0, 1).
inline pnn::Vector random_input(std::size_t len, pnn::Rng& rng) {
    pnn::Vector v(len);
    for (auto& x : v.data) x = rng.next_unit();
    return v;
}

}  // namespace testsupport
