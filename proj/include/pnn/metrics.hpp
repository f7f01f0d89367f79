#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pnn/dataio.hpp"
#include "pnn/errors.hpp"
#include "pnn/network.hpp"

namespace pnn {

/// The five accuracy curves of one epoch: alpha_para for the whole network,
/// and per sub-network the own-bias accuracy (alpha) and shared-bias
/// accuracy (alpha').
struct EpochMetrics {
    std::size_t epoch = 0;
    double alpha_para = 0.0;
    std::vector<double> alpha_own;
    std::vector<double> alpha_shared;
};

/// Fraction of examples the whole parallel network classifies correctly.
inline double accuracy_para(const PnnModel& model, std::span<const Example> eval) {
    if (eval.empty()) throw ConfigError("accuracy: evaluation set is empty");
    std::size_t correct = 0;
    for (const Example& ex : eval)
        if (classify(forward_pnn(model, ex.pixels).output_activation) == ex.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(eval.size());
}

/// Fraction correct when only sub-network `subnet` contributes.
inline double accuracy_masked(const PnnModel& model, std::span<const Example> eval,
                              std::size_t subnet, BiasMode mode) {
    if (eval.empty()) throw ConfigError("accuracy: evaluation set is empty");
    if (subnet >= model.subnet_count())
        throw ConfigError(detail::msg("accuracy_masked: sub-network index ", subnet,
                                      " out of range, model has ", model.subnet_count()));
    std::size_t correct = 0;
    for (const Example& ex : eval)
        if (classify(forward_masked(model, ex.pixels, subnet, mode).activation) == ex.label)
            ++correct;
    return static_cast<double>(correct) / static_cast<double>(eval.size());
}

/// All five curves in a single pass: the hidden stacks are evaluated once
/// per example and reused for the whole, own-bias and shared-bias outputs.
inline EpochMetrics evaluate_metrics(const PnnModel& model, std::span<const Example> eval,
                                     std::size_t epoch) {
    if (eval.empty()) throw ConfigError("accuracy: evaluation set is empty");
    const std::size_t k = model.subnet_count();
    std::size_t correct_para = 0;
    std::vector<std::size_t> correct_own(k, 0), correct_shared(k, 0);
    std::vector<Vector> last(k);
    for (const Example& ex : eval) {
        for (std::size_t i = 0; i < k; ++i)
            last[i] = forward_hidden(model, i, ex.pixels).last_activation();
        const Vector z_para = combine_output_z(model, last);
        if (classify(activate(model.head, z_para)) == ex.label) ++correct_para;
        for (std::size_t i = 0; i < k; ++i) {
            const Vector z_own = masked_output_z(model, i, BiasMode::Own, last[i]);
            if (classify(activate(model.head, z_own)) == ex.label) ++correct_own[i];
            const Vector z_shared = masked_output_z(model, i, BiasMode::Shared, last[i]);
            if (classify(activate(model.head, z_shared)) == ex.label) ++correct_shared[i];
        }
    }
    EpochMetrics m;
    m.epoch = epoch;
    const double n = static_cast<double>(eval.size());
    m.alpha_para = static_cast<double>(correct_para) / n;
    for (std::size_t i = 0; i < k; ++i) {
        m.alpha_own.push_back(static_cast<double>(correct_own[i]) / n);
        m.alpha_shared.push_back(static_cast<double>(correct_shared[i]) / n);
    }
    return m;
}

/// One evaluation example the whole network got right: the masked results
/// r_1, r_2, the whole-network result r_p and the true label y.
struct TaxonomyRecord {
    int r1 = 0;
    int r2 = 0;
    int rp = 0;
    int y = 0;
};

/// Partition of the correctly classified evaluation examples by sub-network
/// agreement. Type I: both sub-networks right. Type II: only Network 1
/// wrong. Type III: only Network 2 wrong. Type IV: both wrong yet the whole
/// network right.
struct ResultTaxonomy {
    std::size_t eval_count = 0;
    std::size_t total_correct = 0;
    std::array<std::size_t, 4> type_counts = {0, 0, 0, 0};
    std::vector<TaxonomyRecord> records;
    BiasMode mode = BiasMode::Shared;

    std::size_t type_i() const { return type_counts[0]; }
    std::size_t type_ii() const { return type_counts[1]; }
    std::size_t type_iii() const { return type_counts[2]; }
    std::size_t type_iv() const { return type_counts[3]; }
};

/// Categorizes every correctly classified example into exactly one of the
/// four types. Defined for two-sub-network models; r_1 and r_2 default to
/// the shared-bias masked results.
inline ResultTaxonomy categorize(const PnnModel& model, std::span<const Example> eval,
                                 BiasMode mode = BiasMode::Shared) {
    if (model.subnet_count() != 2)
        throw ConfigError(detail::msg("categorize: defined for 2 sub-networks, model has ",
                                      model.subnet_count()));
    if (eval.empty()) throw ConfigError("categorize: evaluation set is empty");
    ResultTaxonomy tax;
    tax.eval_count = eval.size();
    tax.mode = mode;
    std::vector<Vector> last(2);
    for (const Example& ex : eval) {
        for (std::size_t i = 0; i < 2; ++i)
            last[i] = forward_hidden(model, i, ex.pixels).last_activation();
        const int rp = classify(activate(model.head, combine_output_z(model, last)));
        if (rp != ex.label) continue;
        const int r1 = classify(activate(model.head, masked_output_z(model, 0, mode, last[0])));
        const int r2 = classify(activate(model.head, masked_output_z(model, 1, mode, last[1])));
        ++tax.total_correct;
        const bool ok1 = r1 == ex.label;
        const bool ok2 = r2 == ex.label;
        if (ok1 && ok2) ++tax.type_counts[0];
        else if (!ok1 && ok2) ++tax.type_counts[1];
        else if (ok1 && !ok2) ++tax.type_counts[2];
        else ++tax.type_counts[3];
        tax.records.push_back(TaxonomyRecord{r1, r2, rp, ex.label});
    }
    return tax;
}

/// Output-layer weights of every last-hidden-layer neuron, with sub-network
/// ownership. Column j (0-based) is a neuron in the concatenated last hidden
/// layers, sub-network 1's neurons first; row d is the output digit.
struct WeightSnapshot {
    Matrix weights;                        // n_m x sum of last-hidden sizes
    std::vector<std::size_t> subnet_sizes; // last-hidden size per sub-network

    std::size_t neuron_count() const { return weights.cols; }

    /// 0-based sub-network owning global neuron column j.
    std::size_t subnet_of(std::size_t j) const {
        std::size_t i = 0;
        while (j >= subnet_sizes[i]) j -= subnet_sizes[i++];
        return i;
    }
};

inline WeightSnapshot weight_snapshot(const PnnModel& model) {
    std::size_t total = 0;
    WeightSnapshot ws;
    for (const auto& s : model.subnets) {
        ws.subnet_sizes.push_back(s.last_hidden_size());
        total += s.last_hidden_size();
    }
    ws.weights = Matrix(model.output_size(), total);
    std::size_t col0 = 0;
    for (const auto& s : model.subnets) {
        for (std::size_t d = 0; d < s.output_block.rows; ++d)
            for (std::size_t j = 0; j < s.output_block.cols; ++j)
                ws.weights(d, col0 + j) = s.output_block(d, j);
        col0 += s.output_block.cols;
    }
    return ws;
}

/// Aggregate per-sub-network statistics over its output-weight block.
struct SubnetWeightStats {
    double mean_abs = 0.0;
    double max_abs = 0.0;
    double rms = 0.0;
};

inline std::vector<SubnetWeightStats> weight_balance(const WeightSnapshot& ws) {
    std::vector<SubnetWeightStats> stats;
    std::size_t col0 = 0;
    for (std::size_t size : ws.subnet_sizes) {
        SubnetWeightStats s;
        double sum_abs = 0.0, sum_sq = 0.0;
        for (std::size_t d = 0; d < ws.weights.rows; ++d) {
            for (std::size_t j = col0; j < col0 + size; ++j) {
                const double w = ws.weights(d, j);
                sum_abs += std::abs(w);
                sum_sq += w * w;
                if (std::abs(w) > s.max_abs) s.max_abs = std::abs(w);
            }
        }
        const double n = static_cast<double>(ws.weights.rows * size);
        s.mean_abs = sum_abs / n;
        s.rms = std::sqrt(sum_sq / n);
        stats.push_back(s);
        col0 += size;
    }
    return stats;
}

}  // namespace pnn
