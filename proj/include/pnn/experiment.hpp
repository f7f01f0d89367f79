#pragma once

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pnn/checkpoint.hpp"
#include "pnn/errors.hpp"
#include "pnn/reports.hpp"
#include "pnn/train.hpp"

namespace pnn {

/// Parses an architecture string like "784,48,35,10+784,50,10" (brackets
/// optional: "[784,48,35,10]+[784,50,10]") into one layer-size list per
/// sub-network. Syntax errors report the character position. When the string
/// names several sub-networks, they must share input and output widths and
/// at least one sub-network must have two or more hidden layers: a parallel
/// connection of single-hidden-layer networks is just a larger network of
/// the same shape, so there is nothing to study.
inline std::vector<std::vector<std::size_t>> parse_arch(const std::string& spec) {
    std::vector<std::vector<std::size_t>> archs;
    std::size_t pos = 0;
    const auto fail = [&](const std::string& what, std::size_t at) -> void {
        throw ConfigError(detail::msg("arch spec '", spec, "': ", what, " at position ", at));
    };
    const auto skip_ws = [&] {
        while (pos < spec.size() && std::isspace(static_cast<unsigned char>(spec[pos]))) ++pos;
    };

    while (true) {
        skip_ws();
        bool bracketed = false;
        if (pos < spec.size() && spec[pos] == '[') {
            bracketed = true;
            ++pos;
        }
        std::vector<std::size_t> arch;
        while (true) {
            skip_ws();
            const std::size_t digits_at = pos;
            std::size_t value = 0;
            bool any = false;
            while (pos < spec.size() && std::isdigit(static_cast<unsigned char>(spec[pos]))) {
                value = value * 10 + static_cast<std::size_t>(spec[pos] - '0');
                if (value > 1u << 24) fail("layer size too large", digits_at);
                ++pos;
                any = true;
            }
            if (!any) fail("expected layer size", digits_at);
            if (value == 0) fail("layer size must be positive", digits_at);
            arch.push_back(value);
            skip_ws();
            if (pos < spec.size() && spec[pos] == ',') {
                ++pos;
                continue;
            }
            break;
        }
        if (bracketed) {
            if (pos >= spec.size() || spec[pos] != ']') fail("expected ']'", pos);
            ++pos;
            skip_ws();
        }
        if (arch.size() < 3)
            throw ConfigError(detail::msg("arch spec '", spec, "': sub-network [",
                                          arch.size() == 1 ? detail::msg(arch[0]) : "...",
                                          "] needs input, at least one hidden and output layer"));
        archs.push_back(std::move(arch));
        if (pos >= spec.size()) break;
        if (spec[pos] != '+') fail("expected '+' or end", pos);
        ++pos;
    }

    if (archs.size() >= 2) {
        const std::size_t n0 = archs.front().front();
        const std::size_t nm = archs.front().back();
        for (const auto& arch : archs) {
            if (arch.front() != n0)
                throw ConfigError(detail::msg("arch spec '", spec,
                                              "': sub-networks have different input widths (",
                                              n0, " vs ", arch.front(), ")"));
            if (arch.back() != nm)
                throw ConfigError(detail::msg("arch spec '", spec,
                                              "': sub-networks have different output widths (",
                                              nm, " vs ", arch.back(), ")"));
        }
        const bool any_deep = std::any_of(archs.begin(), archs.end(),
                                          [](const auto& a) { return a.size() >= 4; });
        if (!any_deep)
            throw ConfigError(detail::msg(
                "arch spec '", spec,
                "': every sub-network has a single hidden layer; such a parallel connection is "
                "equivalent to one larger single-hidden-layer network, so at least one "
                "sub-network needs two or more hidden layers"));
    }
    return archs;
}

/// One experiment: a training configuration run for `trials` independent
/// trials (seeds base seed + trial index), with per-trial artifacts written
/// under out_dir.
struct ExperimentSpec {
    std::string name = "experiment";
    std::string arch_spec;
    TrainConfig config;
    std::size_t trials = 3;
    std::filesystem::path out_dir;
    BiasMode mask_mode = BiasMode::Shared;
    bool write_improvement_checkpoints = true;
};

/// Relabels trials so that the run whose max_alpha_para is the median gets
/// label 1 (for even counts, the lower middle). The remaining runs keep
/// their original order as labels 2, 3, ... The returned vector is ordered
/// by label; the multiset of summaries is unchanged.
inline std::vector<TrialSummary> relabel_median_first(std::vector<TrialSummary> runs) {
    if (runs.empty()) return runs;
    std::vector<std::size_t> order(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return runs[a].max_alpha_para < runs[b].max_alpha_para;
    });
    const std::size_t median = order[(runs.size() - 1) / 2];
    std::vector<TrialSummary> out;
    out.push_back(runs[median]);
    for (std::size_t i = 0; i < runs.size(); ++i)
        if (i != median) out.push_back(runs[i]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].trial = i + 1;
    return out;
}

namespace detail {

inline void write_run_config_json(const std::filesystem::path& path, const ExperimentSpec& spec,
                                  std::size_t train_count, std::size_t eval_count) {
    nlohmann::json j;
    j["name"] = spec.name;
    j["arch"] = spec.arch_spec;
    j["method"] = to_string(spec.config.method);
    j["epochs_separate"] = spec.config.epochs_separate;
    j["epochs_joint"] = spec.config.epochs_joint;
    j["eta"] = spec.config.eta;
    j["lambda"] = spec.config.lambda;
    j["batch_size"] = spec.config.batch_size;
    j["seed"] = spec.config.seed;
    j["activation"] = to_string(spec.config.activation);
    j["head_activation"] = to_string(spec.config.head);
    j["trials"] = spec.trials;
    j["mask_mode"] = to_string(spec.mask_mode);
    j["train_count"] = train_count;
    j["eval_count"] = eval_count;
    auto f = open_out(path.string());
    f << j.dump(2) << "\n";
}

}  // namespace detail

/// Runs every trial of an experiment, writing per-trial artifacts
/// (metrics.csv, checkpoints, taxonomy and weight tables at the best epoch,
/// summary.json) into run_<i> directories, then relabels the median run as
/// trial 1 and renames the directories to trial_<label>. Returns the
/// summaries ordered by label.
inline std::vector<TrialSummary> run_experiment(const ExperimentSpec& spec, const Dataset& data) {
    namespace fs = std::filesystem;
    if (spec.trials == 0) throw ConfigError("experiment needs at least one trial");
    const auto archs = parse_arch(spec.arch_spec);
    if (archs.size() < 2)
        throw ConfigError(detail::msg("experiment '", spec.name,
                                      "': arch spec must name at least 2 sub-networks"));

    fs::create_directories(spec.out_dir);
    detail::write_run_config_json(spec.out_dir / "run_config.json", spec, data.train.size(),
                                  data.eval.size());

    // drop leftovers from earlier runs so stale checkpoints cannot mix in
    for (std::size_t t = 0; t < spec.trials; ++t) {
        fs::remove_all(spec.out_dir / detail::msg("run_", t));
        fs::remove_all(spec.out_dir / detail::msg("trial_", t + 1));
    }

    std::vector<TrialSummary> runs;
    for (std::size_t t = 0; t < spec.trials; ++t) {
        const fs::path run_dir = spec.out_dir / detail::msg("run_", t);
        fs::create_directories(run_dir);

        TrainConfig cfg = spec.config;
        cfg.seed = spec.config.seed + t;

        std::vector<EpochMetrics> history;
        const EpochSink sink = [&](const EpochEvent& ev) {
            if (ev.connection_boundary)
                save_checkpoint(*ev.model, (run_dir / "checkpoint_connect.pnn").string());
            else if (ev.alpha_improved && spec.write_improvement_checkpoints)
                save_checkpoint(*ev.model,
                                (run_dir / detail::msg("checkpoint_epoch_", ev.epoch, ".pnn"))
                                    .string());
        };
        const TrainResult result = run_training(archs, cfg, data, sink);

        write_metrics_csv((run_dir / "metrics.csv").string(), result.history);
        save_checkpoint(result.best_model, (run_dir / "checkpoint_best.pnn").string());
        save_checkpoint(result.final_model, (run_dir / "checkpoint_final.pnn").string());

        const ResultTaxonomy tax = categorize(result.best_model, data.eval, spec.mask_mode);
        write_taxonomy_json((run_dir / "taxonomy_best.json").string(), tax);
        write_weights_csv((run_dir / "weights_best.csv").string(),
                          weight_snapshot(result.best_model));

        TrialSummary summary;
        summary.trial = t + 1;  // provisional; relabeled below
        summary.seed = cfg.seed;
        summary.best_epoch = result.best_epoch;
        summary.max_alpha_para = result.best_alpha;
        summary.type_counts = tax.type_counts;
        runs.push_back(summary);
    }

    std::vector<TrialSummary> labeled = relabel_median_first(runs);

    // run_<i> -> trial_<label> so the directory names match the summary.
    for (std::size_t label = 0; label < labeled.size(); ++label) {
        const std::size_t run_index = labeled[label].seed - spec.config.seed;
        fs::rename(spec.out_dir / detail::msg("run_", run_index),
                   spec.out_dir / detail::msg("trial_", label + 1));
    }

    write_trial_summaries_csv((spec.out_dir / "trials_summary.csv").string(), labeled);
    write_trial_summaries_json((spec.out_dir / "trials_summary.json").string(), labeled);
    return labeled;
}

}  // namespace pnn
