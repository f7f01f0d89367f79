// Experiment runner for parallel-connected networks.
//
// Subcommands: train, eval, taxonomy, weights, selftest. `pnn <cmd> --help`
// lists the flags; defaults reproduce the two-sub-network 60+40-epoch
// reference run. Errors exit nonzero with one machine-readable line on
// stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "pnn/pnn.hpp"

using namespace pnn;
namespace fs = std::filesystem;

namespace {

struct TrainFlags {
    std::string arch = "784,48,35,10+784,50,10";
    std::string method = "A";
    std::size_t epochs_separate = 60;
    std::size_t epochs_joint = 40;
    std::string activation = "sigmoid";
    std::string head_activation = "sigmoid";
    double eta = 0.1;
    double lambda = 5.0;
    std::size_t batch_size = 10;
    std::uint64_t seed = 1;
    std::size_t trials = 3;
    std::size_t train_size = 0;  // 0 = all available training examples
    std::size_t train_cap = 0;   // 0 = no cap
    std::string data_dir = "data";
    std::string out_dir = "out";
    std::string mask_mode = "shared";
};

void add_dataset_flags(CLI::App* cmd, std::string& data_dir) {
    cmd->add_option("--data-dir", data_dir,
                    "directory with train-images-idx3-ubyte[.gz] and friends")
        ->capture_default_str();
}

Dataset load_data(const std::string& data_dir, std::size_t train_size, std::size_t train_cap) {
    return load_dataset_dir(data_dir, train_size,
                            train_cap > 0 ? std::optional<std::size_t>(train_cap) : std::nullopt);
}

TrainMethod method_from_string(const std::string& name) {
    if (name == "A" || name == "a") return TrainMethod::A;
    if (name == "B" || name == "b") return TrainMethod::B;
    throw ConfigError(detail::msg("unknown training method '", name, "', expected A or B"));
}

int cmd_train(const TrainFlags& flags, bool epochs_separate_given) {
    ExperimentSpec spec;
    spec.name = "train";
    spec.arch_spec = flags.arch;
    spec.config.method = method_from_string(flags.method);
    spec.config.epochs_separate =
        spec.config.method == TrainMethod::B ? 0 : flags.epochs_separate;
    if (spec.config.method == TrainMethod::B && epochs_separate_given &&
        flags.epochs_separate != 0)
        throw ConfigError("method B trains jointly from the start; leave --epochs-separate unset");
    spec.config.epochs_joint = flags.epochs_joint;
    spec.config.eta = flags.eta;
    spec.config.lambda = flags.lambda;
    spec.config.batch_size = flags.batch_size;
    spec.config.seed = flags.seed;
    spec.config.activation = activation_from_string(flags.activation);
    spec.config.head = activation_from_string(flags.head_activation);
    spec.trials = flags.trials;
    spec.out_dir = flags.out_dir;
    spec.mask_mode = bias_mode_from_string(flags.mask_mode);

    const auto archs = parse_arch(flags.arch);
    if (archs.size() < 2) throw ConfigError("--arch must name at least 2 sub-networks");

    const Dataset data = load_data(flags.data_dir, flags.train_size, flags.train_cap);
    std::printf("loaded %zu training and %zu evaluation examples\n", data.train.size(),
                data.eval.size());
    std::printf("running %zu trial(s) of %s, method %s, %zu+%zu epochs\n", spec.trials,
                flags.arch.c_str(), flags.method.c_str(), spec.config.epochs_separate,
                spec.config.epochs_joint);

    const auto trials = run_experiment(spec, data);
    for (const auto& t : trials)
        std::printf("trial %zu (seed %llu): max alpha_para %.4f at epoch %zu, n_IV %zu\n",
                    t.trial, static_cast<unsigned long long>(t.seed), t.max_alpha_para,
                    t.best_epoch, t.n_iv());
    std::printf("artifacts under %s\n", flags.out_dir.c_str());
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_dir,
             const std::string& out_path) {
    const PnnModel model = load_checkpoint(checkpoint);
    const Dataset data = load_data(data_dir, 0, 0);
    const EpochMetrics m = evaluate_metrics(model, data.eval, 0);
    std::printf("alpha_para %.6f\n", m.alpha_para);
    for (std::size_t i = 0; i < m.alpha_own.size(); ++i) {
        std::printf("alpha_%zu %.6f\n", i + 1, m.alpha_own[i]);
        std::printf("alpha_%zu_prime %.6f\n", i + 1, m.alpha_shared[i]);
    }
    if (!out_path.empty()) {
        write_metrics_csv(out_path, {m});
        std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_taxonomy(const std::string& checkpoint, const std::string& data_dir,
                 const std::string& mask_mode, const std::string& out_path) {
    const PnnModel model = load_checkpoint(checkpoint);
    const Dataset data = load_data(data_dir, 0, 0);
    const ResultTaxonomy tax = categorize(model, data.eval, bias_mode_from_string(mask_mode));
    if (out_path.empty()) {
        std::printf("total %zu, type I %zu, II %zu, III %zu, IV %zu (%s mode, %zu examples)\n",
                    tax.total_correct, tax.type_i(), tax.type_ii(), tax.type_iii(), tax.type_iv(),
                    to_string(tax.mode), tax.eval_count);
    } else {
        write_taxonomy_json(out_path, tax);
        std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_weights(const std::string& checkpoint, const std::string& out_path) {
    const PnnModel model = load_checkpoint(checkpoint);
    const WeightSnapshot ws = weight_snapshot(model);
    if (!out_path.empty()) {
        write_weights_csv(out_path, ws);
        std::printf("wrote %s (%zu neurons)\n", out_path.c_str(), ws.neuron_count());
    }
    const auto stats = weight_balance(ws);
    for (std::size_t i = 0; i < stats.size(); ++i)
        std::printf("subnet %zu: %zu neurons, mean|w| %.4f, max|w| %.4f, rms %.4f\n", i + 1,
                    ws.subnet_sizes[i], stats[i].mean_abs, stats[i].max_abs, stats[i].rms);
    return 0;
}

// Gradient and merge oracles that need no dataset; mirrors the unit suite so
// an installed binary can vouch for itself.
int cmd_selftest() {
    int failures = 0;
    const auto report = [&](const char* name, bool ok, const std::string& detail) {
        std::printf("%-28s %s  %s\n", name, ok ? "PASS" : "FAIL", detail.c_str());
        if (!ok) ++failures;
    };

    for (auto act : {ActivationKind::Sigmoid, ActivationKind::ReLU, ActivationKind::Tanh}) {
        Rng rng(99 + static_cast<int>(act));
        const auto a = init_fnn({6, 3, 3}, act, rng);
        const auto b = init_fnn({6, 2, 4, 3}, act, rng);
        PnnModel p = connect({a, b});

        Vector x(6);
        double margin = 0.0;
        for (int tries = 0; tries < 64 && margin <= 1e-3; ++tries) {
            for (auto& v : x.data) v = rng.next_unit();
            margin = 1e300;
            for (const auto& trace : forward_pnn(p, x).hidden)
                for (const auto& z : trace.zs)
                    for (double v : z.data) margin = std::min(margin, std::abs(v));
        }
        Vector y(3);
        y[1] = 1.0;

        const auto analytic = backprop(p, x, y);
        double worst = 0.0;
        const double h = 1e-5;
        std::vector<double*> params;
        std::vector<double> flat;
        for (auto& s : p.subnets) {
            for (auto& w : s.hidden_weights)
                for (auto& v : w.data) params.push_back(&v);
            for (auto& bias : s.hidden_biases)
                for (auto& v : bias.data) params.push_back(&v);
            for (auto& v : s.output_block.data) params.push_back(&v);
        }
        for (auto& v : p.shared_output_bias.data) params.push_back(&v);
        for (const auto& s : analytic.subnets) {
            for (const auto& w : s.hidden_weights)
                flat.insert(flat.end(), w.data.begin(), w.data.end());
            for (const auto& bias : s.hidden_biases)
                flat.insert(flat.end(), bias.data.begin(), bias.data.end());
            flat.insert(flat.end(), s.output_block.data.begin(), s.output_block.data.end());
        }
        flat.insert(flat.end(), analytic.shared_output_bias.data.begin(),
                    analytic.shared_output_bias.data.end());
        for (std::size_t k = 0; k < params.size(); ++k) {
            const double saved = *params[k];
            *params[k] = saved + h;
            const double up = cost(forward_pnn(p, x).output_activation, y);
            *params[k] = saved - h;
            const double down = cost(forward_pnn(p, x).output_activation, y);
            *params[k] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double scale = std::max({1.0, std::abs(flat[k]), std::abs(numeric)});
            worst = std::max(worst, std::abs(flat[k] - numeric) / scale);
        }
        report(detail::msg("gradient check (", to_string(act), ")").c_str(), worst < 1e-6,
               detail::msg("max relative error ", worst));
    }

    {
        Rng rng(500);
        const auto a = init_fnn({4, 3, 3}, ActivationKind::Sigmoid, rng);
        const auto b = init_fnn({4, 2, 3}, ActivationKind::Sigmoid, rng);
        const PnnModel p = connect({a, b});
        double worst = 0.0;
        for (int round = 0; round < 100; ++round) {
            Vector x(4);
            for (auto& v : x.data) v = rng.next_unit();
            const Vector zp = forward_pnn(p, x).output_z;
            const Vector za = forward_fnn(a, x).zs.back();
            const Vector zb = forward_fnn(b, x).zs.back();
            for (std::size_t j = 0; j < zp.size(); ++j)
                worst = std::max(worst, std::abs(zp[j] - (za[j] + zb[j])));
        }
        report("merge additivity", worst < 1e-12, detail::msg("max |z| deviation ", worst));
    }

    {
        Rng rng(600);
        const auto a = init_fnn({12, 6, 5}, ActivationKind::Sigmoid, rng);
        const auto b = init_fnn({12, 4, 3, 5}, ActivationKind::Sigmoid, rng);
        const PnnModel p = connect({a, b});
        bool conserved = true;
        for (int round = 0; round < 50; ++round) {
            Vector x(12);
            for (auto& v : x.data) v = rng.next_unit();
            conserved = conserved &&
                        forward_masked(p, x, 0, BiasMode::Own).z == forward_fnn(a, x).zs.back();
        }
        report("connection conservation", conserved, "own-mode z matches standalone bit-exactly");
    }

    std::printf(failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parallel-connected neural network experiment runner"};
    app.require_subcommand(1);

    TrainFlags train;
    auto* train_cmd = app.add_subcommand("train", "run training trials and write artifacts");
    train_cmd->add_option("--arch", train.arch, "sub-network sizes, e.g. 784,48,35,10+784,50,10")
        ->capture_default_str();
    train_cmd->add_option("--method", train.method, "A (separate then joint) or B (joint)")
        ->capture_default_str();
    train_cmd->add_option("--epochs-separate", train.epochs_separate, "method A separate epochs")
        ->capture_default_str();
    train_cmd->add_option("--epochs-joint", train.epochs_joint, "joint epochs")
        ->capture_default_str();
    train_cmd->add_option("--activation", train.activation, "sigmoid|relu|tanh")
        ->capture_default_str();
    train_cmd
        ->add_option("--head-activation", train.head_activation,
                     "output-layer activation (kept sigmoid so the cost stays well-defined)")
        ->capture_default_str();
    train_cmd->add_option("--eta", train.eta, "learning rate")->capture_default_str();
    train_cmd->add_option("--lambda", train.lambda, "L2 coefficient")->capture_default_str();
    train_cmd->add_option("--batch-size", train.batch_size, "mini-batch size")
        ->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "base seed; trial t uses seed + t")
        ->capture_default_str();
    train_cmd->add_option("--trials", train.trials, "independent trials; the median becomes 1")
        ->capture_default_str();
    train_cmd
        ->add_option("--train-size", train.train_size,
                     "use only the first N training examples (0 = all)")
        ->capture_default_str();
    train_cmd
        ->add_option("--train-cap", train.train_cap,
                     "desk-scale cap applied after --train-size (0 = none)")
        ->capture_default_str();
    add_dataset_flags(train_cmd, train.data_dir);
    train_cmd->add_option("--out-dir", train.out_dir, "artifact directory")
        ->capture_default_str();
    train_cmd->add_option("--mask-mode", train.mask_mode, "taxonomy mask mode: shared|own")
        ->capture_default_str();

    std::string checkpoint, out_path, mask_mode = "shared", data_dir = "data";
    auto* eval_cmd = app.add_subcommand("eval", "accuracy metrics of a checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint, "model file")->required();
    add_dataset_flags(eval_cmd, data_dir);
    eval_cmd->add_option("--out", out_path, "also write a one-row metrics CSV");

    auto* tax_cmd = app.add_subcommand("taxonomy", "result-type breakdown of a checkpoint");
    tax_cmd->add_option("--checkpoint", checkpoint, "model file")->required();
    add_dataset_flags(tax_cmd, data_dir);
    tax_cmd->add_option("--mask-mode", mask_mode, "shared|own")->capture_default_str();
    tax_cmd->add_option("--out", out_path, "write the full JSON report here");

    auto* weights_cmd = app.add_subcommand("weights", "output-layer weight snapshot");
    weights_cmd->add_option("--checkpoint", checkpoint, "model file")->required();
    weights_cmd->add_option("--out", out_path, "write the weight CSV here");

    app.add_subcommand("selftest", "gradient and merge oracles, no dataset needed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed())
            return cmd_train(train, train_cmd->count("--epochs-separate") > 0);
        if (eval_cmd->parsed()) return cmd_eval(checkpoint, data_dir, out_path);
        if (tax_cmd->parsed()) return cmd_taxonomy(checkpoint, data_dir, mask_mode, out_path);
        if (weights_cmd->parsed()) return cmd_weights(checkpoint, out_path);
        return cmd_selftest();
    } catch (const Error& e) {
        std::fprintf(stderr, "error: {\"kind\":\"%s\",\"message\":\"%s\"}\n", e.kind().c_str(),
                     e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: {\"kind\":\"internal\",\"message\":\"%s\"}\n", e.what());
        return 1;
    }
}
