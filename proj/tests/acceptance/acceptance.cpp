// Acceptance suite: one pass/fail line per criterion.
//
//   pnn_acceptance [--criteria 1,2,5] [--out-dir DIR] [--data-dir MNIST_DIR]
//
// Criterion 6 trains at full scale on the real handwritten-digit files and
// runs only when --data-dir (or PNN_MNIST_DIR) points at them; otherwise it
// reports SKIP. Exit code: 0 when every selected criterion passed (skips
// allowed), 77 when everything selected was skipped, 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pnn/pnn.hpp"

using namespace pnn;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
    va_list args;
    va_start(args, format);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------
// shared fixtures

struct Context {
    fs::path out_dir;
    std::string mnist_dir;  // empty when unavailable
    std::optional<Dataset> desk_data;

    // Desk-scale dataset: synthetic handwritten-digit files written in the
    // standard IDX layout, then loaded through the regular reader with the
    // training cap applied.
    const Dataset& desk_dataset() {
        if (!desk_data.has_value()) {
            const fs::path dir = out_dir / "data";
            SynthConfig cfg;
            cfg.train_count = 12000;
            cfg.eval_count = 10000;
            cfg.seed = 7001;
            write_synth_dataset(dir.string(), cfg);
            desk_data = load_dataset_dir(dir.string(), 0, 10000);
        }
        return *desk_data;
    }

    ExperimentSpec desk_spec(const std::string& name, ActivationKind act, std::size_t trials) {
        ExperimentSpec spec;
        spec.name = name;
        spec.arch_spec = "784,30,20,10+784,32,10";
        spec.config.method = TrainMethod::B;
        spec.config.epochs_separate = 0;
        spec.config.epochs_joint = 15;
        spec.config.eta = 0.1;
        spec.config.lambda = 5.0;
        spec.config.batch_size = 10;
        spec.config.seed = 1;
        spec.config.activation = act;
        spec.trials = trials;
        spec.out_dir = out_dir / name;
        fs::remove_all(spec.out_dir);
        return spec;
    }
};

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string details;
};

Outcome pass(std::string details) { return {true, false, std::move(details)}; }
Outcome fail(std::string details) { return {false, false, std::move(details)}; }
Outcome skip(std::string details) { return {false, true, std::move(details)}; }

// ---------------------------------------------------------------------------
// gradient oracle helpers (central finite differences through the forward
// pass only)

template <class Model>
double example_cost_of(const Model& m, const Vector& x, const Vector& y);

template <>
double example_cost_of(const FnnModel& m, const Vector& x, const Vector& y) {
    return cost(forward_fnn(m, x).output(), y);
}

template <>
double example_cost_of(const PnnModel& m, const Vector& x, const Vector& y) {
    return cost(forward_pnn(m, x).output_activation, y);
}

std::vector<double*> parameters_of(FnnModel& m) {
    std::vector<double*> ps;
    for (auto& w : m.weights)
        for (auto& v : w.data) ps.push_back(&v);
    for (auto& b : m.biases)
        for (auto& v : b.data) ps.push_back(&v);
    return ps;
}

std::vector<double*> parameters_of(PnnModel& m) {
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

std::vector<double> flat_gradient(const FnnGradients& g) {
    std::vector<double> out;
    for (const auto& w : g.weights) out.insert(out.end(), w.data.begin(), w.data.end());
    for (const auto& b : g.biases) out.insert(out.end(), b.data.begin(), b.data.end());
    return out;
}

std::vector<double> flat_gradient(const PnnGradients& g) {
    std::vector<double> out;
    for (const auto& s : g.subnets) {
        for (const auto& w : s.hidden_weights) out.insert(out.end(), w.data.begin(), w.data.end());
        for (const auto& b : s.hidden_biases) out.insert(out.end(), b.data.begin(), b.data.end());
        out.insert(out.end(), s.output_block.data.begin(), s.output_block.data.end());
    }
    out.insert(out.end(), g.shared_output_bias.data.begin(), g.shared_output_bias.data.end());
    return out;
}

template <class Model>
double min_abs_hidden_z_of(const Model& m, const Vector& x);

template <>
double min_abs_hidden_z_of(const FnnModel& m, const Vector& x) {
    const auto fwd = forward_fnn(m, x);
    double best = 1e300;
    for (std::size_t l = 0; l + 1 < fwd.zs.size(); ++l)
        for (double z : fwd.zs[l].data) best = std::min(best, std::abs(z));
    return best;
}

template <>
double min_abs_hidden_z_of(const PnnModel& m, const Vector& x) {
    const auto fwd = forward_pnn(m, x);
    double best = 1e300;
    for (const auto& trace : fwd.hidden)
        for (const auto& z : trace.zs)
            for (double v : z.data) best = std::min(best, std::abs(v));
    return best;
}

template <class Model>
double max_gradient_error(Model model, const Vector& x, const Vector& y, double h) {
    const auto analytic = flat_gradient(backprop(model, x, y));
    const auto params = parameters_of(model);
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = *params[k];
        *params[k] = saved + h;
        const double up = example_cost_of(model, x, y);
        *params[k] = saved - h;
        const double down = example_cost_of(model, x, y);
        *params[k] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({1.0, std::abs(analytic[k]), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
    }
    return worst;
}

Vector random_input(std::size_t len, Rng& rng) {
    Vector v(len);
    for (auto& x : v.data) x = rng.next_unit();
    return v;
}

/// Input whose hidden weighted inputs stay away from the ReLU kink so the
/// finite differences are taken on a smooth function.
template <class Model>
Vector smooth_input(const Model& m, std::size_t len, Rng& rng, double margin) {
    for (int tries = 0; tries < 64; ++tries) {
        Vector x = random_input(len, rng);
        if (min_abs_hidden_z_of(m, x) > margin) return x;
    }
    throw ConfigError("no input clear of the activation kink after 64 tries");
}

/// Worst gradient error over both test networks for one activation kind.
double gradient_criterion_error(ActivationKind act, std::uint64_t seed) {
    const double h = 1e-5;
    const double margin = 1e-3;
    Rng rng(seed);
    double worst = 0.0;

    const FnnModel fnn = init_fnn({6, 4, 3}, act, rng);
    for (int round = 0; round < 3; ++round) {
        const Vector x = smooth_input(fnn, 6, rng, margin);
        Vector y(3);
        y[rng.below(3)] = 1.0;
        worst = std::max(worst, max_gradient_error(fnn, x, y, h));
    }

    const auto a = init_fnn({6, 3, 3}, act, rng);
    const auto b = init_fnn({6, 2, 4, 3}, act, rng);
    const PnnModel p = connect({a, b});
    for (int round = 0; round < 3; ++round) {
        const Vector x = smooth_input(p, 6, rng, margin);
        Vector y(3);
        y[rng.below(3)] = 1.0;
        worst = std::max(worst, max_gradient_error(p, x, y, h));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// criterion bodies

Outcome criterion_1(Context&) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (auto act : {ActivationKind::Sigmoid, ActivationKind::ReLU, ActivationKind::Tanh})
        worst = std::max(worst, gradient_criterion_error(act, 1600 + static_cast<int>(act)));
    const double elapsed = seconds_since(start);
    const std::string details =
        fmt("max relative gradient error %.3e (limit 1e-6), %.1fs (limit 10s)", worst, elapsed);
    return worst < 1e-6 && elapsed < 10.0 ? pass(details) : fail(details);
}

Outcome criterion_2(Context&) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(2700);
    const auto a = init_fnn({4, 3, 3}, ActivationKind::Sigmoid, rng);
    const auto b = init_fnn({4, 2, 3}, ActivationKind::Sigmoid, rng);
    const PnnModel p = connect({a, b});

    FnnModel merged;
    merged.arch = {4, 5, 3};
    merged.activation = ActivationKind::Sigmoid;
    merged.head = ActivationKind::Sigmoid;
    Matrix hidden(5, 4);
    Vector hidden_bias(5);
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t i = 0; i < 3; ++i) hidden(i, j) = a.weights[0](i, j);
        for (std::size_t i = 0; i < 2; ++i) hidden(3 + i, j) = b.weights[0](i, j);
    }
    for (std::size_t i = 0; i < 3; ++i) hidden_bias[i] = a.biases[0][i];
    for (std::size_t i = 0; i < 2; ++i) hidden_bias[3 + i] = b.biases[0][i];
    Matrix out(3, 5);
    for (std::size_t d = 0; d < 3; ++d) {
        for (std::size_t j = 0; j < 3; ++j) out(d, j) = a.weights[1](d, j);
        for (std::size_t j = 0; j < 2; ++j) out(d, 3 + j) = b.weights[1](d, j);
    }
    merged.weights = {std::move(hidden), std::move(out)};
    merged.biases = {std::move(hidden_bias), add(a.biases[1], b.biases[1])};

    double worst = 0.0;
    for (int round = 0; round < 100; ++round) {
        const Vector x = random_input(4, rng);
        const Vector zp = forward_pnn(p, x).output_z;
        const Vector zf = forward_fnn(merged, x).zs.back();
        for (std::size_t j = 0; j < zp.size(); ++j)
            worst = std::max(worst, std::abs(zp[j] - zf[j]));
    }
    const double elapsed = seconds_since(start);
    const std::string details =
        fmt("max |z| difference %.3e over 100 inputs (limit 1e-12), %.2fs (limit 1s)", worst,
            elapsed);
    return worst < 1e-12 && elapsed < 1.0 ? pass(details) : fail(details);
}

Outcome criterion_3(Context&) {
    const auto start = std::chrono::steady_clock::now();
    Dataset ds;
    ds.train = synth_examples(2000, 33001);
    ds.eval = synth_examples(1000, 33002);

    TrainConfig cfg;
    cfg.batch_size = 10;
    cfg.seed = 3;
    Rng base(cfg.seed);

    std::vector<FnnModel> nets;
    for (std::size_t i = 0; i < 2; ++i) {
        Rng init_rng = base.child(kInitStreamBase + i);
        nets.push_back(init_fnn(i == 0 ? std::vector<std::size_t>{784, 30, 20, 10}
                                       : std::vector<std::size_t>{784, 32, 10},
                                cfg.activation, init_rng));
        Rng shuffle_rng = base.child(kSeparateShuffleStreamBase + i);
        sgd_epoch(nets[i], ds.train, cfg, shuffle_rng);
    }
    const PnnModel p = connect(nets);

    bool equal = true;
    std::string detail;
    for (std::size_t i = 0; i < 2; ++i) {
        std::size_t standalone = 0, masked = 0;
        for (const auto& ex : ds.eval) {
            if (classify(forward_fnn(nets[i], ex.pixels).output()) == ex.label) ++standalone;
            if (classify(forward_masked(p, ex.pixels, i, BiasMode::Own).activation) == ex.label)
                ++masked;
        }
        equal = equal && standalone == masked;
        detail += fmt("%ssubnet %zu: standalone %zu vs masked %zu of 1000", i ? "; " : "", i + 1,
                      standalone, masked);
    }
    const double elapsed = seconds_since(start);
    detail += fmt(", %.1fs (limit 10s)", elapsed);
    return equal && elapsed < 10.0 ? pass(detail) : fail(detail);
}

/// Partition check used by criteria 4, 5 and 8: every checkpoint evaluated
/// must satisfy I+II+III+IV == total and r_p == y on each record.
bool taxonomy_partition_holds(const PnnModel& model, std::span<const Example> eval,
                              std::string& why) {
    for (auto mode : {BiasMode::Shared, BiasMode::Own}) {
        const ResultTaxonomy tax = categorize(model, eval, mode);
        const std::size_t sum =
            tax.type_i() + tax.type_ii() + tax.type_iii() + tax.type_iv();
        if (sum != tax.total_correct) {
            why = fmt("type counts sum %zu != total %zu (%s mode)", sum, tax.total_correct,
                      to_string(mode));
            return false;
        }
        if (tax.records.size() != tax.total_correct) {
            why = fmt("%zu records for %zu correct results", tax.records.size(),
                      tax.total_correct);
            return false;
        }
        for (const auto& rec : tax.records) {
            if (rec.rp != rec.y) {
                why = fmt("record with r_p %d != y %d", rec.rp, rec.y);
                return false;
            }
        }
    }
    return true;
}

Outcome criterion_4(Context& ctx) {
    // Small two-trial experiment; every checkpoint it wrote is re-read and
    // checked, covering both training methods.
    Dataset ds;
    ds.train = synth_examples(800, 44001);
    ds.eval = synth_examples(500, 44002);

    std::size_t checkpoints = 0;
    for (const auto method : {TrainMethod::A, TrainMethod::B}) {
        ExperimentSpec spec;
        spec.name = method == TrainMethod::A ? "criterion4_a" : "criterion4_b";
        spec.arch_spec = "784,10,8,10+784,12,10";
        spec.config.method = method;
        spec.config.epochs_separate = method == TrainMethod::A ? 2 : 0;
        spec.config.epochs_joint = 3;
        spec.config.batch_size = 10;
        spec.config.seed = 11;
        spec.trials = 2;
        spec.out_dir = ctx.out_dir / spec.name;
        fs::remove_all(spec.out_dir);
        run_experiment(spec, ds);

        for (const auto& entry : fs::recursive_directory_iterator(spec.out_dir)) {
            if (entry.path().extension() != ".pnn") continue;
            const PnnModel model = load_checkpoint(entry.path().string());
            std::string why;
            if (!taxonomy_partition_holds(model, ds.eval, why))
                return fail(fmt("%s: %s", entry.path().filename().string().c_str(), why.c_str()));
            ++checkpoints;
        }
    }
    return pass(fmt("partition and r_p == y hold on %zu checkpoints, both modes", checkpoints));
}

struct DeskRun {
    std::vector<TrialSummary> trials;
    fs::path dir;
};

DeskRun desk_run(Context& ctx, const std::string& name, ActivationKind act, std::size_t trials) {
    ExperimentSpec spec = ctx.desk_spec(name, act, trials);
    DeskRun run;
    run.trials = run_experiment(spec, ctx.desk_dataset());
    run.dir = spec.out_dir;
    return run;
}

Outcome criterion_5(Context& ctx) {
    const auto start = std::chrono::steady_clock::now();
    const DeskRun run = desk_run(ctx, "criterion5", ActivationKind::Sigmoid, 1);
    const TrialSummary& best = run.trials.front();

    const auto history = read_metrics_csv((run.dir / "trial_1" / "metrics.csv").string());
    if (history.size() != 15) return fail(fmt("expected 15 metric rows, got %zu", history.size()));
    const EpochMetrics& at_best = history.at(best.best_epoch);
    const double min_shared = std::min(at_best.alpha_shared[0], at_best.alpha_shared[1]);

    const PnnModel model = load_checkpoint((run.dir / "trial_1" / "checkpoint_best.pnn").string());
    std::string why;
    const bool partition_ok = taxonomy_partition_holds(model, ctx.desk_dataset().eval, why);

    const double elapsed = seconds_since(start);
    const std::string details = fmt(
        "alpha_para %.4f (floor 0.92), min(alpha') %.4f (ceiling alpha_para-0.05 = %.4f), "
        "n_IV %zu (floor 10), partition %s, epoch %zu, %.0fs (target 600s)",
        best.max_alpha_para, min_shared, best.max_alpha_para - 0.05, best.n_iv(),
        partition_ok ? "ok" : why.c_str(), best.best_epoch, elapsed);

    const bool ok = best.max_alpha_para >= 0.92 &&
                    min_shared <= best.max_alpha_para - 0.05 && best.n_iv() >= 10 &&
                    partition_ok && elapsed < 600.0;
    return ok ? pass(details) : fail(details);
}

Outcome criterion_6(Context& ctx) {
    if (ctx.mnist_dir.empty())
        return skip("full-scale band check needs --data-dir (or PNN_MNIST_DIR) with the real "
                    "handwritten-digit IDX files");
    Dataset ds;
    try {
        ds = load_dataset_dir(ctx.mnist_dir);
    } catch (const Error& e) {
        return skip(fmt("cannot load data from %s: %s", ctx.mnist_dir.c_str(), e.what()));
    }

    ExperimentSpec spec;
    spec.name = "criterion6";
    spec.arch_spec = "784,48,35,10+784,50,10";
    spec.config.method = TrainMethod::A;
    spec.config.epochs_separate = 60;
    spec.config.epochs_joint = 40;
    spec.config.batch_size = 10;
    spec.config.seed = 1;
    spec.trials = 1;
    spec.out_dir = ctx.out_dir / "criterion6";
    fs::remove_all(spec.out_dir);

    const auto trials = run_experiment(spec, ds);
    const TrialSummary& best = trials.front();
    const auto history = read_metrics_csv((spec.out_dir / "trial_1" / "metrics.csv").string());

    double max_alpha2_separate = 0.0;
    for (std::size_t e = 0; e < 60; ++e)
        max_alpha2_separate = std::max(max_alpha2_separate, history[e].alpha_own[1]);
    const double alpha2_shared_at_best = history.at(best.best_epoch).alpha_shared[1];
    const double drop = max_alpha2_separate - alpha2_shared_at_best;

    const bool in_band = best.max_alpha_para >= 0.970 && best.max_alpha_para <= 0.985;
    const bool dropped = drop >= 0.10;
    const std::string details =
        fmt("max alpha_para %.4f (band [0.970, 0.985]), max alpha_2 separate %.4f -> "
            "alpha_2' %.4f at best epoch %zu (drop %.4f, floor 0.10)",
            best.max_alpha_para, max_alpha2_separate, alpha2_shared_at_best, best.best_epoch,
            drop);
    return in_band && dropped ? pass(details) : fail(details);
}

Outcome criterion_7(Context& ctx) {
    const fs::path first = ctx.out_dir / "criterion5" / "trial_1" / "metrics.csv";
    if (!fs::exists(first)) desk_run(ctx, "criterion5", ActivationKind::Sigmoid, 1);
    const DeskRun rerun = desk_run(ctx, "criterion7_rerun", ActivationKind::Sigmoid, 1);

    const auto read_bytes = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    };
    const std::string bytes1 = read_bytes(first);
    const std::string bytes2 = read_bytes(rerun.dir / "trial_1" / "metrics.csv");
    if (bytes1.empty()) return fail("metrics.csv of the first run is missing or empty");
    return bytes1 == bytes2
               ? pass(fmt("metrics.csv byte-identical across runs (%zu bytes)", bytes1.size()))
               : fail("metrics.csv differs between two identically seeded runs");
}

Outcome criterion_8(Context& ctx) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, std::vector<TrialSummary>>> table;
    std::string problems;

    for (auto act : {ActivationKind::Sigmoid, ActivationKind::ReLU, ActivationKind::Tanh}) {
        // criteria 1-4 must hold for this activation kind
        const double grad_err = gradient_criterion_error(act, 8800 + static_cast<int>(act));
        if (grad_err >= 1e-6)
            problems += fmt("[%s gradient error %.3e] ", to_string(act), grad_err);

        const std::string name = fmt("criterion8_%s", to_string(act));
        const DeskRun run = desk_run(ctx, name, act, 3);
        if (run.trials.size() != 3)
            problems += fmt("[%s produced %zu trials] ", to_string(act), run.trials.size());

        for (const auto& trial : run.trials) {
            const fs::path ckpt =
                run.dir / fmt("trial_%zu", trial.trial) / "checkpoint_best.pnn";
            std::string why;
            if (!taxonomy_partition_holds(load_checkpoint(ckpt.string()),
                                          ctx.desk_dataset().eval, why))
                problems += fmt("[%s trial %zu: %s] ", to_string(act), trial.trial, why.c_str());
        }
        table.emplace_back(to_string(act), run.trials);
    }

    const fs::path table_path = ctx.out_dir / "activation_table.csv";
    write_activation_table_csv(table_path.string(), table);

    std::string summary;
    for (const auto& [name, trials] : table) {
        double avg_niv = 0.0, avg_alpha = 0.0;
        for (const auto& t : trials) {
            avg_niv += static_cast<double>(t.n_iv());
            avg_alpha += t.max_alpha_para;
        }
        avg_niv /= static_cast<double>(trials.size());
        avg_alpha /= static_cast<double>(trials.size());
        summary += fmt("%s avg n_IV %.0f avg alpha %.4f; ", name.c_str(), avg_niv, avg_alpha);
    }
    summary += fmt("table at %s, %.0fs", table_path.string().c_str(), seconds_since(start));

    return problems.empty() ? pass(summary) : fail(problems + "| " + summary);
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected = {1, 2, 3, 4, 5, 6, 7, 8};
    Context ctx;
    ctx.out_dir = "acceptance_out";
    if (const char* env = std::getenv("PNN_MNIST_DIR")) ctx.mnist_dir = env;

    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criteria" && i + 1 < argc) {
            selected.clear();
            std::string list = argv[++i];
            for (char& c : list)
                if (c == ',') c = ' ';
            std::istringstream in(list);
            int id;
            while (in >> id) selected.insert(id);
        } else if (arg == "--out-dir" && i + 1 < argc) {
            ctx.out_dir = argv[++i];
        } else if (arg == "--data-dir" && i + 1 < argc) {
            ctx.mnist_dir = argv[++i];
        } else {
            std::fprintf(stderr,
                         "usage: pnn_acceptance [--criteria 1,2,...] [--out-dir DIR] "
                         "[--data-dir MNIST_DIR]\n");
            return 2;
        }
    }

    fs::create_directories(ctx.out_dir);
    const std::map<int, std::function<Outcome(Context&)>> criteria = {
        {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},
        {5, criterion_5}, {6, criterion_6}, {7, criterion_7}, {8, criterion_8},
    };
    static const char* names[] = {
        "",
        "gradient oracle",
        "merge equivalence",
        "connection conservation",
        "taxonomy partition",
        "desk-scale qualitative reproduction",
        "full-scale band check (optional)",
        "determinism",
        "activation comparison harness",
    };

    bool any_fail = false;
    bool any_pass = false;
    for (const auto& [id, body] : criteria) {
        if (!selected.count(id)) continue;
        Outcome outcome;
        try {
            outcome = body(ctx);
        } catch (const std::exception& e) {
            outcome = fail(fmt("exception: %s", e.what()));
        }
        const char* status = outcome.skipped ? "SKIP" : outcome.pass ? "PASS" : "FAIL";
        std::printf("criterion %d [%s] %s: %s\n", id, status, names[id], outcome.details.c_str());
        std::fflush(stdout);
        any_fail = any_fail || (!outcome.pass && !outcome.skipped);
        any_pass = any_pass || outcome.pass;
    }
    if (any_fail) return 1;
    if (!any_pass) return 77;  // everything selected was skipped
    return 0;
}
