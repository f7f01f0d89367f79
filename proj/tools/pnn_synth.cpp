// Writes a deterministic synthetic handwritten-digit dataset in the
// standard IDX layout, for running experiments offline.

#include <CLI11.hpp>

#include <cstdio>

#include "pnn/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic digit dataset generator (IDX format)"};
    pnn::SynthConfig cfg;
    std::string out_dir = "data";
    bool gzip = false;
    app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
    app.add_option("--train-count", cfg.train_count, "training examples")->capture_default_str();
    app.add_option("--eval-count", cfg.eval_count, "evaluation examples")->capture_default_str();
    app.add_option("--seed", cfg.seed, "generator seed")->capture_default_str();
    app.add_option("--noise", cfg.noise_stddev, "per-pixel noise level")->capture_default_str();
    app.add_option("--jitter", cfg.jitter, "geometric jitter scale")->capture_default_str();
    app.add_flag("--gzip", gzip, "write .gz files");
    CLI11_PARSE(app, argc, argv);

    try {
        pnn::write_synth_dataset(out_dir, cfg, gzip);
    } catch (const pnn::Error& e) {
        std::fprintf(stderr, "error: {\"kind\":\"%s\",\"message\":\"%s\"}\n", e.kind().c_str(),
                     e.what());
        return 1;
    }
    std::printf("wrote %zu training and %zu evaluation examples to %s%s\n", cfg.train_count,
                cfg.eval_count, out_dir.c_str(), gzip ? " (gzipped)" : "");
    return 0;
}
