#include <catch2/catch.hpp>

#include <array>
#include <filesystem>

#include "pnn/synth.hpp"

using namespace pnn;
namespace fs = std::filesystem;

TEST_CASE("synthetic datasets are deterministic and balanced", "[synth]") {
    const auto a = synth_examples(200, 42);
    const auto b = synth_examples(200, 42);
    REQUIRE(a.size() == 200);
    std::array<int, 10> counts{};
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].label == b[i].label);
        CHECK(a[i].pixels == b[i].pixels);
        ++counts[static_cast<std::size_t>(a[i].label)];
    }
    for (int c : counts) CHECK(c == 20);  // balanced blocks of ten

    const auto c = synth_examples(50, 43);
    bool any_differs = false;
    for (std::size_t i = 0; i < c.size() && !any_differs; ++i)
        any_differs = !(c[i].pixels == a[i].pixels);
    CHECK(any_differs);
}

TEST_CASE("synthetic pixels are valid", "[synth]") {
    const auto examples = synth_examples(40, 7);
    for (const auto& ex : examples) {
        REQUIRE(ex.pixels.size() == kImagePixels);
        CHECK(ex.label >= 0);
        CHECK(ex.label <= 9);
        double mass = 0.0;
        for (double p : ex.pixels.data) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            mass += p;
        }
        CHECK(mass > 5.0);  // some ink on every image
    }
}

TEST_CASE("write_synth_dataset emits the standard loadable layout", "[synth]") {
    const fs::path dir = fs::temp_directory_path() / "pnn_synth_test";
    fs::remove_all(dir);
    SynthConfig cfg;
    cfg.train_count = 30;
    cfg.eval_count = 20;
    cfg.seed = 5;
    write_synth_dataset(dir.string(), cfg);

    const Dataset ds = load_dataset_dir(dir.string());
    CHECK(ds.train.size() == 30);
    CHECK(ds.eval.size() == 20);

    const Dataset capped = load_dataset_dir(dir.string(), 0, 12);
    CHECK(capped.train.size() == 12);

    // --train-size truncates like a cap; the tighter of the two wins
    CHECK(load_dataset_dir(dir.string(), 25).train.size() == 25);
    CHECK(load_dataset_dir(dir.string(), 25, 12).train.size() == 12);
    CHECK(load_dataset_dir(dir.string(), 12, 25).train.size() == 12);
}
