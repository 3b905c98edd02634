// Expands the bundled 8x8 handwritten-digit set into 28x28 IDX train/test
// files by seeded affine + brightness augmentation. Stand-in workload for
// the train/adaptive subcommands when no full-size corpus is available.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "layercomp/digits.hpp"
#include "layercomp/idx.hpp"

using namespace layercomp;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"augmented digit dataset generator"};
    std::string base_images = "data/digits8x8-images-idx3-ubyte";
    std::string base_labels = "data/digits8x8-labels-idx1-ubyte";
    std::string out_dir = "data/generated";
    std::size_t train_count = 60000, test_count = 10000;
    std::uint64_t train_seed = 101, test_seed = 202;
    AugmentParams knobs;
    knobs.intensity_lo = 0.5;
    knobs.intensity_hi = 0.85;
    app.add_option("--base-images", base_images);
    app.add_option("--base-labels", base_labels);
    app.add_option("--out-dir", out_dir);
    app.add_option("--train-count", train_count);
    app.add_option("--test-count", test_count);
    app.add_option("--train-seed", train_seed);
    app.add_option("--test-seed", test_seed);
    app.add_option("--rotation", knobs.max_rotation_deg);
    app.add_option("--shift", knobs.max_shift);
    app.add_option("--scale-jitter", knobs.scale_jitter);
    app.add_option("--intensity-lo", knobs.intensity_lo);
    app.add_option("--intensity-hi", knobs.intensity_hi);
    CLI11_PARSE(app, argc, argv);

    try {
        const auto base = load_idx(base_images, base_labels);
        const auto [train_base, test_base] = split_every_kth(base, 6);
        fs::create_directories(out_dir);

        AugmentParams tr = knobs;
        tr.count = train_count;
        tr.seed = train_seed;
        const auto train = augment_digits(train_base, tr);
        save_idx(train, (fs::path(out_dir) / "train-images-idx3-ubyte").string(),
                 (fs::path(out_dir) / "train-labels-idx1-ubyte").string());

        AugmentParams te = knobs;
        te.count = test_count;
        te.seed = test_seed;
        const auto test = augment_digits(test_base, te);
        save_idx(test, (fs::path(out_dir) / "t10k-images-idx3-ubyte").string(),
                 (fs::path(out_dir) / "t10k-labels-idx1-ubyte").string());

        std::cout << "wrote " << train.n() << " train and " << test.n()
                  << " test samples to " << out_dir << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
