// Minimal library walkthrough: synthesize a small image, cut it into a
// shuffled type2 bundle, solve it with the baseline GA, and report accuracy.
//
//   ./solve_roundtrip [seed]

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "jigsaw/jigsaw.hpp"

using namespace jigsaw;

namespace {

// A plasma-like test card: smooth color waves, distinct everywhere.
RawImage test_card(int width, int height, std::uint64_t seed) {
    Prng rng(seed);
    const double px = rng.real01() * 6.28, py = rng.real01() * 6.28;
    RawImage img = make_raw_image(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            auto* p = img.px(y, x);
            p[0] = static_cast<std::uint8_t>(127 + 120 * std::sin(0.07 * x + px));
            p[1] = static_cast<std::uint8_t>(127 + 120 * std::sin(0.05 * y + py));
            p[2] = static_cast<std::uint8_t>(127 + 120 * std::sin(0.04 * (x + y)));
        }
    }
    return img;
}

}  // namespace

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;

    const RawImage img = test_card(6 * 28, 4 * 28, seed);
    const PuzzleBundle bundle = make_puzzle(img, 28, PuzzleMode::type2, seed);
    std::printf("bundle: %d pieces, mode %s\n", bundle.piece_count(), mode_name(bundle.mode));

    const CompatibilityMatrix matrix = build_matrix(bundle.pieces, bundle.mode);
    const auto buddies = best_buddy_map(matrix);
    std::printf("best-buddy pairs: %zu\n", best_buddy_pairs(matrix).size());

    GaConfig cfg;
    cfg.population = 100;
    cfg.generations = 50;
    cfg.elites = 2;
    cfg.seed = seed;
    const SolveResult result = solve(bundle, matrix, buddies, nullptr, cfg);

    const double accuracy = neighbor_accuracy(result.best, *bundle.ground_truth);
    std::printf("solved as %dx%d, fitness %.3f, neighbor accuracy %.4f%s\n", result.best.rows,
                result.best.cols, result.best.fitness, accuracy,
                accuracy == 1.0 ? " (perfect)" : "");

    write_png(render_side_by_side(bundle, result.best), "solve_roundtrip.png");
    std::printf("wrote solve_roundtrip.png\n");
    return accuracy == 1.0 ? 0 : 1;
}
