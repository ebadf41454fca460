// End-to-end acceptance suite. Each test covers one numbered criterion and a
// listener prints one PASS/FAIL line per criterion at the end of each test.
//
// The heavier fixtures - a 100-image training corpus, the trained classifier,
// and a 20-puzzle evaluation corpus - are built once and shared. Everything
// is seeded, so reruns are bit-identical.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "jigsaw/jigsaw.hpp"
#include "test_support.hpp"

using namespace jigsaw;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli_path;
Clock::time_point g_suite_start;

double elapsed_seconds(Clock::time_point since) {
    return std::chrono::duration<double>(Clock::now() - since).count();
}

// Shared corpora and the trained classifier, built on first use.
class Env {
  public:
    static Env& get() {
        static Env env;
        return env;
    }

    const fs::path& work_dir() {
        if (work_.empty()) {
            work_ = testsupport::make_temp_dir("jigsaw_acceptance");
        }
        return work_;
    }

    // 100 disjoint training images: 60 fully textured, 40 with a smooth band.
    const std::vector<PuzzleBundle>& train_corpus() {
        if (train_.empty()) {
            for (int i = 0; i < 60; ++i) {
                train_.push_back(make_puzzle(testsupport::synth_image(480, 360, 1000 + i), 28,
                                             PuzzleMode::type1, 10 + i));
            }
            for (int i = 0; i < 20; ++i) {
                train_.push_back(
                    make_puzzle(testsupport::synth_image_with_band(480, 360, 2000 + i, 0.35, 6.0),
                                28, PuzzleMode::type1, 110 + i));
            }
            for (int i = 0; i < 20; ++i) {
                train_.push_back(
                    make_puzzle(testsupport::synth_image_with_band(480, 360, 2500 + i, 0.35, 14.0),
                                28, PuzzleMode::type1, 140 + i));
            }
        }
        return train_;
    }

    // 20 evaluation puzzles from image seeds disjoint from the training set:
    // 10 fully textured followed by 10 with smooth bands.
    const std::vector<PuzzleBundle>& eval_corpus() {
        if (eval_.empty()) {
            for (int i = 0; i < 10; ++i) {
                eval_.push_back(make_puzzle(testsupport::synth_image(480, 360, 9000 + i), 28,
                                            PuzzleMode::type1, 20 + i));
            }
            for (int i = 0; i < 5; ++i) {
                eval_.push_back(
                    make_puzzle(testsupport::synth_image_with_band(480, 360, 9500 + i, 0.35, 6.0),
                                28, PuzzleMode::type1, 30 + i));
            }
            for (int i = 0; i < 5; ++i) {
                eval_.push_back(
                    make_puzzle(testsupport::synth_image_with_band(480, 360, 9700 + i, 0.35, 14.0),
                                28, PuzzleMode::type1, 40 + i));
            }
        }
        return eval_;
    }

    const Network& network() {
        if (!net_) {
            const auto ds = build_dataset(train_corpus(), 42, 2);
            auto net = Network::random({336, 100, 100, 100, 2}, 7);
            TrainConfig cfg;
            cfg.epochs = 40;
            cfg.seed = 8;
            const auto log = train(net, ds, cfg);
            std::printf("[fixture] trained on %zu samples, final train accuracy %.4f\n", ds.size(),
                        log.back().train_accuracy);
            net_ = std::move(net);
        }
        return *net_;
    }

    const std::string& network_path() {
        if (net_path_.empty()) {
            net_path_ = (work_dir() / "weights.jnet").string();
            save_network(network(), net_path_);
        }
        return net_path_;
    }

  private:
    fs::path work_;
    std::vector<PuzzleBundle> train_, eval_;
    std::optional<Network> net_;
    std::string net_path_;
};

int run_cli(const std::string& args, const fs::path& log_file) {
    const std::string cmd = g_cli_path + " " + args + " > " + log_file.string() + " 2>&1";
    return std::system(cmd.c_str());
}

// Primary outputs only: the run_config.json echo records the (differing)
// output paths by design and is not compared.
std::map<std::string, std::vector<char>> dir_contents(const fs::path& root) {
    std::map<std::string, std::vector<char>> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().filename() != "run_config.json") {
            out[fs::relative(entry.path(), root).string()] =
                testsupport::read_file_bytes(entry.path());
        }
    }
    return out;
}

std::vector<std::pair<int, int>> most_compatible_pairs(const CompatibilityMatrix& m) {
    std::unordered_set<std::int64_t> keys;
    std::vector<std::pair<int, int>> pairs;
    for (int e = 0; e < m.edge_count(); ++e) {
        const int b = m.best[e];
        if (b < 0) continue;
        const std::int64_t key =
            static_cast<std::int64_t>(std::min(e, b)) * m.edge_count() + std::max(e, b);
        if (keys.insert(key).second) pairs.emplace_back(std::min(e, b), std::max(e, b));
    }
    return pairs;
}

}  // namespace

// Criterion 1: backprop matches central finite differences to < 1e-6 over 10
// random networks and samples, in under 10 seconds.
TEST(Acceptance, Criterion1_GradientCorrectness) {
    const auto start = Clock::now();
    const std::vector<std::vector<int>> shapes{
        {24, 16, 10, 2}, {12, 9, 7, 5, 2}, {30, 8, 2}, {16, 16, 16, 2}, {8, 6, 4, 2}};
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto net = Network::random(shapes[seed % shapes.size()], seed);
        Prng rng(500 + seed);
        std::vector<double> input(net.input_size());
        for (auto& v : input) v = rng.normal();
        const double err = gradient_check(net, input, static_cast<int>(seed % 2));
        worst = std::max(worst, err);
        EXPECT_LT(err, 1e-6) << "seed " << seed;
    }
    const double secs = elapsed_seconds(start);
    std::printf("  max relative error %.3g over 10 networks in %.2fs\n", worst, secs);
    EXPECT_LT(secs, 10.0);
}

// Criterion 2: >= 99% train accuracy within 20 epochs on a 200-sample
// linearly separable set, in under 5 seconds.
TEST(Acceptance, Criterion2_ToyTraining) {
    const auto start = Clock::now();
    Dataset ds;
    for (int i = 0; i < 200; ++i) {
        const bool match = i % 2 == 0;
        for (int j = 0; j < kFeatureLength; ++j) ds.features.push_back(match ? 1.0f : -1.0f);
        ds.labels.push_back(match ? 1 : 0);
        ds.image_ids.push_back(0);
        ds.edge_a.push_back(-1);
        ds.edge_b.push_back(-1);
    }
    auto net = Network::random({336, 100, 100, 100, 2}, 1);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 2;
    const auto log = train(net, ds, cfg);
    const double secs = elapsed_seconds(start);
    std::printf("  toy accuracy %.4f after %zu epochs in %.2fs\n", log.back().train_accuracy,
                log.size(), secs);
    EXPECT_GE(log.back().train_accuracy, 0.99);
    EXPECT_LT(secs, 5.0);
}

// Criterion 3: on a 20-image 12x17 corpus, every positive is ground-truth
// adjacent, every negative is not, classes balance exactly, and every sample
// pair is a most- or second-most-compatible pair; under 2 minutes.
TEST(Acceptance, Criterion3_DatasetSoundness) {
    const auto start = Clock::now();
    std::vector<PuzzleBundle> corpus;
    for (int i = 0; i < 20; ++i) {
        corpus.push_back(make_puzzle(testsupport::synth_image(480, 360, 5000 + i), 28,
                                     PuzzleMode::type1, 100 + i));
        ASSERT_EQ(corpus.back().piece_count(), 204);
    }
    const auto ds = build_dataset(corpus, 42, 2);

    EXPECT_EQ(ds.positive_count(), ds.negative_count());
    std::size_t bad_labels = 0, uninformed = 0;
    for (int img = 0; img < 20; ++img) {
        const auto gt_partner = ground_truth_partner_map(*corpus[img].ground_truth);
        const auto matrix = build_matrix(corpus[img].pieces, corpus[img].mode, {}, 2);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.image_ids[i] != img) continue;
            const bool adjacent = gt_partner[ds.edge_a[i]] == ds.edge_b[i];
            if (adjacent != (ds.labels[i] == 1)) ++bad_labels;
            if (matrix.best[ds.edge_a[i]] != ds.edge_b[i] &&
                matrix.second_best[ds.edge_a[i]] != ds.edge_b[i]) {
                ++uninformed;
            }
        }
    }
    const double secs = elapsed_seconds(start);
    std::printf("  %zu samples (%zu positive), %zu label errors, %zu uninformed pairs in %.1fs\n",
                ds.size(), ds.positive_count(), bad_labels, uninformed, secs);
    EXPECT_EQ(bad_labels, 0u);
    EXPECT_EQ(uninformed, 0u);
    EXPECT_LT(secs, 120.0);
}

// Criterion 4: every learned pair is its anchor's most compatible candidate
// (exhaustive, 5 bundles); the precision comparison against the raw
// most-compatible pairing is reported.
TEST(Acceptance, Criterion4_MetricGateInvariant) {
    const auto& net = Env::get().network();
    const auto& eval = Env::get().eval_corpus();
    int violations = 0;
    int dnn_correct = 0, dnn_proposed = 0, mc_correct = 0, mc_proposed = 0;
    for (int i = 0; i < 5; ++i) {
        const auto matrix = build_matrix(eval[i].pieces, eval[i].mode, {}, 2);
        const auto map = compute_dnn_buddies(matrix, net, eval[i].pieces, 0.5, 2);
        for (int e = 0; e < matrix.edge_count(); ++e) {
            if (map.partner[e] >= 0 && map.partner[e] != matrix.best[e]) ++violations;
        }
        const auto dnn_stats = metric_precision(dnn_buddy_pairs(map), *eval[i].ground_truth);
        const auto mc_stats =
            metric_precision(most_compatible_pairs(matrix), *eval[i].ground_truth);
        dnn_correct += dnn_stats.correct;
        dnn_proposed += dnn_stats.proposed;
        mc_correct += mc_stats.correct;
        mc_proposed += mc_stats.proposed;
    }
    const double dnn_prec = static_cast<double>(dnn_correct) / dnn_proposed;
    const double mc_prec = static_cast<double>(mc_correct) / mc_proposed;
    std::printf("  subset violations: %d | precision: learned %.4f (%d/%d) vs most-compatible "
                "%.4f (%d/%d)\n",
                violations, dnn_prec, dnn_correct, dnn_proposed, mc_prec, mc_correct, mc_proposed);
    EXPECT_EQ(violations, 0);  // hard requirement; the comparison above is reported
}

// Criterion 5: reference-corpus figures require the original benchmark sets; the desk
// substitute requires learned-pair precision >= 85% on the 20-puzzle corpus
// with a network trained on a disjoint 100-image corpus.
TEST(Acceptance, Criterion5_DeskScaleMetricPrecision) {
    const auto& net = Env::get().network();
    const auto& eval = Env::get().eval_corpus();
    ASSERT_EQ(eval.size(), 20u);
    int correct = 0, proposed = 0;
    for (const auto& bundle : eval) {
        const auto matrix = build_matrix(bundle.pieces, bundle.mode, {}, 2);
        const auto map = compute_dnn_buddies(matrix, net, bundle.pieces, 0.5, 2);
        const auto stats = metric_precision(dnn_buddy_pairs(map), *bundle.ground_truth);
        correct += stats.correct;
        proposed += stats.proposed;
    }
    const double precision = static_cast<double>(correct) / proposed;
    std::printf("  pooled learned-pair precision %.4f (%d/%d) over 20 puzzles\n", precision,
                correct, proposed);
    std::printf("  (reference-corpus figures are not reproducible here; substitute threshold 0.85)\n");
    EXPECT_GE(precision, 0.85);
    EXPECT_LT(elapsed_seconds(g_suite_start), 30.0 * 60.0);
}

// Criterion 6: 2x2 and 3x3 puzzles reach perfect reconstruction in at least
// 9 of 10 seeded runs; on 2x2 the GA optimum matches the 24-placement brute
// force; under 1 minute.
TEST(Acceptance, Criterion6_TinyPuzzleExactness) {
    const auto start = Clock::now();
    for (int dim : {2, 3}) {
        int perfect = 0;
        for (int s = 0; s < 10; ++s) {
            const auto bundle = make_puzzle(testsupport::synth_image(28 * dim, 28 * dim, 3000 + s),
                                            28, PuzzleMode::type1, 40 + s);
            const auto matrix = build_matrix(bundle.pieces, bundle.mode);
            const auto bb = best_buddy_map(matrix);
            GaConfig cfg;
            cfg.population = 50;
            cfg.generations = 20;
            cfg.elites = 2;
            cfg.seed = derive_seed(555, s);
            const auto result = solve(bundle, matrix, bb, nullptr, cfg);
            perfect += (neighbor_accuracy(result.best, *bundle.ground_truth) == 1.0);

            if (dim == 2) {
                std::vector<std::int32_t> perm{0, 1, 2, 3};
                double optimum = std::numeric_limits<double>::infinity();
                do {
                    Chromosome ch;
                    ch.rows = ch.cols = 2;
                    ch.cells = perm;
                    ch.rots.assign(4, 0);
                    optimum = std::min(optimum, fitness(ch, matrix));
                } while (std::next_permutation(perm.begin(), perm.end()));
                EXPECT_NEAR(result.best.fitness, optimum, 1e-9) << "2x2 seed " << s;
            }
        }
        std::printf("  %dx%d: %d/10 perfect reconstructions\n", dim, dim, perfect);
        EXPECT_GE(perfect, 9) << dim << "x" << dim;
    }
    const double secs = elapsed_seconds(start);
    std::printf("  tiny-puzzle block in %.1fs\n", secs);
    EXPECT_LT(secs, 60.0);
}

// Criterion 7: paired ablation over 10 seeded puzzles; the mean neighbor
// accuracy with the learned metric must not regress; per-puzzle deltas are
// reported; under 20 minutes.
TEST(Acceptance, Criterion7_PairedAblation) {
    const auto start = Clock::now();
    const auto& net = Env::get().network();
    const auto& eval = Env::get().eval_corpus();
    std::vector<PuzzleBundle> corpus(eval.begin(), eval.begin() + 10);
    std::vector<std::string> names;
    for (int i = 0; i < 10; ++i) names.push_back("puzzle_" + std::to_string(i));

    GaConfig cfg;
    cfg.population = 60;
    cfg.generations = 30;
    cfg.elites = 2;
    cfg.seed = 777;
    cfg.threads = 2;
    const auto report = benchmark(corpus, names, net, cfg);
    std::printf("%s", report.to_table().c_str());
    const double secs = elapsed_seconds(start);
    std::printf("  ablation block in %.1fs\n", secs);
    EXPECT_GE(report.mean_accuracy_on, report.mean_accuracy_off);
    EXPECT_LT(secs, 20.0 * 60.0);
}

// Criterion 8: rerunning any subcommand with identical inputs and seeds
// produces byte-identical bundles, datasets, weights, and placements.
TEST(Acceptance, Criterion8_Determinism) {
    ASSERT_FALSE(g_cli_path.empty()) << "CLI path not supplied (--cli=...)";
    const auto work = Env::get().work_dir() / "determinism";
    fs::create_directories(work);

    const auto images = work / "images";
    fs::create_directories(images);
    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%02d.png", i);
        write_png(testsupport::synth_image(112, 84, 8800 + i), (images / name).string());
    }

    auto cli = [&](const std::string& args, const std::string& log) {
        ASSERT_EQ(run_cli(args, work / log), 0) << "command failed: " << args;
    };

    // bundles
    cli("cut --input " + images.string() + " --out " + (work / "cut_a").string() + " --seed 5",
        "cut_a.log");
    cli("cut --input " + images.string() + " --out " + (work / "cut_b").string() + " --seed 5",
        "cut_b.log");
    EXPECT_EQ(dir_contents(work / "cut_a"), dir_contents(work / "cut_b")) << "bundles differ";

    // datasets
    cli("build-dataset --bundles " + (work / "cut_a").string() + " --out " +
            (work / "ds_a").string() + " --split 0.34 --seed 6",
        "ds_a.log");
    cli("build-dataset --bundles " + (work / "cut_a").string() + " --out " +
            (work / "ds_b").string() + " --split 0.34 --seed 6",
        "ds_b.log");
    EXPECT_EQ(testsupport::read_file_bytes(work / "ds_a" / "train.dnnb"),
              testsupport::read_file_bytes(work / "ds_b" / "train.dnnb"));
    EXPECT_EQ(testsupport::read_file_bytes(work / "ds_a" / "val.dnnb"),
              testsupport::read_file_bytes(work / "ds_b" / "val.dnnb"));

    // weights
    cli("train --dataset " + (work / "ds_a" / "train.dnnb").string() + " --out " +
            (work / "tr_a").string() + " --epochs 2 --batch-size 32 --seed 7",
        "tr_a.log");
    cli("train --dataset " + (work / "ds_a" / "train.dnnb").string() + " --out " +
            (work / "tr_b").string() + " --epochs 2 --batch-size 32 --seed 7",
        "tr_b.log");
    EXPECT_EQ(testsupport::read_file_bytes(work / "tr_a" / "weights.jnet"),
              testsupport::read_file_bytes(work / "tr_b" / "weights.jnet"));

    // placements
    const auto bundle0 = (work / "cut_a" / "img_00").string();
    cli("solve --bundle " + bundle0 + " --out " + (work / "sol_a").string() +
            " --population 30 --generations 10 --seed 9",
        "sol_a.log");
    cli("solve --bundle " + bundle0 + " --out " + (work / "sol_b").string() +
            " --population 30 --generations 10 --seed 9",
        "sol_b.log");
    EXPECT_EQ(testsupport::read_file_bytes(work / "sol_a" / "placement.json"),
              testsupport::read_file_bytes(work / "sol_b" / "placement.json"));
    EXPECT_EQ(testsupport::read_file_bytes(work / "sol_a" / "stats.csv"),
              testsupport::read_file_bytes(work / "sol_b" / "stats.csv"));
    EXPECT_EQ(testsupport::read_file_bytes(work / "sol_a" / "reconstruction.png"),
              testsupport::read_file_bytes(work / "sol_b" / "reconstruction.png"));
}

// Criterion 9: the evaluator reports the spanning-recall value 203/1516 for a
// 12x17 grid without asserting any bound on it.
TEST(Acceptance, Criterion9_SpanningRecallReport) {
    const double v = spanning_recall_bound(12, 17);
    EXPECT_NEAR(v, 203.0 / 1516.0, 1e-12);
    EXPECT_NEAR(v, 0.1339, 5e-5);
    std::printf("  spanning recall value for 12x17: 203/1516 = %.6f\n", v);

    // the CLI evaluator prints the same figure
    ASSERT_FALSE(g_cli_path.empty()) << "CLI path not supplied (--cli=...)";
    const auto work = Env::get().work_dir() / "eq3";
    fs::create_directories(work);
    const auto bundle_dir = (work / "bundle").string();
    save_bundle(Env::get().eval_corpus()[0], bundle_dir);
    const auto log = work / "eval.log";
    ASSERT_EQ(run_cli("eval-metric --bundle " + bundle_dir + " --weights " +
                          Env::get().network_path() + " --out " + (work / "report").string(),
                      log),
              0);
    const auto bytes = testsupport::read_file_bytes(log);
    const std::string text(bytes.begin(), bytes.end());
    EXPECT_NE(text.find("203/1516"), std::string::npos) << text;
    EXPECT_NE(text.find("0.1339"), std::string::npos) << text;
}

namespace {

// Prints "[CRITERION n] PASS|FAIL - <test name>" after each criterion test.
class CriterionPrinter : public ::testing::EmptyTestEventListener {
    void OnTestEnd(const ::testing::TestInfo& info) override {
        const std::string name = info.name();
        if (name.rfind("Criterion", 0) != 0) return;
        std::string num;
        for (std::size_t i = 9; i < name.size() && std::isdigit(name[i]); ++i) num += name[i];
        std::printf("[CRITERION %s] %s - %s\n", num.c_str(),
                    info.result()->Passed() ? "PASS" : "FAIL", name.c_str());
        std::fflush(stdout);
    }
};

}  // namespace

int main(int argc, char** argv) {
    g_suite_start = Clock::now();
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg.rfind("--cli=", 0) == 0) g_cli_path = arg.substr(6);
    }
    if (g_cli_path.empty()) {
        // fall back to the usual build layout
        const auto guess = fs::path(argv[0]).parent_path().parent_path() / "tools" / "jigsaw";
        if (fs::exists(guess)) g_cli_path = guess.string();
    }
    ::testing::InitGoogleTest(&argc, argv);
    ::testing::UnitTest::GetInstance()->listeners().Append(new CriterionPrinter);
    return RUN_ALL_TESTS();
}
