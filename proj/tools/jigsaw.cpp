// Pipeline CLI: cut images into puzzle bundles, build the balanced edge-pair
// dataset, train the classifier, evaluate the learned metric, solve bundles
// with the GA, and run the paired with/without ablation benchmark.
//
// Every subcommand is deterministic under fixed seeds and writes a
// run_config.json echo next to its outputs.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jigsaw/jigsaw.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr const char* kToolVersion = "1.0.0";

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw jigsaw::FormatError("cannot write " + path.string());
}

void write_run_config(const fs::path& out_dir, const std::string& command, const json& options) {
    json j;
    j["tool"] = "jigsaw";
    j["tool_version"] = kToolVersion;
    j["command"] = command;
    j["options"] = options;
    write_json(j, out_dir / "run_config.json");
}

std::vector<fs::path> sorted_image_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".PNG" || ext == ".ppm" || ext == ".PPM") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<fs::path> sorted_bundle_dirs(const fs::path& dir) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "bundle.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

jigsaw::PuzzleMode parse_mode(const std::string& mode) {
    if (mode == "type1") return jigsaw::PuzzleMode::type1;
    if (mode == "type2") return jigsaw::PuzzleMode::type2;
    throw CLI::ValidationError("--mode", "must be type1 or type2");
}

struct MetricFlags {
    std::string metric = "l2";
    double p = 0.3;
    double q = 1.0 / 16.0;

    jigsaw::MetricConfig config() const {
        jigsaw::MetricConfig cfg;
        if (metric == "l2") {
            cfg.kind = jigsaw::MetricConfig::Kind::l2;
        } else if (metric == "lpq") {
            cfg.kind = jigsaw::MetricConfig::Kind::lpq;
            cfg.p = p;
            cfg.q = q;
        } else {
            throw CLI::ValidationError("--metric", "must be l2 or lpq");
        }
        return cfg;
    }

    void add_to(CLI::App* cmd) {
        cmd->add_option("--metric", metric, "Pairwise score: l2 or lpq");
        cmd->add_option("--lp-p", p, "p exponent for the lpq metric");
        cmd->add_option("--lp-q", q, "q exponent for the lpq metric");
    }
};

struct CutOptions {
    std::string input;
    std::string out;
    int tile_size = jigsaw::kDefaultTileSize;
    std::string mode = "type1";
    std::uint64_t seed = 0;
    bool strip_ground_truth = false;
};

int run_cut(const CutOptions& opt) {
    const auto mode = parse_mode(opt.mode);
    std::vector<fs::path> files;
    if (fs::is_directory(opt.input)) {
        files = sorted_image_files(opt.input);
    } else if (fs::exists(opt.input)) {
        files.push_back(opt.input);
    }
    if (files.empty()) {
        std::cerr << "cut: no .png or .ppm images found in " << opt.input << "\n";
        return 1;
    }
    fs::create_directories(opt.out);

    int ok = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        try {
            const auto img = jigsaw::read_image(files[i].string());
            const auto bundle = jigsaw::make_puzzle(img, opt.tile_size, mode,
                                                    jigsaw::derive_seed(opt.seed, i));
            const auto bundle_dir = fs::path(opt.out) / files[i].stem();
            jigsaw::save_bundle(bundle, bundle_dir.string(), !opt.strip_ground_truth);
            std::cout << "cut " << files[i].filename().string() << " -> " << bundle.piece_count()
                      << " pieces";
            if (bundle.dims) std::cout << " (" << bundle.dims->first << "x" << bundle.dims->second << ")";
            std::cout << "\n";
            ++ok;
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << files[i].string() << ": " << e.what() << "\n";
        }
    }
    if (ok == 0) {
        std::cerr << "cut: all inputs failed\n";
        return 1;
    }
    write_run_config(opt.out, "cut",
                     {{"input", opt.input},
                      {"out", opt.out},
                      {"tile_size", opt.tile_size},
                      {"mode", opt.mode},
                      {"seed", opt.seed},
                      {"strip_ground_truth", opt.strip_ground_truth}});
    return 0;
}

struct DatasetOptions {
    std::string bundles;
    std::string out;
    double split = 0.1;
    std::uint64_t seed = 0;
    bool csv = false;
    int threads = 1;
};

int run_build_dataset(const DatasetOptions& opt) {
    const auto dirs = sorted_bundle_dirs(opt.bundles);
    if (dirs.empty()) {
        std::cerr << "build-dataset: no bundle directories under " << opt.bundles << "\n";
        return 1;
    }
    std::vector<jigsaw::PuzzleBundle> corpus;
    for (const auto& d : dirs) corpus.push_back(jigsaw::load_bundle(d.string()));

    const auto [train_idx, val_idx] =
        jigsaw::split_by_image(static_cast<int>(corpus.size()), opt.split, opt.seed);
    std::vector<jigsaw::PuzzleBundle> train_corpus, val_corpus;
    for (int i : train_idx) train_corpus.push_back(corpus[i]);
    for (int i : val_idx) val_corpus.push_back(corpus[i]);

    fs::create_directories(opt.out);
    const auto train_ds =
        jigsaw::build_dataset(train_corpus, jigsaw::derive_seed(opt.seed, 1), opt.threads);
    jigsaw::save_dataset(train_ds, (fs::path(opt.out) / "train.dnnb").string());
    std::cout << "train set: " << train_ds.size() << " samples (" << train_ds.positive_count()
              << " positive / " << train_ds.negative_count() << " negative) from "
              << train_corpus.size() << " images\n";
    if (opt.csv) jigsaw::export_dataset_csv(train_ds, (fs::path(opt.out) / "train.csv").string());

    if (!val_corpus.empty()) {
        const auto val_ds =
            jigsaw::build_dataset(val_corpus, jigsaw::derive_seed(opt.seed, 2), opt.threads);
        jigsaw::save_dataset(val_ds, (fs::path(opt.out) / "val.dnnb").string());
        std::cout << "val set:   " << val_ds.size() << " samples (" << val_ds.positive_count()
                  << " positive) from " << val_corpus.size() << " images\n";
        if (opt.csv) jigsaw::export_dataset_csv(val_ds, (fs::path(opt.out) / "val.csv").string());
    }

    write_run_config(opt.out, "build-dataset",
                     {{"bundles", opt.bundles},
                      {"out", opt.out},
                      {"split", opt.split},
                      {"seed", opt.seed},
                      {"csv", opt.csv},
                      {"threads", opt.threads}});
    return 0;
}

struct TrainOptions {
    std::string dataset;
    std::string val;
    std::string out;
    double learning_rate = 0.01;
    int batch_size = 128;
    int epochs = 100;
    std::uint64_t seed = 0;
};

int run_train(const TrainOptions& opt) {
    const auto start = Clock::now();
    const auto ds = jigsaw::load_dataset(opt.dataset);
    std::optional<jigsaw::Dataset> val;
    if (!opt.val.empty()) val = jigsaw::load_dataset(opt.val);

    auto net = jigsaw::Network::random({336, 100, 100, 100, 2}, jigsaw::derive_seed(opt.seed, 0));
    jigsaw::TrainConfig cfg;
    cfg.learning_rate = opt.learning_rate;
    cfg.batch_size = opt.batch_size;
    cfg.epochs = opt.epochs;
    cfg.seed = jigsaw::derive_seed(opt.seed, 1);

    const auto log = jigsaw::train(net, ds, cfg, val ? &*val : nullptr);
    fs::create_directories(opt.out);
    jigsaw::save_network(net, (fs::path(opt.out) / "weights.jnet").string());
    jigsaw::save_train_log_csv(log, (fs::path(opt.out) / "train_log.csv").string());

    const auto& last = log.back();
    std::cout << "trained " << opt.epochs << " epochs on " << ds.size() << " samples in "
              << seconds_since(start) << "s\n";
    std::cout << "final: loss " << last.loss << ", train accuracy " << last.train_accuracy;
    if (last.val_accuracy >= 0) std::cout << ", val accuracy " << last.val_accuracy;
    std::cout << "\n";

    write_run_config(opt.out, "train",
                     {{"dataset", opt.dataset},
                      {"val", opt.val},
                      {"out", opt.out},
                      {"learning_rate", opt.learning_rate},
                      {"batch_size", opt.batch_size},
                      {"epochs", opt.epochs},
                      {"seed", opt.seed}});
    return 0;
}

struct EvalMetricOptions {
    std::string bundle;
    std::string weights;
    std::string out;
    double threshold = 0.5;
    MetricFlags metric;
    int threads = 1;
    bool dump_matrix = false;
};

int run_eval_metric(const EvalMetricOptions& opt) {
    const auto bundle = jigsaw::load_bundle(opt.bundle);
    if (!bundle.ground_truth) {
        std::cerr << "eval-metric: bundle has no ground truth to evaluate against\n";
        return 1;
    }
    const auto net = jigsaw::load_network(opt.weights);
    jigsaw::require_classifier_shape(net);

    const auto matrix =
        jigsaw::build_matrix(bundle.pieces, bundle.mode, opt.metric.config(), opt.threads);
    const auto map =
        jigsaw::compute_dnn_buddies(matrix, net, bundle.pieces, opt.threshold, opt.threads);
    const auto& gt = *bundle.ground_truth;
    auto report = jigsaw::metric_report_json(matrix, map, gt, jigsaw::file_hash_hex(opt.weights));

    fs::create_directories(opt.out);
    write_json(report, fs::path(opt.out) / "metric_report.json");
    if (opt.dump_matrix) {
        jigsaw::save_matrix(matrix, (fs::path(opt.out) / "matrix.jcmx").string());
    }

    const auto& dnn = report["dnn_buddies"];
    std::cout << "dnn buddies: " << dnn["proposed"] << " proposed, " << dnn["correct"] << " correct";
    if (!dnn["precision"].is_null()) std::cout << ", precision " << dnn["precision"];
    std::cout << "\n";
    std::cout << "best buddies precision: " << report["best_buddies"]["precision"]
              << " | most compatible precision: " << report["most_compatible"]["precision"] << "\n";
    const int spanning = gt.rows * gt.cols - 1;
    const int all = 4 * gt.adjacency_count();
    std::cout << "spanning recall bound: " << spanning << "/" << all << " = "
              << jigsaw::spanning_recall_bound(gt.rows, gt.cols) << "\n";

    write_run_config(opt.out, "eval-metric",
                     {{"bundle", opt.bundle},
                      {"weights", opt.weights},
                      {"out", opt.out},
                      {"threshold", opt.threshold},
                      {"metric", opt.metric.metric},
                      {"lp_p", opt.metric.p},
                      {"lp_q", opt.metric.q},
                      {"threads", opt.threads},
                      {"dump_matrix", opt.dump_matrix}});
    return 0;
}

struct SolveOptions {
    std::string bundle;
    std::string weights;
    std::string out;
    int population = 300;
    int generations = 100;
    int elites = 4;
    std::uint64_t seed = 0;
    double threshold = 0.5;
    MetricFlags metric;
    bool no_dnn = false;
    bool free_metric_phases = false;
    bool emit_image = true;
    int threads = 1;
};

json solve_config_json(const SolveOptions& opt) {
    return {{"bundle", opt.bundle},
            {"weights", opt.weights},
            {"out", opt.out},
            {"population", opt.population},
            {"generations", opt.generations},
            {"elites", opt.elites},
            {"seed", opt.seed},
            {"threshold", opt.threshold},
            {"metric", opt.metric.metric},
            {"lp_p", opt.metric.p},
            {"lp_q", opt.metric.q},
            {"no_dnn", opt.no_dnn},
            {"free_metric_phases", opt.free_metric_phases},
            {"emit_image", opt.emit_image},
            {"threads", opt.threads}};
}

int run_solve(const SolveOptions& opt) {
    const auto start = Clock::now();
    const auto bundle = jigsaw::load_bundle(opt.bundle);
    fs::create_directories(opt.out);

    jigsaw::Chromosome best;
    std::vector<jigsaw::GenerationStats> stats;
    json metric_section;

    if (bundle.piece_count() == 1) {
        best.rows = best.cols = 1;
        best.cells = {0};
        best.rots = {0};
        best.fitness = 0.0;
    } else {
        const auto matrix =
            jigsaw::build_matrix(bundle.pieces, bundle.mode, opt.metric.config(), opt.threads);
        const auto bb = jigsaw::best_buddy_map(matrix);

        std::optional<jigsaw::DnnBuddyMap> dnn;
        if (!opt.weights.empty() && !opt.no_dnn) {
            const auto net = jigsaw::load_network(opt.weights);
            jigsaw::require_classifier_shape(net);
            dnn = jigsaw::compute_dnn_buddies(matrix, net, bundle.pieces, opt.threshold, opt.threads);
            if (bundle.ground_truth) {
                metric_section = jigsaw::metric_report_json(matrix, *dnn, *bundle.ground_truth,
                                                            jigsaw::file_hash_hex(opt.weights));
            }
        }

        jigsaw::GaConfig cfg;
        cfg.population = opt.population;
        cfg.generations = opt.generations;
        cfg.elites = opt.elites;
        cfg.seed = opt.seed;
        cfg.use_dnn = dnn.has_value();
        cfg.parent_constrained_metric_phases = !opt.free_metric_phases;
        cfg.threads = opt.threads;

        std::function<double(const jigsaw::Chromosome&)> accuracy_fn;
        if (bundle.ground_truth) {
            const auto gt = *bundle.ground_truth;
            accuracy_fn = [gt](const jigsaw::Chromosome& ch) {
                return jigsaw::neighbor_accuracy(ch, gt);
            };
        }
        auto result = jigsaw::solve(bundle, matrix, bb, dnn ? dnn->partner.data() : nullptr, cfg,
                                    accuracy_fn);
        best = std::move(result.best);
        stats = std::move(result.stats);
    }

    write_json(jigsaw::placement_json(best), fs::path(opt.out) / "placement.json");
    jigsaw::save_stats_csv(stats, (fs::path(opt.out) / "stats.csv").string());
    if (opt.emit_image) {
        jigsaw::write_png(jigsaw::render_placement(bundle, best),
                          (fs::path(opt.out) / "reconstruction.png").string());
        if (bundle.ground_truth) {
            jigsaw::write_png(jigsaw::render_side_by_side(bundle, best),
                              (fs::path(opt.out) / "side_by_side.png").string());
        }
    }

    json report;
    report["schema_version"] = 1;
    report["fitness"] = best.fitness;
    report["dims"] = {best.rows, best.cols};
    if (bundle.ground_truth) {
        const double acc = jigsaw::neighbor_accuracy(best, *bundle.ground_truth);
        report["neighbor_accuracy"] = acc;
        report["perfect"] = (acc == 1.0);
        std::cout << "neighbor accuracy " << acc << (acc == 1.0 ? " (perfect)" : "") << "\n";
    } else {
        report["neighbor_accuracy"] = nullptr;
        report["perfect"] = nullptr;
    }
    if (!metric_section.is_null()) report["metric"] = metric_section;
    report["runtime_seconds"] = seconds_since(start);
    report["config"] = solve_config_json(opt);
    write_json(report, fs::path(opt.out) / "report.json");

    std::cout << "placement " << best.rows << "x" << best.cols << ", fitness " << best.fitness
              << ", " << seconds_since(start) << "s\n";
    write_run_config(opt.out, "solve", solve_config_json(opt));
    return 0;
}

struct BenchmarkOptions {
    std::string bundles;
    std::string weights;
    std::string out;
    int population = 300;
    int generations = 100;
    int elites = 4;
    std::uint64_t seed = 0;
    double threshold = 0.5;
    MetricFlags metric;
    int threads = 1;
};

int run_benchmark(const BenchmarkOptions& opt) {
    const auto start = Clock::now();
    const auto dirs = sorted_bundle_dirs(opt.bundles);
    if (dirs.empty()) {
        std::cerr << "benchmark: no bundle directories under " << opt.bundles << "\n";
        return 1;
    }
    std::vector<jigsaw::PuzzleBundle> corpus;
    std::vector<std::string> names;
    for (const auto& d : dirs) {
        corpus.push_back(jigsaw::load_bundle(d.string()));
        names.push_back(d.filename().string());
    }
    const auto net = jigsaw::load_network(opt.weights);
    jigsaw::require_classifier_shape(net);

    jigsaw::GaConfig cfg;
    cfg.population = opt.population;
    cfg.generations = opt.generations;
    cfg.elites = opt.elites;
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;

    const auto report =
        jigsaw::benchmark(corpus, names, net, cfg, opt.threshold, opt.metric.config());
    std::cout << report.to_table();

    fs::create_directories(opt.out);
    auto j = report.to_json();
    j["runtime_seconds"] = seconds_since(start);
    write_json(j, fs::path(opt.out) / "report.json");

    write_run_config(opt.out, "benchmark",
                     {{"bundles", opt.bundles},
                      {"weights", opt.weights},
                      {"out", opt.out},
                      {"population", opt.population},
                      {"generations", opt.generations},
                      {"elites", opt.elites},
                      {"seed", opt.seed},
                      {"threshold", opt.threshold},
                      {"metric", opt.metric.metric},
                      {"lp_p", opt.metric.p},
                      {"lp_q", opt.metric.q},
                      {"threads", opt.threads}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Square jigsaw puzzle toolkit: tiling, learned edge metric, GA solver"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML file");

    CutOptions cut;
    auto* cut_cmd = app.add_subcommand("cut", "Tile images into shuffled puzzle bundles");
    cut_cmd->add_option("--input", cut.input, "Image file or directory (.png/.ppm)")->required();
    cut_cmd->add_option("--out", cut.out, "Output directory, one bundle per image")->required();
    cut_cmd->add_option("--tile-size", cut.tile_size, "Tile side in pixels");
    cut_cmd->add_option("--mode", cut.mode, "type1 (known orientation) or type2");
    cut_cmd->add_option("--seed", cut.seed, "Shuffle/rotation seed");
    cut_cmd->add_flag("--strip-ground-truth", cut.strip_ground_truth,
                      "Withhold the solution from bundle.json");

    DatasetOptions ds;
    auto* ds_cmd = app.add_subcommand("build-dataset", "Build the balanced edge-pair dataset");
    ds_cmd->add_option("--bundles", ds.bundles, "Directory of puzzle bundles")->required();
    ds_cmd->add_option("--out", ds.out, "Output directory (train.dnnb, val.dnnb)")->required();
    ds_cmd->add_option("--split", ds.split, "Validation fraction, by image")->check(CLI::Range(0.0, 0.999));
    ds_cmd->add_option("--seed", ds.seed, "Split and balancing seed");
    ds_cmd->add_flag("--csv", ds.csv, "Also export inspection CSVs");
    ds_cmd->add_option("--threads", ds.threads, "Worker threads");

    TrainOptions tr;
    auto* tr_cmd = app.add_subcommand("train", "Train the edge-pair classifier");
    tr_cmd->add_option("--dataset", tr.dataset, "Training dataset file")->required();
    tr_cmd->add_option("--val", tr.val, "Validation dataset file");
    tr_cmd->add_option("--out", tr.out, "Output directory (weights.jnet, train_log.csv)")->required();
    tr_cmd->add_option("--learning-rate", tr.learning_rate, "SGD learning rate");
    tr_cmd->add_option("--batch-size", tr.batch_size, "Minibatch size");
    tr_cmd->add_option("--epochs", tr.epochs, "Training epochs");
    tr_cmd->add_option("--seed", tr.seed, "Init and shuffle seed");

    EvalMetricOptions em;
    auto* em_cmd = app.add_subcommand("eval-metric", "Evaluate learned pairs against ground truth");
    em_cmd->add_option("--bundle", em.bundle, "Bundle directory with ground truth")->required();
    em_cmd->add_option("--weights", em.weights, "Classifier weights file")->required();
    em_cmd->add_option("--out", em.out, "Output directory (metric_report.json)")->required();
    em_cmd->add_option("--threshold", em.threshold, "Match-probability threshold");
    em.metric.add_to(em_cmd);
    em_cmd->add_option("--threads", em.threads, "Worker threads");
    em_cmd->add_flag("--dump-matrix", em.dump_matrix, "Also dump the score matrix (matrix.jcmx)");

    SolveOptions so;
    auto* so_cmd = app.add_subcommand("solve", "Reassemble one bundle with the GA");
    so_cmd->add_option("--bundle", so.bundle, "Bundle directory")->required();
    so_cmd->add_option("--weights", so.weights, "Classifier weights (omit for the baseline GA)");
    so_cmd->add_option("--out", so.out, "Output directory")->required();
    so_cmd->add_option("--population", so.population, "GA population size");
    so_cmd->add_option("--generations", so.generations, "GA generations");
    so_cmd->add_option("--elites", so.elites, "Elite count");
    so_cmd->add_option("--seed", so.seed, "GA seed");
    so_cmd->add_option("--threshold", so.threshold, "Match-probability threshold");
    so.metric.add_to(so_cmd);
    so_cmd->add_flag("--no-dnn", so.no_dnn, "Disable the learned-metric phase");
    so_cmd->add_flag("--free-metric-phases", so.free_metric_phases,
                     "Let crossover phases 2-3 use relations absent from both parents");
    so_cmd->add_flag("!--no-image", so.emit_image, "Skip PNG rendering");
    so_cmd->add_option("--threads", so.threads, "Worker threads");

    BenchmarkOptions bm;
    auto* bm_cmd = app.add_subcommand("benchmark", "Paired with/without ablation over a corpus");
    bm_cmd->add_option("--bundles", bm.bundles, "Directory of puzzle bundles")->required();
    bm_cmd->add_option("--weights", bm.weights, "Classifier weights file")->required();
    bm_cmd->add_option("--out", bm.out, "Output directory (report.json)")->required();
    bm_cmd->add_option("--population", bm.population, "GA population size");
    bm_cmd->add_option("--generations", bm.generations, "GA generations");
    bm_cmd->add_option("--elites", bm.elites, "Elite count");
    bm_cmd->add_option("--seed", bm.seed, "Base seed; per-puzzle seeds derive from it");
    bm_cmd->add_option("--threshold", bm.threshold, "Match-probability threshold");
    bm.metric.add_to(bm_cmd);
    bm_cmd->add_option("--threads", bm.threads, "Worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cut_cmd->parsed()) return run_cut(cut);
        if (ds_cmd->parsed()) return run_build_dataset(ds);
        if (tr_cmd->parsed()) return run_train(tr);
        if (em_cmd->parsed()) return run_eval_metric(em);
        if (so_cmd->parsed()) return run_solve(so);
        if (bm_cmd->parsed()) return run_benchmark(bm);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
