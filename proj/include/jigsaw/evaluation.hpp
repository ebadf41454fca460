#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jigsaw/compatibility.hpp"
#include "jigsaw/dnn_buddies.hpp"
#include "jigsaw/ga.hpp"
#include "jigsaw/image_io.hpp"
#include "jigsaw/network.hpp"
#include "jigsaw/puzzle.hpp"

namespace jigsaw {

/// Fraction of the placement's abutting edge pairs that are ground-truth
/// adjacencies, over the ground-truth adjacency count. Edge geometry must
/// match (rotation-aware); a globally rotated solution scores identically
/// because contact pairs are invariant under global rotation. A puzzle with
/// no adjacencies (1x1) scores 1.0.
inline double neighbor_accuracy(const Chromosome& ch, const GroundTruth& gt) {
    const int n = gt.piece_count();
    if (!is_valid_placement(ch, n)) {
        throw std::invalid_argument("neighbor_accuracy: placement does not cover the piece set");
    }
    const int denom = gt.adjacency_count();
    if (denom == 0) return 1.0;
    const auto gtp = ground_truth_partner_map(gt);
    const auto chp = placement_relation_map(ch, n);
    int matches = 0;
    for (int e = 0; e < n * 4; ++e) {
        if (chp[e] > e && gtp[e] == chp[e]) ++matches;
    }
    return static_cast<double>(matches) / denom;
}

/// Placement equals ground truth up to global rotation.
inline bool perfect_reconstruction(const Chromosome& ch, const GroundTruth& gt) {
    return neighbor_accuracy(ch, gt) == 1.0;
}

/// Reassembles the placement from the bundle's raw tiles.
inline RawImage render_placement(const PuzzleBundle& bundle, const Chromosome& ch) {
    if (bundle.raw_tiles.size() != bundle.pieces.size()) {
        throw std::invalid_argument("render_placement: bundle has no raw tiles");
    }
    const int k = bundle.k;
    RawImage out = make_raw_image(ch.cols * k, ch.rows * k);
    for (int r = 0; r < ch.rows; ++r) {
        for (int c = 0; c < ch.cols; ++c) {
            const RawImage tile = rotate_raw_ccw(bundle.raw_tiles[ch.piece_at(r, c)], ch.rot_at(r, c));
            for (int i = 0; i < k; ++i) {
                std::copy(tile.px(i, 0), tile.px(i, 0) + k * 3, out.px(r * k + i, c * k));
            }
        }
    }
    return out;
}

/// Original (ground-truth assembly) and reconstruction side by side with a
/// 4-pixel white separator.
inline RawImage render_side_by_side(const PuzzleBundle& bundle, const Chromosome& ch) {
    if (!bundle.ground_truth) {
        throw std::invalid_argument("render_side_by_side: bundle has no ground truth");
    }
    const RawImage left = render_placement(bundle, ground_truth_chromosome(*bundle.ground_truth));
    const RawImage right = render_placement(bundle, ch);
    const int sep = 4;
    const int height = std::max(left.height, right.height);
    RawImage out = make_raw_image(left.width + sep + right.width, height);
    std::fill(out.pixels.begin(), out.pixels.end(), 255);
    for (int r = 0; r < left.height; ++r) {
        std::copy(left.px(r, 0), left.px(r, 0) + left.width * 3, out.px(r, 0));
    }
    for (int r = 0; r < right.height; ++r) {
        std::copy(right.px(r, 0), right.px(r, 0) + right.width * 3, out.px(r, left.width + sep));
    }
    return out;
}

/// Per-generation stats as CSV.
inline void save_stats_csv(const std::vector<GenerationStats>& stats, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_stats_csv: cannot write " + path);
    out << "generation,best_fitness,mean_fitness,neighbor_accuracy,"
           "phase_common,phase_dnn,phase_best_buddy,phase_most_compatible,phase_random\n";
    out.precision(12);
    for (const auto& s : stats) {
        out << s.generation << ',' << s.best_fitness << ',' << s.mean_fitness << ',';
        if (s.neighbor_accuracy >= 0.0) out << s.neighbor_accuracy;
        for (const auto c : s.phase_counts) out << ',' << c;
        out << '\n';
    }
}

/// Placement as JSON: cell -> piece id + rotation.
inline nlohmann::json placement_json(const Chromosome& ch) {
    nlohmann::json j;
    j["rows"] = ch.rows;
    j["cols"] = ch.cols;
    j["fitness"] = ch.fitness;
    auto& cells = j["cells"] = nlohmann::json::array();
    for (int r = 0; r < ch.rows; ++r) {
        for (int c = 0; c < ch.cols; ++c) {
            cells.push_back({{"row", r}, {"col", c}, {"piece", ch.piece_at(r, c)},
                             {"rot", ch.rot_at(r, c)}});
        }
    }
    return j;
}

struct BenchmarkRow {
    std::string name;
    double accuracy_off = 0.0;
    double accuracy_on = 0.0;
    bool perfect_off = false;
    bool perfect_on = false;
    double fitness_off = 0.0;
    double fitness_on = 0.0;
    std::uint64_t seed = 0;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;
    double mean_accuracy_off = 0.0;
    double mean_accuracy_on = 0.0;
    int perfect_count_off = 0;
    int perfect_count_on = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["mean_neighbor_accuracy"] = {{"ga", mean_accuracy_off}, {"ga_dnn", mean_accuracy_on}};
        j["perfect_reconstructions"] = {{"ga", perfect_count_off}, {"ga_dnn", perfect_count_on}};
        auto& rows_json = j["puzzles"] = nlohmann::json::array();
        for (const auto& r : rows) {
            rows_json.push_back({{"name", r.name},
                                 {"seed", r.seed},
                                 {"neighbor_accuracy", {{"ga", r.accuracy_off}, {"ga_dnn", r.accuracy_on}}},
                                 {"delta", r.accuracy_on - r.accuracy_off},
                                 {"perfect", {{"ga", r.perfect_off}, {"ga_dnn", r.perfect_on}}},
                                 {"fitness", {{"ga", r.fitness_off}, {"ga_dnn", r.fitness_on}}}});
        }
        return j;
    }

    std::string to_table() const {
        char buf[256];
        std::string out;
        out += "puzzle                 seed          GA        GA+DNN     delta  perfect\n";
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%-20s %10llu  %8.4f  %8.4f  %+8.4f  %d -> %d\n",
                          r.name.c_str(), static_cast<unsigned long long>(r.seed), r.accuracy_off,
                          r.accuracy_on, r.accuracy_on - r.accuracy_off, int(r.perfect_off),
                          int(r.perfect_on));
            out += buf;
        }
        std::snprintf(buf, sizeof(buf),
                      "mean neighbor accuracy: GA %.4f | GA+DNN %.4f    perfect: %d -> %d\n",
                      mean_accuracy_off, mean_accuracy_on, perfect_count_off, perfect_count_on);
        out += buf;
        return out;
    }
};

/// Runs the solver twice per bundle with shared seeds - once without the
/// learned metric, once with it - and aggregates the paired comparison.
inline BenchmarkReport benchmark(std::span<const PuzzleBundle> corpus,
                                 std::span<const std::string> names, const Network& net,
                                 const GaConfig& cfg, double threshold = 0.5,
                                 const MetricConfig& metric = {}) {
    if (corpus.empty()) throw std::invalid_argument("benchmark: empty corpus");
    BenchmarkReport report;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& bundle = corpus[i];
        if (!bundle.ground_truth) throw std::invalid_argument("benchmark: bundle without ground truth");
        const auto& gt = *bundle.ground_truth;

        BenchmarkRow row;
        row.name = (i < names.size()) ? names[i] : ("puzzle_" + std::to_string(i));
        row.seed = derive_seed(cfg.seed, i);

        if (bundle.piece_count() == 1) {
            row.accuracy_off = row.accuracy_on = 1.0;
            row.perfect_off = row.perfect_on = true;
        } else {
            const auto matrix = build_matrix(bundle.pieces, bundle.mode, metric, cfg.threads);
            const auto bb = best_buddy_map(matrix);
            const auto dnn = compute_dnn_buddies(matrix, net, bundle.pieces, threshold, cfg.threads);

            GaConfig run_cfg = cfg;
            run_cfg.seed = row.seed;
            auto accuracy = [&](const Chromosome& ch) { return neighbor_accuracy(ch, gt); };

            run_cfg.use_dnn = false;
            const auto off = solve(bundle, matrix, bb, nullptr, run_cfg, accuracy);
            run_cfg.use_dnn = true;
            const auto on = solve(bundle, matrix, bb, dnn.partner.data(), run_cfg, accuracy);

            row.accuracy_off = neighbor_accuracy(off.best, gt);
            row.accuracy_on = neighbor_accuracy(on.best, gt);
            row.perfect_off = row.accuracy_off == 1.0;
            row.perfect_on = row.accuracy_on == 1.0;
            row.fitness_off = off.best.fitness;
            row.fitness_on = on.best.fitness;
        }
        report.rows.push_back(std::move(row));
    }

    for (const auto& r : report.rows) {
        report.mean_accuracy_off += r.accuracy_off;
        report.mean_accuracy_on += r.accuracy_on;
        report.perfect_count_off += r.perfect_off;
        report.perfect_count_on += r.perfect_on;
    }
    report.mean_accuracy_off /= static_cast<double>(report.rows.size());
    report.mean_accuracy_on /= static_cast<double>(report.rows.size());
    return report;
}

}  // namespace jigsaw
