#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "jigsaw/compatibility.hpp"
#include "jigsaw/dataset.hpp"
#include "jigsaw/network.hpp"
#include "jigsaw/parallel.hpp"
#include "jigsaw/puzzle.hpp"

namespace jigsaw {

/// Directed learned-metric pairs: partner[e] is e's most compatible candidate
/// when the classifier accepts the pair, -1 otherwise. At most one partner per
/// edge, and every partner is the edge's most compatible candidate.
struct DnnBuddyMap {
    std::vector<std::int32_t> partner;
    double threshold = 0.5;

    int proposed_count() const {
        int n = 0;
        for (auto p : partner) n += (p >= 0);
        return n;
    }

    /// Pairs where both directions propose each other.
    int mutual_count() const {
        int n = 0;
        for (std::size_t e = 0; e < partner.size(); ++e) {
            const auto p = partner[e];
            if (p >= 0 && static_cast<std::size_t>(p) > e && partner[p] == static_cast<int>(e)) ++n;
        }
        return n;
    }
};

/// Classifies each edge's most compatible candidate; the pair is kept when
/// p_match exceeds `threshold`. The map can only filter the most-compatible
/// graph, never extend it.
inline DnnBuddyMap compute_dnn_buddies(const CompatibilityMatrix& matrix, const Network& net,
                                       std::span<const Piece> pieces, double threshold = 0.5,
                                       int threads = 1) {
    if (matrix.k != kDefaultTileSize) {
        throw UnsupportedTileSizeError("compute_dnn_buddies: classifier requires 28x28 tiles");
    }
    require_classifier_shape(net);
    DnnBuddyMap map;
    map.threshold = threshold;
    map.partner.assign(matrix.edge_count(), -1);
    parallel_for(matrix.edge_count(), threads, [&](int begin, int end) {
        for (int e = begin; e < end; ++e) {
            const int b = matrix.best[e];
            if (b < 0) continue;
            const auto features = extract_features(edge_from_id(e), edge_from_id(b), pieces);
            const auto probs = net.forward(features);
            if (probs[1] > threshold) map.partner[e] = b;
        }
    });
    return map;
}

/// Unordered proposal pairs of a directed map, each counted once.
inline std::vector<std::pair<int, int>> dnn_buddy_pairs(const DnnBuddyMap& map) {
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t e = 0; e < map.partner.size(); ++e) {
        const int p = map.partner[e];
        if (p < 0) continue;
        const int a = static_cast<int>(e);
        if (a < p || map.partner[p] != a) pairs.emplace_back(std::min(a, p), std::max(a, p));
    }
    return pairs;
}

/// Reporting value for a perfect-precision metric proposing one spanning
/// relation per piece: (n*m - 1) / (4 * (n*(m-1) + (n-1)*m)).
inline double spanning_recall_bound(int rows, int cols) {
    const double spanning = static_cast<double>(rows) * cols - 1.0;
    const double all = 4.0 * (static_cast<double>(rows) * (cols - 1) + static_cast<double>(rows - 1) * cols);
    return spanning / all;
}

/// Precision and recall of a set of unordered proposal pairs against ground
/// truth. Precision is absent (not zero) when nothing was proposed. Recall is
/// reported twice: against the spanning count (n*m - 1) and against all true
/// adjacencies.
struct MetricReport {
    int proposed = 0;
    int correct = 0;
    std::optional<double> precision;
    double recall_spanning = 0.0;
    double recall_all = 0.0;
};

inline MetricReport metric_precision(std::span<const std::pair<int, int>> pairs,
                                     const GroundTruth& gt) {
    const auto gt_partner = ground_truth_partner_map(gt);
    MetricReport r;
    r.proposed = static_cast<int>(pairs.size());
    for (const auto& [a, b] : pairs) r.correct += (gt_partner[a] == b);
    if (r.proposed > 0) r.precision = static_cast<double>(r.correct) / r.proposed;
    const double spanning = static_cast<double>(gt.rows) * gt.cols - 1.0;
    r.recall_spanning = (spanning > 0.0) ? r.correct / spanning : 0.0;
    const int all = gt.adjacency_count();
    r.recall_all = (all > 0) ? static_cast<double>(r.correct) / all : 0.0;
    return r;
}

/// Machine-readable metric evaluation of one bundle: the learned pairs, plus
/// best-buddy and raw most-compatible baselines over the same matrix.
inline nlohmann::json metric_report_json(const CompatibilityMatrix& matrix, const DnnBuddyMap& map,
                                         const GroundTruth& gt, const std::string& network_hash) {
    const auto dnn = dnn_buddy_pairs(map);
    const auto dnn_stats = metric_precision(dnn, gt);

    const auto bb = best_buddy_pairs(matrix);
    std::vector<std::pair<int, int>> bb_pairs(bb.begin(), bb.end());
    const auto bb_stats = metric_precision(bb_pairs, gt);

    std::vector<std::pair<int, int>> mc_pairs;
    {
        std::unordered_set<std::int64_t> keys;
        for (int e = 0; e < matrix.edge_count(); ++e) {
            const int b = matrix.best[e];
            if (b < 0) continue;
            const std::int64_t key =
                static_cast<std::int64_t>(std::min(e, b)) * matrix.edge_count() + std::max(e, b);
            if (keys.insert(key).second) mc_pairs.emplace_back(std::min(e, b), std::max(e, b));
        }
    }
    const auto mc_stats = metric_precision(mc_pairs, gt);

    auto stats_json = [](const MetricReport& s) {
        nlohmann::json j;
        j["proposed"] = s.proposed;
        j["correct"] = s.correct;
        if (s.precision) j["precision"] = *s.precision;
        else j["precision"] = nullptr;
        j["recall_spanning"] = s.recall_spanning;
        j["recall_all"] = s.recall_all;
        return j;
    };

    nlohmann::json j;
    j["schema_version"] = 1;
    j["rows"] = gt.rows;
    j["cols"] = gt.cols;
    j["threshold"] = map.threshold;
    j["network_hash"] = network_hash;
    j["dnn_buddies"] = stats_json(dnn_stats);
    j["dnn_buddies"]["mutual_pairs"] = map.mutual_count();
    j["best_buddies"] = stats_json(bb_stats);
    j["most_compatible"] = stats_json(mc_stats);
    j["spanning_recall_bound"] = spanning_recall_bound(gt.rows, gt.cols);
    return j;
}

/// FNV-1a 64 over a file's bytes; used to fingerprint weights files in reports.
inline std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("file_hash_hex: cannot open " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace jigsaw
