#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "jigsaw/common.hpp"
#include "jigsaw/compatibility.hpp"
#include "jigsaw/parallel.hpp"
#include "jigsaw/prng.hpp"
#include "jigsaw/puzzle.hpp"

namespace jigsaw {

inline constexpr int kFeatureLength = 336;  // 28 rows x 4 columns x 3 channels

/// Classifier input for one edge pair: the two columns nearest the seam on
/// each side. Block order: a's second-to-abutting column, a's abutting column,
/// b's abutting column, b's second-to-abutting column. Each block is 28 rows
/// top-to-bottom, channels Y, U, V per row, canonically oriented as in
/// edge_strip.
inline std::vector<double> extract_features(const EdgeRef& a, const EdgeRef& b,
                                            std::span<const Piece> pieces) {
    const Piece& pa = pieces[a.piece];
    const Piece& pb = pieces[b.piece];
    if (pa.id == pb.id) throw std::invalid_argument("extract_features: edges of the same piece");
    if (pa.k != kDefaultTileSize || pb.k != kDefaultTileSize) {
        throw UnsupportedTileSizeError("extract_features: classifier input requires 28x28 tiles");
    }
    const auto sa = edge_strip(pa, a.side, 2);  // [second col | abutting col]
    const auto sb = edge_strip(pb, b.side, 2);
    const std::size_t block = static_cast<std::size_t>(pa.k) * 3;
    std::vector<double> f(kFeatureLength);
    std::copy(sa.begin(), sa.begin() + block, f.begin());                  // a second
    std::copy(sa.begin() + block, sa.end(), f.begin() + block);            // a abutting
    std::copy(sb.begin() + block, sb.end(), f.begin() + 2 * block);        // b abutting
    std::copy(sb.begin(), sb.begin() + block, f.begin() + 3 * block);      // b second
    return f;
}

/// Balanced training corpus in flat storage. labels: 1 = match, 0 = non-match.
struct Dataset {
    int feature_len = kFeatureLength;
    std::vector<float> features;  // size() * feature_len
    std::vector<std::uint8_t> labels;
    // provenance, for audits
    std::vector<std::int32_t> image_ids;
    std::vector<std::int32_t> edge_a;
    std::vector<std::int32_t> edge_b;

    std::size_t size() const { return labels.size(); }
    const float* sample(std::size_t i) const { return features.data() + i * feature_len; }

    std::size_t positive_count() const {
        std::size_t n = 0;
        for (auto l : labels) n += (l != 0);
        return n;
    }
    std::size_t negative_count() const { return size() - positive_count(); }

    void append(const Dataset& other) {
        features.insert(features.end(), other.features.begin(), other.features.end());
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
        image_ids.insert(image_ids.end(), other.image_ids.begin(), other.image_ids.end());
        edge_a.insert(edge_a.end(), other.edge_a.begin(), other.edge_a.end());
        edge_b.insert(edge_b.end(), other.edge_b.begin(), other.edge_b.end());
    }
};

namespace detail {

inline void push_sample(Dataset& ds, int image_id, int ea, int eb, bool match,
                        std::span<const Piece> pieces) {
    const auto f = extract_features(edge_from_id(ea), edge_from_id(eb), pieces);
    for (double v : f) ds.features.push_back(static_cast<float>(v));
    ds.labels.push_back(match ? 1 : 0);
    ds.image_ids.push_back(image_id);
    ds.edge_a.push_back(ea);
    ds.edge_b.push_back(eb);
}

// Informed undersampling over one bundle. For every edge, its most compatible
// candidate becomes a positive when the pair is truly adjacent (tossing the
// runner-up pair into the negatives) and a negative otherwise. Duplicate
// unordered pairs are kept once, anchor-first feature order.
inline Dataset undersample_bundle(const PuzzleBundle& bundle, int image_id, int threads) {
    if (!bundle.ground_truth) {
        throw std::invalid_argument("build_dataset: bundle is missing ground truth");
    }
    const auto matrix = build_matrix(bundle.pieces, bundle.mode, MetricConfig{}, threads);
    const auto gt_partner = ground_truth_partner_map(*bundle.ground_truth);
    const int edges = matrix.edge_count();

    Dataset ds;
    std::unordered_set<std::int64_t> seen;
    auto pair_key = [edges](int x, int y) {
        if (x > y) std::swap(x, y);
        return static_cast<std::int64_t>(x) * edges + y;
    };
    auto add_once = [&](int anchor, int partner, bool match) {
        if (seen.insert(pair_key(anchor, partner)).second) {
            push_sample(ds, image_id, anchor, partner, match, bundle.pieces);
        }
    };

    for (int e = 0; e < edges; ++e) {
        const int b1 = matrix.best[e];
        if (b1 < 0) continue;
        if (gt_partner[e] == b1) {
            add_once(e, b1, true);
            const int b2 = matrix.second_best[e];
            if (b2 >= 0) add_once(e, b2, false);
        } else {
            add_once(e, b1, false);
        }
    }
    return ds;
}

}  // namespace detail

/// Removes seeded-random samples from the larger class until the counts are
/// equal; the surviving samples keep their discovery order.
inline void balance_dataset(Dataset& ds, std::uint64_t seed) {
    const std::size_t pos = ds.positive_count();
    const std::size_t neg = ds.size() - pos;
    if (pos == neg) return;
    const std::uint8_t drop_label = (neg > pos) ? 0 : 1;
    const std::size_t to_drop = (neg > pos) ? neg - pos : pos - neg;

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] == drop_label) candidates.push_back(i);
    }
    Prng rng(seed);
    rng.shuffle(candidates);
    std::vector<char> dropped(ds.size(), 0);
    for (std::size_t i = 0; i < to_drop; ++i) dropped[candidates[i]] = 1;

    Dataset out;
    out.feature_len = ds.feature_len;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (dropped[i]) continue;
        out.features.insert(out.features.end(), ds.sample(i), ds.sample(i) + ds.feature_len);
        out.labels.push_back(ds.labels[i]);
        out.image_ids.push_back(ds.image_ids[i]);
        out.edge_a.push_back(ds.edge_a[i]);
        out.edge_b.push_back(ds.edge_b[i]);
    }
    ds = std::move(out);
}

/// Builds the balanced edge-pair corpus over all bundles. Deterministic given
/// bundle order and seed; per-bundle extraction may run in parallel.
inline Dataset build_dataset(std::span<const PuzzleBundle> corpus, std::uint64_t seed,
                             int threads = 1) {
    if (corpus.empty()) throw std::invalid_argument("build_dataset: empty corpus");
    const int n = static_cast<int>(corpus.size());
    std::vector<Dataset> parts(n);
    parallel_for(n, threads, [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            parts[i] = detail::undersample_bundle(corpus[i], i, 1);
        }
    });
    Dataset ds;
    for (auto& part : parts) ds.append(part);
    balance_dataset(ds, seed);
    return ds;
}

/// Seeded split of image indices into train/validation sets (never by sample,
/// so pairs from one image cannot straddle the split).
inline std::pair<std::vector<int>, std::vector<int>> split_by_image(int image_count,
                                                                    double val_fraction,
                                                                    std::uint64_t seed) {
    if (image_count <= 0) throw std::invalid_argument("split_by_image: no images");
    if (val_fraction < 0.0 || val_fraction >= 1.0) {
        throw std::invalid_argument("split_by_image: fraction must be in [0, 1)");
    }
    std::vector<int> idx(image_count);
    for (int i = 0; i < image_count; ++i) idx[i] = i;
    Prng rng(seed);
    rng.shuffle(idx);
    const int val_n = static_cast<int>(image_count * val_fraction);
    std::vector<int> val(idx.begin(), idx.begin() + val_n);
    std::vector<int> train(idx.begin() + val_n, idx.end());
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {train, val};
}

// Binary dataset file, little-endian: magic "DNNB", u32 version, u64 sample
// count, u32 feature length, then per sample 336 float32 + 1 label byte.
inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_dataset: cannot write " + path);
    out.write("DNNB", 4);
    const std::uint32_t version = 1;
    const std::uint64_t count = ds.size();
    const std::uint32_t flen = static_cast<std::uint32_t>(ds.feature_len);
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(&flen), sizeof(flen));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out.write(reinterpret_cast<const char*>(ds.sample(i)),
                  static_cast<std::streamsize>(ds.feature_len * sizeof(float)));
        out.write(reinterpret_cast<const char*>(&ds.labels[i]), 1);
    }
    if (!out) throw FormatError("save_dataset: write failed for " + path);
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_dataset: cannot open " + path);
    char magic[4];
    std::uint32_t version = 0, flen = 0;
    std::uint64_t count = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    in.read(reinterpret_cast<char*>(&flen), sizeof(flen));
    if (!in || std::string(magic, 4) != "DNNB") throw FormatError(path + ": not a dataset file");
    if (version != 1) throw FormatError(path + ": unsupported dataset version");
    if (flen != kFeatureLength) throw FormatError(path + ": unexpected feature length");
    Dataset ds;
    ds.feature_len = static_cast<int>(flen);
    ds.features.resize(count * flen);
    ds.labels.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(ds.features.data() + i * flen),
                static_cast<std::streamsize>(flen * sizeof(float)));
        in.read(reinterpret_cast<char*>(&ds.labels[i]), 1);
        if (!in) throw FormatError(path + ": truncated dataset file");
    }
    ds.image_ids.assign(count, -1);
    ds.edge_a.assign(count, -1);
    ds.edge_b.assign(count, -1);
    return ds;
}

/// Inspection CSV: provenance, label, then the 336 feature values.
inline void export_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("export_dataset_csv: cannot write " + path);
    out << "image_id,a_piece,a_side,b_piece,b_side,label";
    for (int i = 0; i < ds.feature_len; ++i) out << ",f" << i;
    out << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const EdgeRef a = edge_from_id(ds.edge_a[i]);
        const EdgeRef b = edge_from_id(ds.edge_b[i]);
        out << ds.image_ids[i] << ',' << a.piece << ',' << side_name(a.side) << ',' << b.piece
            << ',' << side_name(b.side) << ',' << int(ds.labels[i]);
        const float* f = ds.sample(i);
        for (int j = 0; j < ds.feature_len; ++j) out << ',' << f[j];
        out << '\n';
    }
}

}  // namespace jigsaw
