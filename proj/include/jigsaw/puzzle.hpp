#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "jigsaw/common.hpp"
#include "jigsaw/image.hpp"
#include "jigsaw/prng.hpp"

namespace jigsaw {

// Side labels follow screen coordinates (top = row 0). Rotations are
// counterclockwise multiples of 90 degrees; rotating a piece CCW by one step
// moves the content of its right side to its top side, i.e. the content of
// original side s faces direction (s - steps) mod 4 afterwards.
enum class Side : std::uint8_t { top = 0, right = 1, bottom = 2, left = 3 };

inline constexpr int side_index(Side s) { return static_cast<int>(s); }
inline constexpr Side side_from_index(int i) { return static_cast<Side>(((i % 4) + 4) % 4); }
inline constexpr Side opposite(Side s) { return side_from_index(side_index(s) + 2); }

inline const char* side_name(Side s) {
    switch (s) {
        case Side::top: return "top";
        case Side::right: return "right";
        case Side::bottom: return "bottom";
        case Side::left: return "left";
    }
    return "?";
}

/// (piece id, side): the unit all compatibility metrics are defined over.
struct EdgeRef {
    int piece = 0;
    Side side = Side::top;

    bool operator==(const EdgeRef&) const = default;
};

inline int edge_id(const EdgeRef& e) { return e.piece * 4 + side_index(e.side); }
inline int edge_id(int piece, Side side) { return piece * 4 + side_index(side); }
inline EdgeRef edge_from_id(int id) { return EdgeRef{id / 4, side_from_index(id % 4)}; }

/// One K x K x 3 tile in normalized YUV. Layout: (row * k + col) * 3 + channel.
struct Piece {
    int id = 0;
    int k = 0;
    std::vector<double> data;

    double at(int row, int col, int ch) const {
        return data[(static_cast<std::size_t>(row) * k + col) * 3 + ch];
    }
};

/// Counterclockwise rotation of the piece contents by `steps` * 90 degrees.
inline Piece rotate_piece(const Piece& p, int steps) {
    steps = ((steps % 4) + 4) % 4;
    if (steps == 0) return p;
    Piece out;
    out.id = p.id;
    out.k = p.k;
    out.data.resize(p.data.size());
    const int k = p.k;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            int si = 0, sj = 0;
            switch (steps) {
                case 1: si = j; sj = k - 1 - i; break;
                case 2: si = k - 1 - i; sj = k - 1 - j; break;
                case 3: si = k - 1 - j; sj = i; break;
            }
            for (int c = 0; c < 3; ++c) {
                out.data[(static_cast<std::size_t>(i) * k + j) * 3 + c] = p.at(si, sj, c);
            }
        }
    }
    return out;
}

/// The `depth` pixel columns adjacent to `side`, canonically oriented: the
/// piece is rotated so that `side` becomes its right edge, then the last
/// `depth` columns are returned. Layout: (col * k + row) * 3 + channel, with
/// the outermost (abutting) column last (col index depth-1).
inline std::vector<double> edge_strip(const Piece& p, Side side, int depth) {
    const int k = p.k;
    if (depth < 1 || depth > k) throw std::invalid_argument("edge_strip: depth out of range");
    const int r = ((side_index(side) - 1) % 4 + 4) % 4;  // rotation that puts `side` on the right
    std::vector<double> strip(static_cast<std::size_t>(depth) * k * 3);
    for (int d = 0; d < depth; ++d) {
        const int j = k - depth + d;  // column in the rotated frame
        for (int i = 0; i < k; ++i) {
            int si = 0, sj = 0;
            switch (r) {
                case 0: si = i; sj = j; break;
                case 1: si = j; sj = k - 1 - i; break;
                case 2: si = k - 1 - i; sj = k - 1 - j; break;
                case 3: si = k - 1 - j; sj = i; break;
            }
            for (int c = 0; c < 3; ++c) {
                strip[(static_cast<std::size_t>(d) * k + i) * 3 + c] = p.at(si, sj, c);
            }
        }
    }
    return strip;
}

enum class PuzzleMode : std::uint8_t { type1 = 1, type2 = 2 };

inline const char* mode_name(PuzzleMode m) { return m == PuzzleMode::type1 ? "type1" : "type2"; }

/// Original grid cell and applied rotation for one piece id.
struct GroundTruthEntry {
    int row = 0;
    int col = 0;
    int rot = 0;  // CCW steps applied when the bundle was created
};

struct GroundTruth {
    int rows = 0;
    int cols = 0;
    std::vector<GroundTruthEntry> by_piece;  // indexed by piece id

    int piece_count() const { return static_cast<int>(by_piece.size()); }
    int adjacency_count() const { return rows * (cols - 1) + (rows - 1) * cols; }
};

struct TilingResult {
    std::vector<Piece> pieces;  // row-major, id = row * cols + col
    int rows = 0;
    int cols = 0;
    GroundTruth ground_truth;
};

/// Cuts the top-left rows*k x cols*k region into K x K tiles in row-major
/// order; remainder pixels on the right and bottom are cropped.
inline TilingResult cut_tiles(const NormalizedImage& img, int k) {
    if (k <= 0 || img.width < k || img.height < k) {
        throw std::invalid_argument("cut_tiles: tile size exceeds image dimensions");
    }
    TilingResult out;
    out.rows = img.height / k;
    out.cols = img.width / k;
    out.ground_truth.rows = out.rows;
    out.ground_truth.cols = out.cols;
    out.pieces.reserve(static_cast<std::size_t>(out.rows) * out.cols);
    for (int r = 0; r < out.rows; ++r) {
        for (int c = 0; c < out.cols; ++c) {
            Piece p;
            p.id = r * out.cols + c;
            p.k = k;
            p.data.resize(static_cast<std::size_t>(k) * k * 3);
            for (int i = 0; i < k; ++i) {
                const double* src = img.px(r * k + i, c * k);
                std::copy(src, src + static_cast<std::size_t>(k) * 3,
                          p.data.begin() + static_cast<std::size_t>(i) * k * 3);
            }
            out.pieces.push_back(std::move(p));
            out.ground_truth.by_piece.push_back({r, c, 0});
        }
    }
    return out;
}

/// Same slicing on the 8-bit source image; used to persist bundles as PNGs.
inline std::vector<RawImage> cut_raw_tiles(const RawImage& img, int k) {
    if (k <= 0 || img.width < k || img.height < k) {
        throw std::invalid_argument("cut_raw_tiles: tile size exceeds image dimensions");
    }
    const int rows = img.height / k, cols = img.width / k;
    std::vector<RawImage> tiles;
    tiles.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            RawImage t = make_raw_image(k, k);
            for (int i = 0; i < k; ++i) {
                std::copy(img.px(r * k + i, c * k), img.px(r * k + i, c * k) + k * 3, t.px(i, 0));
            }
            tiles.push_back(std::move(t));
        }
    }
    return tiles;
}

/// A shuffled (and, in type2 mode, rotated) set of pieces plus the solved-state
/// bookkeeping. `dims` is populated only in type1 mode; type2 solvers must not
/// rely on it. Ground truth is optional so a bundle can be handed to a solver
/// with the solution withheld.
struct PuzzleBundle {
    PuzzleMode mode = PuzzleMode::type1;
    int k = 0;
    std::uint64_t seed = 0;
    std::optional<std::pair<int, int>> dims;  // (rows, cols), type1 only
    std::vector<Piece> pieces;                // ids 0..n-1 in shuffled order
    std::vector<RawImage> raw_tiles;          // parallel to pieces; may be empty
    std::optional<GroundTruth> ground_truth;
    NormalizationStats norm;

    int piece_count() const { return static_cast<int>(pieces.size()); }
    int edge_count() const { return piece_count() * 4; }
};

/// Shuffles piece identities with the seeded generator and, in type2 mode,
/// applies a random rotation to each piece. Reproducible for a fixed seed.
inline PuzzleBundle make_bundle(const TilingResult& tiling, PuzzleMode mode, std::uint64_t seed,
                                const std::vector<RawImage>& raw_tiles = {},
                                const NormalizationStats& norm = {}) {
    const int n = static_cast<int>(tiling.pieces.size());
    if (n == 0) throw std::invalid_argument("make_bundle: no pieces");
    if (!raw_tiles.empty() && static_cast<int>(raw_tiles.size()) != n) {
        throw std::invalid_argument("make_bundle: raw tile count mismatch");
    }

    Prng rng(seed);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);

    PuzzleBundle bundle;
    bundle.mode = mode;
    bundle.k = tiling.pieces.front().k;
    bundle.seed = seed;
    bundle.norm = norm;
    if (mode == PuzzleMode::type1) bundle.dims = {tiling.rows, tiling.cols};
    GroundTruth gt;
    gt.rows = tiling.rows;
    gt.cols = tiling.cols;
    gt.by_piece.resize(n);

    for (int new_id = 0; new_id < n; ++new_id) {
        const int orig = perm[new_id];
        const int rot = (mode == PuzzleMode::type2) ? static_cast<int>(rng.below(4)) : 0;
        Piece p = (rot == 0) ? tiling.pieces[orig] : rotate_piece(tiling.pieces[orig], rot);
        p.id = new_id;
        bundle.pieces.push_back(std::move(p));
        if (!raw_tiles.empty()) bundle.raw_tiles.push_back(rotate_raw_ccw(raw_tiles[orig], rot));
        const auto& cell = tiling.ground_truth.by_piece[orig];
        gt.by_piece[new_id] = {cell.row, cell.col, rot};
    }
    bundle.ground_truth = std::move(gt);
    return bundle;
}

/// Full ingestion chain: normalize, tile, shuffle.
inline PuzzleBundle make_puzzle(const RawImage& img, int k, PuzzleMode mode, std::uint64_t seed) {
    const NormalizedImage norm = to_normalized_yuv(img);
    const TilingResult tiling = cut_tiles(norm, k);
    const std::vector<RawImage> raw = cut_raw_tiles(img, k);
    return make_bundle(tiling, mode, seed, raw, norm.stats);
}

/// For each edge id, the edge it abuts in the original image (-1 for border
/// edges). The pair (e, partner[e]) is expressed in the canonical geometry:
/// there is an orientation of both pieces in which e faces right, partner[e]
/// faces left, and the contents abut. Rotations recorded in the ground truth
/// are accounted for: stored side s of a piece rotated by `rot` holds the
/// content of original side (s + rot) mod 4.
inline std::vector<std::int32_t> ground_truth_partner_map(const GroundTruth& gt) {
    const int n = gt.piece_count();
    std::vector<std::int32_t> partner(static_cast<std::size_t>(n) * 4, -1);
    std::vector<std::int32_t> at_cell(static_cast<std::size_t>(gt.rows) * gt.cols, -1);
    for (int id = 0; id < n; ++id) {
        at_cell[static_cast<std::size_t>(gt.by_piece[id].row) * gt.cols + gt.by_piece[id].col] = id;
    }
    auto link = [&](int pa, int orig_side_a, int pb, int orig_side_b) {
        // stored side = (original side - rot) mod 4
        const int sa = ((orig_side_a - gt.by_piece[pa].rot) % 4 + 4) % 4;
        const int sb = ((orig_side_b - gt.by_piece[pb].rot) % 4 + 4) % 4;
        const int ea = pa * 4 + sa, eb = pb * 4 + sb;
        partner[ea] = eb;
        partner[eb] = ea;
    };
    for (int r = 0; r < gt.rows; ++r) {
        for (int c = 0; c < gt.cols; ++c) {
            const int p = at_cell[static_cast<std::size_t>(r) * gt.cols + c];
            if (c + 1 < gt.cols) {
                link(p, side_index(Side::right), at_cell[static_cast<std::size_t>(r) * gt.cols + c + 1],
                     side_index(Side::left));
            }
            if (r + 1 < gt.rows) {
                link(p, side_index(Side::bottom), at_cell[static_cast<std::size_t>(r + 1) * gt.cols + c],
                     side_index(Side::top));
            }
        }
    }
    return partner;
}

/// True iff the two edges abut in the original image (order-insensitive).
inline bool is_ground_truth_adjacent(const std::vector<std::int32_t>& gt_partner, int edge_a, int edge_b) {
    return gt_partner[edge_a] == edge_b;
}

}  // namespace jigsaw
