#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "jigsaw/common.hpp"
#include "jigsaw/parallel.hpp"
#include "jigsaw/puzzle.hpp"

namespace jigsaw {

// All pairwise scores are defined over the canonical abutting geometry: edge a
// is oriented to face right, edge b to face left, and b abuts a. In that
// frame a's abutting column read top to bottom meets b's abutting column read
// bottom to top, hence the reversed row index on the b strip below.

struct MetricConfig {
    enum class Kind { l2, lpq };
    Kind kind = Kind::l2;
    // Pomeranz-style defaults, active only when kind == lpq.
    double p = 0.3;
    double q = 1.0 / 16.0;
};

namespace detail {

inline double l2_over_strips(std::span<const double> a, std::span<const double> b, int k) {
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        const int ri = k - 1 - i;
        for (int c = 0; c < 3; ++c) {
            const double d = a[i * 3 + c] - b[ri * 3 + c];
            sum += d * d;
        }
    }
    return std::sqrt(sum);
}

inline double lpq_over_strips(std::span<const double> a, std::span<const double> b, int k,
                              double p, double q) {
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        const int ri = k - 1 - i;
        for (int c = 0; c < 3; ++c) {
            sum += std::pow(std::fabs(a[i * 3 + c] - b[ri * 3 + c]), p);
        }
    }
    return std::pow(sum, q / p);
}

}  // namespace detail

/// Root of summed squared differences between the two abutting columns,
/// across all three channels. Symmetric in (a, b).
inline double dissimilarity(const Piece& pa, Side sa, const Piece& pb, Side sb) {
    if (pa.id == pb.id) throw std::invalid_argument("dissimilarity: edges of the same piece");
    const auto a = edge_strip(pa, sa, 1);
    const auto b = edge_strip(pb, sb, 1);
    return detail::l2_over_strips(a, b, pa.k);
}

inline double dissimilarity(const EdgeRef& a, const EdgeRef& b, std::span<const Piece> pieces) {
    return dissimilarity(pieces[a.piece], a.side, pieces[b.piece], b.side);
}

/// (sum |delta|^p)^(q/p) over the same abutting entries; equals
/// dissimilarity() at p=2, q=1.
inline double dissimilarity_lpq(const Piece& pa, Side sa, const Piece& pb, Side sb, double p,
                                double q) {
    if (pa.id == pb.id) throw std::invalid_argument("dissimilarity_lpq: edges of the same piece");
    if (p <= 0.0 || q <= 0.0) throw std::invalid_argument("dissimilarity_lpq: p and q must be positive");
    const auto a = edge_strip(pa, sa, 1);
    const auto b = edge_strip(pb, sb, 1);
    return detail::lpq_over_strips(a, b, pa.k, p, q);
}

inline double dissimilarity_lpq(const EdgeRef& a, const EdgeRef& b, std::span<const Piece> pieces,
                                double p, double q) {
    return dissimilarity_lpq(pieces[a.piece], a.side, pieces[b.piece], b.side, p, q);
}

/// Dense table of dissimilarity scores for every ordered admissible edge pair,
/// with the most- and second-most-compatible candidate per edge. Inadmissible
/// pairs hold +infinity. Immutable once built; queries are read-only.
class CompatibilityMatrix {
  public:
    PuzzleMode mode = PuzzleMode::type1;
    int piece_count = 0;
    int k = 0;
    std::vector<double> scores;             // edge_count^2, row-major
    std::vector<std::int32_t> best;         // per edge, -1 if no candidate
    std::vector<std::int32_t> second_best;  // per edge, -1 if fewer than 2 candidates

    int edge_count() const { return piece_count * 4; }

    double score(int edge_a, int edge_b) const {
        return scores[static_cast<std::size_t>(edge_a) * edge_count() + edge_b];
    }
    double score(const EdgeRef& a, const EdgeRef& b) const { return score(edge_id(a), edge_id(b)); }

    bool admissible(int edge_a, int edge_b) const {
        if (edge_a / 4 == edge_b / 4) return false;
        if (mode == PuzzleMode::type1) return (edge_a % 4) == ((edge_b % 4) + 2) % 4;
        return true;
    }
};

/// Scores all ordered cross-piece edge pairs admissible in `mode` (type1:
/// complementary sides only; type2: all 16 side pairings). Ties in best /
/// second-best break toward the lowest piece id, then side order top, right,
/// bottom, left.
inline CompatibilityMatrix build_matrix(std::span<const Piece> pieces, PuzzleMode mode,
                                        const MetricConfig& metric = {}, int threads = 1) {
    const int n = static_cast<int>(pieces.size());
    if (n < 2) throw std::invalid_argument("build_matrix: need at least 2 pieces");
    const int k = pieces[0].k;
    const int edges = n * 4;
    constexpr double inf = std::numeric_limits<double>::infinity();

    CompatibilityMatrix m;
    m.mode = mode;
    m.piece_count = n;
    m.k = k;
    m.scores.assign(static_cast<std::size_t>(edges) * edges, inf);

    // Abutting column of every edge in canonical right-facing orientation.
    std::vector<double> strips(static_cast<std::size_t>(edges) * k * 3);
    for (int e = 0; e < edges; ++e) {
        const auto s = edge_strip(pieces[e / 4], side_from_index(e % 4), 1);
        std::copy(s.begin(), s.end(), strips.begin() + static_cast<std::size_t>(e) * k * 3);
    }
    auto strip_of = [&](int e) {
        return std::span<const double>(strips.data() + static_cast<std::size_t>(e) * k * 3,
                                       static_cast<std::size_t>(k) * 3);
    };

    // Scores are symmetric under the canonical geometry; each unordered pair
    // is computed once and mirrored.
    parallel_for(edges, threads, [&](int begin, int end) {
        for (int ea = begin; ea < end; ++ea) {
            for (int eb = ea + 1; eb < edges; ++eb) {
                if (!m.admissible(ea, eb)) continue;
                double s;
                if (metric.kind == MetricConfig::Kind::l2) {
                    s = detail::l2_over_strips(strip_of(ea), strip_of(eb), k);
                } else {
                    s = detail::lpq_over_strips(strip_of(ea), strip_of(eb), k, metric.p, metric.q);
                }
                m.scores[static_cast<std::size_t>(ea) * edges + eb] = s;
                m.scores[static_cast<std::size_t>(eb) * edges + ea] = s;
            }
        }
    });

    m.best.assign(edges, -1);
    m.second_best.assign(edges, -1);
    parallel_for(edges, threads, [&](int begin, int end) {
        for (int ea = begin; ea < end; ++ea) {
            int b1 = -1, b2 = -1;
            double s1 = inf, s2 = inf;
            for (int eb = 0; eb < edges; ++eb) {
                const double s = m.scores[static_cast<std::size_t>(ea) * edges + eb];
                if (s == inf) continue;
                if (b1 < 0 || s < s1) {
                    b2 = b1;
                    s2 = s1;
                    b1 = eb;
                    s1 = s;
                } else if (b2 < 0 || s < s2) {
                    b2 = eb;
                    s2 = s;
                }
                // equal scores keep the earlier edge id: candidates are scanned
                // in (piece id, side) order, which is the documented tie-break
            }
            m.best[ea] = b1;
            m.second_best[ea] = b2;
        }
    });
    return m;
}

/// Mutual most-compatibility under complementary relations.
inline bool are_best_buddies(const EdgeRef& a, const EdgeRef& b, const CompatibilityMatrix& m) {
    const int ea = edge_id(a), eb = edge_id(b);
    return m.best[ea] == eb && m.best[eb] == ea;
}

/// Per-edge best-buddy partner (-1 when the best candidates are not mutual).
inline std::vector<std::int32_t> best_buddy_map(const CompatibilityMatrix& m) {
    std::vector<std::int32_t> bb(m.edge_count(), -1);
    for (int e = 0; e < m.edge_count(); ++e) {
        const int p = m.best[e];
        if (p >= 0 && m.best[p] == e) bb[e] = p;
    }
    return bb;
}

/// Unordered best-buddy pairs, each listed once as (smaller edge id, larger).
inline std::vector<std::pair<int, int>> best_buddy_pairs(const CompatibilityMatrix& m) {
    std::vector<std::pair<int, int>> pairs;
    for (int e = 0; e < m.edge_count(); ++e) {
        const int p = m.best[e];
        if (p > e && m.best[p] == e) pairs.emplace_back(e, p);
    }
    return pairs;
}

/// Best score divided by second-best score; in [0, 1], and 0 when both are 0.
inline double dissimilarity_ratio(const EdgeRef& a, const CompatibilityMatrix& m) {
    const int e = edge_id(a);
    if (m.second_best[e] < 0) throw NoSecondBestError("dissimilarity_ratio: no second-best candidate");
    const double s1 = m.score(e, m.best[e]);
    const double s2 = m.score(e, m.second_best[e]);
    if (s2 == 0.0) return 0.0;
    return s1 / s2;
}

// Debug dump: magic "JCMX", u32 version, u64 edge count, row-major f64 scores.
inline void save_matrix(const CompatibilityMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_matrix: cannot write " + path);
    out.write("JCMX", 4);
    const std::uint32_t version = 1;
    const std::uint64_t edges = static_cast<std::uint64_t>(m.edge_count());
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&edges), sizeof(edges));
    out.write(reinterpret_cast<const char*>(m.scores.data()),
              static_cast<std::streamsize>(m.scores.size() * sizeof(double)));
    if (!out) throw FormatError("save_matrix: write failed for " + path);
}

struct MatrixDump {
    std::uint64_t edge_count = 0;
    std::vector<double> scores;
};

inline MatrixDump load_matrix_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_matrix_dump: cannot open " + path);
    char magic[4];
    std::uint32_t version = 0;
    MatrixDump dump;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&dump.edge_count), sizeof(dump.edge_count));
    if (!in || std::string(magic, 4) != "JCMX") throw FormatError(path + ": not a matrix dump");
    if (version != 1) throw FormatError(path + ": unsupported matrix dump version");
    dump.scores.resize(dump.edge_count * dump.edge_count);
    in.read(reinterpret_cast<char*>(dump.scores.data()),
            static_cast<std::streamsize>(dump.scores.size() * sizeof(double)));
    if (!in) throw FormatError(path + ": truncated matrix dump");
    return dump;
}

}  // namespace jigsaw
