#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "jigsaw/compatibility.hpp"
#include "jigsaw/parallel.hpp"
#include "jigsaw/prng.hpp"
#include "jigsaw/puzzle.hpp"

namespace jigsaw {

/// A complete placement: grid cells to piece ids, plus a per-cell rotation
/// (always 0 in type1 mode). rows * cols equals the piece count.
struct Chromosome {
    int rows = 0;
    int cols = 0;
    std::vector<std::int32_t> cells;  // piece id per cell, row-major
    std::vector<std::uint8_t> rots;   // CCW steps applied to the stored piece
    double fitness = std::numeric_limits<double>::infinity();

    int piece_at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }
    int rot_at(int r, int c) const { return rots[static_cast<std::size_t>(r) * cols + c]; }
};

/// True iff every piece id 0..n-1 appears exactly once.
inline bool is_valid_placement(const Chromosome& ch, int piece_count) {
    if (ch.rows * ch.cols != piece_count) return false;
    if (static_cast<int>(ch.cells.size()) != piece_count) return false;
    std::vector<char> seen(piece_count, 0);
    for (auto p : ch.cells) {
        if (p < 0 || p >= piece_count || seen[p]) return false;
        seen[p] = 1;
    }
    return true;
}

/// For every edge id, the edge abutting it in this placement (-1 on the
/// placement border). Horizontal contacts map the left piece's right-facing
/// edge to the right piece's left-facing edge; vertical contacts are the same
/// relation read in a 90-degree rotated frame. A piece placed with rotation
/// rho presents stored side (d + rho) mod 4 toward direction d.
inline std::vector<std::int32_t> placement_relation_map(const Chromosome& ch, int piece_count) {
    std::vector<std::int32_t> partner(static_cast<std::size_t>(piece_count) * 4, -1);
    auto link = [&](int pa, int rot_a, int dir_a, int pb, int rot_b) {
        const int ea = pa * 4 + (dir_a + rot_a) % 4;
        const int eb = pb * 4 + (dir_a + 2 + rot_b) % 4;
        partner[ea] = eb;
        partner[eb] = ea;
    };
    for (int r = 0; r < ch.rows; ++r) {
        for (int c = 0; c < ch.cols; ++c) {
            if (c + 1 < ch.cols) {
                link(ch.piece_at(r, c), ch.rot_at(r, c), side_index(Side::right),
                     ch.piece_at(r, c + 1), ch.rot_at(r, c + 1));
            }
            if (r + 1 < ch.rows) {
                link(ch.piece_at(r, c), ch.rot_at(r, c), side_index(Side::bottom),
                     ch.piece_at(r + 1, c), ch.rot_at(r + 1, c));
            }
        }
    }
    return partner;
}

/// Sum of pairwise dissimilarities over all abutting edges; lower is better.
inline double fitness(const Chromosome& ch, const CompatibilityMatrix& matrix) {
    double total = 0.0;
    for (int r = 0; r < ch.rows; ++r) {
        for (int c = 0; c < ch.cols; ++c) {
            if (c + 1 < ch.cols) {
                const int ea = ch.piece_at(r, c) * 4 + (side_index(Side::right) + ch.rot_at(r, c)) % 4;
                const int eb =
                    ch.piece_at(r, c + 1) * 4 + (side_index(Side::left) + ch.rot_at(r, c + 1)) % 4;
                total += matrix.score(ea, eb);
            }
            if (r + 1 < ch.rows) {
                const int ea = ch.piece_at(r, c) * 4 + (side_index(Side::bottom) + ch.rot_at(r, c)) % 4;
                const int eb =
                    ch.piece_at(r + 1, c) * 4 + (side_index(Side::top) + ch.rot_at(r + 1, c)) % 4;
                total += matrix.score(ea, eb);
            }
        }
    }
    return total;
}

/// The solved placement implied by ground truth (identity rotations undone).
inline Chromosome ground_truth_chromosome(const GroundTruth& gt) {
    Chromosome ch;
    ch.rows = gt.rows;
    ch.cols = gt.cols;
    ch.cells.assign(static_cast<std::size_t>(gt.rows) * gt.cols, -1);
    ch.rots.assign(ch.cells.size(), 0);
    for (int id = 0; id < gt.piece_count(); ++id) {
        const auto& e = gt.by_piece[id];
        ch.cells[static_cast<std::size_t>(e.row) * gt.cols + e.col] = id;
        // undo the bundle rotation: rotating the stored piece by (4 - rot)
        // restores the original orientation
        ch.rots[static_cast<std::size_t>(e.row) * gt.cols + e.col] =
            static_cast<std::uint8_t>((4 - e.rot) % 4);
    }
    return ch;
}

struct GaConfig {
    int population = 300;
    int generations = 100;
    int elites = 4;
    std::uint64_t seed = 0;
    bool use_dnn = true;
    // restrict metric phases (2-3) to relations present in a parent
    bool parent_constrained_metric_phases = true;
    int threads = 1;
};

// Crossover assignment phases, in precedence order.
enum : int {
    kPhaseCommon = 0,
    kPhaseDnnBuddy = 1,
    kPhaseBestBuddy = 2,
    kPhaseMostCompatible = 3,
    kPhaseRandom = 4,
    kPhaseCount = 5,
};

/// Builds crossover children by kernel growth. One engine holds the reusable
/// scratch buffers for a whole solver run; children are built one at a time.
///
/// Each step assigns one new piece by the first phase, in precedence order,
/// that applies anywhere on the boundary of the grown region: (1) a relation
/// present in both parents, (2) a learned-metric relation (either direction)
/// present in at least one parent, (3) a best-buddy relation present in at
/// least one parent, (4) the boundary edge's most compatible partner, (5) a
/// random unused piece. Within a phase, boundary anchors are visited
/// newest-placed first, an anchor's open slots in (row, col) order. Growth is
/// confined to bounding boxes that can still become a legal rectangle: the
/// known frame in type1 mode, any h x w with h * w = piece count in type2
/// mode.
class CrossoverEngine {
  public:
    CrossoverEngine(const CompatibilityMatrix& matrix, std::span<const std::int32_t> best_buddy,
                    const std::int32_t* dnn_partner, PuzzleMode mode,
                    std::optional<std::pair<int, int>> dims, bool parent_constrained = true)
        : parent_constrained_(parent_constrained),
          matrix_(matrix),
          bb_(best_buddy.begin(), best_buddy.end()),
          dnn_(dnn_partner ? std::vector<std::int32_t>(dnn_partner, dnn_partner + matrix.edge_count())
                           : std::vector<std::int32_t>()),
          mode_(mode),
          pieces_(matrix.piece_count) {
        if (mode == PuzzleMode::type1) {
            if (!dims) throw std::invalid_argument("crossover: type1 requires known dimensions");
            row_limit_ = dims->first;
            col_limit_ = dims->second;
        } else {
            for (int h = 1; h <= pieces_; ++h) {
                if (pieces_ % h == 0) factor_rows_.push_back(h);
            }
        }
        if (!dnn_.empty()) {
            dnn_rev_.resize(matrix.edge_count());
            for (int e = 0; e < matrix.edge_count(); ++e) {
                if (dnn_[e] >= 0) dnn_rev_[dnn_[e]].push_back(e);  // ascending by construction
            }
        }
        const int span = 2 * pieces_ + 1;
        grid_stamp_.assign(static_cast<std::size_t>(span) * span, 0);
        grid_piece_.assign(grid_stamp_.size(), -1);
        grid_rot_.assign(grid_stamp_.size(), 0);
    }

    Chromosome child(const Chromosome& p1, const Chromosome& p2, Prng& rng,
                     std::array<std::int64_t, kPhaseCount>* phase_counts = nullptr) {
        begin_child(p1, p2);

        const int kernel = static_cast<int>(rng.below(pieces_));
        place(kernel, 0, 0, 0);

        while (placed_ < pieces_) {
            Assignment a;
            int phase = 0;
            for (; phase < kPhaseCount; ++phase) {
                if (find_assignment(phase, rng, a)) break;
            }
            place(a.piece, a.rot, a.row, a.col);
            if (phase_counts) (*phase_counts)[phase]++;
        }
        return extract();
    }

  private:
    struct Assignment {
        int piece = -1;
        int rot = 0;
        int row = 0;
        int col = 0;
    };

    static constexpr int dr_[4] = {-1, 0, 1, 0};  // top, right, bottom, left
    static constexpr int dc_[4] = {0, 1, 0, -1};

    std::size_t cell_index(int r, int c) const {
        const int span = 2 * pieces_ + 1;
        return static_cast<std::size_t>(r + pieces_) * span + (c + pieces_);
    }
    bool occupied(int r, int c) const { return grid_stamp_[cell_index(r, c)] == stamp_; }

    bool slot_feasible(int r, int c) const {
        const int min_r = std::min(min_r_, r), max_r = std::max(max_r_, r);
        const int min_c = std::min(min_c_, c), max_c = std::max(max_c_, c);
        const int h = max_r - min_r + 1, w = max_c - min_c + 1;
        if (mode_ == PuzzleMode::type1) return h <= row_limit_ && w <= col_limit_;
        for (int fr : factor_rows_) {
            if (h <= fr && w <= pieces_ / fr) return true;
        }
        return false;
    }

    void begin_child(const Chromosome& p1, const Chromosome& p2) {
        ++stamp_;
        placed_ = 0;
        min_r_ = max_r_ = min_c_ = max_c_ = 0;
        for (auto& s : anchor_stack_) s.clear();
        slot_stack_.clear();
        used_.assign(pieces_, 0);
        unused_list_.resize(pieces_);
        unused_pos_.resize(pieces_);
        for (int i = 0; i < pieces_; ++i) {
            unused_list_[i] = i;
            unused_pos_[i] = i;
        }
        r1_ = placement_relation_map(p1, pieces_);
        r2_ = placement_relation_map(p2, pieces_);
        piece_row_.assign(pieces_, 0);
        piece_col_.assign(pieces_, 0);
        piece_rot_.assign(pieces_, 0);
    }

    void place(int piece, int rot, int r, int c) {
        const auto idx = cell_index(r, c);
        grid_stamp_[idx] = stamp_;
        grid_piece_[idx] = piece;
        grid_rot_[idx] = static_cast<std::uint8_t>(rot);
        used_[piece] = 1;
        // swap-remove from the unused list
        const int pos = unused_pos_[piece];
        const int last = unused_list_.back();
        unused_list_[pos] = last;
        unused_pos_[last] = pos;
        unused_list_.pop_back();
        piece_row_[piece] = r;
        piece_col_[piece] = c;
        piece_rot_[piece] = static_cast<std::uint8_t>(rot);
        if (placed_ == 0) {
            min_r_ = max_r_ = r;
            min_c_ = max_c_ = c;
        } else {
            min_r_ = std::min(min_r_, r);
            max_r_ = std::max(max_r_, r);
            min_c_ = std::min(min_c_, c);
            max_c_ = std::max(max_c_, c);
        }
        ++placed_;
        for (auto& s : anchor_stack_) s.push_back(piece);
        slot_stack_.push_back(piece);
    }

    // Candidate edge `cand` placed against boundary edge of `anchor` in
    // direction d. Returns the rotation, or -1 when inadmissible in type1.
    int candidate_rotation(int cand, int d) const {
        const int rot = ((cand % 4) - (d + 2) % 4 + 4) % 4;
        if (mode_ == PuzzleMode::type1 && rot != 0) return -1;
        return rot;
    }

    bool in_a_parent(int edge, int cand) const {
        return !parent_constrained_ || r1_[edge] == cand || r2_[edge] == cand;
    }

    // Applicability of phases 0..3 at one anchor. Slots are visited in
    // (row, col) order: top, left, right, bottom.
    bool anchor_candidate(int phase, int anchor, Assignment& out) const {
        static constexpr int slot_order[4] = {0, 3, 1, 2};
        const int r = piece_row_[anchor], c = piece_col_[anchor];
        const int rot = piece_rot_[anchor];
        for (int o = 0; o < 4; ++o) {
            const int d = slot_order[o];
            const int sr = r + dr_[d], sc = c + dc_[d];
            if (occupied(sr, sc) || !slot_feasible(sr, sc)) continue;
            const int edge = anchor * 4 + (d + rot) % 4;
            int cand = -1;
            switch (phase) {
                case kPhaseCommon:
                    cand = (r1_[edge] >= 0 && r1_[edge] == r2_[edge]) ? r1_[edge] : -1;
                    break;
                case kPhaseDnnBuddy: {
                    if (dnn_.empty()) return false;
                    const int fwd = dnn_[edge];
                    if (fwd >= 0 && in_a_parent(edge, fwd) && try_candidate(fwd, d, sr, sc, out)) {
                        return true;
                    }
                    for (int rev : dnn_rev_[edge]) {
                        if (in_a_parent(edge, rev) && try_candidate(rev, d, sr, sc, out)) return true;
                    }
                    continue;
                }
                case kPhaseBestBuddy:
                    cand = (bb_[edge] >= 0 && in_a_parent(edge, bb_[edge])) ? bb_[edge] : -1;
                    break;
                case kPhaseMostCompatible:
                    cand = matrix_.best[edge];
                    break;
            }
            if (try_candidate(cand, d, sr, sc, out)) return true;
        }
        return false;
    }

    bool try_candidate(int cand, int d, int sr, int sc, Assignment& out) const {
        if (cand < 0 || used_[cand / 4]) return false;
        const int rot = candidate_rotation(cand, d);
        if (rot < 0) return false;
        out = {cand / 4, rot, sr, sc};
        return true;
    }

    bool find_assignment(int phase, Prng& rng, Assignment& out) {
        if (phase < kPhaseRandom) {
            // Anchors whose candidates are exhausted never become applicable
            // again (slots only fill, pieces only get used), so they are
            // popped permanently.
            auto& stack = anchor_stack_[phase];
            while (!stack.empty()) {
                if (anchor_candidate(phase, stack.back(), out)) return true;
                stack.pop_back();
            }
            return false;
        }
        // Random phase: newest anchor with any open feasible slot.
        static constexpr int slot_order[4] = {0, 3, 1, 2};
        while (!slot_stack_.empty()) {
            const int anchor = slot_stack_.back();
            const int r = piece_row_[anchor], c = piece_col_[anchor];
            for (int o = 0; o < 4; ++o) {
                const int d = slot_order[o];
                const int sr = r + dr_[d], sc = c + dc_[d];
                if (occupied(sr, sc) || !slot_feasible(sr, sc)) continue;
                const int piece = unused_list_[rng.below(unused_list_.size())];
                const int rot = (mode_ == PuzzleMode::type2) ? static_cast<int>(rng.below(4)) : 0;
                out = {piece, rot, sr, sc};
                return true;
            }
            slot_stack_.pop_back();
        }
        throw std::logic_error("crossover: no boundary slot available");  // unreachable
    }

    Chromosome extract() const {
        Chromosome ch;
        ch.rows = max_r_ - min_r_ + 1;
        ch.cols = max_c_ - min_c_ + 1;
        if (ch.rows * ch.cols != pieces_) {
            throw std::logic_error("crossover: grown region is not a full rectangle");
        }
        ch.cells.assign(static_cast<std::size_t>(pieces_), -1);
        ch.rots.assign(static_cast<std::size_t>(pieces_), 0);
        for (int p = 0; p < pieces_; ++p) {
            const int r = piece_row_[p] - min_r_, c = piece_col_[p] - min_c_;
            ch.cells[static_cast<std::size_t>(r) * ch.cols + c] = p;
            ch.rots[static_cast<std::size_t>(r) * ch.cols + c] = piece_rot_[p];
        }
        return ch;
    }

    bool parent_constrained_;
    const CompatibilityMatrix& matrix_;
    std::vector<std::int32_t> bb_;
    std::vector<std::int32_t> dnn_;
    std::vector<std::vector<std::int32_t>> dnn_rev_;
    PuzzleMode mode_;
    int pieces_;
    int row_limit_ = 0, col_limit_ = 0;
    std::vector<int> factor_rows_;

    // per-child scratch
    std::vector<std::int32_t> grid_stamp_, grid_piece_;
    std::vector<std::uint8_t> grid_rot_;
    std::int32_t stamp_ = 0;
    int placed_ = 0;
    int min_r_ = 0, max_r_ = 0, min_c_ = 0, max_c_ = 0;
    std::array<std::vector<std::int32_t>, kPhaseRandom> anchor_stack_;
    std::vector<std::int32_t> slot_stack_;
    std::vector<char> used_;
    std::vector<std::int32_t> unused_list_, unused_pos_;
    std::vector<std::int32_t> r1_, r2_;
    std::vector<std::int32_t> piece_row_, piece_col_;
    std::vector<std::uint8_t> piece_rot_;
};

/// One-shot crossover with a fresh seeded generator.
inline Chromosome crossover(const Chromosome& parent1, const Chromosome& parent2,
                            const CompatibilityMatrix& matrix,
                            std::span<const std::int32_t> best_buddy,
                            const std::int32_t* dnn_partner, std::uint64_t seed, PuzzleMode mode,
                            std::optional<std::pair<int, int>> dims,
                            std::array<std::int64_t, kPhaseCount>* phase_counts = nullptr) {
    CrossoverEngine engine(matrix, best_buddy, dnn_partner, mode, dims);
    Prng rng(seed);
    return engine.child(parent1, parent2, rng, phase_counts);
}

struct GenerationStats {
    int generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
    double neighbor_accuracy = -1.0;  // negative when no ground truth was supplied
    std::array<std::int64_t, kPhaseCount> phase_counts{};
};

struct SolveResult {
    Chromosome best;
    std::vector<GenerationStats> stats;
};

namespace detail {

inline Chromosome random_chromosome(int piece_count, PuzzleMode mode,
                                    std::optional<std::pair<int, int>> dims, Prng& rng) {
    Chromosome ch;
    if (mode == PuzzleMode::type1) {
        ch.rows = dims->first;
        ch.cols = dims->second;
    } else {
        std::vector<std::pair<int, int>> factors;
        for (int h = 1; h <= piece_count; ++h) {
            if (piece_count % h == 0) factors.emplace_back(h, piece_count / h);
        }
        const auto [h, w] = factors[rng.below(factors.size())];
        ch.rows = h;
        ch.cols = w;
    }
    ch.cells.resize(piece_count);
    for (int i = 0; i < piece_count; ++i) ch.cells[i] = i;
    rng.shuffle(ch.cells);
    ch.rots.assign(piece_count, 0);
    if (mode == PuzzleMode::type2) {
        for (auto& r : ch.rots) r = static_cast<std::uint8_t>(rng.below(4));
    }
    return ch;
}

// Roulette wheel over inverted-rank weights: the best of P ranked individuals
// gets weight P, the worst weight 1.
inline int roulette_rank(int population, Prng& rng) {
    const std::uint64_t total =
        static_cast<std::uint64_t>(population) * (population + 1) / 2;
    std::uint64_t r = rng.below(total);
    for (int rank = 0; rank < population; ++rank) {
        const std::uint64_t w = static_cast<std::uint64_t>(population - rank);
        if (r < w) return rank;
        r -= w;
    }
    return population - 1;
}

}  // namespace detail

/// Generational GA: evaluate, carry elites, fill the remainder with crossover
/// children of roulette-selected parents. Deterministic for a fixed seed.
/// `accuracy_fn`, when provided, is evaluated on each generation's best
/// individual for the stats log.
inline SolveResult solve(const PuzzleBundle& bundle, const CompatibilityMatrix& matrix,
                         std::span<const std::int32_t> best_buddy, const std::int32_t* dnn_partner,
                         const GaConfig& cfg,
                         const std::function<double(const Chromosome&)>& accuracy_fn = nullptr) {
    const int n = bundle.piece_count();
    if (n < 2) throw std::invalid_argument("solve: need at least 2 pieces");
    if (cfg.population < 2) throw std::invalid_argument("solve: population must be at least 2");
    if (cfg.elites < 0 || cfg.elites >= cfg.population) {
        throw std::invalid_argument("solve: elite count must be below the population size");
    }
    if (cfg.generations < 1) throw std::invalid_argument("solve: need at least one generation");
    if (bundle.mode == PuzzleMode::type1 && !bundle.dims) {
        throw std::invalid_argument("solve: type1 bundle without dimensions");
    }

    Prng rng(cfg.seed);
    CrossoverEngine engine(matrix, best_buddy, cfg.use_dnn ? dnn_partner : nullptr, bundle.mode,
                           bundle.dims, cfg.parent_constrained_metric_phases);

    std::vector<Chromosome> pop(cfg.population);
    for (auto& ch : pop) ch = detail::random_chromosome(n, bundle.mode, bundle.dims, rng);

    auto evaluate = [&](std::vector<Chromosome>& gen) {
        parallel_for(static_cast<int>(gen.size()), cfg.threads, [&](int begin, int end) {
            for (int i = begin; i < end; ++i) {
                if (!is_valid_placement(gen[i], n)) {
                    throw std::logic_error("solve: invalid chromosome in population");
                }
                gen[i].fitness = fitness(gen[i], matrix);
            }
        });
    };
    evaluate(pop);

    SolveResult result;
    result.best = pop.front();
    std::vector<int> order(cfg.population);

    for (int gen = 0; gen < cfg.generations; ++gen) {
        for (int i = 0; i < cfg.population; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (pop[a].fitness != pop[b].fitness) return pop[a].fitness < pop[b].fitness;
            return a < b;
        });

        GenerationStats st;
        st.generation = gen;
        st.best_fitness = pop[order.front()].fitness;
        double sum = 0.0;
        for (const auto& ch : pop) sum += ch.fitness;
        st.mean_fitness = sum / cfg.population;
        if (pop[order.front()].fitness < result.best.fitness) result.best = pop[order.front()];
        if (accuracy_fn) st.neighbor_accuracy = accuracy_fn(pop[order.front()]);

        std::vector<Chromosome> next;
        next.reserve(cfg.population);
        for (int e = 0; e < cfg.elites; ++e) next.push_back(pop[order[e]]);
        while (static_cast<int>(next.size()) < cfg.population) {
            const int ra = detail::roulette_rank(cfg.population, rng);
            const int rb = detail::roulette_rank(cfg.population, rng);
            next.push_back(engine.child(pop[order[ra]], pop[order[rb]], rng, &st.phase_counts));
        }
        pop.swap(next);
        evaluate(pop);
        result.stats.push_back(st);
    }

    // fold the final generation into the running best
    for (const auto& ch : pop) {
        if (ch.fitness < result.best.fitness) result.best = ch;
    }
    return result;
}

}  // namespace jigsaw
