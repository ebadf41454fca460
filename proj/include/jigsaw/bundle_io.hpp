#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "jigsaw/common.hpp"
#include "jigsaw/image_io.hpp"
#include "jigsaw/puzzle.hpp"

namespace jigsaw {

// On-disk bundle layout: one PNG per piece (piece_0000.png, ...) holding the
// 8-bit RGB tile with its bundle rotation already applied, plus bundle.json.
// Normalized piece data is rebuilt on load from the stored per-image channel
// stats; the YUV + z-score arithmetic is per pixel, so the reload is exact.

inline std::string piece_filename(int id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "piece_%04d.png", id);
    return buf;
}

inline void save_bundle(const PuzzleBundle& bundle, const std::string& dir,
                        bool include_ground_truth = true) {
    if (bundle.raw_tiles.size() != bundle.pieces.size()) {
        throw std::invalid_argument("save_bundle: bundle has no raw tiles to persist");
    }
    std::filesystem::create_directories(dir);
    for (int i = 0; i < bundle.piece_count(); ++i) {
        write_png(bundle.raw_tiles[i], (std::filesystem::path(dir) / piece_filename(i)).string());
    }

    nlohmann::json j;
    j["format"] = "jigsaw-bundle";
    j["version"] = 1;
    j["mode"] = mode_name(bundle.mode);
    j["k"] = bundle.k;
    j["seed"] = bundle.seed;
    j["piece_count"] = bundle.piece_count();
    if (bundle.mode == PuzzleMode::type1 && bundle.dims) {
        j["dims"] = {bundle.dims->first, bundle.dims->second};
    }
    j["normalization"]["mean"] = bundle.norm.mean;
    j["normalization"]["stddev"] = bundle.norm.stddev;
    if (include_ground_truth && bundle.ground_truth) {
        const auto& gt = *bundle.ground_truth;
        nlohmann::json g;
        g["rows"] = gt.rows;
        g["cols"] = gt.cols;
        auto& cells = g["pieces"] = nlohmann::json::array();
        for (const auto& e : gt.by_piece) cells.push_back({e.row, e.col, e.rot});
        j["ground_truth"] = std::move(g);
    }

    std::ofstream out(std::filesystem::path(dir) / "bundle.json", std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw FormatError("save_bundle: cannot write bundle.json in " + dir);
}

inline PuzzleBundle load_bundle(const std::string& dir) {
    const auto json_path = std::filesystem::path(dir) / "bundle.json";
    std::ifstream in(json_path, std::ios::binary);
    if (!in) throw FormatError("load_bundle: missing " + json_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("load_bundle: bad bundle.json: " + std::string(e.what()));
    }
    if (j.value("format", "") != "jigsaw-bundle") throw FormatError("load_bundle: not a bundle directory");

    PuzzleBundle bundle;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "type1") bundle.mode = PuzzleMode::type1;
    else if (mode == "type2") bundle.mode = PuzzleMode::type2;
    else throw FormatError("load_bundle: unknown mode " + mode);
    bundle.k = j.at("k").get<int>();
    bundle.seed = j.at("seed").get<std::uint64_t>();
    const int n = j.at("piece_count").get<int>();
    if (n <= 0) throw FormatError("load_bundle: bad piece count");
    if (j.contains("dims")) bundle.dims = {j["dims"][0].get<int>(), j["dims"][1].get<int>()};
    for (int c = 0; c < 3; ++c) {
        bundle.norm.mean[c] = j.at("normalization").at("mean")[c].get<double>();
        bundle.norm.stddev[c] = j.at("normalization").at("stddev")[c].get<double>();
    }
    if (j.contains("ground_truth")) {
        GroundTruth gt;
        gt.rows = j["ground_truth"].at("rows").get<int>();
        gt.cols = j["ground_truth"].at("cols").get<int>();
        for (const auto& cell : j["ground_truth"].at("pieces")) {
            gt.by_piece.push_back({cell[0].get<int>(), cell[1].get<int>(), cell[2].get<int>()});
        }
        if (gt.piece_count() != n) throw FormatError("load_bundle: ground truth size mismatch");
        bundle.ground_truth = std::move(gt);
    }

    for (int i = 0; i < n; ++i) {
        const auto tile_path = std::filesystem::path(dir) / piece_filename(i);
        RawImage tile = read_png(tile_path.string());
        if (tile.width != bundle.k || tile.height != bundle.k) {
            throw FormatError("load_bundle: tile size mismatch in " + tile_path.string());
        }
        NormalizedImage norm = normalize_with_stats(tile, bundle.norm);
        Piece p;
        p.id = i;
        p.k = bundle.k;
        p.data = std::move(norm.data);
        bundle.pieces.push_back(std::move(p));
        bundle.raw_tiles.push_back(std::move(tile));
    }
    return bundle;
}

}  // namespace jigsaw
