#pragma once

#include <stdexcept>
#include <string>

namespace jigsaw {

inline constexpr int kDefaultTileSize = 28;

/// Malformed or truncated file contents (bundles, datasets, weights, dumps).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A loaded network whose layer shapes do not match what the caller needs.
struct ShapeMismatchError : std::runtime_error {
    explicit ShapeMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Operations whose input width is pinned to 28-pixel tiles.
struct UnsupportedTileSizeError : std::invalid_argument {
    explicit UnsupportedTileSizeError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Raised when an edge has no runner-up candidate to compare against.
struct NoSecondBestError : std::runtime_error {
    explicit NoSecondBestError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace jigsaw
