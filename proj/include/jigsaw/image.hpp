#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace jigsaw {

/// 8-bit RGB image, row-major, interleaved channels.
struct RawImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // size = width * height * 3

    const std::uint8_t* px(int row, int col) const {
        return pixels.data() + (static_cast<std::size_t>(row) * width + col) * 3;
    }
    std::uint8_t* px(int row, int col) {
        return pixels.data() + (static_cast<std::size_t>(row) * width + col) * 3;
    }
};

inline RawImage make_raw_image(int width, int height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
    RawImage img;
    img.width = width;
    img.height = height;
    img.pixels.assign(static_cast<std::size_t>(width) * height * 3, 0);
    return img;
}

/// Per-channel statistics of the YUV planes before the z-score is applied.
/// Stored alongside tiled pieces so normalized values can be rebuilt exactly
/// from 8-bit tile images.
struct NormalizationStats {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> stddev{0.0, 0.0, 0.0};
};

/// Z-score-normalized YUV image. data layout: (row * width + col) * 3 + channel.
struct NormalizedImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;
    NormalizationStats stats;

    const double* px(int row, int col) const {
        return data.data() + (static_cast<std::size_t>(row) * width + col) * 3;
    }
};

// BT.601 full-range: Y = 0.299R + 0.587G + 0.114B, U = 0.492(B - Y), V = 0.877(R - Y).
inline std::array<double, 3> yuv_from_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const double rf = r, gf = g, bf = b;
    const double y = 0.299 * rf + 0.587 * gf + 0.114 * bf;
    const double u = 0.492 * (bf - y);
    const double v = 0.877 * (rf - y);
    return {y, u, v};
}

namespace detail {

// A channel whose population stddev collapses below this is treated as
// constant and zeroed instead of divided by ~0.
inline constexpr double kConstantChannelStd = 1e-12;

inline void apply_zscore(std::vector<double>& data, const NormalizationStats& stats) {
    for (int c = 0; c < 3; ++c) {
        const double mean = stats.mean[c];
        const double sd = stats.stddev[c];
        if (sd < kConstantChannelStd) {
            for (std::size_t i = c; i < data.size(); i += 3) data[i] = 0.0;
        } else {
            for (std::size_t i = c; i < data.size(); i += 3) data[i] = (data[i] - mean) / sd;
        }
    }
}

}  // namespace detail

/// BT.601 YUV conversion followed by a per-channel z-score over the whole
/// image. The z-score uses the population standard deviation (divide by N);
/// constant channels become all zeros.
inline NormalizedImage to_normalized_yuv(const RawImage& img) {
    if (img.width <= 0 || img.height <= 0 ||
        img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw std::invalid_argument("to_normalized_yuv: empty or inconsistent image");
    }
    NormalizedImage out;
    out.width = img.width;
    out.height = img.height;
    out.data.resize(img.pixels.size());

    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i) {
        const auto yuv = yuv_from_rgb(img.pixels[i * 3], img.pixels[i * 3 + 1], img.pixels[i * 3 + 2]);
        out.data[i * 3] = yuv[0];
        out.data[i * 3 + 1] = yuv[1];
        out.data[i * 3 + 2] = yuv[2];
    }

    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += out.data[i * 3 + c];
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = out.data[i * 3 + c] - mean;
            sq += d * d;
        }
        out.stats.mean[c] = mean;
        out.stats.stddev[c] = std::sqrt(sq / static_cast<double>(n));
    }
    detail::apply_zscore(out.data, out.stats);
    return out;
}

/// Rebuilds normalized YUV data for an 8-bit RGB tile using stats computed
/// over the tile's source image. Bit-identical to normalizing the source
/// image and slicing, because both paths apply the same per-pixel arithmetic.
inline NormalizedImage normalize_with_stats(const RawImage& img, const NormalizationStats& stats) {
    if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("normalize_with_stats: empty image");
    NormalizedImage out;
    out.width = img.width;
    out.height = img.height;
    out.stats = stats;
    out.data.resize(img.pixels.size());
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i) {
        const auto yuv = yuv_from_rgb(img.pixels[i * 3], img.pixels[i * 3 + 1], img.pixels[i * 3 + 2]);
        out.data[i * 3] = yuv[0];
        out.data[i * 3 + 1] = yuv[1];
        out.data[i * 3 + 2] = yuv[2];
    }
    detail::apply_zscore(out.data, stats);
    return out;
}

/// Counterclockwise rotation by `steps` * 90 degrees.
inline RawImage rotate_raw_ccw(const RawImage& img, int steps) {
    steps = ((steps % 4) + 4) % 4;
    if (steps == 0) return img;
    RawImage out;
    const int w = img.width, h = img.height;
    out.width = (steps % 2 == 0) ? w : h;
    out.height = (steps % 2 == 0) ? h : w;
    out.pixels.resize(img.pixels.size());
    for (int i = 0; i < out.height; ++i) {
        for (int j = 0; j < out.width; ++j) {
            int si = 0, sj = 0;
            switch (steps) {
                case 1: si = j; sj = w - 1 - i; break;
                case 2: si = h - 1 - i; sj = w - 1 - j; break;
                case 3: si = h - 1 - j; sj = i; break;
            }
            const std::uint8_t* s = img.px(si, sj);
            std::uint8_t* d = out.px(i, j);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
        }
    }
    return out;
}

}  // namespace jigsaw
