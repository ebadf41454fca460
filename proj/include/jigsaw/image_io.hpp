#pragma once

#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "jigsaw/common.hpp"
#include "jigsaw/image.hpp"

namespace jigsaw {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace detail

/// Reads an 8-bit RGB PNG. Grayscale, palette, 16-bit and alpha variants are
/// expanded/stripped to RGB8.
inline RawImage read_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw FormatError("cannot open " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw FormatError(path + " is not a PNG file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw FormatError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw FormatError("png_create_info_struct failed");
    }

    RawImage img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("failed to decode " + path);
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.pixels.resize(static_cast<std::size_t>(width) * height * 3);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) {
        rows[r] = img.pixels.data() + static_cast<std::size_t>(r) * width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

/// Writes an 8-bit RGB PNG with fixed encoder settings (compression level 6,
/// filter NONE, no ancillary chunks) so identical pixels produce identical
/// bytes on disk.
inline void write_png(const RawImage& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("write_png: empty image");
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw FormatError("cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw FormatError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw FormatError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("failed to encode " + path);
    }

    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_const_bytep> rows(img.height);
    for (int r = 0; r < img.height; ++r) rows[r] = img.px(r, 0);
    png_write_rows(png, const_cast<png_bytepp>(const_cast<png_const_bytep*>(rows.data())),
                   static_cast<png_uint_32>(img.height));
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

/// Reads a binary PPM (P6) with maxval <= 255.
inline RawImage read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);

    auto next_token = [&in, &path]() -> std::string {
        std::string tok;
        for (;;) {
            int c = in.get();
            if (c == EOF) throw FormatError(path + ": truncated PPM header");
            if (c == '#') {  // comment to end of line
                while (c != EOF && c != '\n') c = in.get();
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
    };

    if (next_token() != "P6") throw FormatError(path + " is not a P6 PPM file");
    const int width = std::stoi(next_token());
    const int height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (width <= 0 || height <= 0) throw FormatError(path + ": bad PPM dimensions");
    if (maxval <= 0 || maxval > 255) throw FormatError(path + ": unsupported PPM maxval");

    RawImage img = make_raw_image(width, height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw FormatError(path + ": truncated PPM payload");
    }
    return img;
}

/// Dispatches on file extension: .png, .ppm.
inline RawImage read_image(const std::string& path) {
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".png" || ext == ".PNG") return read_png(path);
    if (ext == ".ppm" || ext == ".PPM") return read_ppm(path);
    throw FormatError("unsupported image format: " + path);
}

}  // namespace jigsaw
