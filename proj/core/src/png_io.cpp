#include "mitoscan/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "mitoscan/errors.hpp"

namespace mitoscan {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

GrayImage read_gray_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw UnreadableFileError("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw UnreadableFileError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw UnreadableFileError("png_create_info_struct failed");
    }

    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> raw;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw UnreadableFileError("failed to decode " + path.string());
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);
    if (color_type != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw UnreadableFileError(path.string() + ": expected grayscale PNG");
    }
    if (depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        depth = 8;
    }
    png_read_update_info(png, info);

    GrayImage img;
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.bit_depth = depth;
    img.pixels.resize(static_cast<size_t>(img.width) * img.height);

    const size_t row_bytes = png_get_rowbytes(png, info);
    raw.resize(row_bytes * img.height);
    row_ptrs.resize(img.height);
    for (int y = 0; y < img.height; ++y) row_ptrs[y] = raw.data() + row_bytes * y;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    // PNG 16-bit samples are big-endian on the wire; assemble explicitly.
    for (int y = 0; y < img.height; ++y) {
        const png_byte* row = raw.data() + row_bytes * y;
        for (int x = 0; x < img.width; ++x) {
            if (depth == 16)
                img.at(x, y) = static_cast<uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
            else
                img.at(x, y) = row[x];
        }
    }
    return img;
}

void write_gray_png(const std::filesystem::path& path, const GrayImage& img) {
    img.validate();
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw UnreadableFileError("cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw UnreadableFileError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw UnreadableFileError("png_create_info_struct failed");
    }

    std::vector<png_byte> raw;
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw UnreadableFileError("failed to encode " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, img.bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const size_t row_bytes = static_cast<size_t>(img.width) * (img.bit_depth == 16 ? 2 : 1);
    raw.resize(row_bytes * img.height);
    for (int y = 0; y < img.height; ++y) {
        png_byte* row = raw.data() + row_bytes * y;
        for (int x = 0; x < img.width; ++x) {
            uint16_t v = img.at(x, y);
            if (img.bit_depth == 16) {
                row[2 * x] = static_cast<png_byte>(v >> 8);
                row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
            } else {
                row[x] = static_cast<png_byte>(v);
            }
        }
    }
    row_ptrs.resize(img.height);
    for (int y = 0; y < img.height; ++y) row_ptrs[y] = raw.data() + row_bytes * y;
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace mitoscan
