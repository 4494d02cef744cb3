#include "homogen/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

namespace homogen {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void save_png(const ImageBuf& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng write failed: " + path);
    }
    png_init_io(png, fp.get());
    const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width, img.height, 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<std::size_t>(x) * img.channels + c] = to_u8(img.at(x, y, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageBuf load_png(std::FILE* fp, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng read failed: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_expand(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int ch = static_cast<int>(png_get_channels(png, info));
    if (ch != 1 && ch != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported channel count in " + path);
    }

    ImageBuf img(w, h, ch);
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * ch);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c)
                img.at(x, y, c) = from_u8(row[static_cast<std::size_t>(x) * ch + c]);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void save_pnm(const ImageBuf& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for writing: " + path);
    std::fprintf(fp.get(), "%s\n%d %d\n255\n", img.channels == 1 ? "P5" : "P6", img.width,
                 img.height);
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<std::size_t>(x) * img.channels + c] = to_u8(img.at(x, y, c));
        std::fwrite(row.data(), 1, row.size(), fp.get());
    }
}

ImageBuf load_pnm(std::FILE* fp, const std::string& path) {
    char magic[3] = {};
    int w = 0, h = 0, maxval = 0;
    if (std::fscanf(fp, "%2s %d %d %d", magic, &w, &h, &maxval) != 4 || maxval != 255 || w <= 0 ||
        h <= 0)
        throw IoError("bad PNM header in " + path);
    const int ch = std::strcmp(magic, "P5") == 0 ? 1 : 3;
    std::fgetc(fp);  // single whitespace after maxval
    ImageBuf img(w, h, ch);
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * ch);
    if (std::fread(buf.data(), 1, buf.size(), fp) != buf.size())
        throw IoError("truncated PNM data in " + path);
    for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = from_u8(buf[i]);
    return img;
}

}  // namespace

ImageBuf load_image(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open: " + path);
    unsigned char magic[2] = {};
    if (std::fread(magic, 1, 2, fp.get()) != 2) throw IoError("empty file: " + path);
    std::rewind(fp.get());
    if (magic[0] == 0x89 && magic[1] == 'P') return load_png(fp.get(), path);
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) return load_pnm(fp.get(), path);
    throw IoError("unrecognized image format: " + path);
}

void save_image(const ImageBuf& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0) throw IoError("cannot save empty image");
    if (img.channels != 1 && img.channels != 3)
        throw IoError("save_image expects 1 or 3 channels");
    if (ends_with(path, ".pgm") || ends_with(path, ".ppm") || ends_with(path, ".pnm"))
        save_pnm(img, path);
    else
        save_png(img, path);
}

void save_mask(const PlaneMask& mask, const std::string& path) {
    ImageBuf img(mask.width, mask.height, 1);
    img.data.assign(mask.w.begin(), mask.w.end());
    save_image(img, path);
}

PlaneMask load_mask(const std::string& path) {
    const ImageBuf img = to_grayscale(load_image(path));
    PlaneMask mask(img.width, img.height);
    mask.w.assign(img.data.begin(), img.data.end());
    return mask;
}

}  // namespace homogen
