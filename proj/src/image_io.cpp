#include "slr/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>

namespace slr::io {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) fail(ErrorCategory::io, "cannot open " + path);
    return f;
}

uint8_t to_byte(double v) {
    double s = v * 255.0 + 0.5;
    if (s < 0.0) s = 0.0;
    if (s > 255.0) s = 255.0;
    return static_cast<uint8_t>(s);
}

void write_png(const std::string& path, const uint8_t* rows, int w, int h, int channels) {
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCategory::io, "png write failed: " + path);
    }
    png_init_io(png, f.get());
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, w, h, 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> row_ptrs(h);
    for (int y = 0; y < h; ++y)
        row_ptrs[y] = const_cast<png_bytep>(rows + static_cast<size_t>(y) * w * channels);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<uint8_t> read_png(const std::string& path, int& w, int& h, int want_channels) {
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCategory::io, "png read failed: " + path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    w = png_get_image_width(png, info);
    h = png_get_image_height(png, info);

    png_set_strip_16(png);
    png_set_packing(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (want_channels == 3) {
        png_set_strip_alpha(png);
        if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY) png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);
    int channels = png_get_channels(png, info);
    if (channels != want_channels) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCategory::io, "unexpected channel count in " + path);
    }

    std::vector<uint8_t> data(static_cast<size_t>(w) * h * channels);
    std::vector<png_bytep> row_ptrs(h);
    for (int y = 0; y < h; ++y) row_ptrs[y] = data.data() + static_cast<size_t>(y) * w * channels;
    png_read_image(png, row_ptrs.data());
    png_destroy_read_struct(&png, &info, nullptr);
    return data;
}

}  // namespace

void write_png_rgb(const std::string& path, const Field3& image) {
    int w = image.width(), h = image.height();
    std::vector<uint8_t> rows(static_cast<size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                rows[(static_cast<size_t>(y) * w + x) * 3 + c] = to_byte(image.ch[c](x, y));
    write_png(path, rows.data(), w, h, 3);
}

void write_png_gray(const std::string& path, const Mask& values) {
    write_png(path, values.data(), values.width(), values.height(), 1);
}

Field3 read_png_rgb(const std::string& path) {
    int w = 0, h = 0;
    auto data = read_png(path, w, h, 3);
    Field3 img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.ch[c](x, y) = data[(static_cast<size_t>(y) * w + x) * 3 + c] / 255.0;
    return img;
}

Mask read_png_gray(const std::string& path) {
    int w = 0, h = 0;
    auto data = read_png(path, w, h, 1);
    Mask m(w, h);
    std::memcpy(m.data(), data.data(), data.size());
    return m;
}

void write_png_weights(const std::string& path, const Grid<double>& w) {
    Mask m(w.width(), w.height());
    for (size_t i = 0; i < w.size(); ++i) m[i] = to_byte(w[i]);
    write_png_gray(path, m);
}

void write_tensor(const std::string& path, const std::vector<int>& dims,
                  const std::vector<double>& values) {
    size_t n = 1;
    for (int d : dims) n *= static_cast<size_t>(d);
    require(n == values.size(), ErrorCategory::shape, "tensor dump: dims/value mismatch");
    FilePtr f = open_file(path, "wb");
    std::fwrite("SLRT", 1, 4, f.get());
    uint8_t ndim = static_cast<uint8_t>(dims.size());
    std::fwrite(&ndim, 1, 1, f.get());
    for (int d : dims) {
        int32_t v = d;
        std::fwrite(&v, 4, 1, f.get());
    }
    std::vector<float> out(values.size());
    for (size_t i = 0; i < values.size(); ++i) out[i] = static_cast<float>(values[i]);
    std::fwrite(out.data(), 4, out.size(), f.get());
}

std::vector<double> read_tensor(const std::string& path, std::vector<int>& dims) {
    FilePtr f = open_file(path, "rb");
    char magic[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, "SLRT", 4) != 0)
        fail(ErrorCategory::parse, "bad tensor magic in " + path);
    uint8_t ndim = 0;
    if (std::fread(&ndim, 1, 1, f.get()) != 1) fail(ErrorCategory::parse, "truncated " + path);
    dims.resize(ndim);
    size_t n = 1;
    for (int i = 0; i < ndim; ++i) {
        int32_t v = 0;
        if (std::fread(&v, 4, 1, f.get()) != 1) fail(ErrorCategory::parse, "truncated " + path);
        dims[i] = v;
        n *= static_cast<size_t>(v);
    }
    std::vector<float> raw(n);
    if (std::fread(raw.data(), 4, n, f.get()) != n) fail(ErrorCategory::parse, "truncated " + path);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = raw[i];
    return out;
}

}  // namespace slr::io
