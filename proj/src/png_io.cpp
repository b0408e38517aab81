// Copyright retguide authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "retguide/png_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include <jpeglib.h>
#include <png.h>

namespace retguide {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f)
        throw Error("cannot open " + path.string());
    return f;
}

bool is_png(FILE* f) {
    unsigned char sig[8];
    size_t n = std::fread(sig, 1, 8, f);
    std::rewind(f);
    return n == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png)
            info = png_create_info_struct(png);
        if (!png || !info)
            throw Error("libpng allocation failed");
    }
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png)
            info = png_create_info_struct(png);
        if (!png || !info)
            throw Error("libpng allocation failed");
    }
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

// libjpeg reports errors by calling error_exit; route that through longjmp
// (exceptions must not unwind the library's C frames).
struct JpegErrorMgr {
    jpeg_error_mgr mgr;
    jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit_cb(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    longjmp(err->jump, 1);
}

struct JpegDecompress {
    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};

    JpegDecompress() {
        cinfo.err = jpeg_std_error(&err.mgr);
        err.mgr.error_exit = jpeg_error_exit_cb;
        jpeg_create_decompress(&cinfo);
    }
    ~JpegDecompress() { jpeg_destroy_decompress(&cinfo); }
};

RgbImage read_rgb_jpeg(FILE* f, const std::filesystem::path& path) {
    JpegDecompress d;
    // All destructible locals are declared before the setjmp point so the
    // error longjmp never skips a constructor/destructor pair.
    RgbImage out;
    if (setjmp(d.err.jump))
        throw Error("JPEG decode error in " + path.string() + ": " + d.err.message);

    jpeg_stdio_src(&d.cinfo, f);
    if (jpeg_read_header(&d.cinfo, TRUE) != JPEG_HEADER_OK)
        throw Error("not a JPEG file: " + path.string());
    d.cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&d.cinfo);

    out = RgbImage(static_cast<int>(d.cinfo.output_width),
                   static_cast<int>(d.cinfo.output_height));
    while (d.cinfo.output_scanline < d.cinfo.output_height) {
        JSAMPROW row = out.data.data() +
                       static_cast<size_t>(d.cinfo.output_scanline) * d.cinfo.output_width * 3;
        jpeg_read_scanlines(&d.cinfo, &row, 1);
    }
    jpeg_finish_decompress(&d.cinfo);
    return out;
}

} // namespace

RgbImage read_rgb(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    if (!is_png(f.get()))
        return read_rgb_jpeg(f.get(), path);

    PngReader r;
    RgbImage out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(r.png)))
        throw Error("failed to decode PNG " + path.string());
    png_init_io(r.png, f.get());
    png_read_info(r.png, r.info);

    // Normalize any color type / depth to 8-bit RGB.
    png_set_strip_16(r.png);
    png_set_palette_to_rgb(r.png);
    png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(r.png);
    png_set_strip_alpha(r.png);
    png_set_gray_to_rgb(r.png);
    png_read_update_info(r.png, r.info);

    int w = static_cast<int>(png_get_image_width(r.png, r.info));
    int h = static_cast<int>(png_get_image_height(r.png, r.info));
    if (png_get_rowbytes(r.png, r.info) != static_cast<size_t>(w) * 3)
        throw Error("unexpected PNG row layout in " + path.string());

    out = RgbImage(w, h);
    rows.resize(h);
    for (int y = 0; y < h; ++y)
        rows[y] = out.data.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return out;
}

GrayImage16 read_gray(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    if (!is_png(f.get()))
        throw Error("label/instance rasters must be PNG: " + path.string());

    PngReader r;
    GrayImage16 out;
    std::vector<uint8_t> raw;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(r.png)))
        throw Error("failed to decode PNG " + path.string());
    png_init_io(r.png, f.get());
    png_read_info(r.png, r.info);

    png_byte color = png_get_color_type(r.png, r.info);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw Error("expected grayscale PNG: " + path.string());
    png_set_expand_gray_1_2_4_to_8(r.png);
    png_read_update_info(r.png, r.info);

    int w = static_cast<int>(png_get_image_width(r.png, r.info));
    int h = static_cast<int>(png_get_image_height(r.png, r.info));
    int depth = png_get_bit_depth(r.png, r.info);

    out = GrayImage16{w, h, std::vector<uint16_t>(static_cast<size_t>(w) * h)};
    int bytes = depth == 16 ? 2 : 1;
    raw.resize(static_cast<size_t>(w) * h * bytes);
    rows.resize(h);
    for (int y = 0; y < h; ++y)
        rows[y] = raw.data() + static_cast<size_t>(y) * w * bytes;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    if (depth == 16) {
        // libpng hands over big-endian samples.
        for (size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    } else {
        for (size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = raw[i];
    }
    return out;
}

std::pair<int, int> read_image_dims(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    if (is_png(f.get())) {
        PngReader r;
        if (setjmp(png_jmpbuf(r.png)))
            throw Error("failed to parse PNG " + path.string());
        png_init_io(r.png, f.get());
        png_read_info(r.png, r.info);
        return {static_cast<int>(png_get_image_width(r.png, r.info)),
                static_cast<int>(png_get_image_height(r.png, r.info))};
    }
    JpegDecompress d;
    if (setjmp(d.err.jump))
        throw Error("unsupported image format: " + path.string());
    jpeg_stdio_src(&d.cinfo, f.get());
    if (jpeg_read_header(&d.cinfo, TRUE) != JPEG_HEADER_OK)
        throw Error("unsupported image format: " + path.string());
    return {static_cast<int>(d.cinfo.image_width), static_cast<int>(d.cinfo.image_height)};
}

namespace {

void write_png(const std::filesystem::path& path, int width, int height, int bit_depth,
               int color_type, const std::vector<png_bytep>& rows) {
    FilePtr f = open_file(path, "wb");
    PngWriter w;
    if (setjmp(png_jmpbuf(w.png)))
        throw Error("failed to write PNG " + path.string());
    png_init_io(w.png, f.get());
    png_set_IHDR(w.png, w.info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    png_write_image(w.png, const_cast<png_bytep*>(rows.data()));
    png_write_end(w.png, nullptr);
}

} // namespace

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
    std::vector<png_bytep> rows(image.height);
    for (int y = 0; y < image.height; ++y)
        rows[y] = const_cast<png_bytep>(image.data.data() + static_cast<size_t>(y) * image.width * 3);
    write_png(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

void write_gray8_png(const std::filesystem::path& path, std::span<const uint8_t> data, int width,
                     int height) {
    if (data.size() != static_cast<size_t>(width) * height)
        throw Error("write_gray8_png: buffer size mismatch");
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data.data() + static_cast<size_t>(y) * width);
    write_png(path, width, height, 8, PNG_COLOR_TYPE_GRAY, rows);
}

void write_gray16_png(const std::filesystem::path& path, std::span<const uint16_t> data, int width,
                      int height) {
    if (data.size() != static_cast<size_t>(width) * height)
        throw Error("write_gray16_png: buffer size mismatch");
    std::vector<uint8_t> raw(data.size() * 2);
    for (size_t i = 0; i < data.size(); ++i) {
        raw[2 * i] = static_cast<uint8_t>(data[i] >> 8);
        raw[2 * i + 1] = static_cast<uint8_t>(data[i] & 0xff);
    }
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = raw.data() + static_cast<size_t>(y) * width * 2;
    write_png(path, width, height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
    std::vector<uint8_t> gray(mask.bit_count());
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            gray[static_cast<size_t>(y) * mask.width() + x] = mask.get(x, y) ? 255 : 0;
    write_gray8_png(path, gray, mask.width(), mask.height());
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
    GrayImage16 g = read_gray(path);
    BinaryMask mask(g.width, g.height);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            if (g.data[static_cast<size_t>(y) * g.width + x] >= 128)
                mask.set(x, y);
    return mask;
}

} // namespace retguide
