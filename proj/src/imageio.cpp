#include "vitc/imageio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "vitc/common.hpp"

namespace vitc::img {

namespace {

core::TensorF from_rgb8(const std::vector<unsigned char>& rgb, int64_t h, int64_t w) {
    core::TensorF out({h, w, 3});
    auto od = out.data();
    constexpr float inv = 1.0f / 255.0f;
    for (size_t i = 0; i < rgb.size(); ++i) od[static_cast<int64_t>(i)] = static_cast<float>(rgb[i]) * inv;
    return out;
}

std::vector<unsigned char> to_rgb8(const core::TensorF& image) {
    if (image.ndim() != 3 || image.dim(2) != 3)
        throw ValueError("expected an [H,W,3] image, got " + core::shape_str(image.shape()));
    std::vector<unsigned char> rgb(static_cast<size_t>(image.numel()));
    auto id = image.data();
    for (size_t i = 0; i < rgb.size(); ++i) {
        const float v = std::clamp(id[static_cast<int64_t>(i)], 0.0f, 1.0f);
        rgb[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
    return rgb;
}

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

core::TensorF decode_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open '" + path + "'");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng init failed for '" + path + "'");
    }
    std::vector<unsigned char> rgb;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("corrupt PNG '" + path + "'");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    rgb.resize(static_cast<size_t>(w) * h * 3);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = rgb.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return from_rgb8(rgb, h, w);
}

struct JpegErrorMgr {
    jpeg_error_mgr base;
    jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    longjmp(mgr->jump, 1);
}

core::TensorF decode_jpeg(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open '" + path + "'");
    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError("corrupt JPEG '" + path + "'");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const int64_t w = cinfo.output_width, h = cinfo.output_height;
    std::vector<unsigned char> rgb(static_cast<size_t>(w) * h * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = rgb.data() + static_cast<size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_rgb8(rgb, h, w);
}

void skip_ppm_space(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

core::TensorF decode_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string magic;
    in >> magic;
    if (magic != "P6" && magic != "P3") throw FormatError("not a PPM file: '" + path + "'");
    skip_ppm_space(in);
    int64_t w = 0, h = 0, maxval = 0;
    in >> w;
    skip_ppm_space(in);
    in >> h;
    skip_ppm_space(in);
    in >> maxval;
    if (!in || w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw FormatError("unsupported PPM header in '" + path + "'");
    std::vector<unsigned char> rgb(static_cast<size_t>(w) * h * 3);
    if (magic == "P6") {
        in.get(); // single whitespace after maxval
        in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
        if (in.gcount() != static_cast<std::streamsize>(rgb.size()))
            throw FormatError("truncated PPM payload in '" + path + "'");
    } else {
        for (auto& v : rgb) {
            int x;
            in >> x;
            if (!in || x < 0 || x > maxval) throw FormatError("bad PPM value in '" + path + "'");
            v = static_cast<unsigned char>(x);
        }
    }
    core::TensorF out({h, w, 3});
    auto od = out.data();
    const float inv = 1.0f / static_cast<float>(maxval);
    for (size_t i = 0; i < rgb.size(); ++i) od[static_cast<int64_t>(i)] = static_cast<float>(rgb[i]) * inv;
    return out;
}

} // namespace

core::TensorF decode_image(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open '" + path + "'");
    unsigned char head[4] = {0, 0, 0, 0};
    probe.read(reinterpret_cast<char*>(head), 4);
    probe.close();
    if (head[0] == 0x89 && head[1] == 'P' && head[2] == 'N' && head[3] == 'G') return decode_png(path);
    if (head[0] == 0xFF && head[1] == 0xD8) return decode_jpeg(path);
    if (head[0] == 'P' && (head[1] == '6' || head[1] == '3')) return decode_ppm(path);
    throw FormatError("unsupported image format in '" + path + "'");
}

void write_png(const std::string& path, const core::TensorF& image) {
    const auto rgb = to_rgb8(image);
    const int64_t h = image.dim(0), w = image.dim(1);
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write '" + path + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG write failed for '" + path + "'");
    }
    png_init_io(png, fp.get());
    // fixed settings keep output bytes reproducible
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int64_t y = 0; y < h; ++y)
        rows[static_cast<size_t>(y)] = const_cast<png_bytep>(rgb.data() + y * w * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_ppm(const std::string& path, const core::TensorF& image) {
    const auto rgb = to_rgb8(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "P6\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

} // namespace vitc::img
