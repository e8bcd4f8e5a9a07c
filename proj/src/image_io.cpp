// SPDX-License-Identifier: Apache-2.0
// Raster decoding adapters. Only this file knows about container formats.
#include "gvqa/error.hpp"
#include "gvqa/imaging.hpp"

#include <png.h>
#include <cstdio>
#include <jpeglib.h>

#include <csetjmp>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

namespace gvqa::imaging {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image " + path.string(), Stage::imaging);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[noreturn]] void bad_image(const std::filesystem::path& path, const std::string& why) {
    throw ValidationError(Stage::imaging, path.string() + ": " + why);
}

RawImage decode_ppm(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::size_t pos = 2;
    auto next_token = [&]() -> std::uint32_t {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) {
                ++pos;
            }
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
                continue;
            }
            break;
        }
        std::uint32_t value = 0;
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + static_cast<std::uint32_t>(bytes[pos] - '0');
            ++pos;
        }
        if (pos == start) {
            bad_image(path, "malformed PPM header");
        }
        return value;
    };
    const std::uint32_t width = next_token();
    const std::uint32_t height = next_token();
    const std::uint32_t maxval = next_token();
    if (maxval != 255) {
        bad_image(path, "only 8-bit PPM is supported");
    }
    ++pos;  // single whitespace before the raster
    const std::size_t expected = static_cast<std::size_t>(width) * height * 3;
    if (pos > bytes.size() || bytes.size() - pos < expected) {
        bad_image(path, "truncated PPM raster");
    }
    return RawImage(width, height, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                                             bytes.begin() + static_cast<std::ptrdiff_t>(pos + expected)));
}

RawImage decode_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
        bad_image(path, image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, data.data(), 0, nullptr) == 0) {
        const std::string message = image.message;
        png_image_free(&image);
        bad_image(path, message);
    }
    return RawImage(image.width, image.height, std::move(data));
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
    auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
    (*info->err->format_message)(info, err->message);
    std::longjmp(err->jump, 1);
}

RawImage decode_jpeg(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    jpeg_decompress_struct info{};
    JpegErrorManager err{};
    info.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    std::vector<std::uint8_t> data;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    if (setjmp(err.jump) != 0) {
        jpeg_destroy_decompress(&info);
        bad_image(path, err.message);
    }
    jpeg_create_decompress(&info);
    jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&info, TRUE);
    info.out_color_space = JCS_RGB;
    jpeg_start_decompress(&info);
    width = info.output_width;
    height = info.output_height;
    data.resize(static_cast<std::size_t>(width) * height * 3);
    while (info.output_scanline < info.output_height) {
        JSAMPROW row = data.data() + static_cast<std::size_t>(info.output_scanline) * width * 3;
        jpeg_read_scanlines(&info, &row, 1);
    }
    jpeg_finish_decompress(&info);
    jpeg_destroy_decompress(&info);
    return RawImage(width, height, std::move(data));
}

}  // namespace

RawImage load_image(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
        return decode_ppm(bytes, path);
    }
    if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') {
        return decode_png(bytes, path);
    }
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return decode_jpeg(bytes, path);
    }
    bad_image(path, "unrecognized image format");
}

void save_ppm(const RawImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string(), Stage::imaging);
    }
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.data.data()), static_cast<std::streamsize>(image.data.size()));
}

}  // namespace gvqa::imaging
