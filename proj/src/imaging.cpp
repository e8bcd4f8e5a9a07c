// SPDX-License-Identifier: Apache-2.0
#include "gvqa/imaging.hpp"

#include "gvqa/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <string>

namespace gvqa::imaging {
namespace {

constexpr std::size_t kChannels = RawImage::channels;

}  // namespace

RawImage::RawImage(std::uint32_t w, std::uint32_t h, std::vector<std::uint8_t> bytes)
    : width(w), height(h), data(std::move(bytes)) {
    if (w == 0 || h == 0) {
        throw ValidationError(Stage::imaging, "image extents must be at least 1x1");
    }
    if (data.size() != static_cast<std::size_t>(w) * h * kChannels) {
        throw ValidationError(Stage::imaging, "image buffer holds " + std::to_string(data.size()) +
                                                  " bytes, expected " +
                                                  std::to_string(static_cast<std::size_t>(w) * h * kChannels));
    }
}

PatchGrid partition(const RawImage& image, std::uint32_t rows, std::uint32_t cols) {
    if (rows == 0 || cols == 0) {
        throw ValidationError(Stage::imaging, "grid must be at least 1x1");
    }
    if (rows > image.height || cols > image.width) {
        throw ValidationError(Stage::imaging, "grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                                                  " exceeds image " + std::to_string(image.width) + "x" +
                                                  std::to_string(image.height));
    }
    const std::uint32_t base_h = image.height / rows;
    const std::uint32_t base_w = image.width / cols;
    const std::size_t stride = static_cast<std::size_t>(image.width) * kChannels;

    PatchGrid grid{rows, cols, {}};
    grid.patches.reserve(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) {
            PatchRegion patch;
            patch.x0 = c * base_w;
            patch.y0 = r * base_h;
            patch.w = (c + 1 == cols) ? image.width - patch.x0 : base_w;
            patch.h = (r + 1 == rows) ? image.height - patch.y0 : base_h;
            const std::size_t row_bytes = static_cast<std::size_t>(patch.w) * kChannels;
            patch.data.resize(row_bytes * patch.h);
            for (std::uint32_t y = 0; y < patch.h; ++y) {
                std::memcpy(patch.data.data() + y * row_bytes,
                            image.data.data() + (patch.y0 + y) * stride + patch.x0 * kChannels, row_bytes);
            }
            grid.patches.push_back(std::move(patch));
        }
    }
    return grid;
}

RawImage reassemble(const PatchGrid& grid) {
    if (grid.patches.empty() || grid.patches.size() != static_cast<std::size_t>(grid.rows) * grid.cols) {
        throw StructuralError(Stage::imaging, "patch count does not match the grid shape");
    }
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    for (const PatchRegion& p : grid.patches) {
        if (p.w == 0 || p.h == 0 || p.data.size() != static_cast<std::size_t>(p.w) * p.h * kChannels) {
            throw StructuralError(Stage::imaging, "patch buffer does not match its extents");
        }
        width = std::max(width, p.x0 + p.w);
        height = std::max(height, p.y0 + p.h);
    }

    std::vector<std::uint8_t> covered(static_cast<std::size_t>(width) * height, 0);
    std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height * kChannels);
    const std::size_t stride = static_cast<std::size_t>(width) * kChannels;
    for (const PatchRegion& p : grid.patches) {
        const std::size_t row_bytes = static_cast<std::size_t>(p.w) * kChannels;
        for (std::uint32_t y = 0; y < p.h; ++y) {
            std::uint8_t* mask = covered.data() + static_cast<std::size_t>(p.y0 + y) * width + p.x0;
            if (std::any_of(mask, mask + p.w, [](std::uint8_t m) { return m != 0; })) {
                throw StructuralError(Stage::imaging, "patch regions overlap");
            }
            std::fill(mask, mask + p.w, std::uint8_t{1});
            std::memcpy(data.data() + (p.y0 + y) * stride + p.x0 * kChannels, p.data.data() + y * row_bytes,
                        row_bytes);
        }
    }
    if (std::any_of(covered.begin(), covered.end(), [](std::uint8_t m) { return m == 0; })) {
        throw StructuralError(Stage::imaging, "patch regions do not cover the frame");
    }
    return RawImage(width, height, std::move(data));
}

GridSize parse_grid(std::string_view text) {
    std::size_t sep = text.find_first_of("xX");
    std::size_t sep_len = 1;
    if (sep == std::string_view::npos) {
        sep = text.find("\xC3\x97");  // U+00D7 in UTF-8
        sep_len = 2;
    }
    GridSize grid{0, 0};
    if (sep != std::string_view::npos) {
        const std::string_view r = text.substr(0, sep);
        const std::string_view c = text.substr(sep + sep_len);
        const auto rr = std::from_chars(r.data(), r.data() + r.size(), grid.rows);
        const auto cr = std::from_chars(c.data(), c.data() + c.size(), grid.cols);
        if (rr.ec == std::errc{} && rr.ptr == r.data() + r.size() && cr.ec == std::errc{} &&
            cr.ptr == c.data() + c.size() && grid.rows >= 1 && grid.cols >= 1) {
            return grid;
        }
    }
    throw ValidationError(Stage::config, "grid must look like RxC with R, C >= 1, got '" + std::string(text) + "'");
}

std::string grid_label(GridSize grid) {
    return std::to_string(grid.rows) + "x" + std::to_string(grid.cols);
}

}  // namespace gvqa::imaging
