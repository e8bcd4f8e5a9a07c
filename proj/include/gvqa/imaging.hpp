// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gvqa::imaging {

/// Interleaved 8-bit RGB, row-major. data.size() == width * height * 3.
struct RawImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> data;

    static constexpr std::uint32_t channels = 3;

    RawImage() = default;
    /// Throws ValidationError if the buffer does not match the extents.
    RawImage(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> data);

    bool operator==(const RawImage&) const = default;
};

struct PatchRegion {
    std::uint32_t x0 = 0;
    std::uint32_t y0 = 0;
    std::uint32_t w = 0;
    std::uint32_t h = 0;
    std::vector<std::uint8_t> data;  ///< w * h * 3 bytes copied out of the frame

    bool operator==(const PatchRegion&) const = default;
};

struct GridSize {
    std::uint32_t rows = 2;
    std::uint32_t cols = 2;

    bool operator==(const GridSize&) const = default;
};

struct PatchGrid {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<PatchRegion> patches;  ///< row-major, rows * cols entries

    bool operator==(const PatchGrid&) const = default;
};

/// Tiles `image` into rows x cols patches. Base patch size is
/// floor(height/rows) x floor(width/cols); the last row and column absorb the
/// remainder. Throws ValidationError (imaging stage) if the grid is larger
/// than the image or empty.
PatchGrid partition(const RawImage& image, std::uint32_t rows, std::uint32_t cols);

/// Inverse of `partition`. Throws StructuralError when regions overlap, leave
/// pixels uncovered, or carry buffers that do not match their extents.
RawImage reassemble(const PatchGrid& grid);

/// Parses "RxC" (also accepts 'x' as 'X' or the multiplication sign).
GridSize parse_grid(std::string_view text);
std::string grid_label(GridSize grid);

// Decoding boundary. The core only ever sees RawImage.

/// Decodes PPM (P6), PNG or JPEG, sniffed from the file header.
RawImage load_image(const std::filesystem::path& path);

void save_ppm(const RawImage& image, const std::filesystem::path& path);

}  // namespace gvqa::imaging
