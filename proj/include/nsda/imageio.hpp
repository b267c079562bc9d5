#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsda/fields.hpp"

namespace nsda {

/// 8-bit grayscale raster, row-major, row 0 at the top.
struct IntensityImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    IntensityImage() = default;
    IntensityImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    bool operator==(const IntensityImage&) const = default;
};

/// Binary PGM (P5, maxval 255) or 8-bit grayscale PNG, chosen by content.
/// When `expected_n` is set the image must be expected_n x expected_n.
/// Throws IngestionError describing what was expected.
IntensityImage load_image(const std::filesystem::path& path, std::optional<int> expected_n = std::nullopt);
IntensityImage decode_image(std::span<const std::uint8_t> bytes, std::optional<int> expected_n = std::nullopt);

std::vector<std::uint8_t> encode_pgm(const IntensityImage& img);
std::vector<std::uint8_t> encode_png(const IntensityImage& img);
void save_pgm(const IntensityImage& img, const std::filesystem::path& path);
void save_png(const IntensityImage& img, const std::filesystem::path& path);
/// Format from the extension: .png or .pgm.
void save_image(const IntensityImage& img, const std::filesystem::path& path);

inline constexpr double kDefaultIntensityScale = 0.0025;

/// psi = scale * pixel, tapered. Image row r, column c lands on grid node
/// (i, j) = (c, n - 1 - r) so the picture keeps its orientation with y up.
/// The image must be square with a power-of-two side >= 16.
ScalarField intensity_to_stream(const IntensityImage& img, double scale = kDefaultIntensityScale,
                                int taper_width = 8);

enum class ExportMode { absolute, minmax };

/// absolute: floor(clamp(v, 0, 255 s) / s + 0.5) with s = scale.
/// minmax: floor((v - min) / (max - min) * 255), 255 at the max; a constant
/// field maps to 128.
IntensityImage field_to_image(const ScalarField& f, ExportMode mode, double scale = kDefaultIntensityScale);

/// Procedural test images (deterministic). Names: see synthetic_image_names().
IntensityImage synthetic_image(const std::string& name, int n = 256);
std::vector<std::string> synthetic_image_names();

}  // namespace nsda
