#include "nsda/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>

#include "nsda/errors.hpp"

namespace nsda {

namespace {

void check_size(const IntensityImage& img, std::optional<int> expected_n) {
    if (!expected_n) return;
    if (img.width != *expected_n || img.height != *expected_n) {
        std::ostringstream msg;
        msg << "expected a " << *expected_n << "x" << *expected_n << " image, got " << img.width << "x" << img.height;
        throw IngestionError(msg.str());
    }
}

// Reads the next PGM header token, skipping whitespace and # comments.
std::string pgm_token(std::span<const std::uint8_t> b, std::size_t& pos) {
    for (;;) {
        while (pos < b.size() && std::isspace(b[pos])) ++pos;
        if (pos < b.size() && b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    std::string tok;
    while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok.push_back(static_cast<char>(b[pos++]));
    return tok;
}

int pgm_int(std::span<const std::uint8_t> b, std::size_t& pos, const char* what) {
    const std::string t = pgm_token(b, pos);
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; }) || t.size() > 9)
        throw IngestionError(std::string("PGM header: bad ") + what + " '" + t + "'");
    return std::stoi(t);
}

IntensityImage decode_pgm(std::span<const std::uint8_t> b) {
    std::size_t pos = 2;
    const int w = pgm_int(b, pos, "width");
    const int h = pgm_int(b, pos, "height");
    const int maxval = pgm_int(b, pos, "maxval");
    if (maxval != 255) throw IngestionError("expected an 8-bit PGM (maxval 255), got maxval " + std::to_string(maxval));
    if (w <= 0 || h <= 0) throw IngestionError("PGM has empty dimensions");
    if (pos >= b.size() || !std::isspace(b[pos])) throw IngestionError("PGM header not terminated by whitespace");
    ++pos;
    const std::size_t need = static_cast<std::size_t>(w) * h;
    if (b.size() - pos < need)
        throw IngestionError("PGM truncated: expected " + std::to_string(need) + " pixel bytes, got " +
                             std::to_string(b.size() - pos));
    IntensityImage img(w, h);
    std::memcpy(img.pixels.data(), b.data() + pos, need);
    return img;
}

IntensityImage decode_png(std::span<const std::uint8_t> b) {
    // IHDR is always the first chunk: bytes 16..23 hold width/height, 24 bit depth, 25 colour type.
    if (b.size() < 33 || std::memcmp(b.data() + 12, "IHDR", 4) != 0) throw IngestionError("PNG is missing its IHDR");
    const int bit_depth = b[24];
    const int color_type = b[25];
    if (color_type != 0)
        throw IngestionError("expected a grayscale PNG (colour type 0), got colour type " + std::to_string(color_type));
    if (bit_depth != 8) throw IngestionError("expected an 8-bit PNG, got bit depth " + std::to_string(bit_depth));

    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, b.data(), b.size()))
        throw IngestionError(std::string("PNG decode failed: ") + image.message);
    image.format = PNG_FORMAT_GRAY;
    IntensityImage img(static_cast<int>(image.width), static_cast<int>(image.height));
    if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
        const std::string m = image.message;
        png_image_free(&image);
        throw IngestionError("PNG decode failed: " + m);
    }
    return img;
}

void write_bytes(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IngestionError("write failed for " + path.string());
}

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)); }

}  // namespace

IntensityImage decode_image(std::span<const std::uint8_t> bytes, std::optional<int> expected_n) {
    static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    IntensityImage img;
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
        img = decode_pgm(bytes);
    } else if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) {
        img = decode_png(bytes);
    } else if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '7') {
        throw IngestionError(std::string("expected binary PGM (P5), got P") + static_cast<char>(bytes[1]));
    } else {
        throw IngestionError("unrecognized image format: expected binary PGM (P5) or 8-bit grayscale PNG");
    }
    check_size(img, expected_n);
    return img;
}

IntensityImage load_image(const std::filesystem::path& path, std::optional<int> expected_n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open image " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_image(bytes, expected_n);
    } catch (const IngestionError& e) {
        throw IngestionError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_pgm(const IntensityImage& img) {
    const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

std::vector<std::uint8_t> encode_png(const IntensityImage& img) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
        throw IngestionError(std::string("PNG encode failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr))
        throw IngestionError(std::string("PNG encode failed: ") + image.message);
    out.resize(size);
    return out;
}

void save_pgm(const IntensityImage& img, const std::filesystem::path& path) { write_bytes(encode_pgm(img), path); }

void save_png(const IntensityImage& img, const std::filesystem::path& path) { write_bytes(encode_png(img), path); }

void save_image(const IntensityImage& img, const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".png") return save_png(img, path);
    if (ext == ".pgm") return save_pgm(img, path);
    throw ParameterError("unsupported image extension '" + ext + "' (use .png or .pgm)");
}

ScalarField intensity_to_stream(const IntensityImage& img, double scale, int taper_width) {
    if (img.width != img.height)
        throw IngestionError("expected a square image, got " + std::to_string(img.width) + "x" +
                             std::to_string(img.height));
    if (img.width < 16 || !is_power_of_two(img.width))
        throw IngestionError("expected a power-of-two side >= 16, got " + std::to_string(img.width));
    if (!(scale > 0.0)) throw ParameterError("intensity scale must be > 0");
    const int n = img.width;
    ScalarField psi(GridSpec::make(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) psi(c, n - 1 - r) = scale * img.at(r, c);
    return apply_taper(psi, taper_width);
}

IntensityImage field_to_image(const ScalarField& f, ExportMode mode, double scale) {
    const int n = f.n();
    IntensityImage img(n, n);
    if (mode == ExportMode::absolute) {
        if (!(scale > 0.0)) throw ParameterError("export scale must be > 0");
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                const double v = std::clamp(f(c, n - 1 - r), 0.0, 255.0 * scale);
                img.at(r, c) = clamp_u8(std::floor(v / scale + 0.5));
            }
        }
        return img;
    }
    const double lo = f.min();
    const double hi = f.max();
    if (!(hi > lo)) {
        std::fill(img.pixels.begin(), img.pixels.end(), std::uint8_t{128});
        return img;
    }
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) img.at(r, c) = clamp_u8(std::floor((f(c, n - 1 - r) - lo) / (hi - lo) * 255.0));
    return img;
}

std::vector<std::string> synthetic_image_names() { return {"usaf_chart", "storm", "checkerboard", "zero"}; }

namespace {

void fill_rect(IntensityImage& img, int r0, int c0, int rows, int cols, std::uint8_t v) {
    for (int r = std::max(0, r0); r < std::min(img.height, r0 + rows); ++r)
        for (int c = std::max(0, c0); c < std::min(img.width, c0 + cols); ++c) img.at(r, c) = v;
}

// Resolution-chart look: groups of three dark bars, one set horizontal and one
// vertical, shrinking from group to group.
IntensityImage usaf_chart(int n) {
    IntensityImage img(n, n, 215);
    const double s = n / 256.0;
    const int widths[] = {10, 8, 6, 5, 4, 3, 2, 2};
    int row = static_cast<int>(20 * s);
    int col = static_cast<int>(20 * s);
    int tallest = 0;
    for (int g = 0; g < 8; ++g) {
        const int w = std::max(1, static_cast<int>(widths[g] * s));
        const int len = 5 * w;
        const int block = 5 * w + len + 3 * w;
        if (col + block > n - static_cast<int>(16 * s)) {
            col = static_cast<int>(20 * s);
            row += tallest + static_cast<int>(14 * s);
            tallest = 0;
        }
        for (int b = 0; b < 3; ++b) {
            fill_rect(img, row + 2 * b * w, col, w, len, 25);             // horizontal bars
            fill_rect(img, row, col + len + 2 * w + 2 * b * w, len, w, 25);  // vertical bars
        }
        // A solid square tag per group.
        fill_rect(img, row + len + w, col, 2 * w, 2 * w, g % 2 ? 25 : 250);
        tallest = std::max(tallest, len + 3 * w);
        col += block + static_cast<int>(10 * s);
    }
    // Large bright disc with a dark ring, and a speckled band for fine texture.
    const double cx = 0.70 * n;
    const double cy = 0.72 * n;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double d = std::hypot(r - cy, c - cx);
            if (d < 0.12 * n) img.at(r, c) = 250;
            else if (d < 0.16 * n) img.at(r, c) = 30;
        }
    }
    std::mt19937 rng(20240611u);
    const int band0 = static_cast<int>(0.62 * n);
    const int band1 = static_cast<int>(0.90 * n);
    for (int r = band0; r < band1; ++r)
        for (int c = static_cast<int>(0.08 * n); c < static_cast<int>(0.45 * n); ++c)
            img.at(r, c) = (rng() >> 31) ? 235 : 35;
    return img;
}

// Spiral bands with a bright eye and speckle.
IntensityImage storm(int n) {
    IntensityImage img(n, n);
    std::mt19937 rng(7919u);
    const double c0 = 0.5 * (n - 1);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double x = (c - c0) / n;
            const double y = (c0 - r) / n;
            const double rad = std::hypot(x, y);
            const double ang = std::atan2(y, x);
            const double arm = std::cos(3.0 * ang + 28.0 * rad);
            double v = arm > 0.15 ? 220.0 : 60.0;
            v *= std::exp(-std::pow(rad / 0.38, 4.0));
            if (rad < 0.035) v = 20.0;
            v += static_cast<double>(rng() % 41) - 20.0;
            img.at(r, c) = clamp_u8(std::round(v));
        }
    }
    return img;
}

}  // namespace

IntensityImage synthetic_image(const std::string& name, int n) {
    if (n < 16 || !is_power_of_two(n)) throw ParameterError("synthetic image side must be a power of two >= 16");
    if (name == "usaf_chart") return usaf_chart(n);
    if (name == "storm") return storm(n);
    if (name == "checkerboard") {
        IntensityImage img(n, n);
        const int sq = std::max(1, n / 16);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) img.at(r, c) = ((r / sq + c / sq) % 2) ? 255 : 0;
        return img;
    }
    if (name == "zero") return IntensityImage(n, n, 0);
    throw ParameterError("unknown synthetic image '" + name + "'");
}

}  // namespace nsda
