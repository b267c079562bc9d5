#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "nsda/errors.hpp"
#include "nsda/imageio.hpp"
#include "support.hpp"

using namespace nsda;
using nsda::testing::Rng;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path d = fs::temp_directory_path() / ("nsda_imageio_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

IntensityImage random_image(int n, Rng& rng) {
    IntensityImage img(n, n);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform(0, 256));
    return img;
}

}  // namespace

TEST_CASE("pgm and png round trips") {
    const fs::path dir = scratch_dir();
    for (const std::uint8_t fill : {std::uint8_t{0}, std::uint8_t{255}}) {
        const IntensityImage flat(256, 256, fill);
        save_pgm(flat, dir / "flat.pgm");
        save_png(flat, dir / "flat.png");
        CHECK(load_image(dir / "flat.pgm", 256) == flat);
        CHECK(load_image(dir / "flat.png", 256) == flat);
    }

    const IntensityImage cb = synthetic_image("checkerboard");
    save_image(cb, dir / "cb.pgm");
    save_image(cb, dir / "cb.png");
    CHECK(load_image(dir / "cb.pgm") == cb);
    CHECK(load_image(dir / "cb.png") == cb);
    CHECK_THROWS_AS(save_image(cb, dir / "cb.bmp"), ParameterError);

    Rng rng(51);
    for (int trial = 0; trial < 5; ++trial) {
        const IntensityImage img = random_image(32, rng);
        CHECK(decode_image(encode_pgm(img)) == img);
        CHECK(decode_image(encode_png(img)) == img);
    }
    fs::remove_all(dir);
}

TEST_CASE("pgm header parsing") {
    const auto img = decode_image(bytes_of("P5\n# comment\n2 1\n255\n\x07\x09"));
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.at(0, 0) == 7);
    CHECK(img.at(0, 1) == 9);
    const std::vector<std::uint8_t> enc = encode_pgm(img);
    CHECK(std::string(enc.begin(), enc.begin() + 11) == "P5\n2 1\n255\n");
}

TEST_CASE("ingestion errors name the expectation") {
    auto message = [](const std::vector<std::uint8_t>& b, std::optional<int> n = std::nullopt) -> std::string {
        try {
            decode_image(b, n);
        } catch (const IngestionError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message(bytes_of("GIF89a")).find("PGM") != std::string::npos);
    CHECK(message(bytes_of("P5\n2 2\n65535\n")).find("255") != std::string::npos);
    CHECK(message(bytes_of("P5\n2 2\n255\n\x01")).find("truncated") != std::string::npos);
    CHECK(message(encode_pgm(IntensityImage(32, 32)), 256).find("256") != std::string::npos);
    CHECK(message(encode_pgm(IntensityImage(32, 16))).empty());
    CHECK_FALSE(message({}).empty());
    CHECK_THROWS_AS(load_image("/nonexistent/file.pgm"), IngestionError);
}

TEST_CASE("png with the wrong pixel format is rejected") {
    // 16-bit grayscale IHDR, no further chunks needed to fail the check.
    std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n', 0, 0, 0, 13, 'I', 'H', 'D', 'R',
                                     0,    0,   0,   4,   0,    0,    0,    4,    16, 0, 0, 0, 0, 0, 0, 0, 0};
    CHECK_THROWS_WITH_AS(decode_image(png), doctest::Contains("8-bit"), IngestionError);
    png[24] = 8;
    png[25] = 2;
    CHECK_THROWS_WITH_AS(decode_image(png), doctest::Contains("grayscale"), IngestionError);
}

TEST_CASE("intensity to stream") {
    IntensityImage img(16, 16, 0);
    img.at(0, 0) = 255;
    img.at(15, 3) = 100;
    img.at(8, 8) = 255;
    const ScalarField psi = intensity_to_stream(img, kDefaultIntensityScale, 0);
    CHECK(psi(3, 0) == 0.0);  // ring
    CHECK(psi(8, 7) == doctest::Approx(0.6375).epsilon(1e-15));
    CHECK(psi.max() == doctest::Approx(0.6375).epsilon(1e-15));
    CHECK(psi.min() == 0.0);

    IntensityImage hundred(16, 16, 100);
    const ScalarField h = intensity_to_stream(hundred, kDefaultIntensityScale, 0);
    CHECK(h(5, 5) == doctest::Approx(0.25).epsilon(1e-15));

    CHECK_THROWS_AS(intensity_to_stream(IntensityImage(16, 8)), IngestionError);
    CHECK_THROWS_AS(intensity_to_stream(IntensityImage(24, 24)), IngestionError);
}

TEST_CASE("field to image") {
    const GridSpec g = GridSpec::make(16);
    CHECK(field_to_image(ScalarField(g, 0.6375), ExportMode::absolute).at(3, 3) == 255);
    CHECK(field_to_image(ScalarField(g, 5.0), ExportMode::absolute).at(3, 3) == 255);
    CHECK(field_to_image(ScalarField(g, -1.0), ExportMode::absolute).at(3, 3) == 0);
    CHECK(field_to_image(ScalarField(g, 0.0024), ExportMode::absolute).at(3, 3) == 1);
    CHECK(field_to_image(ScalarField(g, 0.0012), ExportMode::absolute).at(3, 3) == 0);
    CHECK(field_to_image(ScalarField(g, 7.0), ExportMode::minmax).at(0, 0) == 128);

    ScalarField f(g);
    f(1, 1) = -1.0;
    f(2, 2) = 1.0;
    const IntensityImage m = field_to_image(f, ExportMode::minmax);
    CHECK(m.at(15 - 1, 1) == 0);
    CHECK(m.at(15 - 2, 2) == 255);
    CHECK(m.at(0, 0) == 127);
}

TEST_CASE("property: ingestion then absolute export is the identity") {
    Rng rng(52);
    for (int trial = 0; trial < 10; ++trial) {
        const IntensityImage img = random_image(32, rng);
        const IntensityImage back = field_to_image(intensity_to_stream(img, kDefaultIntensityScale, 0), ExportMode::absolute);
        bool same = true;
        for (int r = 1; r < 31; ++r)
            for (int c = 1; c < 31; ++c) same = same && back.at(r, c) == img.at(r, c);
        CHECK(same);
        const ScalarField t = intensity_to_stream(img, kDefaultIntensityScale, 6);
        CHECK(t.min() >= 0.0);
        CHECK(t.max() <= 255 * kDefaultIntensityScale);
        CHECK(t.boundary_clean());
    }
}

TEST_CASE("synthetic images") {
    for (const auto& name : synthetic_image_names()) {
        const IntensityImage a = synthetic_image(name);
        CHECK(a.width == 256);
        CHECK(a.height == 256);
        CHECK(a == synthetic_image(name));
    }
    CHECK(synthetic_image("zero") == IntensityImage(256, 256, 0));
    const IntensityImage usaf = synthetic_image("usaf_chart");
    int lo = 0;
    int hi = 0;
    for (auto p : usaf.pixels) {
        lo += p < 64;
        hi += p > 192;
    }
    CHECK(lo > 1000);
    CHECK(hi > 1000);
    CHECK_THROWS_AS(synthetic_image("nope"), ParameterError);
    CHECK(synthetic_image("storm", 64).width == 64);
}
