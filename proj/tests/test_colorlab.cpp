#include <doctest.h>

#include <cmath>

#include "oracles/colorimetry.hpp"
#include "oracles/frozen_reference.hpp"
#include "popdiv/colorlab.hpp"
#include "test_helpers.hpp"

using namespace popdiv;

namespace {

HexColor hex_of(std::string_view code) { return parse_hex(code); }

LabColor lab_of(const std::array<double, 3>& v) { return {v[0], v[1], v[2]}; }

LabColor random_lab(Rng& rng) {
  return {100.0 * rng.uniform01(), -128.0 + 256.0 * rng.uniform01(), -128.0 + 256.0 * rng.uniform01()};
}

}  // namespace

TEST_CASE("find_hex takes the first standalone token") {
  CHECK(parse_hex("Sure! #00FF00 is my pick").code() == "00FF00");
  CHECK(parse_hex("#00FF00 or maybe #0000FF").code() == "00FF00");
  CHECK(parse_hex("hex: a1b2c3").code() == "A1B2C3");
  CHECK(parse_hex("(#ff8800)").code() == "FF8800");
  CHECK(parse_hex("**#4B0082**.").code() == "4B0082");
  CHECK(parse_hex("color:#a1b2c3").code() == "A1B2C3");
  CHECK_FALSE(find_hex("green").has_value());
  CHECK_FALSE(find_hex("#12345").has_value());
  CHECK_FALSE(find_hex("#1234567").has_value());
  CHECK_FALSE(find_hex("id_abcdef").has_value());
  CHECK_FALSE(find_hex("x123456").has_value());
  CHECK(parse_hex("#1234567 then #ABCDEF").code() == "ABCDEF");
  CHECK_THROWS_CODE(parse_hex("green"), ErrorCode::kNoHexFound);
}

TEST_CASE("white and black land exactly on the Lab axis ends") {
  const auto w = hex_to_lab(hex_of("FFFFFF"));
  CHECK(std::abs(w.L - 100.0) < 1e-6);
  CHECK(std::abs(w.a) < 1e-6);
  CHECK(std::abs(w.b) < 1e-6);
  const auto k = hex_to_lab(hex_of("000000"));
  CHECK(std::abs(k.L) < 1e-6);
  CHECK(std::abs(k.a) < 1e-6);
  CHECK(std::abs(k.b) < 1e-6);
}

TEST_CASE("conversion agrees with scikit-image reference values") {
  for (const auto& ref : oracle::kSkimageLab) {
    CAPTURE(ref.hex);
    const auto lab = hex_to_lab(hex_of(ref.hex));
    CHECK(std::abs(lab.L - ref.lab[0]) < 0.01);
    CHECK(std::abs(lab.a - ref.lab[1]) < 0.01);
    CHECK(std::abs(lab.b - ref.lab[2]) < 0.01);
  }
}

TEST_CASE("conversion agrees with the primaries-derived oracle on random colors") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const HexColor h{static_cast<std::uint8_t>(rng.uniform_index(256)), static_cast<std::uint8_t>(rng.uniform_index(256)),
                     static_cast<std::uint8_t>(rng.uniform_index(256))};
    const auto lab = hex_to_lab(h);
    const auto ref = oracle::srgb8_to_lab(h.r, h.g, h.b);
    REQUIRE(std::abs(lab.L - ref[0]) < 1e-3);
    REQUIRE(std::abs(lab.a - ref[1]) < 1e-3);
    REQUIRE(std::abs(lab.b - ref[2]) < 1e-3);
  }
}

TEST_CASE("lab_to_hex inverts hex_to_lab on an 8-bit lattice") {
  for (int r = 0; r < 256; r += 5) {
    for (int g = 0; g < 256; g += 5) {
      for (int b = 0; b < 256; b += 5) {
        const HexColor h{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
        REQUIRE(lab_to_hex(hex_to_lab(h)) == h);
        REQUIRE(in_srgb_gamut(hex_to_lab(h), 1e-6));
      }
    }
  }
}

TEST_CASE("out-of-gamut colors are clipped") {
  const LabColor vivid{50.0, 120.0, -120.0};
  CHECK_FALSE(in_srgb_gamut(vivid));
  const auto h = lab_to_hex(vivid);
  CHECK(in_srgb_gamut(hex_to_lab(h), 1e-6));
  CHECK(lab_to_hex({150.0, 0.0, 0.0}).code() == "FFFFFF");
  CHECK(lab_to_hex({-20.0, 0.0, 0.0}).code() == "000000");
}

TEST_CASE("no NaN on 100k random hex codes") {
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const HexColor h{static_cast<std::uint8_t>(rng.next() & 0xFF), static_cast<std::uint8_t>(rng.next() & 0xFF),
                     static_cast<std::uint8_t>(rng.next() & 0xFF)};
    const auto lab = hex_to_lab(h);
    REQUIRE(std::isfinite(lab.L));
    REQUIRE(std::isfinite(lab.a));
    REQUIRE(std::isfinite(lab.b));
    REQUIRE(std::isfinite(ciede2000(lab, hex_to_lab(HexColor{0x80, 0x80, 0x80}))));
  }
}

TEST_CASE("CIE76 satisfies the metric axioms") {
  Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    const auto x = random_lab(rng), y = random_lab(rng), z = random_lab(rng);
    REQUIRE(delta_e(x, x) == 0.0);
    REQUIRE(delta_e(x, y) >= 0.0);
    REQUIRE(delta_e(x, y) == delta_e(y, x));
    REQUIRE(delta_e(x, z) <= delta_e(x, y) + delta_e(y, z) + 1e-9);
  }
  CHECK(delta_e({0, 0, 0}, {3, 4, 0}) == doctest::Approx(5.0));
}

TEST_CASE("CIEDE2000 matches reference pairs and is symmetric") {
  for (const auto& ref : oracle::kSkimageDe2000) {
    const auto x = lab_of(ref.x), y = lab_of(ref.y);
    CHECK(ciede2000(x, y) == doctest::Approx(ref.delta_e).epsilon(1e-6));
    CHECK(ciede2000(y, x) == doctest::Approx(ref.delta_e).epsilon(1e-6));
    CHECK(delta_e(x, y, DeltaEFormula::kCiede2000) == doctest::Approx(ref.delta_e).epsilon(1e-6));
  }
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto x = random_lab(rng), y = random_lab(rng);
    REQUIRE(ciede2000(x, x) == doctest::Approx(0.0));
    REQUIRE(ciede2000(x, y) >= 0.0);
    REQUIRE(std::abs(ciede2000(x, y) - ciede2000(y, x)) < 1e-9);
  }
}

TEST_CASE("formula names round-trip") {
  CHECK(parse_delta_e_formula(to_string(DeltaEFormula::kCie76)) == DeltaEFormula::kCie76);
  CHECK(parse_delta_e_formula(to_string(DeltaEFormula::kCiede2000)) == DeltaEFormula::kCiede2000);
  CHECK_THROWS_CODE(parse_delta_e_formula("cie94"), ErrorCode::kInvalidConfig);
}

TEST_CASE("chip palettes load and snap to the nearest chip") {
  const auto palette = ChipPalette::load_csv(testing::data_dir() / "palette_sample88.csv");
  CHECK(palette.size() == 88);
  for (std::size_t i = 0; i < palette.size(); ++i) {
    CHECK(snap_to_chip_index(palette.chips()[i].lab, palette) == i);
  }

  const auto two = ChipPalette::from_hex_codes({{"black", "000000"}, {"white", "#FFFFFF"}});
  CHECK(snap_to_chip(hex_to_lab(hex_of("202020")), two) == "black");
  CHECK(snap_to_chip(hex_to_lab(hex_of("E0E0E0")), two) == "white");
  // Equidistant from both: lowest index wins.
  const auto tie = ChipPalette::from_hex_codes({{"p", "000000"}, {"q", "000000"}});
  CHECK(snap_to_chip_index(hex_to_lab(hex_of("111111")), tie) == 0);

  CHECK_THROWS_CODE(ChipPalette(std::vector<Chip>{}), ErrorCode::kInvalidConfig);
  CHECK_THROWS_CODE(ChipPalette::from_hex_codes({{"a", "000000"}, {"a", "FFFFFF"}}), ErrorCode::kInvalidConfig);
  CHECK_THROWS_CODE(ChipPalette::from_hex_codes({{"a", "nothex"}}), ErrorCode::kSchemaError);
}

TEST_CASE("lightness increases strictly along the gray ramp") {
  double prev = -1.0;
  for (int v = 0; v < 256; ++v) {
    const auto c = static_cast<std::uint8_t>(v);
    const auto lab = hex_to_lab(HexColor{c, c, c});
    CHECK(lab.L > prev);
    CHECK(std::abs(lab.a) < 1e-6);
    CHECK(std::abs(lab.b) < 1e-6);
    prev = lab.L;
  }
}
