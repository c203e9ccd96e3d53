#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace popdiv {

/// An sRGB color as written in a 6-digit HEX code.
struct HexColor {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  /// Uppercase, without '#': "4B0082".
  std::string code() const;

  friend bool operator==(const HexColor&, const HexColor&) = default;
};

struct LabColor {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const LabColor&, const LabColor&) = default;
};

/// First standalone 6-hex-digit token in `text`, with or without a leading
/// '#'. A bare token must not be glued to a preceding letter, digit or
/// underscore; no token may be followed by one.
std::optional<HexColor> find_hex(std::string_view text);

/// Throws Error(kNoHexFound) when `text` contains no HEX token.
HexColor parse_hex(std::string_view text);

/// sRGB (IEC 61966-2-1) -> linear RGB -> XYZ (D65, 2 deg) -> CIELAB.
LabColor hex_to_lab(HexColor c);
LabColor srgb_to_lab(double r, double g, double b);

/// Inverse pipeline, clipping out-of-gamut channels to [0, 1] and rounding
/// to the nearest 8-bit code.
HexColor lab_to_hex(const LabColor& lab);

/// True when the color's linear sRGB channels all lie in [0, 1] (within
/// `slack`), i.e. lab_to_hex needs no clipping.
bool in_srgb_gamut(const LabColor& lab, double slack = 1e-9);

enum class DeltaEFormula { kCie76, kCiede2000 };

std::string_view to_string(DeltaEFormula f);
DeltaEFormula parse_delta_e_formula(std::string_view name);

/// CIE76: Euclidean distance in CIELAB.
double delta_e(const LabColor& x, const LabColor& y);
double delta_e(const LabColor& x, const LabColor& y, DeltaEFormula formula);
double ciede2000(const LabColor& x, const LabColor& y);

struct Chip {
  std::string id;
  HexColor hex;
  LabColor lab;
};

/// Ordered chip set used to discretize free-form HEX answers.
class ChipPalette {
 public:
  /// Throws InvalidConfig if `chips` is empty or ids repeat.
  explicit ChipPalette(std::vector<Chip> chips);

  /// CSV with header `chip_id,hex`.
  static ChipPalette load_csv(const std::filesystem::path& path);
  static ChipPalette from_hex_codes(const std::vector<std::pair<std::string, std::string>>& rows);

  const std::vector<Chip>& chips() const { return chips_; }
  std::size_t size() const { return chips_.size(); }

 private:
  std::vector<Chip> chips_;
};

/// Palette index of the chip closest to `c` (CIE76); ties go to the lowest
/// index.
std::size_t snap_to_chip_index(const LabColor& c, const ChipPalette& palette);
const std::string& snap_to_chip(const LabColor& c, const ChipPalette& palette);

}  // namespace popdiv
