#include "popdiv/colorlab.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "popdiv/csv.hpp"
#include "popdiv/error.hpp"
#include "popdiv/io.hpp"

namespace popdiv {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Linear sRGB -> XYZ, D65.
constexpr Mat3 kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

// The reference white is the image of RGB (1, 1, 1), so white maps to
// L = 100, a = b = 0 without rounding residue from the 7-digit matrix.
constexpr std::array<double, 3> kWhite{
    kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
    kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
    kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2],
};

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

Mat3 invert(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 inv{};
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

const Mat3& xyz_to_rgb() {
  static const Mat3 inv = invert(kRgbToXyz);
  return inv;
}

double srgb_decode(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double srgb_encode(double v) {
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kEpsilon ? f3 : (116.0 * f - 16.0) / kKappa;
}

bool is_hex_digit(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }
bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  return std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
}

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
double rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

std::string HexColor::code() const { return fmt::format("{:02X}{:02X}{:02X}", r, g, b); }

std::optional<HexColor> find_hex(std::string_view text) {
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t start;
    if (text[i] == '#') {
      start = i + 1;
    } else if (is_hex_digit(text[i]) && (i == 0 || (!is_word_char(text[i - 1]) && text[i - 1] != '#'))) {
      start = i;
    } else {
      continue;
    }
    if (start + 6 > n) continue;
    bool ok = true;
    for (std::size_t k = start; k < start + 6; ++k) ok = ok && is_hex_digit(text[k]);
    if (!ok) continue;
    if (start + 6 < n && is_word_char(text[start + 6])) continue;
    auto byte = [&](std::size_t at) {
      return static_cast<std::uint8_t>(hex_value(text[at]) * 16 + hex_value(text[at + 1]));
    };
    return HexColor{byte(start), byte(start + 2), byte(start + 4)};
  }
  return std::nullopt;
}

HexColor parse_hex(std::string_view text) {
  if (auto hex = find_hex(text)) return *hex;
  throw Error(ErrorCode::kNoHexFound, "no 6-digit HEX code in response");
}

LabColor srgb_to_lab(double r, double g, double b) {
  const std::array<double, 3> lin{srgb_decode(r), srgb_decode(g), srgb_decode(b)};
  std::array<double, 3> f{};
  for (int i = 0; i < 3; ++i) {
    const double xyz = kRgbToXyz[i][0] * lin[0] + kRgbToXyz[i][1] * lin[1] + kRgbToXyz[i][2] * lin[2];
    f[i] = lab_f(xyz / kWhite[i]);
  }
  return LabColor{116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])};
}

LabColor hex_to_lab(HexColor c) { return srgb_to_lab(c.r / 255.0, c.g / 255.0, c.b / 255.0); }

namespace {

std::array<double, 3> lab_to_linear_rgb(const LabColor& lab) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const std::array<double, 3> xyz{lab_f_inv(fx) * kWhite[0], lab_f_inv(fy) * kWhite[1],
                                  lab_f_inv(fz) * kWhite[2]};
  const Mat3& m = xyz_to_rgb();
  std::array<double, 3> rgb{};
  for (int i = 0; i < 3; ++i) rgb[i] = m[i][0] * xyz[0] + m[i][1] * xyz[1] + m[i][2] * xyz[2];
  return rgb;
}

}  // namespace

bool in_srgb_gamut(const LabColor& lab, double slack) {
  const auto rgb = lab_to_linear_rgb(lab);
  return std::all_of(rgb.begin(), rgb.end(), [&](double v) { return v >= -slack && v <= 1.0 + slack; });
}

HexColor lab_to_hex(const LabColor& lab) {
  const auto rgb = lab_to_linear_rgb(lab);
  std::array<std::uint8_t, 3> out{};
  for (int i = 0; i < 3; ++i) {
    const double v = srgb_encode(std::clamp(rgb[i], 0.0, 1.0));
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  }
  return HexColor{out[0], out[1], out[2]};
}

std::string_view to_string(DeltaEFormula f) {
  return f == DeltaEFormula::kCie76 ? "cie76" : "ciede2000";
}

DeltaEFormula parse_delta_e_formula(std::string_view name) {
  const auto lower = to_lower(name);
  if (lower == "cie76") return DeltaEFormula::kCie76;
  if (lower == "ciede2000") return DeltaEFormula::kCiede2000;
  throw Error(ErrorCode::kInvalidConfig, "unknown delta E formula '" + std::string(name) + "'");
}

double delta_e(const LabColor& x, const LabColor& y) {
  const double dl = x.L - y.L;
  const double da = x.a - y.a;
  const double db = x.b - y.b;
  return std::sqrt(dl * dl + da * da + db * db);
}

double delta_e(const LabColor& x, const LabColor& y, DeltaEFormula formula) {
  return formula == DeltaEFormula::kCie76 ? delta_e(x, y) : ciede2000(x, y);
}

// Sharma, Wu & Dalal's formulation with kL = kC = kH = 1.
double ciede2000(const LabColor& x, const LabColor& y) {
  const double c1 = std::hypot(x.a, x.b);
  const double c2 = std::hypot(y.a, y.b);
  const double c_bar = 0.5 * (c1 + c2);
  const double c_bar7 = std::pow(c_bar, 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(c_bar7 / (c_bar7 + std::pow(25.0, 7.0))));
  const double a1p = (1.0 + g) * x.a;
  const double a2p = (1.0 + g) * y.a;
  const double c1p = std::hypot(a1p, x.b);
  const double c2p = std::hypot(a2p, y.b);
  auto hue = [](double b, double ap) {
    if (b == 0.0 && ap == 0.0) return 0.0;
    double h = deg(std::atan2(b, ap));
    return h < 0.0 ? h + 360.0 : h;
  };
  const double h1p = hue(x.b, a1p);
  const double h2p = hue(y.b, a2p);

  const double dLp = y.L - x.L;
  const double dCp = c2p - c1p;
  double dhp = 0.0;
  if (c1p * c2p != 0.0) {
    dhp = h2p - h1p;
    if (dhp > 180.0) dhp -= 360.0;
    if (dhp < -180.0) dhp += 360.0;
  }
  const double dHp = 2.0 * std::sqrt(c1p * c2p) * std::sin(rad(dhp / 2.0));

  const double l_bar = 0.5 * (x.L + y.L);
  const double cp_bar = 0.5 * (c1p + c2p);
  double hp_bar = h1p + h2p;
  if (c1p * c2p != 0.0) {
    if (std::abs(h1p - h2p) <= 180.0) {
      hp_bar /= 2.0;
    } else if (h1p + h2p < 360.0) {
      hp_bar = (hp_bar + 360.0) / 2.0;
    } else {
      hp_bar = (hp_bar - 360.0) / 2.0;
    }
  }
  const double t = 1.0 - 0.17 * std::cos(rad(hp_bar - 30.0)) + 0.24 * std::cos(rad(2.0 * hp_bar)) +
                   0.32 * std::cos(rad(3.0 * hp_bar + 6.0)) - 0.20 * std::cos(rad(4.0 * hp_bar - 63.0));
  const double d_theta = 30.0 * std::exp(-std::pow((hp_bar - 275.0) / 25.0, 2.0));
  const double cp_bar7 = std::pow(cp_bar, 7.0);
  const double rc = 2.0 * std::sqrt(cp_bar7 / (cp_bar7 + std::pow(25.0, 7.0)));
  const double l50 = (l_bar - 50.0) * (l_bar - 50.0);
  const double sl = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
  const double sc = 1.0 + 0.045 * cp_bar;
  const double sh = 1.0 + 0.015 * cp_bar * t;
  const double rt = -std::sin(rad(2.0 * d_theta)) * rc;

  const double tl = dLp / sl;
  const double tc = dCp / sc;
  const double th = dHp / sh;
  return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

ChipPalette::ChipPalette(std::vector<Chip> chips) : chips_(std::move(chips)) {
  if (chips_.empty()) throw Error(ErrorCode::kInvalidConfig, "chip palette is empty");
  std::unordered_set<std::string> seen;
  for (const auto& chip : chips_) {
    if (!seen.insert(chip.id).second) {
      throw Error(ErrorCode::kInvalidConfig, "duplicate chip id '" + chip.id + "'");
    }
  }
}

ChipPalette ChipPalette::from_hex_codes(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::vector<Chip> chips;
  chips.reserve(rows.size());
  for (const auto& [id, code] : rows) {
    auto hex = find_hex(code);
    if (!hex || trim(code).size() > 7) {
      throw Error(ErrorCode::kSchemaError, "chip '" + id + "' has invalid hex '" + code + "'");
    }
    chips.push_back(Chip{id, *hex, hex_to_lab(*hex)});
  }
  return ChipPalette(std::move(chips));
}

ChipPalette ChipPalette::load_csv(const std::filesystem::path& path) {
  const auto table = csv::read_table(path, {"chip_id", "hex"});
  const auto id_col = table.column("chip_id");
  const auto hex_col = table.column("hex");
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& row : table.rows) rows.emplace_back(trim(row[id_col]), row[hex_col]);
  return from_hex_codes(rows);
}

std::size_t snap_to_chip_index(const LabColor& c, const ChipPalette& palette) {
  const auto& chips = palette.chips();
  std::size_t best = 0;
  double best_d = delta_e(c, chips[0].lab);
  for (std::size_t i = 1; i < chips.size(); ++i) {
    const double d = delta_e(c, chips[i].lab);
    if (d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

const std::string& snap_to_chip(const LabColor& c, const ChipPalette& palette) {
  return palette.chips()[snap_to_chip_index(c, palette)].id;
}

}  // namespace popdiv
