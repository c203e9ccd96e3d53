#pragma once

// Generated by reference_values.py (scikit-image). Do not edit by hand.

#include <array>
#include <string_view>

namespace oracle {

struct LabRef {
  std::string_view hex;
  std::array<double, 3> lab;
};

inline constexpr LabRef kSkimageLab[] = {
    {"FF0000", {53.2405879437, 80.0923082257, 67.2027510444}},
    {"00FF00", {87.7350994883, -86.1830297444, 83.1797031754}},
    {"0000FF", {32.2956725650, 79.1855909118, -107.8573002067}},
    {"808080", {53.5850134522, -0.0014726456, 0.0027914515}},
    {"4B0082", {20.4688666760, 51.6845647963, -53.3104956200}},
    {"FFA500", {74.9357152848, 23.9324003171, 78.9496951367}},
    {"123456", {21.0416100539, 1.0523062624, -24.0991681144}},
    {"C0FFEE", {95.5371944789, -23.0266619044, 1.7450416375}},
};

struct De2000Ref {
  std::array<double, 3> x;
  std::array<double, 3> y;
  double delta_e;
};

inline constexpr De2000Ref kSkimageDe2000[] = {
    {{50, 2.6772, -79.7751}, {50, 0, -82.7485}, 2.0424596802},
    {{50, 3.1571, -77.2803}, {50, 0, -82.7485}, 2.8615101747},
    {{50, 2.8361, -74.02}, {50, 0, -82.7485}, 3.4411905987},
    {{50, -1.3802, -84.2814}, {50, 0, -82.7485}, 0.9999988648},
    {{50, 0, 0}, {50, -1, 2}, 2.3668588192},
    {{50, 2.5, 0}, {73, 25, -18}, 27.1492313007},
    {{50, 2.5, 0}, {61, -5, 29}, 22.8976924698},
    {{60.2574, -34.0099, 36.2677}, {60.4626, -34.1751, 39.4387}, 1.2644200136},
    {{22.7233, 20.0904, -46.694}, {23.0331, 14.973, -42.5619}, 2.0372582697},
    {{90.9257, -0.5406, -0.9208}, {88.6381, -0.8985, -0.7239}, 1.5381170054},
};

}  // namespace oracle
