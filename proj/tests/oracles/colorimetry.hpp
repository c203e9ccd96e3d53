#pragma once

// Independent sRGB -> CIELAB: the RGB -> XYZ matrix is rebuilt from the
// primaries' chromaticities and the tabulated D65 white instead of using a
// published matrix.

#include <array>
#include <cmath>

namespace oracle {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

inline Mat3 inverse(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 r{};
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return r;
}

inline Vec3 xy_to_xyz(double x, double y) { return {x / y, 1.0, (1.0 - x - y) / y}; }

inline Mat3 srgb_to_xyz_matrix() {
  const Vec3 r = xy_to_xyz(0.64, 0.33);
  const Vec3 g = xy_to_xyz(0.30, 0.60);
  const Vec3 b = xy_to_xyz(0.15, 0.06);
  // Tabulated CIE D65 tristimulus values (Y = 1).
  const Vec3 w{0.95047, 1.0, 1.08883};
  const Mat3 p{{{r[0], g[0], b[0]}, {r[1], g[1], b[1]}, {r[2], g[2], b[2]}}};
  const Mat3 pi = inverse(p);
  Vec3 s{};
  for (int i = 0; i < 3; ++i) s[i] = pi[i][0] * w[0] + pi[i][1] * w[1] + pi[i][2] * w[2];
  Mat3 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = p[i][j] * s[j];
  return m;
}

inline double decode(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

inline double lab_f(double t) {
  const double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
}

inline Vec3 srgb8_to_lab(int r8, int g8, int b8) {
  static const Mat3 m = srgb_to_xyz_matrix();
  const Vec3 lin{decode(r8 / 255.0), decode(g8 / 255.0), decode(b8 / 255.0)};
  Vec3 xyz{}, white{};
  for (int i = 0; i < 3; ++i) {
    xyz[i] = m[i][0] * lin[0] + m[i][1] * lin[1] + m[i][2] * lin[2];
    white[i] = m[i][0] + m[i][1] + m[i][2];
  }
  const double fx = lab_f(xyz[0] / white[0]);
  const double fy = lab_f(xyz[1] / white[1]);
  const double fz = lab_f(xyz[2] / white[2]);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace oracle
