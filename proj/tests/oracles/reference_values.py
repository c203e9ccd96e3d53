"""Regenerates the frozen reference constants used by the C++ tests.

Uses scikit-image as the independent colorimetry reference. Run:
    python3 tests/oracles/reference_values.py
and paste the output into tests/oracles/frozen_reference.hpp.
"""
import numpy as np
from skimage import color

HEX = ["FF0000", "00FF00", "0000FF", "808080", "4B0082", "FFA500", "123456", "C0FFEE"]


def hex_to_rgb01(h):
    return np.array([int(h[i:i + 2], 16) / 255.0 for i in (0, 2, 4)])


print("// sRGB (D65, 2 deg) -> CIELAB from skimage.color.rgb2lab")
for h in HEX:
    lab = color.rgb2lab(hex_to_rgb01(h).reshape(1, 1, 3)).reshape(3)
    print(f'{{"{h}", {{{lab[0]:.10f}, {lab[1]:.10f}, {lab[2]:.10f}}}}},')

PAIRS = [
    ((50, 2.6772, -79.7751), (50, 0, -82.7485)),
    ((50, 3.1571, -77.2803), (50, 0, -82.7485)),
    ((50, 2.8361, -74.0200), (50, 0, -82.7485)),
    ((50, -1.3802, -84.2814), (50, 0, -82.7485)),
    ((50, 0, 0), (50, -1, 2)),
    ((50, 2.5, 0), (73, 25, -18)),
    ((50, 2.5, 0), (61, -5, 29)),
    ((60.2574, -34.0099, 36.2677), (60.4626, -34.1751, 39.4387)),
    ((22.7233, 20.0904, -46.694), (23.0331, 14.973, -42.5619)),
    ((90.9257, -0.5406, -0.9208), (88.6381, -0.8985, -0.7239)),
]
print("// CIEDE2000 from skimage.color.deltaE_ciede2000")
for a, b in PAIRS:
    d = color.deltaE_ciede2000(np.array(a, float), np.array(b, float))
    print(f"{{{{{a[0]}, {a[1]}, {a[2]}}}, {{{b[0]}, {b[1]}, {b[2]}}}, {float(d):.10f}}},")
