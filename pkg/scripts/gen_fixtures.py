"""Generate cross-component fixtures for the viewer test suite.

The viewer must mirror the service-side pixel map, frame encoding, and
palette composition; these fixtures pin all three from the Python side.
"""

import json
import os

import numpy as np

from droem.render import Frame, compose_fibers, encode_frame, make_lattice

OUT = os.path.join(os.path.dirname(__file__), "..", "frontend", "test", "fixtures")


def pixel_map_fixture():
    lat = make_lattice(0.08, 0.01, 96, 64)
    pairs = []
    for (px, py) in [(0, 0), (48, 32), (95, 63), (12, 50), (70, 7)]:
        z = lat.pixel_to_complex(px, py)
        pairs.append({"px": px, "py": py, "re": z.real, "im": z.imag})
    with open(os.path.join(OUT, "pixel_map.json"), "w") as fh:
        json.dump({"width": 96, "height": 64, "pairs": pairs}, fh, indent=2)


def frame_fixture():
    rng = np.random.default_rng(123)
    intensity = rng.uniform(size=(2, 6, 5)).astype(np.float32)
    frame = Frame(5, 6, 2, intensity, t=0.75)
    msg = encode_frame(frame)
    flat = np.transpose(intensity, (1, 2, 0)).ravel()
    with open(os.path.join(OUT, "frame_msg.json"), "w") as fh:
        json.dump({"msg": msg, "interleaved": [float(x) for x in flat]}, fh, indent=2)


def compose_fixture():
    rng = np.random.default_rng(7)
    intensity = rng.uniform(size=(2, 3, 4)).astype(np.float32)
    palette = [[1.0, 0.25, 0.1], [0.05, 0.8, 0.45]]
    frame = Frame(4, 3, 2, intensity, t=0.0)
    rgb = compose_fibers(frame, palette)
    flat_in = np.transpose(intensity, (1, 2, 0)).ravel()
    with open(os.path.join(OUT, "compose.json"), "w") as fh:
        json.dump({"width": 4, "height": 3, "fibers": 2,
                   "interleaved": [float(x) for x in flat_in],
                   "palette": palette,
                   "rgb": [float(x) for x in rgb.ravel()]}, fh, indent=2)


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    pixel_map_fixture()
    frame_fixture()
    compose_fixture()
    print("fixtures written to", OUT)
