"""The display lattice, rasterization of the algebraic state, partial
dragging and masking, and fiber composition.

The pixel grid maps onto [-1, 1]^2 with pixel (W/2, H/2) at the origin;
evaluation happens inside the closed unit disk.  Intensity is |p(z)|
normalized to the frame maximum; the phase survives as an overcolor channel
(carried, serialized, never painted).
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, PaletteSizeError, RatioError, ShapeError, StabilityError


@dataclass(frozen=True)
class Lattice:
    delta_i: float
    delta_o: float
    width: int
    height: int

    def pixel_to_complex(self, px, py):
        """Pixel indices -> point of [-1,1]^2; (W/2, H/2) -> 0."""
        x = 2.0 * np.asarray(px) / self.width - 1.0
        y = 2.0 * np.asarray(py) / self.height - 1.0
        return x + 1j * y

    def complex_to_pixel(self, z):
        z = np.asarray(z, dtype=complex)
        return (z.real + 1.0) * self.width / 2.0, (z.imag + 1.0) * self.height / 2.0

    def grid(self) -> np.ndarray:
        px, py = np.meshgrid(np.arange(self.width), np.arange(self.height))
        return self.pixel_to_complex(px, py)

    def disk_mask(self) -> np.ndarray:
        return np.abs(self.grid()) <= 1.0


def make_lattice(delta_i: float, delta_o: float, width: int, height: int) -> Lattice:
    if delta_i <= 0 or delta_o <= 0:
        raise DomainError("lattice steps must be positive")
    if width < 2 or height < 2:
        raise DomainError("lattice needs at least 2x2 pixels")
    if delta_i < 8 * delta_o:
        raise RatioError(
            f"image step {delta_i} must be >= 8x observation step {delta_o}")
    return Lattice(float(delta_i), float(delta_o), int(width), int(height))


@dataclass
class Frame:
    width: int
    height: int
    fibers: int
    intensity: np.ndarray                 # (F, H, W) float32
    overcolor: Optional[np.ndarray] = None  # (C, H, W) float32, non-display
    t: float = 0.0

    def __post_init__(self):
        self.intensity = np.asarray(self.intensity, dtype=np.float32)
        if self.intensity.shape != (self.fibers, self.height, self.width):
            raise ShapeError(f"intensity shape {self.intensity.shape} != "
                             f"({self.fibers},{self.height},{self.width})")
        if not np.all(np.isfinite(self.intensity)):
            raise StabilityError("non-finite frame intensities")


@dataclass(frozen=True)
class MaskSpec:
    kind: str = "gaussian"          # gaussian | raised-cosine | table
    width: float = 0.5
    table: Optional[tuple] = None   # samples of f on [0, width], f(0) = 1

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (r / self.width) ** 2)
        if self.kind == "raised-cosine":
            out = 0.5 * (1.0 + np.cos(np.pi * np.minimum(r / self.width, 1.0)))
            return np.where(r <= self.width, out, 0.0)
        if self.kind == "table":
            tab = np.asarray(self.table, dtype=float)
            if tab[0] != 1.0:
                raise DomainError("mask table must start at f(0) = 1")
            xs = np.linspace(0.0, self.width, len(tab))
            return np.interp(r, xs, tab, right=0.0)
        raise DomainError(f"unknown mask kind {self.kind!r}")


@dataclass(frozen=True)
class FiberSpec:
    gamma: float = 0.0
    mask: MaskSpec = dc_field(default_factory=MaskSpec)

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError(f"dragging coefficient must be in [0,1], got {self.gamma}")


def rasterize_state(phi, lattice: Lattice, with_phase: bool = False,
                    t: float = 0.0) -> Frame:
    """Evaluate p(z) = sum c_n z^n on the lattice; intensity |p| max-normalized.

    Points outside the unit disk are zero; the zero frame maps to zero.
    """
    coeffs = np.asarray(phi, dtype=complex)
    z = lattice.grid()
    p = np.zeros_like(z)
    for c in coeffs[::-1]:
        p = p * z + c
    inside = np.abs(z) <= 1.0
    mag = np.where(inside, np.abs(p), 0.0)
    peak = float(mag.max())
    if peak > 0:
        mag = mag / peak
    frame = Frame(lattice.width, lattice.height, 1,
                  mag[np.newaxis].astype(np.float32), t=t)
    if with_phase:
        ph = np.where(inside, np.angle(p), 0.0).astype(np.float32)
        frame.overcolor = ph[np.newaxis]
    return frame


def _bilinear_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample img[y, x] at float coords with zero padding outside."""
    h, w = img.shape
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    fx = xs - x0
    fy = ys - y0
    out = np.zeros_like(xs, dtype=float)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            wgt = (fx if dx else 1 - fx) * (fy if dy else 1 - fy)
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            vals = np.zeros_like(out)
            vals[valid] = img[yi[valid], xi[valid]]
            out += wgt * vals
    return out


def _nearest_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = img.shape
    xi = np.rint(xs).astype(int)
    yi = np.rint(ys).astype(int)
    valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    out = np.zeros_like(xs, dtype=float)
    out[valid] = img[yi[valid], xi[valid]]
    return out


def drag_mask(frame0: Frame, u: complex, fibers: Sequence[FiberSpec],
              lattice: Lattice, nearest: bool = False) -> Frame:
    """Per fiber: out_i(x) = f_i(|x - u|) * in_i(x - gamma_i u)."""
    if len(fibers) != frame0.fibers:
        raise ShapeError(f"{len(fibers)} fiber specs for a {frame0.fibers}-fiber frame")
    u = complex(u)
    z = lattice.grid()
    dist = np.abs(z - u)
    out = np.empty_like(frame0.intensity)
    sample = _nearest_sample if nearest else _bilinear_sample
    for i, spec in enumerate(fibers):
        src = z - spec.gamma * u
        sx, sy = lattice.complex_to_pixel(src)
        dragged = sample(frame0.intensity[i].astype(float), sx, sy)
        out[i] = (spec.mask(dist) * dragged).astype(np.float32)
    return Frame(frame0.width, frame0.height, frame0.fibers, out,
                 overcolor=frame0.overcolor, t=frame0.t)


def compose_fibers(frame: Frame, palette: Sequence[Sequence[float]]) -> np.ndarray:
    """RGB image (H, W, 3) = clipped weighted sum of fiber intensities.

    Overcolor channels are not painted; they ride along in the frame object.
    """
    if len(palette) != frame.fibers:
        raise PaletteSizeError(f"palette size {len(palette)} != fibers {frame.fibers}")
    rgb = np.zeros((frame.height, frame.width, 3), dtype=np.float32)
    for i, color in enumerate(palette):
        if len(color) != 3:
            raise PaletteSizeError("palette entries must be RGB triples")
        rgb += frame.intensity[i][..., np.newaxis] * np.asarray(color, dtype=np.float32)
    return np.clip(rgb, 0.0, 1.0)


# -- wire format --------------------------------------------------------------


def encode_frame(frame: Frame) -> dict:
    """{t, w, h, fibers, encoding, data}: row-major, fiber-interleaved f32le."""
    interleaved = np.ascontiguousarray(
        np.transpose(frame.intensity, (1, 2, 0)).astype("<f4"))
    payload = base64.b64encode(interleaved.tobytes()).decode("ascii")
    msg = {"type": "frame", "t": frame.t, "w": frame.width, "h": frame.height,
           "fibers": frame.fibers, "encoding": "f32le", "data": payload}
    if frame.overcolor is not None:
        oc = np.ascontiguousarray(frame.overcolor.astype("<f4"))
        msg["overcolor"] = base64.b64encode(oc.tobytes()).decode("ascii")
        msg["overcolor_channels"] = int(frame.overcolor.shape[0])
    return msg


def decode_frame(msg: dict) -> Frame:
    if msg.get("encoding") != "f32le":
        raise DomainError(f"unsupported frame encoding {msg.get('encoding')!r}")
    w, h, f = int(msg["w"]), int(msg["h"]), int(msg["fibers"])
    raw = np.frombuffer(base64.b64decode(msg["data"]), dtype="<f4")
    if raw.size != w * h * f:
        raise ShapeError(f"frame payload size {raw.size} != {w}x{h}x{f}")
    intensity = np.transpose(raw.reshape(h, w, f), (2, 0, 1)).copy()
    frame = Frame(w, h, f, intensity, t=float(msg.get("t", 0.0)))
    if "overcolor" in msg:
        c = int(msg["overcolor_channels"])
        oc = np.frombuffer(base64.b64decode(msg["overcolor"]), dtype="<f4")
        frame.overcolor = oc.reshape(c, h, w).copy()
    return frame
