"""Session configuration and assembly of the runtime operators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from ..dynamics import band_projector
from ..errors import DomainError, ParseError
from ..fields import canonical_primary_field
from ..render import FiberSpec, MaskSpec, make_lattice
from ..scalars import parse_rational
from ..verma import EXACT, make_module


@dataclass(frozen=True)
class Schedule:
    """M(t, xi) = base + amp cos(2 pi f t + phase) + xi_gain * xi[xi_index]."""

    base: float = 0.0
    amp: float = 0.0
    freq_hz: float = 0.0
    phase: float = 0.0
    xi_index: Optional[int] = None
    xi_gain: float = 0.0

    def __call__(self, t: float, xi) -> float:
        v = self.base
        if self.amp:
            v += self.amp * math.cos(2 * math.pi * self.freq_hz * t + self.phase)
        if self.xi_index is not None and self.xi_gain and self.xi_index < len(xi):
            v += self.xi_gain * xi[self.xi_index]
        return v

    def to_dict(self) -> dict:
        return {"base": self.base, "amp": self.amp, "freq_hz": self.freq_hz,
                "phase": self.phase, "xi_index": self.xi_index,
                "xi_gain": self.xi_gain}

    @staticmethod
    def from_dict(d: dict) -> "Schedule":
        return Schedule(float(d.get("base", 0.0)), float(d.get("amp", 0.0)),
                        float(d.get("freq_hz", 0.0)), float(d.get("phase", 0.0)),
                        d.get("xi_index"), float(d.get("xi_gain", 0.0)))


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "identity"   # identity | degree
    amplitude: float = 0.0

    def matrix(self, dim: int) -> np.ndarray:
        if self.amplitude < 0:
            raise DomainError("noise amplitude must be >= 0")
        if self.kind == "identity":
            return self.amplitude * np.eye(dim, dtype=complex)
        if self.kind == "degree":
            return self.amplitude * np.diag(np.arange(dim) / max(dim - 1, 1)).astype(complex)
        raise DomainError(f"unknown noise kind {self.kind!r}")


@dataclass(frozen=True)
class ScreeningSpec:
    kind: str = "identity"   # identity | band | zero
    lo: int = 0
    hi: int = 0

    def matrix(self, dim: int) -> np.ndarray:
        if self.kind == "identity":
            return np.eye(dim, dtype=complex)
        if self.kind == "band":
            return band_projector(dim, self.lo, self.hi)
        if self.kind == "zero":
            return np.zeros((dim, dim), dtype=complex)
        raise DomainError(f"unknown screening kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}

    @staticmethod
    def from_dict(d: dict) -> "ScreeningSpec":
        return ScreeningSpec(d.get("kind", "identity"), int(d.get("lo", 0)),
                             int(d.get("hi", 0)))


@dataclass(frozen=True)
class ObserverSpec:
    screening: ScreeningSpec = dc_field(default_factory=ScreeningSpec)
    schedules: Optional[tuple] = None   # None -> use the session schedules


@dataclass
class SessionConfig:
    h: str = "3/4"
    D: int = 12
    N: int = 4
    angular_order: int = 2
    mode: str = "deterministic"            # deterministic | stochastic
    schedules: tuple = ()
    noise: tuple = ()
    field_neg_depth: int = 3
    screening: ScreeningSpec = dc_field(default_factory=ScreeningSpec)
    memory: Optional[dict] = None          # {"rate": lam, "strength": kappa}
    dt: float = 0.01
    frame_every: int = 4
    duration: float = 2.0
    seed: int = 12345
    lattice: dict = dc_field(default_factory=lambda: {
        "delta_i": 0.08, "delta_o": 0.01, "width": 96, "height": 96})
    fibers: tuple = (FiberSpec(0.3, MaskSpec("gaussian", 0.5)),)
    palette: tuple = ((1.0, 1.0, 1.0),)
    observers: tuple = ()
    initial: Optional[tuple] = None
    nearest_neighbor: bool = False
    version: int = 1

    def __post_init__(self):
        if not self.schedules:
            self.schedules = tuple(Schedule(base=0.05) for _ in range(self.angular_order))
        if len(self.schedules) != self.angular_order:
            raise DomainError("one coefficient schedule per angular order required")
        if not 1 <= self.angular_order <= 3:
            raise DomainError("angular order must be 1, 2 or 3")
        if not 0 < self.dt <= 0.1:
            raise DomainError(f"dt must lie in (0, 0.1], got {self.dt}")
        if self.frame_every < 1:
            raise DomainError("frame cadence must be >= 1 step")
        if self.mode not in ("deterministic", "stochastic"):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.memory is not None and float(self.memory.get("rate", 0)) <= 0:
            raise DomainError("memory rate must be positive when memory is enabled")
        if len(self.palette) != len(self.fibers):
            raise DomainError("palette must assign one color per fiber")
        if not self.observers:
            self.observers = (ObserverSpec(self.screening),)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": self.version, "h": self.h, "D": self.D, "N": self.N,
            "angular_order": self.angular_order, "mode": self.mode,
            "schedules": [s.to_dict() for s in self.schedules],
            "noise": [{"kind": n.kind, "amplitude": n.amplitude} for n in self.noise],
            "field_neg_depth": self.field_neg_depth,
            "screening": self.screening.to_dict(),
            "memory": self.memory,
            "dt": self.dt, "frame_every": self.frame_every,
            "duration": self.duration, "seed": self.seed,
            "lattice": dict(self.lattice),
            "fibers": [{"gamma": f.gamma,
                        "mask": {"kind": f.mask.kind, "width": f.mask.width,
                                 "table": list(f.mask.table) if f.mask.table else None}}
                       for f in self.fibers],
            "palette": [list(c) for c in self.palette],
            "observers": [{"screening": o.screening.to_dict(),
                           "schedules": ([s.to_dict() for s in o.schedules]
                                         if o.schedules is not None else None)}
                          for o in self.observers],
            "initial": ([[c[0], c[1]] for c in self.initial]
                        if self.initial is not None else None),
            "nearest_neighbor": self.nearest_neighbor,
        }

    @staticmethod
    def from_dict(d: dict) -> "SessionConfig":
        try:
            fibers = tuple(
                FiberSpec(float(f.get("gamma", 0.0)),
                          MaskSpec(f.get("mask", {}).get("kind", "gaussian"),
                                   float(f.get("mask", {}).get("width", 0.5)),
                                   tuple(f["mask"]["table"]) if f.get("mask", {}).get("table")
                                   else None))
                for f in d.get("fibers", [{"gamma": 0.3, "mask": {"kind": "gaussian",
                                                                  "width": 0.5}}]))
            observers = tuple(
                ObserverSpec(ScreeningSpec.from_dict(o.get("screening", {})),
                             tuple(Schedule.from_dict(s) for s in o["schedules"])
                             if o.get("schedules") is not None else None)
                for o in d.get("observers", []))
            return SessionConfig(
                h=str(d.get("h", "3/4")), D=int(d.get("D", 12)), N=int(d.get("N", 4)),
                angular_order=int(d.get("angular_order", 2)),
                mode=d.get("mode", "deterministic"),
                schedules=tuple(Schedule.from_dict(s) for s in d.get("schedules", [])),
                noise=tuple(NoiseSpec(n.get("kind", "identity"),
                                      float(n.get("amplitude", 0.0)))
                            for n in d.get("noise", [])),
                field_neg_depth=int(d.get("field_neg_depth", 3)),
                screening=ScreeningSpec.from_dict(d.get("screening", {})),
                memory=d.get("memory"),
                dt=float(d.get("dt", 0.01)),
                frame_every=int(d.get("frame_every", 4)),
                duration=float(d.get("duration", 2.0)),
                seed=int(d.get("seed", 12345)),
                lattice=dict(d.get("lattice", {"delta_i": 0.08, "delta_o": 0.01,
                                               "width": 96, "height": 96})),
                fibers=fibers,
                palette=tuple(tuple(c) for c in d.get("palette", [[1.0, 1.0, 1.0]])),
                observers=observers,
                initial=tuple((float(c[0]), float(c[1])) for c in d["initial"])
                if d.get("initial") else None,
                nearest_neighbor=bool(d.get("nearest_neighbor", False)),
                version=int(d.get("version", 1)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad session config: {e}") from e

    @staticmethod
    def load(path: str) -> "SessionConfig":
        import json
        try:
            with open(path) as fh:
                return SessionConfig.from_dict(json.load(fh))
        except (OSError, ValueError) as e:
            raise ParseError(f"cannot load config {path}: {e}") from e


class AssembledSession:
    """Runtime operators built once from a config."""

    def __init__(self, config: SessionConfig):
        self.config = config
        hq = parse_rational(config.h)
        self.module = make_module(hq, config.D, EXACT)
        self.dim = config.D + 1
        self.fields = []
        for spin in range(1, config.angular_order + 1):
            f, _ = canonical_primary_field(self.module, spin)
            lo = 2 * spin - config.field_neg_depth
            hi = 2 * spin + config.N    # cut the regular part at u-degree N
            self.fields.append(f.restrict_modes(lo, hi).to_double())
        self.noise_mats = [n.matrix(self.dim) for n in config.noise
                           if n.amplitude > 0]
        self.lattice = make_lattice(**config.lattice)
        self.observer_screens = [o.screening.matrix(self.dim)
                                 for o in config.observers]
        self.observer_schedules = [o.schedules if o.schedules is not None
                                   else config.schedules
                                   for o in config.observers]

    def initial_phi(self) -> np.ndarray:
        if self.config.initial is not None:
            return np.array([complex(re, im) for (re, im) in self.config.initial])
        return np.array([1.0 / (1 + n) for n in range(self.dim)], dtype=complex)

    def angular_matrix(self, t: float, u: complex, du: complex, xi,
                       schedules=None) -> np.ndarray:
        """Sum_i M_i(t, xi) du^i V_i(u) as a plain complex matrix."""
        scheds = schedules if schedules is not None else self.config.schedules
        u = complex(u)
        if abs(u) < 0.05:
            u = 0.05 * (u / abs(u)) if u != 0 else 0.05 + 0j
        elif abs(u) > 0.95:
            u = 0.95 * u / abs(u)
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for i, (sched, field) in enumerate(zip(scheds, self.fields), start=1):
            Mi = sched(t, xi)
            if Mi == 0:
                continue
            acc += Mi * (complex(du) ** i) * np.asarray(field.evaluate(u).mat)
        return acc
