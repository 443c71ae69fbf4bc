"""Gaze events: the interactive control channel."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..errors import ParseError


@dataclass(frozen=True)
class GazeEvent:
    t: float
    u: complex
    du: complex
    xi: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {"type": "gaze", "t": self.t, "u": [self.u.real, self.u.imag],
                "du": [self.du.real, self.du.imag], "xi": list(self.xi)}

    @staticmethod
    def from_dict(d: dict) -> "GazeEvent":
        try:
            u = complex(float(d["u"][0]), float(d["u"][1]))
            du = complex(float(d["du"][0]), float(d["du"][1]))
            xi = tuple(float(x) for x in d.get("xi", []))
            return GazeEvent(float(d["t"]), u, du, xi)
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ParseError(f"malformed gaze event: {e}") from e


def default_gaze() -> GazeEvent:
    return GazeEvent(0.0, 0j, 0j, ())


def validate_stream(events: Sequence[GazeEvent]) -> list:
    """Strict checks raise ParseError; du-consistency issues come back as
    warning strings (|du| should track Delta u / Delta t within ~20%)."""
    warnings = []
    last_t = None
    last = None
    for k, ev in enumerate(events):
        if abs(ev.u) > 1.0 + 1e-9:
            raise ParseError(f"event {k}: |u| = {abs(ev.u):.4f} > 1")
        if last_t is not None and ev.t <= last_t:
            raise ParseError(f"event {k}: non-increasing timestamp {ev.t} <= {last_t}")
        if last is not None:
            dt = ev.t - last.t
            if dt > 0:
                fd = (ev.u - last.u) / dt
                scale = max(abs(fd), abs(ev.du), 1e-3)
                if abs(ev.du - fd) > 0.2 * scale and abs(fd) > 1e-3:
                    warnings.append(
                        f"event {k}: du deviates from finite difference by "
                        f"{abs(ev.du - fd) / scale:.0%}")
        last_t = ev.t
        last = ev
    return warnings


def load_event_file(path: str) -> list:
    """Newline-delimited JSON gaze events (the run-file event format)."""
    import json

    events = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{line_no}: {e}") from e
            if d.get("type") not in (None, "gaze"):
                continue
            events.append(GazeEvent.from_dict(d))
    validate_stream(events)
    return events
