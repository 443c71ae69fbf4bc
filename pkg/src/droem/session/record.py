"""Run records: digest computation, JSONL persistence, replay verification.

Digests are 64-bit FNV-1a over canonicalized bytes: the state digest hashes
the coefficient vector as little-endian f64 (re, im) pairs in degree order;
the frame digest hashes the f32le wire payload.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from ..errors import ParseError
from .config import SessionConfig
from .events import GazeEvent

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def state_digest(phi: np.ndarray) -> str:
    canonical = np.ascontiguousarray(np.asarray(phi, dtype="<c16"))
    return f"{fnv1a64(canonical.tobytes()):016x}"


def frame_digest(frame_msg: dict) -> str:
    return f"{fnv1a64(base64.b64decode(frame_msg['data'])):016x}"


@dataclass
class RunRecord:
    config: SessionConfig
    events: list = dc_field(default_factory=list)       # as applied (effective t)
    steps: list = dc_field(default_factory=list)        # {"step", "t", "state_fnv", ["frame_fnv"]}
    final_state: Optional[list] = None
    dropped_events: int = 0
    aborted: Optional[str] = None

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(json.dumps({"header": {"version": self.config.version,
                                            "config": self.config.to_dict()}}) + "\n")
            fh.write(json.dumps({"events": [e.to_dict() for e in self.events]}) + "\n")
            for row in self.steps:
                fh.write(json.dumps(row) + "\n")
            tail = {"final": {"state": self.final_state,
                              "dropped_events": self.dropped_events,
                              "aborted": self.aborted}}
            fh.write(json.dumps(tail) + "\n")

    @staticmethod
    def load(path: str) -> "RunRecord":
        try:
            with open(path) as fh:
                lines = [json.loads(line) for line in fh if line.strip()]
        except (OSError, ValueError) as e:
            raise ParseError(f"cannot read run record {path}: {e}") from e
        if not lines or "header" not in lines[0]:
            raise ParseError(f"{path}: missing header line")
        config = SessionConfig.from_dict(lines[0]["header"]["config"])
        rec = RunRecord(config)
        rest = lines[1:]
        if rest and "events" in rest[0]:
            rec.events = [GazeEvent.from_dict(d) for d in rest[0]["events"]]
            rest = rest[1:]
        for row in rest:
            if "final" in row:
                rec.final_state = row["final"].get("state")
                rec.dropped_events = int(row["final"].get("dropped_events", 0))
                rec.aborted = row["final"].get("aborted")
            else:
                rec.steps.append(row)
        return rec


def verify_record(path: str) -> dict:
    """Re-run header config + events; compare every digest bit-exactly.

    Returns {"ok": bool, "first_mismatch": step index or None, "detail": str}.
    """
    from .loop import run_scripted

    rec = RunRecord.load(path)
    replay = run_scripted(rec.config, rec.events, max_steps=len(rec.steps))
    n = min(len(rec.steps), len(replay.steps))
    for k in range(n):
        a, b = rec.steps[k], replay.steps[k]
        for key in ("state_fnv", "frame_fnv"):
            if a.get(key) != b.get(key):
                return {"ok": False, "first_mismatch": a.get("step", k),
                        "detail": f"{key} differs at step {a.get('step', k)}: "
                                  f"{a.get(key)} != {b.get(key)}"}
    if len(rec.steps) != len(replay.steps):
        return {"ok": False, "first_mismatch": n,
                "detail": f"step count differs: {len(rec.steps)} != {len(replay.steps)}"}
    if rec.final_state is not None and replay.final_state != rec.final_state:
        return {"ok": False, "first_mismatch": len(rec.steps),
                "detail": "final state differs"}
    return {"ok": True, "first_mismatch": None, "detail": "all digests match"}
