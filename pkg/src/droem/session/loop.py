"""The evolution loop: scripted runs, live stepping, multi-observer harness.

One Simulator owns one evolution state; gaze is zero-order held between
events.  Events are recorded with their effective application time so a
replay from the record reproduces every digest bit-identically.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..dynamics import (EvolState, apply_screening, memory_step,
                        step_deterministic, step_stochastic)
from ..errors import ObserverCountError, StabilityError
from ..render import drag_mask, encode_frame, rasterize_state, Frame
from .config import AssembledSession, SessionConfig
from .events import GazeEvent, default_gaze, validate_stream
from .record import RunRecord, frame_digest, state_digest


class Simulator:
    """Steps the shared state under the gaze-steered angular field."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.assembled = AssembledSession(config)
        self.state = EvolState.initial(self.assembled.initial_phi(), config.seed,
                                       with_memory=config.memory is not None)
        self.gaze = default_gaze()
        self.record = RunRecord(config)
        self._mem_rate = float(config.memory["rate"]) if config.memory else 0.0
        self._mem_strength = float(config.memory.get("strength", 1.0)) if config.memory else 0.0

    # -- gaze ---------------------------------------------------------------

    def apply_gaze(self, ev: GazeEvent, effective_t: Optional[float] = None) -> None:
        t_eff = self.state.t if effective_t is None else effective_t
        applied = GazeEvent(t_eff, ev.u, ev.du, ev.xi)
        self.gaze = applied
        self.record.events.append(applied)

    # -- stepping -------------------------------------------------------------

    def _angular_of_t(self, schedules=None) -> Callable[[float], np.ndarray]:
        g = self.gaze
        asm = self.assembled
        return lambda t: asm.angular_matrix(t, g.u, g.du, g.xi, schedules)

    def step(self, extra_angular: Optional[Callable[[float], np.ndarray]] = None) -> None:
        A_of_t = self._angular_of_t() if extra_angular is None else extra_angular
        if self.config.memory is not None:
            self.state = memory_step(self.state, A_of_t, self._mem_strength,
                                     self._mem_rate, self.config.dt)
        elif self.config.mode == "stochastic":
            self.state = step_stochastic(self.state, A_of_t(self.state.t),
                                         self.assembled.noise_mats, self.config.dt)
        else:
            self.state = step_deterministic(self.state, A_of_t, self.config.dt)

    # -- output ----------------------------------------------------------------

    def screened_phi(self, observer: int = 0) -> np.ndarray:
        J = self.assembled.observer_screens[observer]
        return apply_screening(J, self.state.phi)

    def render_frame(self, observer: int = 0) -> Frame:
        psi = self.screened_phi(observer)
        base = rasterize_state(psi, self.assembled.lattice, t=self.state.t)
        tiled = Frame(base.width, base.height, len(self.config.fibers),
                      np.repeat(base.intensity, len(self.config.fibers), axis=0),
                      t=self.state.t)
        return drag_mask(tiled, self.gaze.u, self.config.fibers,
                         self.assembled.lattice, nearest=self.config.nearest_neighbor)

    def record_step(self, with_frame: bool) -> dict:
        row = {"step": self.state.step_index, "t": round(self.state.t, 12),
               "state_fnv": state_digest(self.state.phi)}
        if with_frame:
            row["frame_fnv"] = frame_digest(encode_frame(self.render_frame()))
        self.record.steps.append(row)
        return row

    def finalize_record(self, aborted: Optional[str] = None) -> RunRecord:
        phi = self.state.phi
        self.record.final_state = [[float(c.real), float(c.imag)] for c in phi]
        self.record.aborted = aborted
        return self.record


def run_scripted(config: SessionConfig, events: Sequence[GazeEvent],
                 frame_sink=None, max_steps: Optional[int] = None) -> RunRecord:
    """Run the full session from an event list; returns the RunRecord.

    Events are applied by timestamp with zero-order hold; frames happen every
    ``frame_every`` steps.  ``frame_sink(step, frame)`` receives rendered
    frames when provided.  ``max_steps`` overrides the configured duration
    (used by replay to match a record that ended early).
    """
    events = sorted(events, key=lambda e: e.t)
    validate_stream(events)
    sim = Simulator(config)
    n_steps = max_steps if max_steps is not None else max(1, round(config.duration / config.dt))
    pending = list(events)
    aborted = None
    try:
        for k in range(n_steps):
            due = None
            while pending and pending[0].t <= sim.state.t + 1e-12:
                due = pending.pop(0)
            if due is not None:
                # zero-order hold: only the last event before the step matters
                sim.apply_gaze(due)
            with_frame = (k % config.frame_every == 0)
            if with_frame and frame_sink is not None:
                frame_sink(k, sim.render_frame())
            sim.record_step(with_frame)
            sim.step()
    except StabilityError as e:
        aborted = str(e)
    return sim.finalize_record(aborted)


def multi_observer_step(sim: Simulator, observer_gazes: Sequence[GazeEvent]) -> dict:
    """One shared step under the summed per-observer angular fields, then
    per-observer screened frames and the correlation report."""
    if len(observer_gazes) != len(sim.assembled.observer_screens):
        raise ObserverCountError(
            f"{len(observer_gazes)} gaze streams for "
            f"{len(sim.assembled.observer_screens)} observers")
    asm = sim.assembled

    def A_total(t: float) -> np.ndarray:
        acc = np.zeros((asm.dim, asm.dim), dtype=complex)
        for g, scheds in zip(observer_gazes, asm.observer_schedules):
            acc += asm.angular_matrix(t, g.u, g.du, g.xi, scheds)
        return acc

    sim.step(extra_angular=A_total)
    frames = []
    for i, g in enumerate(observer_gazes):
        psi = sim.screened_phi(i)
        base = rasterize_state(psi, asm.lattice, t=sim.state.t)
        tiled = Frame(base.width, base.height, len(sim.config.fibers),
                      np.repeat(base.intensity, len(sim.config.fibers), axis=0),
                      t=sim.state.t)
        frames.append(drag_mask(tiled, g.u, sim.config.fibers, asm.lattice,
                                nearest=sim.config.nearest_neighbor))
    many = len(frames) >= 2
    return {"frames": frames,
            "correlations": frame_correlations(frames) if many else None,
            "collective": collective_diagnostic(frames) if many else None}


def frame_correlations(frames: Sequence[Frame]):
    """Pairwise Pearson correlations of flattened frames; None when a frame
    has zero variance (degenerate screening)."""
    if len(frames) < 2:
        raise ObserverCountError("correlation output needs >= 2 observers")
    vecs = [f.intensity.ravel().astype(float) for f in frames]
    n = len(vecs)
    out = [[1.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = vecs[i], vecs[j]
            sa, sb = a.std(), b.std()
            if sa == 0 or sb == 0:
                out[i][j] = None
            else:
                out[i][j] = float(np.corrcoef(a, b)[0, 1])
    return out

def collective_diagnostic(frames: Sequence[Frame]) -> float:
    """Share of total frame energy explained by the all-observer mean frame."""
    vecs = np.stack([f.intensity.ravel().astype(float) for f in frames])
    total = float(np.sum(vecs ** 2))
    if total == 0:
        return 0.0
    mean = vecs.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0:
        return 0.0
    proj = vecs @ (mean / norm)
    return float(np.sum(proj ** 2) / total)


def run_multi_observer(config: SessionConfig,
                       observer_events: Sequence[Sequence[GazeEvent]],
                       report_every: Optional[int] = None) -> dict:
    """Scripted multi-observer session; shared state, per-observer streams."""
    n_obs = len(config.observers)
    if len(observer_events) != n_obs:
        raise ObserverCountError(
            f"{len(observer_events)} event streams for {n_obs} observers")
    sim = Simulator(config)
    report_every = report_every or config.frame_every
    pendings = [sorted(evs, key=lambda e: e.t) for evs in observer_events]
    gazes = [default_gaze() for _ in range(n_obs)]
    n_steps = max(1, round(config.duration / config.dt))
    reports = []
    for k in range(n_steps):
        for i, pend in enumerate(pendings):
            while pend and pend[0].t <= sim.state.t + 1e-12:
                gazes[i] = pend.pop(0)
        res = multi_observer_step(sim, gazes)
        if k % report_every == 0 and n_obs >= 2:
            reports.append({"step": k, "t": sim.state.t,
                            "correlations": res["correlations"],
                            "collective": res["collective"]})
    return {"record": sim.finalize_record(), "reports": reports,
            "final_phi": sim.state.phi}
