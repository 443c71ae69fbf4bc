"""Time evolution of the image state: deterministic 4th-order integration,
Euler-Maruyama stochastic stepping (Ito convention), screening, and the
exponential-kernel memory embedding.

Noise increments come from counter-based Philox streams keyed by
(seed, channel, step), so every trajectory is bit-reproducible regardless
of draw order elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ShapeError, StabilityError


@dataclass(frozen=True)
class EvolState:
    t: float
    phi: np.ndarray
    memory_aux: Optional[np.ndarray]
    seed: int
    step_index: int

    @staticmethod
    def initial(phi, seed: int = 0, with_memory: bool = False) -> "EvolState":
        phi = np.asarray(phi, dtype=complex)
        mem = np.zeros_like(phi) if with_memory else None
        return EvolState(0.0, phi, mem, int(seed), 0)


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr.view(float))):
        raise StabilityError(f"non-finite entries in {what}")


def wiener_increments(seed: int, step: int, channels: int, dt: float) -> np.ndarray:
    """sqrt(dt) * xi per channel; xi ~ N(0,1) from Philox(seed, channel, step)."""
    out = np.empty(channels)
    for ch in range(channels):
        bitgen = np.random.Philox(counter=[0, 0, step, ch],
                                  key=[seed & 0xFFFFFFFFFFFFFFFF, 0])
        out[ch] = np.random.Generator(bitgen).standard_normal()
    return out * np.sqrt(dt)


def step_deterministic(state: EvolState, A_of_t: Callable[[float], np.ndarray],
                       dt: float, nonlinearity: Optional[Callable] = None) -> EvolState:
    """Classical 4-stage Runge-Kutta step of phi' = A(t) phi.

    ``nonlinearity(phi) -> scalar`` optionally rescales the generator
    state-dependently (a weak-nonlinearity hook; off by default)."""
    t, phi = state.t, state.phi

    def f(tt, y):
        rate = A_of_t(tt) @ y
        return rate if nonlinearity is None else nonlinearity(y) * rate

    k1 = f(t, phi)
    k2 = f(t + dt / 2, phi + dt / 2 * k1)
    k3 = f(t + dt / 2, phi + dt / 2 * k2)
    k4 = f(t + dt, phi + dt * k3)
    new = phi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    _check_finite(new, f"state after deterministic step at t={t}")
    return replace(state, t=t + dt, phi=new, step_index=state.step_index + 1)


def step_stochastic(state: EvolState, A: np.ndarray, B_list: Sequence[np.ndarray],
                    dt: float) -> EvolState:
    """Euler-Maruyama step of dphi = A phi dt + sum_a B_a phi dw_a (Ito)."""
    t, phi = state.t, state.phi
    new = phi + dt * (A @ phi)
    if B_list:
        dW = wiener_increments(state.seed, state.step_index, len(B_list), dt)
        for Ba, dw in zip(B_list, dW):
            new = new + dw * (Ba @ phi)
    _check_finite(new, f"state after stochastic step at t={t}")
    return replace(state, t=t + dt, phi=new, step_index=state.step_index + 1)


def memory_step(state: EvolState, A_of_t: Callable[[float], np.ndarray],
                kappa: float, lam: float, dt: float) -> EvolState:
    """RK4 step of the Markovian embedding

        phi' = kappa * M,      M' = -lam * M + A(t) phi

    (exponential-kernel memory; lam -> inf with kappa = lam recovers the
    memoryless dynamics up to O(1/lam))."""
    if state.memory_aux is None:
        raise ShapeError("memory_step needs a state with a memory component")
    if lam <= 0:
        raise ShapeError("memory rate must be positive")
    t = state.t
    y = np.concatenate([state.phi, state.memory_aux])
    n = len(state.phi)

    def f(tt, yy):
        phi, mem = yy[:n], yy[n:]
        return np.concatenate([kappa * mem, -lam * mem + A_of_t(tt) @ phi])

    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    ynew = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    _check_finite(ynew, f"augmented state after memory step at t={t}")
    return replace(state, t=t + dt, phi=ynew[:n], memory_aux=ynew[n:],
                   step_index=state.step_index + 1)


def band_projector(dim: int, lo: int, hi: int) -> np.ndarray:
    """Coordinate projector keeping degrees in [lo, hi]; idempotent."""
    d = np.zeros(dim)
    d[max(lo, 0):min(hi, dim - 1) + 1] = 1.0
    return np.diag(d).astype(complex)


def apply_screening(J: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """psi = J phi."""
    J = np.asarray(J, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    if J.shape != (len(phi), len(phi)):
        raise ShapeError(f"screening shape {J.shape} does not match state {len(phi)}")
    return J @ phi
