"""Infinite-dimensional dynamical symmetries on the truncated module.

Generators come in two families:

    vector-field kind: rho(L_n) = T(L_n) for n >= -1 (the sl2 + extension
        action), and the contravariant adjoint T(L_{-n})^* for n <= -2;
    abelian-current kind: rho(J_n) = d^n for n >= 0 (the polynomial algebra
        acts with z mapped to d/dz), adjoints for n < 0.

The bracket defect D(m, n) = [rho(L_m), rho(L_n)] - (m - n) rho(L_{m+n})
vanishes exactly on the honest sl2 core and is measured elsewhere.  Two
finite-truncation shadows of the structure theory are instrumented:

  * Hilbert-Schmidt shadow: the Gram-weighted defect norm on a fixed low
    degree window stabilizes as D grows (the defect's head is a fixed
    finite-rank operator).
  * Asymptotic shadow: on the complementary high-degree window (inside the
    annotated validity range) the defect norm scales like hbar = h - 1/2;
    the scan fits the exponent on that window.  The low window carries an
    hbar-independent finite-rank part, so the full-matrix norm does not
    scale; both numbers are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (DomainError, InsufficientDataError, UnitarizabilityError)
from .scalars import parse_rational
from .verma import (EXACT, GramForm, LinOp, TruncatedVermaModule, adjoint,
                    commutator, derivative_power, make_module, shapovalov_form,
                    vector_field_generator)

VECTOR = "vector-field"
CURRENT = "abelian-current"


@dataclass(frozen=True)
class ExtendedGenerator:
    index: int
    kind: str
    op: LinOp
    construction: str  # "T" or "T-star"


def _gram(mod: TruncatedVermaModule) -> GramForm:
    h = mod.weight
    if not h > 0:
        raise UnitarizabilityError(
            f"adjoint construction needs unitarizable h > 0, got {h}")
    return shapovalov_form(mod)


def extended_generator(mod: TruncatedVermaModule, n: int, kind: str = VECTOR,
                       gram: Optional[GramForm] = None) -> ExtendedGenerator:
    if abs(n) > mod.D:
        raise DomainError(f"|index| must be <= D = {mod.D}, got {n}")
    if kind == VECTOR:
        if n >= -1:
            return ExtendedGenerator(n, kind, vector_field_generator(mod, n), "T")
        g = gram or _gram(mod)
        return ExtendedGenerator(n, kind, adjoint(vector_field_generator(mod, -n), g),
                                 "T-star")
    if kind == CURRENT:
        if n >= 0:
            return ExtendedGenerator(n, kind, derivative_power(mod, n), "T")
        g = gram or _gram(mod)
        return ExtendedGenerator(n, kind, adjoint(derivative_power(mod, -n), g),
                                 "T-star")
    raise DomainError(f"unknown generator kind {kind!r}")


@dataclass
class DefectReport:
    m: int
    n: int
    kind: str
    h: str
    D: int
    hbar: float
    tail_norms: list          # (degree, gram_weighted, raw)
    convergence_indicator: float
    valid_window: int
    defect: LinOp

    def window_norm(self, lo: int, hi: int, gram: GramForm) -> float:
        hi = min(hi, self.valid_window)
        if hi < lo:
            return 0.0
        return float(self.defect.frobenius2((lo, hi), gram)) ** 0.5


def expected_bracket(mod, m: int, n: int, kind: str, gram: GramForm) -> LinOp:
    if kind == VECTOR:
        if m + n == 0:
            return vector_field_generator(mod, 0).scale(Fraction(m - n))
        if abs(m + n) > mod.D:
            return LinOp.zero(mod)
        return extended_generator(mod, m + n, kind, gram).op.scale(Fraction(m - n))
    return LinOp.zero(mod)  # abelian


def defect(mod: TruncatedVermaModule, m: int, n: int, kind: str = VECTOR,
           gram: Optional[GramForm] = None, d0: int = 0) -> DefectReport:
    """Bracket defect with nested-window norms over degrees <= d, d = d0..D.

    Norms are restricted to the commutator's annotated validity window so
    truncation-boundary columns never contaminate them.
    """
    g = gram or _gram(mod)
    A = extended_generator(mod, m, kind, g).op
    B = extended_generator(mod, n, kind, g).op
    bracket = commutator(A, B)
    dif = bracket - expected_bracket(mod, m, n, kind, g)
    w = dif.exact_below
    tails = []
    for d in range(d0, w + 1):
        tails.append((d,
                      float(dif.frobenius2((0, d), g)) ** 0.5,
                      float(dif.frobenius2((0, d))) ** 0.5))
    full = tails[-1][1] if tails else 0.0
    # convergence indicator: (norm(full) - norm(ceil(3D/4))) / norm(full)
    d34 = min(math.ceil(3 * mod.D / 4), w)
    conv = 0.0
    if full > 0 and tails and d34 >= d0:
        conv = (full - tails[d34 - d0][1]) / full
    return DefectReport(m, n, kind, str(mod.weight), mod.D,
                        float(mod.weight) - 0.5, tails, conv, w, dif)


@dataclass
class ScanRow:
    pair: tuple
    hbars: list
    norms: list
    exponent: Optional[float]
    fit_residual: Optional[float]
    exact: bool


def asymptotic_scan(h_values: Sequence, pairs: Sequence[tuple], D: int = 32,
                    kind: str = VECTOR, fit_window: Optional[tuple] = None) -> list:
    """Fit ||defect|| ~ C hbar^p over an h grid approaching 1/2.

    The norm is Gram-weighted and restricted to ``fit_window`` (default
    [13, valid end]: the complement of the stabilization head, which carries
    the hbar-independent finite-rank part).
    """
    hqs = [parse_rational(h) for h in h_values]
    if len(hqs) < 3:
        raise InsufficientDataError("need at least 3 grid points for a fit")
    for hq in hqs:
        if not hq > Fraction(1, 2):
            raise DomainError(f"grid requires h > 1/2, got {hq}")
    rows = []
    for (m, n) in pairs:
        hbars, norms = [], []
        for hq in hqs:
            mod = make_module(hq, D, EXACT)
            g = shapovalov_form(mod)
            rep = defect(mod, m, n, kind, g)
            lo, hi = fit_window if fit_window is not None else (13, rep.valid_window)
            hbars.append(float(hq - Fraction(1, 2)))
            norms.append(rep.window_norm(lo, hi, g))
        if all(v == 0.0 for v in norms):
            rows.append(ScanRow((m, n), hbars, norms, None, None, True))
            continue
        lx = np.log(hbars)
        ly = np.log(norms)
        slope, intercept = np.polyfit(lx, ly, 1)
        resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
        rows.append(ScanRow((m, n), hbars, norms, float(slope), resid, False))
    return rows


# -- exponentiation ----------------------------------------------------------


def exponentiate(X: LinOp, t: float, gram: Optional[GramForm] = None) -> LinOp:
    """exp(t X) by scaling-and-squaring, computed in the Gram-orthonormal
    basis for numerical sanity and conjugated back."""
    mod = X.module
    Xd = X.to_double()
    mat = np.asarray(Xd.mat, dtype=complex)
    if gram is not None:
        s = np.sqrt(np.asarray([float(v) for v in gram.values]))
        E = sla.expm(t * (s[:, None] * mat / s[None, :]))
        out = E / s[:, None] * s[None, :]
    else:
        out = sla.expm(t * mat)
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"matrix exponential overflowed at t = {t}")
    return LinOp(mod.to_double(), out, mod.dim, -1)


def group_law_residual(X: LinOp, t: float, s: float,
                       gram: Optional[GramForm] = None) -> float:
    """Relative Frobenius residual of exp(tX) exp(sX) = exp((t+s)X),
    measured in the Gram-orthonormal basis."""
    mat = np.asarray(X.to_double().mat, dtype=complex)
    if gram is not None:
        sq = np.sqrt(np.asarray([float(v) for v in gram.values]))
        mat = sq[:, None] * mat / sq[None, :]
    Et = sla.expm(t * mat)
    Es = sla.expm(s * mat)
    Ets = sla.expm((t + s) * mat)
    if not (np.all(np.isfinite(Et)) and np.all(np.isfinite(Es)) and np.all(np.isfinite(Ets))):
        raise OverflowError(f"matrix exponential overflowed at t = {t}, s = {s}")
    return float(np.linalg.norm(Et @ Es - Ets) / np.linalg.norm(Ets))


def defect_grid_report(grid: dict) -> dict:
    """Defect-grid JSON payload for the CLI: pairs x h x D."""
    out = []
    for h in grid.get("h", ["1"]):
        for D in grid.get("D", [16]):
            mod = make_module(parse_rational(h), int(D), EXACT)
            g = shapovalov_form(mod)
            for pair in grid.get("pairs", [[2, -2]]):
                m, n = int(pair[0]), int(pair[1])
                rep = defect(mod, m, n, grid.get("kind", VECTOR), g)
                out.append({
                    "m": m, "n": n, "kind": rep.kind, "h": rep.h, "D": rep.D,
                    "hbar": rep.hbar,
                    "tail_norms": [[d, gw, raw] for (d, gw, raw) in rep.tail_norms],
                    "convergence_indicator": rep.convergence_indicator,
                    "valid_window": rep.valid_window,
                })
    return {"defect_grid": out}
