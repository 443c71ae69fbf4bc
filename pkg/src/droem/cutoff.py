"""Cutting off the current algebra: interpolating polynomial, cut-off
currents, the solved cut-off dilatation, and the nonlinear-sl2 probe.

The cut-off current components are

    J_k^cut  = d^k                      (k > 0)
    J_-k^cut = z^k (Delta_+^k P)(z d)   (k > 0, Delta_+ f(x) = f(x+1) - f(x))

with P the degree-N interpolant of 1/(2h+i) on i = 0..N.  The printed
closed form z P^{-1}(z d) for the cut-off dilatation raises degree and
cannot satisfy the bracket relations it is paired with; the artifact solves
the dilatation from [L1cut, J_{-1}cut] = Id instead (closed form
Q(i) = 1/(Delta_+ P)(i), by telescoping) and keeps the literal formula as a
recorded, probed alternative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import DegenerateDifferenceError, DomainError, PoleError
from .scalars import parse_rational
from .verma import (EXACT, DiagSymbol, LinOp, TruncatedVermaModule, commutator,
                    diag_operator, derivative_power, sl2_generator)


@dataclass(frozen=True)
class Polynomial:
    """Exact univariate polynomial, coefficient order c0 + c1 x + ..."""

    coeffs: tuple

    @property
    def degree(self) -> int:
        for k in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[k] != 0:
                return k
        return 0

    def __call__(self, x):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def forward_difference(self, k: int, x):
        """(Delta_+^k P)(x) = sum_j (-1)^{k-j} C(k,j) P(x+j)."""
        tot = Fraction(0)
        for j in range(k + 1):
            tot += (-1) ** (k - j) * math.comb(k, j) * self(x + j)
        return tot


def interp_poly(h, N: int) -> Polynomial:
    """Unique degree-<=N Lagrange interpolant through (i, 1/(2h+i)), i = 0..N."""
    if N < 0:
        raise DomainError(f"cutoff degree must be >= 0, got {N}")
    hq = parse_rational(h)
    for i in range(N + 1):
        if 2 * hq + i == 0:
            raise PoleError(f"2h + {i} = 0 at h = {hq}")
    ys = [Fraction(1) / (2 * hq + i) for i in range(N + 1)]
    coeffs = [Fraction(0)] * (N + 1)
    for k in range(N + 1):
        # basis polynomial prod_{j != k} (x - j) / (k - j)
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j in range(N + 1):
            if j == k:
                continue
            denom *= (k - j)
            nxt = [Fraction(0)] * (len(basis) + 1)
            for t, c in enumerate(basis):
                nxt[t + 1] += c
                nxt[t] -= j * c
            basis = nxt
        for t, c in enumerate(basis):
            coeffs[t] += ys[k] * c / denom
    return Polynomial(tuple(coeffs))


@dataclass(frozen=True)
class CutoffSpec:
    N: int
    P: Polynomial
    module: TruncatedVermaModule
    p_zero_degrees: tuple = ()

    @staticmethod
    def for_module(mod: TruncatedVermaModule, N: int) -> "CutoffSpec":
        """P may vanish at extrapolated degrees (e.g. h=1/2, N=3 has P(4)=0);
        that only forbids the inverse symbol, so it is recorded rather than
        rejected and enforced where P^{-1} is actually formed."""
        if mod.scalar_mode != EXACT:
            raise DomainError("cutoff machinery runs on exact modules")
        P = interp_poly(mod.weight, N)
        zeros = tuple(i for i in range(mod.dim) if P(i) == 0)
        return CutoffSpec(N, P, mod, zeros)


def cutoff_current(mod: TruncatedVermaModule, spec: CutoffSpec, k: int) -> LinOp:
    """J_k^cut for nonzero |k| <= D."""
    if k == 0 or abs(k) > mod.D:
        raise DomainError(f"current index must satisfy 0 < |k| <= {mod.D}, got {k}")
    if k > 0:
        return derivative_power(mod, k)
    kk = -k
    vals = [spec.P.forward_difference(kk, i) for i in range(mod.dim)]
    return LinOp.band(mod, kk, vals)


@dataclass
class DilatationReport:
    h: str
    N: int
    D: int
    degenerate_at: tuple
    rows: list  # probe-style dicts for both candidates x both printed relations


def _residual_row(h, N, D, relation, convention, dif: LinOp, window: int) -> dict:
    window = min(window, D)
    if window < 0:
        frob = None
        verdict = "no valid window"
    else:
        frob = float(dif.frobenius2((0, window))) ** 0.5
        verdict = "exact" if dif.is_zero_below(window) else "fails"
    return {"h": str(h), "N": N, "D": D, "relation": relation,
            "convention": convention, "residual_frobenius": frob,
            "valid_degrees": window, "verdict": verdict}


def solve_cutoff_dilatation(mod: TruncatedVermaModule, spec: CutoffSpec):
    """The degree-lowering operator with [L1cut, J_{-1}cut] = Id on degrees <= D-1.

    Returns (L1cut, report).  The report also evaluates the literal printed
    candidate z P^{-1}(z d) against both printed relations.
    """
    D = mod.D
    dP = [spec.P.forward_difference(1, i) for i in range(D + 1)]
    degenerate = tuple(i for i in range(D) if dP[i] == 0)
    if degenerate:
        raise DegenerateDifferenceError(
            f"(Delta_+ P)(i) = 0 at i = {list(degenerate)} for h={mod.weight}, "
            f"N={spec.N}; no operator satisfies [X, J_-1^cut] = Id on degrees <= D-1 "
            f"(telescoped trace obstruction)")
    # L1cut z^i = i * Q(i-1) z^{i-1}, Q = 1/(Delta_+ P)
    vals = [Fraction(0)] + [Fraction(i) / dP[i - 1] for i in range(1, D + 1)]
    solved = LinOp.band(mod, -1, vals)
    report = dilatation_report(mod, spec, solved)
    return solved, report


def literal_dilatation(mod: TruncatedVermaModule, spec: CutoffSpec) -> LinOp:
    """The printed z P^{-1}(z d) formula (degree-raising; kept for the probe)."""
    if spec.p_zero_degrees:
        raise PoleError(f"interpolant vanishes at degrees {list(spec.p_zero_degrees)}; "
                        f"no inverse symbol")
    vals = [Fraction(1) / spec.P(i) for i in range(mod.dim)]
    return sl2_generator(mod, -1) @ diag_operator(mod, DiagSymbol(tuple(vals)))


def dilatation_report(mod: TruncatedVermaModule, spec: CutoffSpec,
                      solved: Optional[LinOp]) -> DilatationReport:
    D = mod.D
    Id = LinOp.identity(mod)
    L0 = sl2_generator(mod, 0)
    Jm1 = cutoff_current(mod, spec, -1)
    rows = []
    candidates = []
    if solved is not None:
        candidates.append(("solved Q(zd)d, Q=1/(D+P)", solved))
    try:
        candidates.append(("literal zP^-1(zd)", literal_dilatation(mod, spec)))
    except PoleError as e:
        rows.append({"h": str(mod.weight), "N": spec.N, "D": D,
                     "relation": "literal candidate", "convention": "literal zP^-1(zd)",
                     "residual_frobenius": None, "valid_degrees": None,
                     "verdict": f"undefined ({e})"})
    for name, X in candidates:
        dif = commutator(X, Jm1) - Id
        rows.append(_residual_row(mod.weight, spec.N, D, "[L1cut, J-1cut] = Id",
                                  name, dif, min(D - 1, dif.exact_below)))
        dif = commutator(X, L0) - X
        rows.append(_residual_row(mod.weight, spec.N, D, "[L1cut, L0] = L1cut",
                                  name, dif, dif.exact_below))
        raises_note = "raises degree" if X.raises > 0 else "lowers degree"
        rows.append({"h": str(mod.weight), "N": spec.N, "D": D,
                     "relation": "degree shift", "convention": name,
                     "residual_frobenius": None, "valid_degrees": X.exact_below,
                     "verdict": raises_note})
    dP = [spec.P.forward_difference(1, i) for i in range(D + 1)]
    degenerate = tuple(i for i in range(D) if dP[i] == 0)
    return DilatationReport(str(mod.weight), spec.N, D, degenerate, rows)


def nonlinear_sl2_probe(mod: TruncatedVermaModule, spec: CutoffSpec) -> dict:
    """Bracket residuals of the deformed triple; reports, never fails.

    Probes, for each available dilatation candidate and both sign
    conventions, the three printed relations; the h(L_0) right-hand side is
    evaluated with argument z d/dz and with argument L_0 = z d/dz + h.
    """
    D = mod.D
    h = mod.weight
    L0 = sl2_generator(mod, 0)
    Lm1 = sl2_generator(mod, -1)
    rows = []
    dif = commutator(L0, Lm1) - Lm1
    rows.append(_residual_row(h, spec.N, D, "[L0, L-1] = L-1", "-", dif,
                              dif.exact_below))

    candidates = []
    try:
        solved, _ = solve_cutoff_dilatation(mod, spec)
        candidates.append(("solved", solved))
        degenerate = ()
    except DegenerateDifferenceError:
        dP = [spec.P.forward_difference(1, i) for i in range(D + 1)]
        degenerate = tuple(i for i in range(D) if dP[i] == 0)
    try:
        candidates.append(("literal", literal_dilatation(mod, spec)))
    except PoleError as e:
        rows.append({"h": str(h), "N": spec.N, "D": D,
                     "relation": "literal candidate", "convention": "literal",
                     "residual_frobenius": None, "valid_degrees": None,
                     "verdict": f"undefined ({e})"})

    for name, X in candidates:
        for sign, conv in ((1, "paper sign"), (-1, "flipped sign")):
            dif = commutator(X, L0) - X.scale(sign)
            rows.append(_residual_row(h, spec.N, D, f"[L1cut, L0] = {'+' if sign>0 else '-'}L1cut",
                                      name + ", " + conv, dif, dif.exact_below))
        bracket = commutator(X, Lm1)
        for argname, argval in (("z d/dz", [Fraction(i) for i in range(D + 1)]),
                                ("L0 = z d/dz + h", [i + h for i in range(D + 1)])):
            hvals = []
            defined = True
            for x in argval:
                p1, p0 = spec.P(x + 1), spec.P(x)
                if p1 == 0 or p0 == 0:
                    defined = False
                    break
                hvals.append(Fraction(1) / p1 - Fraction(1) / p0)
            if not defined:
                rows.append({"h": str(h), "N": spec.N, "D": D,
                             "relation": "[L1cut, L-1] = h(L0)",
                             "convention": f"{name}, arg {argname}",
                             "residual_frobenius": None, "valid_degrees": None,
                             "verdict": "undefined (P vanishes at an argument)"})
                continue
            dif = bracket - diag_operator(mod, DiagSymbol(tuple(hvals)))
            rows.append(_residual_row(h, spec.N, D, "[L1cut, L-1] = h(L0)",
                                      f"{name}, arg {argname}", dif, dif.exact_below))

    return {"h": str(h), "N": spec.N, "D": D,
            "degenerate_difference_at": list(degenerate),
            "rows": rows}
