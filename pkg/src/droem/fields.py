"""Operator fields on truncated modules: primary-field solver, smearing,
operator-product structure, and the renormalized local product.

A field is a finite Laurent series phi(u) = sum_n l_n u^n with LinOp modes.
Solved primary fields of spin m use the grading in which mode n shifts
polynomial degree by n - m, so the mode-wise commutation relations read

    [L_0, l_n]  = (n - m) l_n
    [L_1, l_n]  = -(n - 1) l_{n-1}
    [L_{-1}, l_n] = -(n - 2m + 1) l_{n+1}

(the spin-0 identity field is the single mode n = 0).  Construction works on
exact band-entry data, degree by degree, so no truncation error ever enters
a stored coefficient; matrices are cut from the bands afterwards and carry
honest validity windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .errors import (DomainError, EvalDomainError, MissingStructureError,
                     NoSolutionError, NotClosedError, NoUnitError, ShapeError,
                     SingularSampleError)
from .scalars import GaussianRational, to_complex
from .verma import (EXACT, LinOp, TruncatedVermaModule, commutator,
                    sl2_generator)

LaurentPoly = Mapping[int, object]  # exponent -> scalar


# -- Laurent scalar helpers ---------------------------------------------


def laurent_clean(f: LaurentPoly) -> dict:
    return {n: c for n, c in f.items() if c != 0}


def laurent_mul(f: LaurentPoly, g: LaurentPoly) -> dict:
    out: dict = {}
    for a, ca in f.items():
        if ca == 0:
            continue
        for b, cb in g.items():
            if cb == 0:
                continue
            out[a + b] = out.get(a + b, 0) + ca * cb
    return laurent_clean(out)


def laurent_eval(f: LaurentPoly, u):
    tot = 0
    for n, c in f.items():
        if c == 0:
            continue
        tot = tot + c * (u ** n)
    return tot


def binom_general(r: int, j: int) -> Fraction:
    """binomial(r, j) for any integer r and j >= 0."""
    if j < 0:
        return Fraction(0)
    num = Fraction(1)
    for t in range(j):
        num *= (r - t)
    return num / math.factorial(j)


# -- fields --------------------------------------------------------------


@dataclass(frozen=True)
class LaurentOpField:
    """Finite operator-valued Laurent series; absent modes are zero."""

    module: TruncatedVermaModule
    modes: Mapping[int, LinOp]
    spin: Optional[int] = None
    label: str = "field"

    def __post_init__(self):
        for n, op in self.modes.items():
            if op.module != self.module:
                raise ShapeError(f"mode {n} lives on a different module")

    @property
    def n_min(self) -> int:
        return min(self.modes) if self.modes else 0

    @property
    def n_max(self) -> int:
        return max(self.modes) if self.modes else 0

    def mode(self, n: int) -> LinOp:
        op = self.modes.get(n)
        return op if op is not None else LinOp.zero(self.module)

    def has_negative_modes(self) -> bool:
        return any(n < 0 and not op.is_zero_below(self.module.D)
                   for n, op in self.modes.items())

    def evaluate(self, u) -> LinOp:
        """Sum l_n u^n.  Exact for GaussianRational u on an exact module."""
        if isinstance(u, GaussianRational):
            if self.module.scalar_mode != EXACT:
                raise DomainError("exact evaluation needs an exact module")
            if not u and self.has_negative_modes():
                raise EvalDomainError("field with negative modes evaluated at u = 0")
            acc = LinOp.zero(self.module)
            for n, op in sorted(self.modes.items()):
                acc = acc + op.scale(u ** n)
            return acc
        uc = complex(u)
        if uc == 0 and self.has_negative_modes():
            raise EvalDomainError("field with negative modes evaluated at u = 0")
        dmod = self.module.to_double()
        acc = LinOp.zero(dmod)
        for n, op in sorted(self.modes.items()):
            acc = acc + op.to_double(dmod).scale(uc ** n)
        return acc

    def derivative_eval(self, u) -> LinOp:
        """Sum n l_n u^{n-1} at an exact or complex point."""
        shifted = {}
        for n, op in self.modes.items():
            if n != 0:
                shifted[n - 1] = op.scale(
                    Fraction(n) if self.module.scalar_mode == EXACT else float(n))
        return LaurentOpField(self.module, shifted, label=self.label + "'").evaluate(u)

    def restrict_modes(self, lo: int, hi: int) -> "LaurentOpField":
        return LaurentOpField(self.module,
                              {n: op for n, op in self.modes.items() if lo <= n <= hi},
                              self.spin, self.label)

    def to_double(self) -> "LaurentOpField":
        dmod = self.module.to_double()
        return LaurentOpField(dmod, {n: op.to_double(dmod) for n, op in self.modes.items()},
                              self.spin, self.label)

    def scale(self, c) -> "LaurentOpField":
        return LaurentOpField(self.module, {n: op.scale(c) for n, op in self.modes.items()},
                              self.spin, self.label)


def identity_field(mod: TruncatedVermaModule, label: str = "unit") -> LaurentOpField:
    return LaurentOpField(mod, {0: LinOp.identity(mod)}, spin=0, label=label)


def zero_field(mod: TruncatedVermaModule, label: str = "zero") -> LaurentOpField:
    return LaurentOpField(mod, {}, spin=None, label=label)


# -- primary-field solver -------------------------------------------------


@dataclass(frozen=True)
class PrimarySpec:
    spin: int
    mode_range: tuple
    seed_mode: Optional[LinOp] = None


@dataclass
class RelationCheck:
    k: int
    n: int
    window: int
    exact_zero: bool
    max_abs: float


@dataclass
class SolveReport:
    spin: int
    mode_range: tuple
    checks: list

    @property
    def all_exact(self) -> bool:
        return all(c.exact_zero for c in self.checks)

    def rows(self) -> list:
        return [{"relation": f"[L_{c.k}, l_{c.n}]", "valid_degrees": c.window,
                 "max_residual": c.max_abs, "exact": c.exact_zero}
                for c in self.checks]


def _seed_slots_from_linop(seed: LinOp, shift: int, D: int) -> dict:
    """Extract band slots from a seed matrix; off-band entries must vanish."""
    slots = {}
    mat = seed.mat
    for j in range(D + 1):
        for i in range(D + 1):
            x = mat[i][j]
            if x == 0:
                continue
            if i - j != shift:
                raise DomainError(
                    f"seed mode is not a pure band of shift {shift}: entry at ({i},{j})")
            slots[j] = x
    for i in range(max(0, -shift), D + 1):
        slots.setdefault(i, Fraction(0))
    return slots


def solve_primary_field(mod: TruncatedVermaModule, spec: PrimarySpec):
    """Construct the modes of a spin-m primary field and verify the relations.

    Returns (field, report).  Raises NoSolutionError when the relations force
    the zero field or a nonzero residual survives on a valid window.
    """
    if mod.scalar_mode != EXACT:
        raise DomainError("primary fields are solved in exact mode; convert after")
    m = spec.spin
    n_min, n_max = spec.mode_range
    if n_min > n_max:
        raise DomainError("empty mode range")
    D, h = mod.D, mod.weight
    if n_min - m > 0:
        raise DomainError("seed (lowest) mode must not raise degree")
    if m - n_min > D or n_max - m > D:
        raise DomainError("mode range exceeds the representable band |shift| <= D")

    s0 = n_min - m
    if spec.seed_mode is not None:
        slots0 = _seed_slots_from_linop(spec.seed_mode, s0, D)
    else:
        # canonical seed: the single slot acting on z^D
        slots0 = {i: Fraction(0) for i in range(max(0, -s0), D + 1)}
        slots0[D] = Fraction(1)

    slots = {n_min: slots0}
    deferred = []
    # build upward: solve [L_1, l_{n+1}] = -n l_n slot by slot; the output-degree-0
    # slot has zero leading coefficient and is pinned by [L_{-1}, l_n] instead.
    for n in range(n_min, n_max):
        s2 = n + 1 - m
        lo = max(0, -s2)
        cur: dict = {}
        for i in range(lo, D + 1):
            lead = Fraction(i + s2) * (i + s2 - 1 + 2 * h)
            rhs = Fraction(-n) * slots[n].get(i, Fraction(0))
            prev = Fraction(i) * (i - 1 + 2 * h) * cur.get(i - 1, Fraction(0))
            if lead != 0:
                cur[i] = (rhs + prev) / lead
            else:
                c = Fraction(n - 2 * m + 1)
                if c != 0:
                    xi1 = slots[n].get(i + 1, Fraction(0))
                    xi = slots[n].get(i, Fraction(0))
                    cur[i] = (xi1 - xi) / c
                else:
                    cur[i] = Fraction(0)
                    deferred.append((n + 1, i))
        slots[n + 1] = cur
    # deferred slots (spin 0 only): pin from the raising relation a posteriori
    for (n, i) in deferred:
        c = Fraction(n - 2 * m + 1)
        nxt = slots.get(n + 1, {})
        slots[n][i] = slots[n].get(i + 1, Fraction(0)) - c * nxt.get(i, Fraction(0))

    modes = {}
    for n, sl in slots.items():
        vals = [Fraction(0)] * (D + 1)
        for i, v in sl.items():
            if 0 <= i <= D and 0 <= i + (n - m) <= D:
                vals[i] = v
        modes[n] = LinOp.band(mod, n - m, vals)

    field = LaurentOpField(mod, modes, spin=m, label=f"spin{m}")
    report = verify_primary_relations(mod, field, m, (n_min, n_max))
    if not report.all_exact:
        bad = [c for c in report.checks if not c.exact_zero]
        raise NoSolutionError(
            f"primary relations violated at {[(c.k, c.n) for c in bad[:6]]}; "
            f"the constraints admit no field with this seed/range")
    if all(op.is_zero_below(D) for op in modes.values()):
        raise NoSolutionError("constraints admit only the zero field at this truncation")
    return field, report


def verify_primary_relations(mod, field: LaurentOpField, m: int, mode_range) -> SolveReport:
    """Residuals of the three defining relations on their valid windows.

    Modes outside the range are zero claims; a claim whose band shift exceeds
    D is not representable on the truncated module and carries no window.
    """
    D = mod.D
    n_min, n_max = mode_range
    Lm1, L0, L1 = sl2_generator(mod, -1), sl2_generator(mod, 0), sl2_generator(mod, 1)
    zero = LinOp.zero(mod)
    checks = []

    def record(k, n, dif: LinOp, window: int):
        if window < 0:
            return
        ok = dif.is_zero_below(window)
        checks.append(RelationCheck(k, n, window, ok, 0.0 if ok else dif.max_abs_below(window)))

    for n in range(n_min, n_max + 1):
        s = n - m
        M = field.mode(n)
        record(0, n, commutator(L0, M) - M.scale(Fraction(s)), D - max(s, 0))
        # k = +1 relation targets mode n-1; k = -1 targets n+1.  A target
        # outside the range is a zero claim, checkable only if its band
        # shift is representable (|shift| <= D).
        for k, nt, coef in ((1, n - 1, Fraction(-(n - 1))),
                            (-1, n + 1, Fraction(-(n - 2 * m + 1)))):
            st = nt - m
            in_range = n_min <= nt <= n_max
            if not in_range and abs(st) > D:
                continue
            rhs = (field.modes.get(nt, zero)).scale(coef)
            if k == 1:
                record(1, n, commutator(L1, M) - rhs, D - max(s, 0, st, 0))
            else:
                record(-1, n, commutator(Lm1, M) - rhs,
                       min(D - 1 - max(s, 0), D - max(st, 0)))
    return SolveReport(m, tuple(mode_range), checks)


def canonical_primary_field(mod: TruncatedVermaModule, spin: int):
    """The full-band primary field of integer spin >= 1 (seed z^D -> z^0)."""
    if spin < 1:
        raise DomainError("canonical construction covers integer spins >= 1")
    spec = PrimarySpec(spin, (spin - mod.D, spin + mod.D))
    return solve_primary_field(mod, spec)


# -- smearing -------------------------------------------------------------


def smear(field: LaurentOpField, f: LaurentPoly) -> LinOp:
    """phi(f) = sum_n l_n * [coefficient of u^{-n} in f]."""
    acc = LinOp.zero(field.module)
    for n, op in field.modes.items():
        c = f.get(-n, 0)
        if c != 0:
            acc = acc + op.scale(c)
    return acc


# -- operator-product structure -------------------------------------------


@dataclass
class StructureField:
    """t^k_ij data: (i, j, k) -> Laurent polynomial in (x - y)."""

    entries: dict                     # (i_label, j_label, k_label) -> dict r -> scalar
    registry: dict = dc_field(default_factory=dict)   # label -> LaurentOpField | None
    window: tuple = (0, 0)

    def pair_candidates(self, i: str, j: str) -> list:
        return [k for (a, b, k) in self.entries if a == i and b == j]

    def t(self, i: str, j: str, k: str) -> dict:
        return self.entries.get((i, j, k), {})


@dataclass
class ClosureReport:
    pair: tuple
    window: tuple
    tail_cap: int
    equations: int
    entry_count: int
    residual2: Fraction
    closed: bool

    @property
    def residual(self) -> float:
        return float(self.residual2) ** 0.5


def _solve_least_squares_exact(rows, rhs, n_unknowns):
    """Minimize ||A t - b||^2 over Q via normal equations; free vars -> 0."""
    # normal matrix
    N = [[Fraction(0)] * n_unknowns for _ in range(n_unknowns)]
    y = [Fraction(0)] * n_unknowns
    for row, b in zip(rows, rhs):
        idxs = [k for k, v in row.items()]
        for a in idxs:
            va = row[a]
            y[a] += va * b
            for c in idxs:
                N[a][c] += va * row[c]
    # gaussian elimination with partial (first nonzero) pivoting
    t = [Fraction(0)] * n_unknowns
    piv_cols = []
    M = [N[i][:] + [y[i]] for i in range(n_unknowns)]
    r = 0
    for col in range(n_unknowns):
        p = next((i for i in range(r, n_unknowns) if M[i][col] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][col]
        M[r] = [x * inv for x in M[r]]
        for i in range(n_unknowns):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        piv_cols.append(col)
        r += 1
        if r == n_unknowns:
            break
    for rr, col in enumerate(piv_cols):
        t[col] = M[rr][n_unknowns]
    return t


def ope_structure(fieldA: LaurentOpField, fieldB: LaurentOpField,
                  candidates: Sequence[LaurentOpField],
                  window: tuple = (0, 2), tail_cap: int = 12,
                  strict: bool = False):
    """Express A(x) B(y) = sum_k t^k(x - y) C_k(y) over the candidate basis.

    Coefficients of t are solved by exact least squares on the coefficient
    equations of the |x| > |y| expansion; the report carries the exact
    residual.  Negative powers in the window generate an infinite expansion
    tail which is truncated at ``tail_cap`` terms (recorded in the report).
    """
    mod = fieldA.module
    if fieldB.module != mod or any(c.module != mod for c in candidates):
        raise ShapeError("all fields must share one module")
    if mod.scalar_mode != EXACT:
        raise DomainError("structure solving runs in exact mode")
    r_min, r_max = window
    labels = [c.label for c in candidates]
    if len(set(labels)) != len(labels):
        raise DomainError("candidate labels must be distinct")
    unknowns = [(k, r) for k in range(len(candidates)) for r in range(r_min, r_max + 1)]
    uidx = {ur: i for i, ur in enumerate(unknowns)}

    # equations live at (p, q) pairs; value side is a LinOp, coefficient side
    # maps unknowns to scalars multiplying candidate mode matrices.
    eq_lhs: dict = {}
    for p, ap in fieldA.modes.items():
        for q, bq in fieldB.modes.items():
            eq_lhs[(p, q)] = ap @ bq
    eq_rhs_terms: dict = {}
    for ci, cand in enumerate(candidates):
        for r in range(r_min, r_max + 1):
            jmax = r if r >= 0 else tail_cap
            for j in range(0, jmax + 1):
                coef = binom_general(r, j) * ((-1) ** j)
                if coef == 0:
                    continue
                p = r - j
                for s, cs in cand.modes.items():
                    q = s + j
                    key = (p, q)
                    eq_rhs_terms.setdefault(key, []).append((uidx[(ci, r)], coef, cs))

    keys = sorted(set(eq_lhs) | set(eq_rhs_terms))
    rows, rhs, entry_count = [], [], 0
    zero = LinOp.zero(mod)
    D = mod.D
    for key in keys:
        lhs = eq_lhs.get(key, zero)
        terms = eq_rhs_terms.get(key, [])
        w = lhs.exact_below
        for _, _, op in terms:
            w = min(w, op.exact_below)
        if w < 0:
            continue
        for col in range(0, w + 1):
            for rrow in range(0, D + 1):
                row = {}
                for (ui, coef, op) in terms:
                    v = coef * op.mat[rrow][col]
                    if v != 0:
                        row[ui] = row.get(ui, Fraction(0)) + v
                b = lhs.mat[rrow][col]
                if row or b != 0:
                    rows.append(row)
                    rhs.append(Fraction(b))
                    entry_count += 1

    t = _solve_least_squares_exact(rows, rhs, len(unknowns))
    residual2 = Fraction(0)
    for row, b in zip(rows, rhs):
        v = sum((t[ui] * cv for ui, cv in row.items()), Fraction(0)) - b
        residual2 += v * v

    entries = {}
    registry = {fieldA.label: fieldA, fieldB.label: fieldB}
    for ci, cand in enumerate(candidates):
        registry[cand.label] = cand
        poly = {r: t[uidx[(ci, r)]] for r in range(r_min, r_max + 1)
                if t[uidx[(ci, r)]] != 0}
        if poly:
            entries[(fieldA.label, fieldB.label, cand.label)] = poly
    if not entries:
        # keep an explicit zero row so the pair is marked as solved
        entries[(fieldA.label, fieldB.label, candidates[0].label)] = {}
    structure = StructureField(entries, registry, window)
    report = ClosureReport((fieldA.label, fieldB.label), window, tail_cap,
                           len(keys), entry_count, residual2, residual2 == 0)
    if strict and residual2 != 0:
        raise NotClosedError(
            f"no candidate combination reproduces {fieldA.label}(x){fieldB.label}(y); "
            f"residual {report.residual:.3e}")
    return structure, report


# -- renormalized local product -------------------------------------------


def renormalization_kernel(t_poly: LaurentPoly, f: LaurentPoly) -> dict:
    """Full-contour coefficient extraction of t(v-u) f(v) dv/v.

    Returns the Laurent polynomial sum_{a,r} f_a t_r (-1)^{r+a} C(r, r+a)
    u^{a+r} over r+a >= 0: the residue at v = u plus the residue at v = 0
    of the |v| > |u| expansion (equivalently minus the residue at infinity).
    For f with only positive powers this reduces to the residue at v = u
    alone.
    """
    out: dict = {}
    for a, fa in f.items():
        if fa == 0:
            continue
        for r, tr in t_poly.items():
            if tr == 0 or r + a < 0:
                continue
            coef = binom_general(r, r + a) * ((-1) ** (r + a))
            if coef == 0:
                continue
            k = a + r
            out[k] = out.get(k, 0) + fa * tr * coef
    return laurent_clean(out)


def pole_part_kernel(t_poly: LaurentPoly, f: LaurentPoly) -> dict:
    """The residue-at-v=u term alone (the singular-part extraction)."""
    out: dict = {}
    for a, fa in f.items():
        for r, tr in t_poly.items():
            if r > -1 or fa == 0 or tr == 0:
                continue
            coef = binom_general(a - 1, -1 - r)
            if coef == 0:
                continue
            k = a + r
            out[k] = out.get(k, 0) + fa * tr * coef
    return laurent_clean(out)


def local_product(fieldA: LaurentOpField, f: LaurentPoly,
                  fieldB: LaurentOpField, g: LaurentPoly,
                  structure: StructureField) -> LinOp:
    """phi_A(f) phi_B(g) computed through the structure coefficients.

    h^k(u) = [contour extraction of t^k(v-u) f(v) dv/v] * g(u), result is
    sum_k phi_k(h^k).  Equals smear(A,f) @ smear(B,g) on the common valid
    window whenever the structure closes exactly.
    """
    pair = [key for key in structure.entries
            if key[0] == fieldA.label and key[1] == fieldB.label]
    if not pair:
        raise MissingStructureError(
            f"no structure data for pair ({fieldA.label}, {fieldB.label})")
    acc = LinOp.zero(fieldA.module)
    for (_, _, k) in pair:
        cand = structure.registry.get(k)
        if cand is None:
            raise MissingStructureError(f"candidate field {k!r} not in registry")
        hk = laurent_mul(renormalization_kernel(structure.entries[(fieldA.label, fieldB.label, k)], f), g)
        acc = acc + smear(cand, hk)
    return acc


# -- QFT axiom spot check ---------------------------------------------------


def check_qft_axiom(structure: StructureField, samples: Sequence, labels=None) -> dict:
    """Associativity m_x(., m_y(.,.)) = m_y(m_{x-y}(.,.), .) at sample (x, y).

    Structure entries must cover all pairs over the label set.  Returns a
    report with the max deviation over basis triples and samples.
    """
    if labels is None:
        labels = sorted({a for (a, _, _) in structure.entries}
                        | {b for (_, b, _) in structure.entries}
                        | {k for (_, _, k) in structure.entries})
    for i in labels:
        for j in labels:
            if not any((i, j, k) in structure.entries for k in labels):
                raise MissingStructureError(f"pair ({i}, {j}) missing from structure")

    def t_eval(i, j, k, w):
        poly = structure.entries.get((i, j, k), {})
        if any(r < 0 for r in poly) and abs(w) < 1e-9:
            raise SingularSampleError(f"sample hits pole of t^{k}_{i}{j}")
        return complex(laurent_eval({r: to_complex(c) for r, c in poly.items()}, w))

    worst = 0.0
    for (x, y) in samples:
        x, y = complex(x), complex(y)
        for i in labels:
            for j in labels:
                for k in labels:
                    for l in labels:
                        lhs = sum(t_eval(j, k, m_, y) * t_eval(i, m_, l, x)
                                  for m_ in labels)
                        rhs = sum(t_eval(i, j, m_, x - y) * t_eval(m_, k, l, y)
                                  for m_ in labels)
                        worst = max(worst, abs(lhs - rhs))
    return {"max_deviation": worst, "samples": len(samples), "labels": labels}


# -- infinitesimal translations ---------------------------------------------


@dataclass
class TranslationReport:
    unit_label: str
    kills_unit: bool
    sample_deviation: float
    exp_series_vs_conjugation: float


class Translation:
    """The derivation L = ad(L_{-1}) on fields over one module."""

    def __init__(self, mod: TruncatedVermaModule):
        self.module = mod
        self.z = sl2_generator(mod, -1)

    def apply(self, field: LaurentOpField) -> LaurentOpField:
        return LaurentOpField(field.module,
                              {n: commutator(self.z, op) for n, op in field.modes.items()},
                              label=f"L({field.label})")

    def exp_apply(self, x, field: LaurentOpField, order: Optional[int] = None) -> LaurentOpField:
        """exp(x L) phi as the (finite, nilpotent) series sum x^k/k! L^k phi."""
        order = order if order is not None else 2 * self.module.D + 2
        out = {n: op for n, op in field.modes.items()}
        cur = field
        fact = 1
        for k in range(1, order + 1):
            cur = self.apply(cur)
            fact *= k
            coef = (x ** k) / fact if not isinstance(x, Fraction) else Fraction(x ** k, fact)
            if all(op.is_zero_below(self.module.D) for op in cur.modes.values()):
                break
            for n, op in cur.modes.items():
                out[n] = out.get(n, LinOp.zero(self.module)) + op.scale(coef)
        return LaurentOpField(field.module, out, label=f"exp(xL){field.label}")


def infinitesimal_translation(fields: Sequence[LaurentOpField],
                              sample_points: Sequence = (0.3 + 0.1j, -0.4 + 0.25j),
                              exp_x: float = 0.05) -> tuple:
    """The translation derivation for a field collection with unit.

    Verifies: L kills the unit; [L_{-1}, phi(x)] = (L phi)(x) at samples on
    the common valid window; exp(x L) by nilpotent series agrees with matrix
    conjugation exp(x z) phi(.) exp(-x z) to 1e-10.
    """
    units = [f for f in fields if _is_unit_field(f)]
    if not units:
        raise NoUnitError("no identity field among the inputs")
    unit = units[0]
    mod = unit.module
    La = Translation(mod)

    kills = all(op.is_zero_below(op.exact_below) for op in La.apply(unit).modes.values())

    worst = 0.0
    for f in fields:
        Lf = La.apply(f)
        for u0 in sample_points:
            lhs = commutator(La.z.to_double(), f.to_double().evaluate(u0))
            rhs = Lf.to_double().evaluate(u0)
            dif = lhs - rhs
            w = min(lhs.exact_below, rhs.exact_below)
            worst = max(worst, dif.max_abs_below(w))

    import scipy.linalg as sla
    import numpy as np
    dev = 0.0
    zd = La.z.to_double()
    E = sla.expm(exp_x * zd.mat)
    Einv = sla.expm(-exp_x * zd.mat)
    for f in fields:
        ser = La.exp_apply(exp_x, f).to_double()
        for n, op in f.to_double().modes.items():
            conj = E @ op.mat @ Einv
            sm = ser.modes.get(n)
            sm = sm.mat if sm is not None else np.zeros_like(conj)
            w = min(op.exact_below, mod.D) + 1
            dev = max(dev, float(np.max(np.abs((sm - conj)[:, :max(w - 2, 1)]), initial=0.0)))

    report = TranslationReport(unit.label, kills, worst, dev)
    return La, report


def _is_unit_field(f: LaurentOpField) -> bool:
    if set(n for n, op in f.modes.items() if not op.is_zero_below(f.module.D)) != {0}:
        return False
    return f.mode(0).equal_below(LinOp.identity(f.module), f.module.D)


# -- angular operator field --------------------------------------------------


def angular_field(primaries: Sequence[LaurentOpField], M: Sequence[float],
                  u: complex, du: complex) -> LinOp:
    """A(u, udot) = sum_i M_i udot^i V_i(u), complex-double assembly."""
    if len(primaries) != len(M):
        raise DomainError("coefficient list and field list lengths differ")
    if not 1 <= len(M) <= 3:
        raise DomainError("angular expansion supports orders 1..3")
    u = complex(u)
    du = complex(du)
    dmod = primaries[0].module.to_double()
    acc = LinOp.zero(dmod)
    for i, (Mi, V) in enumerate(zip(M, primaries), start=1):
        if Mi == 0:
            continue
        if u == 0 and V.has_negative_modes():
            raise EvalDomainError("angular field at u = 0 with negative modes present")
        acc = acc + V.to_double().evaluate(u).scale(complex(Mi) * du ** i)
    return acc
