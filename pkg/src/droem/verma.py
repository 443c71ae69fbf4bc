"""Truncated highest-weight modules over sl(2,C) and the graded operator calculus.

The module V_h is realized on polynomials in z cut at degree D, with basis
{z^0, ..., z^D}.  Generators:

    L_{-1} = z                (multiplication, raises degree by 1)
    L_0    = z d/dz + h       (diagonal, eigenvalue i + h on z^i)
    L_1    = z d^2/dz^2 + 2h d/dz
    L_k    = z d^{k+1} + (k+1) h d^k     (k >= 2, the vector-field extension)

Every operator carries two truncation annotations:

    raises      -- the largest positive degree shift the operator can produce
    exact_below -- the largest input degree d such that the action on z^i,
                   i <= d, is free of truncation loss

For the constructors here ``exact_below == D - raises``; compositions and
commutators propagate the annotations conservatively.  Tests compare
operators only on their common valid window.

Two scalar modes: "exact" (Fraction / GaussianRational entries, the source
of truth) and "double" (complex128, for dynamics and rendering).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import DomainError, PoleError, ShapeError
from .scalars import GaussianRational, abs2_scalar, conj_scalar, parse_rational, scalar_str, to_complex

EXACT = "exact"
DOUBLE = "double"

Scalar = Union[int, Fraction, GaussianRational, complex, float]


@dataclass(frozen=True)
class Weight:
    """Extremal weight h; exact Fraction in exact mode, float in double mode."""

    value: Union[Fraction, float]

    @staticmethod
    def of(h, mode: str = EXACT) -> "Weight":
        if mode == EXACT:
            return Weight(parse_rational(h))
        return Weight(float(h))

    def check_poles(self, max_shift: int) -> None:
        """Require 2h + i != 0 for i in [0, max_shift]."""
        two_h = 2 * self.value
        for i in range(max_shift + 1):
            if two_h + i == 0:
                raise PoleError(f"2h + {i} = 0 for h = {self.value}")


@dataclass(frozen=True)
class TruncatedVermaModule:
    h: Weight
    D: int
    scalar_mode: str

    @property
    def dim(self) -> int:
        return self.D + 1

    @property
    def weight(self):
        return self.h.value

    def __eq__(self, other):
        return (isinstance(other, TruncatedVermaModule)
                and self.h == other.h and self.D == other.D
                and self.scalar_mode == other.scalar_mode)

    def __hash__(self):
        return hash((self.h, self.D, self.scalar_mode))

    def zero_scalar(self):
        return Fraction(0) if self.scalar_mode == EXACT else 0j

    def basis_state(self, n: int) -> "PolyState":
        if not 0 <= n <= self.D:
            raise DomainError(f"basis degree {n} outside [0, {self.D}]")
        if self.scalar_mode == EXACT:
            coeffs = tuple(Fraction(1 if i == n else 0) for i in range(self.dim))
        else:
            c = np.zeros(self.dim, dtype=complex)
            c[n] = 1.0
            coeffs = c
        return PolyState(self, coeffs)

    def state(self, coeffs) -> "PolyState":
        if len(coeffs) != self.dim:
            raise ShapeError(f"state length {len(coeffs)} != module dim {self.dim}")
        if self.scalar_mode == EXACT:
            return PolyState(self, tuple(coeffs))
        return PolyState(self, np.asarray(coeffs, dtype=complex))

    def to_double(self) -> "TruncatedVermaModule":
        if self.scalar_mode == DOUBLE:
            return self
        return TruncatedVermaModule(Weight(float(self.h.value)), self.D, DOUBLE)


def make_module(h, D: int, mode: str = EXACT) -> TruncatedVermaModule:
    """Build a truncated module; poles 1/(2h+i) excluded with headroom D+2."""
    if D < 2:
        raise DomainError(f"truncation degree must be >= 2, got {D}")
    if mode not in (EXACT, DOUBLE):
        raise DomainError(f"unknown scalar mode {mode!r}")
    w = Weight.of(h, mode)
    if mode == EXACT:
        w.check_poles(D + 2)
    else:
        two_h = 2 * w.value
        for i in range(D + 3):
            if abs(two_h + i) < 1e-12:
                raise PoleError(f"2h + {i} ~= 0 for h = {w.value}")
    return TruncatedVermaModule(w, D, mode)


@dataclass(frozen=True)
class PolyState:
    """Coefficient vector of a polynomial; index n <-> monomial z^n."""

    module: TruncatedVermaModule
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != self.module.dim:
            raise ShapeError("coefficient length does not match module dimension")

    def max_degree(self) -> int:
        """Largest degree with a nonzero coefficient, or -1 for the zero state."""
        for n in range(self.module.D, -1, -1):
            if _nonzero(self.coeffs[n]):
                return n
        return -1

    def to_double_array(self) -> np.ndarray:
        if self.module.scalar_mode == DOUBLE:
            return np.asarray(self.coeffs, dtype=complex)
        return np.array([to_complex(c) for c in self.coeffs], dtype=complex)

    def __eq__(self, other):
        if not isinstance(other, PolyState) or self.module != other.module:
            return NotImplemented
        return all(a == b for a, b in zip(self.coeffs, other.coeffs))


@dataclass(frozen=True)
class DiagSymbol:
    """Values q_0..q_D of an operator acting as Q(z d/dz) z^i = q_i z^i."""

    values: tuple

    @staticmethod
    def from_function(mod: TruncatedVermaModule, fn) -> "DiagSymbol":
        return DiagSymbol(tuple(fn(i) for i in range(mod.dim)))


def _nonzero(x) -> bool:
    if isinstance(x, (complex, float)):
        return x != 0
    return bool(x != 0)


def _exact_zero_matrix(n: int):
    return [[Fraction(0)] * n for _ in range(n)]


class LinOp:
    """A (D+1)x(D+1) operator with truncation annotations.

    ``mat`` is a tuple-of-tuples of exact scalars in exact mode, or a
    complex128 ndarray in double mode.  Immutable.
    """

    __slots__ = ("module", "mat", "raises", "exact_below")

    def __init__(self, module: TruncatedVermaModule, mat, raises: int, exact_below: int):
        object.__setattr__(self, "module", module)
        if module.scalar_mode == EXACT:
            mat = tuple(tuple(row) for row in mat)
        else:
            mat = np.asarray(mat, dtype=complex)
            mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "raises", max(0, min(raises, module.dim)))
        object.__setattr__(self, "exact_below", min(exact_below, module.D))

    def __setattr__(self, *a):
        raise AttributeError("LinOp is immutable")

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_matrix(module: TruncatedVermaModule, mat) -> "LinOp":
        """Annotate from sparsity: raises = max positive band shift present."""
        r = 0
        if module.scalar_mode == EXACT:
            for i, row in enumerate(mat):
                for j, x in enumerate(row):
                    if _nonzero(x):
                        r = max(r, i - j)
        else:
            arr = np.asarray(mat, dtype=complex)
            nz = np.argwhere(arr != 0)
            if len(nz):
                r = max(0, int((nz[:, 0] - nz[:, 1]).max()))
        return LinOp(module, mat, r, module.D - r)

    @staticmethod
    def zero(module: TruncatedVermaModule) -> "LinOp":
        n = module.dim
        mat = _exact_zero_matrix(n) if module.scalar_mode == EXACT else np.zeros((n, n), complex)
        return LinOp(module, mat, 0, module.D)

    @staticmethod
    def identity(module: TruncatedVermaModule) -> "LinOp":
        n = module.dim
        if module.scalar_mode == EXACT:
            mat = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]
        else:
            mat = np.eye(n, dtype=complex)
        return LinOp(module, mat, 0, module.D)

    @staticmethod
    def band(module: TruncatedVermaModule, shift: int, values) -> "LinOp":
        """Single-band operator z^i -> values[i] z^{i+shift}; raises = max(shift, 0)."""
        n = module.dim
        if module.scalar_mode == EXACT:
            mat = _exact_zero_matrix(n)
        else:
            mat = np.zeros((n, n), complex)
        any_set = False
        for i in range(n):
            j = i + shift
            if 0 <= j < n and i < len(values) and _nonzero(values[i]):
                any_set = True
                if module.scalar_mode == EXACT:
                    mat[j][i] = values[i]
                else:
                    mat[j][i] = complex(values[i])
        r = max(shift, 0) if any_set else 0
        return LinOp(module, mat, r, module.D - r)

    # -- algebra -------------------------------------------------------

    def _require_same(self, other: "LinOp"):
        if self.module != other.module:
            raise ShapeError("operators live on different modules")

    def __add__(self, other: "LinOp") -> "LinOp":
        self._require_same(other)
        if self.module.scalar_mode == EXACT:
            n = self.module.dim
            mat = [[self.mat[i][j] + other.mat[i][j] for j in range(n)] for i in range(n)]
        else:
            mat = self.mat + other.mat
        return LinOp(self.module, mat, max(self.raises, other.raises),
                     min(self.exact_below, other.exact_below))

    def __sub__(self, other: "LinOp") -> "LinOp":
        return self + (-other)

    def __neg__(self) -> "LinOp":
        if self.module.scalar_mode == EXACT:
            mat = [[-x for x in row] for row in self.mat]
        else:
            mat = -self.mat
        return LinOp(self.module, mat, self.raises, self.exact_below)

    def scale(self, c) -> "LinOp":
        if self.module.scalar_mode == EXACT:
            mat = [[c * x for x in row] for row in self.mat]
        else:
            mat = complex(c) * self.mat
        return LinOp(self.module, mat, self.raises, self.exact_below)

    def __mul__(self, c):
        if isinstance(c, LinOp):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other: "LinOp") -> "LinOp":
        """Composition self o other with conservative annotation propagation."""
        self._require_same(other)
        n = self.module.dim
        if self.module.scalar_mode == EXACT:
            B = other.mat
            mat = _exact_zero_matrix(n)
            for i in range(n):
                Ai = self.mat[i]
                Mi = mat[i]
                for k in range(n):
                    a = Ai[k]
                    if not _nonzero(a):
                        continue
                    Bk = B[k]
                    for j in range(n):
                        b = Bk[j]
                        if _nonzero(b):
                            Mi[j] = Mi[j] + a * b
        else:
            mat = self.mat @ other.mat
        raises = self.raises + other.raises
        eb = min(other.exact_below, self.exact_below - other.raises)
        return LinOp(self.module, mat, raises, eb)

    def apply(self, state: PolyState) -> PolyState:
        if state.module != self.module:
            raise ShapeError("state and operator on different modules")
        n = self.module.dim
        if self.module.scalar_mode == EXACT:
            out = []
            for i in range(n):
                acc = Fraction(0)
                row = self.mat[i]
                for j in range(n):
                    c = state.coeffs[j]
                    if _nonzero(row[j]) and _nonzero(c):
                        acc = acc + row[j] * c
                out.append(acc)
            return PolyState(self.module, tuple(out))
        return PolyState(self.module, self.mat @ np.asarray(state.coeffs, complex))

    # -- comparisons and norms ----------------------------------------

    def equal_below(self, other: "LinOp", max_degree: int, tol: float = 0.0) -> bool:
        """Columns 0..max_degree agree (action on z^i, i <= max_degree)."""
        self._require_same(other)
        d = min(max_degree, self.module.D)
        if d < 0:
            return True
        if self.module.scalar_mode == EXACT:
            n = self.module.dim
            return all(self.mat[i][j] == other.mat[i][j]
                       for j in range(d + 1) for i in range(n))
        return bool(np.max(np.abs(self.mat[:, :d + 1] - other.mat[:, :d + 1]), initial=0.0) <= tol)

    def is_zero_below(self, max_degree: int) -> bool:
        return self.equal_below(LinOp.zero(self.module), max_degree)

    def max_abs_below(self, max_degree: int) -> float:
        """Largest |entry| over columns 0..max_degree."""
        d = min(max_degree, self.module.D)
        if d < 0:
            return 0.0
        if self.module.scalar_mode == EXACT:
            worst = Fraction(0)
            for j in range(d + 1):
                for i in range(self.module.dim):
                    a = abs2_scalar(self.mat[i][j])
                    if a > worst:
                        worst = a
            return float(worst) ** 0.5
        return float(np.max(np.abs(self.mat[:, :d + 1]), initial=0.0))

    def frobenius2(self, window=None, gram=None):
        """Sum of |entry|^2 over a degree window, optionally Gram-weighted.

        With a Gram form the weight is G_i/G_j on entry (i, j), i.e. the
        Hilbert-Schmidt norm in the orthonormalized basis.
        """
        lo, hi = (0, self.module.D) if window is None else window
        hi = min(hi, self.module.D)
        if self.module.scalar_mode == EXACT:
            tot = Fraction(0)
            for i in range(lo, hi + 1):
                for j in range(lo, hi + 1):
                    x = self.mat[i][j]
                    if _nonzero(x):
                        w = (gram.values[i] / gram.values[j]) if gram is not None else 1
                        tot += w * abs2_scalar(x)
            return tot
        sub = self.mat[lo:hi + 1, lo:hi + 1]
        if gram is not None:
            g = np.asarray([float(v) for v in gram.values[lo:hi + 1]])
            w = g[:, None] / g[None, :]
            return float(np.sum(w * np.abs(sub) ** 2))
        return float(np.sum(np.abs(sub) ** 2))

    def to_double(self, module: TruncatedVermaModule | None = None) -> "LinOp":
        if self.module.scalar_mode == DOUBLE:
            return self
        dmod = module or self.module.to_double()
        n = self.module.dim
        mat = np.array([[to_complex(self.mat[i][j]) for j in range(n)] for i in range(n)])
        return LinOp(dmod, mat, self.raises, self.exact_below)

    def to_json_dict(self) -> dict:
        """Debug dump; exact entries serialized as "num/den" strings."""
        if self.module.scalar_mode == EXACT:
            rows = [[scalar_str(x) for x in row] for row in self.mat]
        else:
            rows = [[[z.real, z.imag] for z in row] for row in self.mat.tolist()]
        return {"D": self.module.D, "h": str(self.module.weight),
                "mode": self.module.scalar_mode, "raises": self.raises,
                "exact_below": self.exact_below, "matrix": rows}

    def __repr__(self):
        return (f"LinOp(D={self.module.D}, mode={self.module.scalar_mode}, "
                f"raises={self.raises}, exact_below={self.exact_below})")


# -- constructors per operator family ----------------------------------


def _falling(i: int, k: int):
    out = 1
    for t in range(k):
        out *= (i - t)
    return out


def sl2_generator(mod: TruncatedVermaModule, k: int) -> LinOp:
    """L_{-1} = z, L_0 = z d/dz + h, L_1 = z d^2 + 2h d."""
    h = mod.weight
    one = Fraction(1) if mod.scalar_mode == EXACT else 1.0
    if k == -1:
        return LinOp.band(mod, 1, [one] * mod.dim)
    if k == 0:
        return LinOp.band(mod, 0, [i + h for i in range(mod.dim)])
    if k == 1:
        return LinOp.band(mod, -1, [i * (i - 1 + 2 * h) for i in range(mod.dim)])
    raise DomainError(f"sl2 generator index must be in {{-1,0,1}}, got {k}")


def w1_generator(mod: TruncatedVermaModule, k: int) -> LinOp:
    """L_k = z d^{k+1} + (k+1) h d^k for k >= 2; lowers degree by k."""
    if k < 2:
        raise DomainError(f"vector-field extension needs k >= 2, got {k}")
    h = mod.weight
    vals = [_falling(i, k) * ((i - k) + (k + 1) * h) for i in range(mod.dim)]
    return LinOp.band(mod, -k, vals)


def vector_field_generator(mod: TruncatedVermaModule, k: int) -> LinOp:
    """T(L_k) for any k >= -1 (sl2 for |k| <= 1, the extension beyond)."""
    return sl2_generator(mod, k) if k <= 1 else w1_generator(mod, k)


def derivative_power(mod: TruncatedVermaModule, k: int) -> LinOp:
    """d^k/dz^k; k = 0 is the identity."""
    if k < 0:
        raise DomainError(f"derivative power must be >= 0, got {k}")
    if k == 0:
        return LinOp.identity(mod)
    return LinOp.band(mod, -k, [_falling(i, k) for i in range(mod.dim)])


def diag_operator(mod: TruncatedVermaModule, symbol) -> LinOp:
    """Diagonal operator from a DiagSymbol (or plain sequence of values)."""
    values = symbol.values if isinstance(symbol, DiagSymbol) else tuple(symbol)
    if len(values) != mod.dim:
        raise ShapeError(f"symbol length {len(values)} != module dim {mod.dim}")
    return LinOp.band(mod, 0, list(values))


def commutator(A: LinOp, B: LinOp) -> LinOp:
    """AB - BA with the conservative window annotation."""
    if A.module != B.module:
        raise ShapeError("commutator of operators on different modules")
    return (A @ B) - (B @ A)


@dataclass(frozen=True)
class GramForm:
    """Diagonal contravariant form: G_0 = 1, G_n = n (n-1+2h) G_{n-1}."""

    module: TruncatedVermaModule
    values: tuple


def shapovalov_form(mod: TruncatedVermaModule) -> GramForm:
    h = mod.weight
    if isinstance(h, (GaussianRational, complex)):
        raise DomainError("contravariant form requires a real weight")
    if not h > 0:
        raise DomainError(f"positive-definite form needs h > 0, got {h}")
    vals = [Fraction(1) if mod.scalar_mode == EXACT else 1.0]
    for n in range(1, mod.dim):
        vals.append(n * (n - 1 + 2 * h) * vals[-1])
    return GramForm(mod, tuple(vals))


def adjoint(A: LinOp, gram: GramForm) -> LinOp:
    """A* with <Ax, y> = <x, A*y>; entrywise (G_j/G_i) conj(A_ji)."""
    if gram.module != A.module:
        raise ShapeError("Gram form and operator on different modules")
    for v in gram.values:
        if not (v > 0 if not isinstance(v, complex) else v.real > 0):
            raise DomainError("adjoint requires a positive diagonal Gram form")
    n = A.module.dim
    G = gram.values
    if A.module.scalar_mode == EXACT:
        mat = [[(G[j] / G[i]) * conj_scalar(A.mat[j][i]) for j in range(n)] for i in range(n)]
    else:
        g = np.asarray([float(v) for v in G])
        mat = (g[None, :] / g[:, None]) * np.conj(A.mat.T)
    return LinOp.from_matrix(A.module, mat)
