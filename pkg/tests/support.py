"""Shared test helpers: an independent symbolic differential-operator oracle.

Oracle operators act on untruncated polynomials represented as dicts
{degree: coefficient}; composition is plain function composition, so the
oracle shares no code path with the matrix calculus it checks.
"""

from fractions import Fraction

from droem.verma import (LinOp, derivative_power, diag_operator, sl2_generator,
                         w1_generator)


def poly_zmul(p):
    return {d + 1: c for d, c in p.items()}


def poly_diff(p, k=1):
    out = {}
    for d, c in p.items():
        f = 1
        for t in range(k):
            f *= (d - t)
        if f != 0 and d - k >= 0:
            out[d - k] = out.get(d - k, Fraction(0)) + f * c
    return out


def poly_add(p, q):
    out = dict(p)
    for d, c in q.items():
        out[d] = out.get(d, Fraction(0)) + c
    return {d: c for d, c in out.items() if c != 0}


def poly_scale(p, a):
    return {d: a * c for d, c in p.items()}


def oracle_sl2(h, k):
    if k == -1:
        return poly_zmul
    if k == 0:
        return lambda p: poly_add(poly_zmul(poly_diff(p)), poly_scale(p, h))
    if k == 1:
        return lambda p: poly_add(poly_zmul(poly_diff(p, 2)),
                                  poly_scale(poly_diff(p), 2 * h))
    raise ValueError(k)


def oracle_w1(h, k):
    return lambda p: poly_add(poly_zmul(poly_diff(p, k + 1)),
                              poly_scale(poly_diff(p, k), (k + 1) * h))


def oracle_diag(values):
    return lambda p: {d: values[d] * c for d, c in p.items() if d < len(values)}


def oracle_deriv(k):
    return lambda p: poly_diff(p, k)


def primitive_pool(mod):
    """(LinOp, oracle) pairs for the constructor families."""
    h, D = mod.weight, mod.D
    pool = [
        (sl2_generator(mod, -1), oracle_sl2(h, -1)),
        (sl2_generator(mod, 0), oracle_sl2(h, 0)),
        (sl2_generator(mod, 1), oracle_sl2(h, 1)),
        (w1_generator(mod, 2), oracle_w1(h, 2)),
        (w1_generator(mod, 3), oracle_w1(h, 3)),
        (derivative_power(mod, 1), oracle_deriv(1)),
    ]
    qvals = tuple(Fraction(1, 2 * i + 1) for i in range(D + 1))
    pool.append((diag_operator(mod, qvals), oracle_diag(qvals)))
    return pool


def compose_sequence(mod, pairs):
    """Left-to-right application order: op = pairs[-1] o ... o pairs[0]."""
    op = None
    fn_chain = []
    for lin, fn in pairs:
        op = lin if op is None else lin @ op
        fn_chain.append(fn)

    def oracle(p):
        for fn in fn_chain:
            p = fn(p)
        return p

    return op, oracle


def matrix_column(op: LinOp, j: int):
    return {i: op.mat[i][j] for i in range(op.module.dim) if op.mat[i][j] != 0}
