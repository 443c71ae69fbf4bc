"""Extended generators, bracket defects, asymptotic scans, exponentiation."""

import json
import os
from fractions import Fraction

import numpy as np
import pytest

from droem.errors import DomainError, InsufficientDataError, UnitarizabilityError
from droem.symmetries import (CURRENT, VECTOR, asymptotic_scan, defect,
                              defect_grid_report, exponentiate, extended_generator,
                              group_law_residual)
from droem.verma import (EXACT, LinOp, TruncatedVermaModule, Weight, adjoint,
                         commutator, derivative_power, make_module,
                         shapovalov_form, sl2_generator, vector_field_generator)

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


@pytest.fixture(scope="module")
def mod16():
    return make_module(1, 16)


@pytest.fixture(scope="module")
def gram16(mod16):
    return shapovalov_form(mod16)


class TestExtendedGenerator:
    def test_sl2_core_is_direct(self, mod16, gram16):
        for n in (-1, 0, 1):
            gen = extended_generator(mod16, n, VECTOR, gram16)
            assert gen.construction == "T"
            assert gen.op.equal_below(sl2_generator(mod16, n), gen.op.exact_below)

    def test_negative_index_is_adjoint(self, mod16, gram16):
        gen = extended_generator(mod16, -2, VECTOR, gram16)
        assert gen.construction == "T-star"
        expected = adjoint(vector_field_generator(mod16, 2), gram16)
        assert gen.op.equal_below(expected, 16)
        G = gram16.values
        L2 = vector_field_generator(mod16, 2)
        for i in range(17):
            for j in range(17):
                assert gen.op.mat[i][j] == (G[j] / G[i]) * L2.mat[j][i]

    def test_mixed_bracket_exact(self, mod16, gram16):
        # [rho(L_1), rho(L_-2)] = 3 rho(L_-1) on the valid window
        r1 = extended_generator(mod16, 1, VECTOR, gram16).op
        rm2 = extended_generator(mod16, -2, VECTOR, gram16).op
        dif = commutator(r1, rm2) - sl2_generator(mod16, -1).scale(Fraction(3))
        assert dif.is_zero_below(dif.exact_below)

    def test_current_generators(self, mod16, gram16):
        assert extended_generator(mod16, 1, CURRENT, gram16).op.equal_below(
            derivative_power(mod16, 1), 16)
        assert extended_generator(mod16, 0, CURRENT, gram16).op.equal_below(
            LinOp.identity(mod16), 16)

    def test_semidirect_action(self, mod16, gram16):
        # [T(L_k), rho(J_n)] = -n rho(J_{n+k}) for the honest region
        for k in (-1, 0, 1, 2):
            for n in (1, 2):
                A = vector_field_generator(mod16, k)
                B = derivative_power(mod16, n)
                dif = commutator(A, B) + derivative_power(mod16, n + k).scale(Fraction(n))
                assert dif.is_zero_below(dif.exact_below), (k, n)

    def test_unitarizability_guard(self):
        bad = TruncatedVermaModule(Weight(Fraction(-3, 4)), 8, EXACT)
        with pytest.raises(UnitarizabilityError):
            extended_generator(bad, -2, VECTOR)

    def test_index_out_of_range(self, mod16, gram16):
        with pytest.raises(DomainError):
            extended_generator(mod16, 99, VECTOR, gram16)


class TestDefect:
    def test_sl2_core_defect_free(self, mod16, gram16):
        for m in (-1, 0, 1):
            for n in (-1, 0, 1):
                rep = defect(mod16, m, n, VECTOR, gram16)
                assert all(gw == 0 and raw == 0 for (_, gw, raw) in rep.tail_norms)

    def test_adjoint_pair_defect_free_on_window(self, mod16, gram16):
        # (1, -2): zero by the adjoint identity, up to the boundary columns
        rep = defect(mod16, 1, -2, VECTOR, gram16)
        assert rep.defect.is_zero_below(rep.valid_window)

    def test_nontrivial_defect(self, mod16, gram16):
        rep = defect(mod16, 2, -2, VECTOR, gram16)
        assert rep.tail_norms[-1][1] > 0

    def test_tail_norms_nondecreasing(self, mod16, gram16):
        rep = defect(mod16, 2, -2, VECTOR, gram16)
        gw = [x[1] for x in rep.tail_norms]
        assert all(a <= b + 1e-15 for a, b in zip(gw, gw[1:]))

    def test_adjoint_symmetry(self, mod16, gram16):
        # D(m,n)^* = D(-n,-m) entrywise on the doubly-safe square window
        m, n = 2, -2
        a = defect(mod16, m, n, VECTOR, gram16).defect
        b = defect(mod16, -n, -m, VECTOR, gram16).defect
        astar = adjoint(a, gram16)
        w = min(a.exact_below, b.exact_below) - 2
        for i in range(w + 1):
            for j in range(w + 1):
                assert astar.mat[i][j] == b.mat[i][j]

    def test_abelian_bracket_lowering_exact(self, mod16, gram16):
        rep = defect(mod16, 1, 2, CURRENT, gram16)
        assert all(gw == 0 for (_, gw, _) in rep.tail_norms)

    def test_golden_defect_report(self):
        mod = make_module(1, 32)
        rep = defect(mod, 2, -2, gram=shapovalov_form(mod))
        payload = json.dumps({
            "m": rep.m, "n": rep.n, "h": rep.h, "D": rep.D, "hbar": rep.hbar,
            "tail_norms": [[d, gw, raw] for (d, gw, raw) in rep.tail_norms],
            "convergence_indicator": rep.convergence_indicator,
            "valid_window": rep.valid_window,
        }, indent=2, sort_keys=True)
        with open(os.path.join(GOLDEN_DIR, "defect_2_-2_h1_D32.json")) as fh:
            assert fh.read() == payload


class TestStabilizationShadow:
    def test_low_window_norm_stabilizes(self):
        norms = {}
        for D in (16, 24, 32, 48):
            mod = make_module(1, D)
            g = shapovalov_form(mod)
            rep = defect(mod, 2, -2, VECTOR, g)
            norms[D] = rep.window_norm(0, 12, g)
        rel = abs(norms[48] - norms[32]) / norms[48]
        assert rel <= 0.01
        assert abs(norms[48] - norms[16]) / norms[48] <= 0.05


class TestAsymptoticScan:
    def test_exponent_in_band(self):
        rows = asymptotic_scan(["7/10", "3/5", "11/20"], [(2, -2)], D=32)
        row = rows[0]
        assert not row.exact
        assert 0.7 <= row.exponent <= 1.3

    def test_sl2_pair_reports_exact(self):
        rows = asymptotic_scan(["7/10", "3/5", "11/20"], [(1, -1)], D=16)
        assert rows[0].exact and rows[0].exponent is None

    def test_insufficient_grid(self):
        with pytest.raises(InsufficientDataError):
            asymptotic_scan(["7/10"], [(2, -2)], D=16)

    def test_grid_requires_h_above_half(self):
        with pytest.raises(DomainError):
            asymptotic_scan(["1/2", "3/5", "7/10"], [(2, -2)], D=16)


class TestExponentiate:
    def test_zero_time_is_identity(self, mod16, gram16):
        X = extended_generator(mod16, 2, VECTOR, gram16).op
        E = exponentiate(X, 0.0, gram16)
        assert np.allclose(np.asarray(E.mat), np.eye(17))

    def test_diagonal_exponential(self, mod16, gram16):
        L0 = sl2_generator(mod16, 0)
        E = exponentiate(L0, 0.3, gram16)
        h = float(mod16.weight)
        expected = np.diag([np.exp(0.3 * (i + h)) for i in range(17)])
        assert np.allclose(np.asarray(E.mat), expected, rtol=1e-12)

    def test_group_law(self):
        mod = make_module(1, 24)
        g = shapovalov_form(mod)
        X = (extended_generator(mod, 2, VECTOR, g).op
             + extended_generator(mod, -2, VECTOR, g).op)
        assert group_law_residual(X, 0.1, 0.2, g) <= 1e-8

    def test_overflow_reported(self, mod16):
        import warnings

        X = LinOp.identity(mod16).scale(1e4)
        with np.errstate(over="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            with pytest.raises(OverflowError):
                exponentiate(X, 100.0)


class TestGridReport:
    def test_cli_payload_shape(self):
        rep = defect_grid_report({"pairs": [[2, -2]], "h": ["1"], "D": [16]})
        row = rep["defect_grid"][0]
        assert row["m"] == 2 and row["n"] == -2 and row["D"] == 16
        assert row["tail_norms"][-1][0] == row["valid_window"]
