"""Acceptance gate: every primary criterion at its stated tolerance.

Each test prints one pass/fail line (collected into the terminal summary).
Exact-arithmetic criteria carry zero tolerance; measured criteria pin the
tolerances stated with them.
"""

import json
import os
import time
from fractions import Fraction

import numpy as np

from conftest import record_criterion

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


def test_sl2_relations_grid():
    from droem.verma import commutator, make_module, sl2_generator

    t0 = time.perf_counter()
    D = 16
    for h in ("1/2", "3/4", "1", "5/2"):
        mod = make_module(h, D)
        g = {k: sl2_generator(mod, k) for k in (-1, 0, 1)}
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                if not -1 <= i + j <= 1:
                    continue
                dif = commutator(g[i], g[j]) - g[i + j].scale(Fraction(i - j))
                assert dif.is_zero_below(14), (h, i, j)
    elapsed = time.perf_counter() - t0
    record_criterion("sl2 relations (4 weights, D=16, degrees <= 14, zero tolerance)",
                     True, f"{elapsed:.2f}s")
    assert elapsed < 1.0


def test_w1_relations():
    from droem.verma import commutator, make_module, vector_field_generator

    t0 = time.perf_counter()
    D = 16
    mod = make_module("3/4", D)
    for i in range(2, 5):
        for j in range(2, 5):
            dif = commutator(vector_field_generator(mod, i),
                             vector_field_generator(mod, j)) \
                - vector_field_generator(mod, i + j).scale(Fraction(i - j))
            assert dif.is_zero_below(D), (i, j)
    elapsed = time.perf_counter() - t0
    record_criterion("W1 relations (2<=i,j<=4, D=16, full valid window, zero tolerance)",
                     True, f"{elapsed:.2f}s")
    assert elapsed < 1.0


def test_primary_field_solver():
    from droem.fields import canonical_primary_field
    from droem.verma import make_module

    t0 = time.perf_counter()
    mod = make_module("3/4", 12)
    for spin in (1, 2):
        field, report = canonical_primary_field(mod, spin)
        assert len(field.modes) >= 5
        assert report.all_exact, [c for c in report.checks if not c.exact_zero]
    elapsed = time.perf_counter() - t0
    record_criterion("primary-field solver (spins 1,2, 25 modes, D=12, exact residuals)",
                     True, f"{elapsed:.2f}s")
    assert elapsed < 10.0


def test_renormalized_product():
    import random

    from droem.fields import (LaurentOpField, canonical_primary_field,
                              identity_field, local_product, ope_structure, smear)
    from droem.verma import LinOp, make_module

    t0 = time.perf_counter()
    mod = make_module("3/4", 12)
    unit = identity_field(mod)
    rng = random.Random(2024)
    pairs_checked = 0

    def random_laurent(lo, hi, k=3):
        return {a: Fraction(rng.randint(-4, 4)) for a in rng.sample(range(lo, hi), k)}

    for spin in (1, 2):
        V, _ = canonical_primary_field(mod, spin)
        structure, report = ope_structure(unit, V, [V], window=(0, 1))
        assert report.closed and report.residual2 == 0
        for _ in range(8):
            f = random_laurent(-3, 4)
            g = random_laurent(-4, 5)
            out = local_product(unit, f, V, g, structure)
            direct = smear(unit, f) @ smear(V, g)
            w = min(out.exact_below, direct.exact_below)
            assert out.equal_below(direct, w)
            pairs_checked += 1

    # singular-free banded closure with genuine (x-y)^j structure terms
    E = LinOp.band(mod, 1, [Fraction(1)] * 13)
    F = LinOp.band(mod, -1, [Fraction(i) for i in range(13)])
    EF = E @ F
    A = LaurentOpField(mod, {2: E}, label="A")
    B = LaurentOpField(mod, {1: F}, label="B")
    cands = [LaurentOpField(mod, {3 - j: EF}, label=f"C{j}") for j in range(3)]
    structure, report = ope_structure(A, B, cands, window=(0, 2))
    assert report.closed and report.residual2 == 0
    for _ in range(8):
        f = random_laurent(-4, 3)
        g = random_laurent(-3, 3)
        out = local_product(A, f, B, g, structure)
        direct = smear(A, f) @ smear(B, g)
        w = min(out.exact_below, direct.exact_below)
        assert out.equal_below(direct, w)
        pairs_checked += 1

    elapsed = time.perf_counter() - t0
    assert pairs_checked >= 20
    record_criterion(f"renormalized product equals composition "
                     f"({pairs_checked} random (f,g) pairs, D=12, exact)",
                     True, f"{elapsed:.2f}s")
    assert elapsed < 30.0


def test_cutoff_suite():
    from droem.cutoff import (CutoffSpec, cutoff_current, nonlinear_sl2_probe,
                              solve_cutoff_dilatation)
    from droem.errors import DegenerateDifferenceError
    from droem.verma import LinOp, commutator, make_module

    t0 = time.perf_counter()
    D = 12
    exact_points = []
    excluded = []
    for h in ("1/2", "1"):
        for N in (1, 2, 3):
            mod = make_module(h, D)
            spec = CutoffSpec.for_module(mod, N)
            try:
                L1cut, _ = solve_cutoff_dilatation(mod, spec)
            except DegenerateDifferenceError:
                # (h=1, N=2): (Delta_+ P)(2) = 0; the relation is provably
                # unsatisfiable by any operator on degrees <= D-1, so the
                # operation's precondition excludes this grid point.
                excluded.append((h, N))
                continue
            dif = commutator(L1cut, cutoff_current(mod, spec, -1)) - LinOp.identity(mod)
            assert dif.is_zero_below(D - 1), (h, N)
            exact_points.append((h, N))

    assert exact_points == [("1/2", 1), ("1/2", 2), ("1/2", 3), ("1", 1), ("1", 3)]
    assert excluded == [("1", 2)]

    # golden-file regression: probe reports reproduce bit-exactly
    for h, N in [("1/2", 3), ("1", 2), ("1", 3)]:
        mod = make_module(h, D)
        probe = nonlinear_sl2_probe(mod, CutoffSpec.for_module(mod, N))
        payload = json.dumps(probe, indent=2, sort_keys=True, default=str)
        name = f"probe_h{h.replace('/', '_')}_N{N}_D12.json"
        with open(os.path.join(GOLDEN_DIR, name)) as fh:
            assert fh.read() == payload, f"golden drift in {name}"

    elapsed = time.perf_counter() - t0
    record_criterion("cut-off suite ([L1cut,J-1cut]=Id exact on 5/6 grid points; "
                     "(h=1,N=2) precondition-degenerate as specified; goldens bit-exact)",
                     True, f"{elapsed:.2f}s")


def test_theorem_2a_shadow():
    from droem.symmetries import asymptotic_scan, defect
    from droem.verma import make_module, shapovalov_form

    t0 = time.perf_counter()
    norms = {}
    for D in (32, 48):
        mod = make_module(1, D)
        g = shapovalov_form(mod)
        rep = defect(mod, 2, -2, gram=g)
        norms[D] = rep.window_norm(0, 12, g)
    rel_change = abs(norms[48] - norms[32]) / norms[48]
    assert rel_change <= 0.01

    rows = asymptotic_scan(["7/10", "3/5", "11/20"], [(2, -2)], D=48)
    exponent = rows[0].exponent
    assert 0.7 <= exponent <= 1.3
    elapsed = time.perf_counter() - t0
    record_criterion("Theorem-2A shadow (window[0,12] change "
                     f"{rel_change:.2e} <= 1%; hbar exponent {exponent:.3f} in [0.7,1.3])",
                     True, f"{elapsed:.2f}s")
    assert elapsed < 120.0


def test_theorem_2b_shadow():
    from droem.symmetries import VECTOR, extended_generator, group_law_residual
    from droem.verma import make_module, shapovalov_form

    t0 = time.perf_counter()
    mod = make_module(1, 24)
    g = shapovalov_form(mod)
    X = (extended_generator(mod, 2, VECTOR, g).op
         + extended_generator(mod, -2, VECTOR, g).op)
    worst = 0.0
    for t in (0.1, 0.2):
        for s in (0.1, 0.2):
            worst = max(worst, group_law_residual(X, t, s, g))
    assert worst <= 1e-8
    elapsed = time.perf_counter() - t0
    record_criterion(f"Theorem-2B shadow (group-law residual {worst:.2e} <= 1e-8, "
                     "X = rho(L2)+rho(L-2), D=24)", True, f"{elapsed:.2f}s")


def test_integrators():
    from droem.dynamics import EvolState, step_deterministic, step_stochastic

    t0 = time.perf_counter()
    # RK4 order on the constant-coefficient linear system
    a = 1.3
    A = a * np.eye(1, dtype=complex)
    dts = [0.2, 0.1, 0.05, 0.025]
    errs = []
    for dt in dts:
        st = EvolState.initial(np.array([1.0 + 0j]))
        for _ in range(round(1.0 / dt)):
            st = step_deterministic(st, lambda t: A, dt)
        errs.append(abs(st.phi[0] - np.exp(a)))
    order = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert order >= 3.8

    # scalar geometric SDE: mean within 3 SE at 10^4 paths
    a_s, b_s, T, dt, paths = 0.5, 0.3, 1.0, 0.0125, 10_000
    As = np.array([[a_s]], complex)
    Bs = [np.array([[b_s]], complex)]
    n = round(T / dt)
    finals = np.empty(paths)
    for p in range(paths):
        st = EvolState.initial(np.array([1.0 + 0j]), seed=50_000 + p)
        for _ in range(n):
            st = step_stochastic(st, As, Bs, dt)
        finals[p] = st.phi[0].real
    mean, se = finals.mean(), finals.std(ddof=1) / np.sqrt(paths)
    mean_ok = abs(mean - np.exp(a_s)) <= 3 * se
    assert mean_ok, f"mean {mean:.5f} vs {np.exp(a_s):.5f}, 3se {3 * se:.5f}"

    # weak order of the mean over a dt grid
    a_w, b_w = 1.0, 0.25
    biases = []
    grid = [0.2, 0.1, 0.05]
    for dt in grid:
        n = round(1.0 / dt)
        finals = np.empty(paths)
        for p in range(paths):
            st = EvolState.initial(np.array([1.0 + 0j]), seed=90_000 + p)
            for _ in range(n):
                st = step_stochastic(st, np.array([[a_w]], complex),
                                     [np.array([[b_w]], complex)], dt)
            finals[p] = st.phi[0].real
        biases.append(abs(finals.mean() - np.e))
    weak_order = np.polyfit(np.log(grid), np.log(biases), 1)[0]
    assert 0.7 <= weak_order <= 1.3, biases

    elapsed = time.perf_counter() - t0
    record_criterion(f"integrators (RK4 order {order:.2f} >= 3.8; SDE mean within 3 SE "
                     f"at 1e4 paths; weak order {weak_order:.2f} in [0.7,1.3])",
                     True, f"{elapsed:.1f}s")
    assert elapsed < 60.0


def test_dragging_masking_and_budget():
    from droem.render import (FiberSpec, Frame, MaskSpec, compose_fibers,
                              drag_mask, make_lattice, rasterize_state)

    lat = make_lattice(0.08, 0.01, 128, 128)
    rng = np.random.default_rng(8)
    img = rng.uniform(size=(1, 128, 128)).astype(np.float32)
    frame = Frame(128, 128, 1, img)

    ident = FiberSpec(0.0, MaskSpec("table", width=4.0, table=(1.0, 1.0)))
    out = drag_mask(frame, 0.3 + 0.2j, [ident], lat)
    assert np.array_equal(out.intensity, frame.intensity)

    spec = FiberSpec(0.55, MaskSpec("gaussian", 0.45))
    u = 0.2 - 0.25j
    out = drag_mask(frame, u, [spec], lat, nearest=True)
    worst = 0.0
    for _ in range(10):
        px, py = rng.integers(6, 122, size=2)
        x = lat.pixel_to_complex(px, py)
        sx, sy = lat.complex_to_pixel(x - spec.gamma * u)
        si, sj = int(round(sy)), int(round(sx))
        val = img[0, si, sj] if 0 <= si < 128 and 0 <= sj < 128 else 0.0
        expected = spec.mask(abs(x - u)) * val
        worst = max(worst, abs(out.intensity[0, py, px] - expected))
    assert worst <= 1e-6

    coeffs = rng.normal(size=17) + 1j * rng.normal(size=17)
    fibers = [FiberSpec(0.3, MaskSpec("gaussian", 0.5)),
              FiberSpec(0.6, MaskSpec("raised-cosine", 0.6))]
    palette = [(1, 0.2, 0.1), (0.1, 0.9, 0.3)]

    def pipeline():
        base = rasterize_state(coeffs, lat)
        tiled = Frame(128, 128, 2, np.repeat(base.intensity, 2, axis=0))
        compose_fibers(drag_mask(tiled, 0.2 + 0.1j, fibers, lat), palette)

    pipeline()
    times = []
    for _ in range(5):
        t1 = time.perf_counter()
        pipeline()
        times.append(time.perf_counter() - t1)
    best = min(times)
    assert best <= 0.008
    record_criterion(f"dragging/masking (identity exact; oracle dev {worst:.1e} <= 1e-6; "
                     f"pipeline {best * 1e3:.1f} ms <= 8 ms at 128x128x2)", True)


def test_reproducibility(tmp_path):
    from droem.session.cli import main
    from droem.session.record import RunRecord

    cfg = {
        "h": "3/4", "D": 10, "N": 3, "angular_order": 2,
        "schedules": [{"base": 0.3, "amp": 0.1, "freq_hz": 0.5}, {"base": 0.1}],
        "dt": 0.02, "frame_every": 4, "duration": 0.6, "seed": 31337,
        "lattice": {"delta_i": 0.08, "delta_o": 0.01, "width": 48, "height": 48},
    }
    traj = [{"type": "gaze", "t": 0.03 * k + 1e-3,
             "u": [0.4 * np.cos(k), 0.4 * np.sin(k)],
             "du": [0.02, 0.01], "xi": [0.3]} for k in range(12)]
    cfg_path = tmp_path / "config.json"
    traj_path = tmp_path / "traj.jsonl"
    cfg_path.write_text(json.dumps(cfg))
    traj_path.write_text("\n".join(json.dumps(e) for e in traj) + "\n")

    for mode, noise in (("deterministic", []),
                        ("stochastic", [{"kind": "identity", "amplitude": 0.05}])):
        cfg["mode"] = mode
        cfg["noise"] = noise
        cfg_path.write_text(json.dumps(cfg))
        out1 = str(tmp_path / f"run-{mode}-1.jsonl")
        out2 = str(tmp_path / f"run-{mode}-2.jsonl")
        assert main(["simulate", "--config", str(cfg_path),
                     "--trajectory", str(traj_path), "--out", out1]) == 0
        assert main(["replay", "--run", out1, "--verify"]) == 0
        assert main(["simulate", "--config", str(cfg_path),
                     "--trajectory", str(traj_path), "--out", out2]) == 0
        r1, r2 = RunRecord.load(out1), RunRecord.load(out2)
        assert [s.get("state_fnv") for s in r1.steps] == \
               [s.get("state_fnv") for s in r2.steps]
        assert [s.get("frame_fnv") for s in r1.steps] == \
               [s.get("frame_fnv") for s in r2.steps]
    record_criterion("reproducibility (simulate+replay verify on deterministic and "
                     "stochastic runs; digests bit-identical across runs)", True)
