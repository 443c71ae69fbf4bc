"""Regenerate the golden regression files under tests/golden/.

Goldens freeze probe and defect reports after a manually verified run;
re-runs must reproduce them bit-exactly.
"""

import json
import os

from droem.cutoff import CutoffSpec, nonlinear_sl2_probe
from droem.symmetries import defect, shapovalov_form
from droem.verma import make_module

GOLDEN = os.path.join(os.path.dirname(__file__), "..", "tests", "golden")


def probe_goldens():
    for h, N in [("1/2", 3), ("1", 2), ("1", 3)]:
        mod = make_module(h, 12)
        probe = nonlinear_sl2_probe(mod, CutoffSpec.for_module(mod, N))
        payload = json.dumps(probe, indent=2, sort_keys=True, default=str)
        name = f"probe_h{h.replace('/', '_')}_N{N}_D12.json"
        with open(os.path.join(GOLDEN, name), "w") as fh:
            fh.write(payload)
        print("wrote", name)


def defect_goldens():
    mod = make_module(1, 32)
    g = shapovalov_form(mod)
    rep = defect(mod, 2, -2, gram=g)
    payload = json.dumps({
        "m": rep.m, "n": rep.n, "h": rep.h, "D": rep.D, "hbar": rep.hbar,
        "tail_norms": [[d, gw, raw] for (d, gw, raw) in rep.tail_norms],
        "convergence_indicator": rep.convergence_indicator,
        "valid_window": rep.valid_window,
    }, indent=2, sort_keys=True)
    with open(os.path.join(GOLDEN, "defect_2_-2_h1_D32.json"), "w") as fh:
        fh.write(payload)
    print("wrote defect_2_-2_h1_D32.json")


if __name__ == "__main__":
    os.makedirs(GOLDEN, exist_ok=True)
    probe_goldens()
    defect_goldens()
