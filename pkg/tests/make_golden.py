"""Regenerate ``golden/oracle_values.json`` from the slow oracles.

Run from the repository root: ``python tests/make_golden.py``.  Every value
here comes from a route that shares no formulas with the fast paths.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from qpgreen import oracle
from qpgreen.latsums import all_indices
from qpgreen.lattice import build
from qpgreen.specfun import Phase, PhasedArgument

OUT = Path(__file__).parent / "golden" / "oracle_values.json"

SCHLOEMILCH = [
    {"case": "1in2", "basis": 1.0, "sigma": 0.4, "k_par": [2.5], "lmax": 3, "reach": 40.0},
    {"case": "1in3", "basis": 1.0, "sigma": 0.5, "k_par": [2.5], "lmax": 3, "reach": 40.0},
    # a propagating order sits 0.5 from grazing, so smaller damping and a cubic fit
    {"case": "1in3", "basis": 1.0, "sigma": 1.0, "k_par": [0.5], "lmax": 2, "reach": 40.0,
     "eps": [0.008, 0.006, 0.004, 0.002]},
]
GAMMA_ORDERS = [0.5, 0.0, -0.5, -1.0, -2.5, -4.0]
GAMMA_X = [0.003, 0.4, 1.5, 2.5, 6.0, 25.0]
D3 = [(3.0, 0.05, 2), (3.0, 0.05, 3), (1.2, 0.3, 2), (1.2, 0.3, 3)]


def cplx(z: complex) -> list[float]:
    return [z.real, z.imag]


def main() -> None:
    data: dict = {"schema_version": 1, "schloemilch": [], "inc_gamma": [], "d3": []}
    for inst in SCHLOEMILCH:
        lat = build(inst["case"], inst["basis"])
        idx = all_indices(lat.case, inst["lmax"])
        eps = inst.get("eps", oracle.DEFAULT_EPS)
        res = oracle.schloemilch_extrapolated(lat, inst["sigma"], inst["k_par"], idx, eps=eps, reach=inst["reach"])
        data["schloemilch"].append(
            {
                **inst,
                "values": [
                    {"l": i.l, "m": i.m, "value": cplx(res[i].value), "est_error": res[i].est_error} for i in idx
                ],
            }
        )
    for b in GAMMA_ORDERS:
        for x in GAMMA_X:
            for ph in Phase:
                r = oracle.inc_gamma_ray_quadrature(b, PhasedArgument(x, ph))
                data["inc_gamma"].append({"order": b, "x": x, "phase": ph.name, "value": cplx(r.value)})
    for sigma, eta, dim in D3:
        r = oracle.d3_limit_quadrature(sigma, eta, 1e-4, dim)
        data["d3"].append({"sigma": sigma, "eta": eta, "dimension": dim, "value": cplx(r.value), "est_error": r.est_error})
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
