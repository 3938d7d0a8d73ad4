"""Independent balanced power-flow oracle.

Builds the positive-sequence network straight from the fixture JSON and
solves it with scipy's general root finder in rectangular coordinates.
Restricted to wye-g/wye-g transformers (the ieee39 fixture), which is all the
oracle is used for.
"""

import json

import numpy as np
from scipy.optimize import root


def solve_fixture(path):
    """Returns (bus ids, complex positive-sequence voltages) for a fixture."""
    with open(path) as f:
        data = json.load(f)
    sbase = data["mva_base"]
    buses = [b["id"] for b in data["buses"]]
    n = len(buses)
    pos = {b: k for k, b in enumerate(buses)}

    y = np.zeros((n, n), dtype=complex)
    for br in data.get("branches", []):
        i, j = pos[br["from"]], pos[br["to"]]
        ys = 1.0 / complex(br["z1"][0], br["z1"][1])
        b = 1j * br.get("b1", 0.0) / 2.0
        y[i, i] += ys + b
        y[j, j] += ys + b
        y[i, j] -= ys
        y[j, i] -= ys
    for tr in data.get("transformers", []):
        assert tr["connection"] == "wye-g/wye-g"
        i, j = pos[tr["from"]], pos[tr["to"]]
        yt = 1.0 / complex(tr.get("r", 0.0), tr["x"])
        a = tr.get("tap", 1.0)
        y[i, i] += yt / a**2
        y[j, j] += yt
        y[i, j] -= yt / a
        y[j, i] -= yt / a
    for ld in data.get("loads", []):
        assert ld.get("zip", [1, 0, 0])[0] == 1.0, "oracle supports constant-Z loads"
        k = pos[ld["bus"]]
        y[k, k] += (complex(ld["p_mw"], ld["q_mvar"]) / sbase).conjugate()

    slack = None
    pv = []
    for m in data.get("machines", []):
        rec = (pos[m["bus"]], m["p_mw"] / sbase, m["v_setpoint"])
        if m.get("slack"):
            slack = rec
        else:
            pv.append(rec)
    assert slack is not None and not data.get("sources")

    pq = [k for k in range(n)
          if k != slack[0] and k not in [g[0] for g in pv]]

    def unpack(x):
        v = np.zeros(n, dtype=complex)
        v[slack[0]] = slack[2]
        for t, (k, _, vset) in enumerate(pv):
            v[k] = vset * np.exp(1j * x[t])
        for t, k in enumerate(pq):
            v[k] = complex(x[len(pv) + 2 * t], x[len(pv) + 2 * t + 1])
        return v

    def eqs(x):
        v = unpack(x)
        inj = y @ v
        out = []
        for k, p_set, _ in pv:
            out.append((v[k] * inj[k].conjugate()).real - p_set)
        for k in pq:
            out.append(inj[k].real)
            out.append(inj[k].imag)
        return out

    x0 = np.concatenate([np.zeros(len(pv)), np.tile([1.0, 0.0], len(pq))])
    sol = root(eqs, x0, method="hybr", tol=1e-12)
    assert sol.success, sol.message
    return buses, unpack(sol.x)
