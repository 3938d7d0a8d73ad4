"""Unbalanced phase-coordinate network solver.

Nodes are (bus, phase) pairs; buses joined by closed switches collapse into
one electrical supernode.  Constant-impedance load fractions are stamped into
the admittance matrix; constant-current and constant-power fractions enter the
Newton mismatch.  Fixed-voltage buses (sources and machine terminals) bound
the solve, everything else is eliminated.

Below ``LOW_VOLTAGE_PU`` the I and P load fractions convert to constant
impedance so faulted solves stay bounded.
"""

from dataclasses import dataclass, field
from math import sqrt

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .frames import Phasor, ThreePhasePhasor
from .netmodel import PHASES, closed_switch_groups, energized_islands

LOW_VOLTAGE_PU = 0.4

_ALPHA = complex(-0.5, sqrt(3.0) / 2.0)                      # e^{j 2pi/3}
_POS_SEQ = np.array([1.0 + 0j, _ALPHA.conjugate(), _ALPHA])  # phase shifts of a balanced set
_SQRT3 = sqrt(3.0)
_DELTA = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [-1.0, 0.0, 1.0]])


class NonConvergence(RuntimeError):
    """Network iteration failed to reach tolerance."""


class UnsourcedIsland(RuntimeError):
    """An energized island contains no fixed-voltage bus."""


class NodeIndex:
    """Row numbering of energized (supernode, phase) nodes."""

    def __init__(self, net):
        self.merge = closed_switch_groups(net)
        self.islands = energized_islands(net)
        energized = set()
        for isl in self.islands:
            if isl.energized:
                energized |= isl.buses
        self.energized_buses = energized

        self.rows = {}
        order = []
        for bus_id, bus in net.buses.items():
            if bus_id not in energized:
                continue
            root = self.merge[bus_id]
            for ph in bus.phases:
                key = (root, ph)
                if key not in self.rows:
                    self.rows[key] = len(order)
                    order.append(key)
        self.order = order
        self.n = len(order)

    def row_of(self, bus, phase):
        return self.rows.get((self.merge[bus], phase))


@dataclass
class PhaseYbus:
    matrix: sp.csc_matrix
    index: NodeIndex
    _cache: dict = field(default_factory=dict, repr=False)


@dataclass
class NetworkSolution:
    voltages: dict                 # bus -> ThreePhasePhasor (zeros when dead)
    currents: dict                 # fixed bus -> ThreePhasePhasor flowing out
    iterations: int
    max_mismatch: float
    free_values: np.ndarray = None # complex free-node vector, for warm starts


def _stamp_block(entries, rows_f, rows_t, yff, yft, ytf, ytt):
    nf, nt = len(rows_f), len(rows_t)
    for i in range(nf):
        ri = rows_f[i]
        if ri is None:
            continue
        for j in range(nf):
            rj = rows_f[j]
            if rj is not None and yff[i, j] != 0:
                entries.append((ri, rj, yff[i, j]))
        for j in range(nt):
            rj = rows_t[j]
            if rj is not None and yft[i, j] != 0:
                entries.append((ri, rj, yft[i, j]))
    for i in range(nt):
        ri = rows_t[i]
        if ri is None:
            continue
        for j in range(nf):
            rj = rows_f[j]
            if rj is not None and ytf[i, j] != 0:
                entries.append((ri, rj, ytf[i, j]))
        for j in range(nt):
            rj = rows_t[j]
            if rj is not None and ytt[i, j] != 0:
                entries.append((ri, rj, ytt[i, j]))


# A delta winding blocks zero-sequence current, so a bus served only through
# one has a floating zero-sequence potential and the admittance matrix goes
# singular.  This small grounding conductance pins it without measurable
# effect on the solution (orders below the solver tolerance).
DELTA_GROUNDING = 1e-6


def _transformer_blocks(tr):
    y = 1.0 / tr.z
    a = tr.tap
    eye = np.eye(3, dtype=complex)
    if tr.connection == "wye-g/wye-g":
        return (y / a**2) * eye, (-y / a) * eye, (-y / a) * eye, y * eye
    if tr.connection == "delta/wye-g":
        ypp = (y / (3.0 * a**2)) * (_DELTA.T @ _DELTA) + DELTA_GROUNDING * eye
        yps = (-y / (_SQRT3 * a)) * _DELTA.T
        return ypp.astype(complex), yps.astype(complex), yps.T.copy(), y * eye
    if tr.connection == "wye-g/delta":
        yss = (y / 3.0) * (_DELTA.T @ _DELTA) + DELTA_GROUNDING * eye
        yps = (-y / (_SQRT3 * a)) * _DELTA
        return (y / a**2) * eye, yps.astype(complex), yps.T.copy(), yss.astype(complex)
    if tr.connection == "single-phase":
        one = np.array([[1.0 + 0j]])
        return (y / a**2) * one, (-y / a) * one, (-y / a) * one, y * one
    raise ValueError("unsupported transformer connection %r" % tr.connection)


def assemble_ybus(net, fault_shunts=None):
    """Stamp all live elements into the phase-node admittance matrix.

    ``fault_shunts`` maps (bus, phase) to an added shunt admittance in p.u.
    """
    idx = NodeIndex(net)
    entries = []

    for br in net.branches:
        if not br.in_service:
            continue
        rows_f = [idx.row_of(br.from_bus, ph) for ph in br.phases]
        rows_t = [idx.row_of(br.to_bus, ph) for ph in br.phases]
        yser = np.linalg.inv(br.z)
        half = 0.5 * br.ysh
        _stamp_block(entries, rows_f, rows_t, yser + half, -yser, -yser, yser + half)

    for tr in net.transformers:
        ypp, yps, ysp, yss = _transformer_blocks(tr)
        phs = tr.phase if tr.connection == "single-phase" else PHASES
        rows_f = [idx.row_of(tr.from_bus, ph) for ph in phs]
        rows_t = [idx.row_of(tr.to_bus, ph) for ph in phs]
        _stamp_block(entries, rows_f, rows_t, ypp, yps, ysp, yss)

    for ld in net.loads:
        for ph, s0 in ld.s_nom.items():
            row = idx.row_of(ld.bus, ph)
            if row is not None:
                z_frac = ld.zip_frac[ph][0]
                if z_frac:
                    entries.append((row, row, (s0 * z_frac).conjugate()))

    if fault_shunts:
        for (bus, ph), y in fault_shunts.items():
            row = idx.row_of(bus, ph)
            if row is not None:
                entries.append((row, row, y))

    if entries:
        r, c, v = zip(*entries)
        mat = sp.coo_matrix((v, (r, c)), shape=(idx.n, idx.n), dtype=complex).tocsc()
    else:
        mat = sp.csc_matrix((idx.n, idx.n), dtype=complex)
    return PhaseYbus(matrix=mat, index=idx)


def _power_terms(net, idx):
    """Aggregate per-row power-type terms: constant injections and the
    I/P fractions of ZIP loads (Z fractions live in the Y matrix)."""
    s_i = np.zeros(idx.n, dtype=complex)
    s_p = np.zeros(idx.n, dtype=complex)
    s_c = np.zeros(idx.n, dtype=complex)
    for ld in net.loads:
        for ph, s0 in ld.s_nom.items():
            row = idx.row_of(ld.bus, ph)
            if row is not None:
                _, i_frac, p_frac = ld.zip_frac[ph]
                s_i[row] += s0 * i_frac
                s_p[row] += s0 * p_frac
    for inj in net.injections:
        for ph, s0 in inj.s.items():
            row = idx.row_of(inj.bus, ph)
            if row is not None:
                s_c[row] += s0
    return s_i, s_p, s_c


def _power_currents(v, s_i, s_p, s_c, vmin=LOW_VOLTAGE_PU):
    """Net power-defined current injection and its Wirtinger derivatives."""
    u = np.maximum(np.abs(v), 1e-12)
    low = u < vmin
    g_i = np.where(low, u * u / vmin, u)
    g_p = np.where(low, (u / vmin) ** 2, 1.0)
    dg_i = np.where(low, 2.0 * u / vmin, 1.0)
    dg_p = np.where(low, 2.0 * u / (vmin * vmin), 0.0)
    s_net = s_c - (s_i * g_i + s_p * g_p)
    ds = -(s_i * dg_i + s_p * dg_p)
    cur = s_net.conjugate() * v / (u * u)
    c1 = ds.conjugate() / (2.0 * u)
    c2 = ds.conjugate() * v * v / (2.0 * u**3) - s_net.conjugate() * v * v / u**4
    return cur, c1, c2


def _fixed_rows_and_values(net, idx, fixed):
    rows, vals = [], []
    seen_roots = {}
    for bus, phasors in fixed.items():
        if bus not in idx.energized_buses:
            continue
        root = idx.merge[bus]
        if root in seen_roots and seen_roots[root] != bus:
            raise ValueError(
                "buses %r and %r are switch-connected but both have fixed voltages"
                % (seen_roots[root], bus)
            )
        seen_roots[root] = bus
        for ph in net.buses[bus].phases:
            p = phasors.phase(ph)
            if p is None:
                raise ValueError("fixed bus %r is missing phase %s" % (bus, ph))
            row = idx.row_of(bus, ph)
            if row is not None:
                rows.append(row)
                vals.append(p.to_complex())
    return np.array(rows, dtype=int), np.array(vals, dtype=complex)


def _check_sourced(idx, fixed):
    fixed_set = set(fixed)
    for isl in idx.islands:
        if isl.energized and not (isl.buses & fixed_set):
            raise UnsourcedIsland(
                "energized island containing bus %r has no fixed-voltage bus"
                % sorted(isl.buses)[0]
            )


def solve_network(net, fixed, ybus=None, warm_start=None, tol=1e-8, max_iter=50):
    """Solve the algebraic network with the given fixed-voltage phasors.

    Returns a NetworkSolution with KCL residual below ``tol`` at every free
    node, the currents flowing out of each fixed bus, and exact zeros on
    de-energized islands.
    """
    if ybus is None:
        ybus = assemble_ybus(net)
    idx = ybus.index
    _check_sourced(idx, fixed)

    fixed_rows, vfix = _fixed_rows_and_values(net, idx, fixed)
    key = tuple(fixed_rows.tolist())
    cached = ybus._cache.get("partition")
    if cached is not None and cached[0] == key:
        _, free_rows, yff, yfs, lu = cached
    else:
        mask = np.ones(idx.n, dtype=bool)
        mask[fixed_rows] = False
        free_rows = np.nonzero(mask)[0]
        yff = ybus.matrix[free_rows][:, free_rows]
        yfs = ybus.matrix[free_rows][:, fixed_rows]
        lu = spla.splu(yff.tocsc()) if free_rows.size else None
        ybus._cache["partition"] = (key, free_rows, yff, yfs, lu)

    s_i, s_p, s_c = _power_terms(net, idx)
    nonlinear = bool(
        np.any(s_i[free_rows] != 0) or np.any(s_p[free_rows] != 0) or np.any(s_c[free_rows] != 0)
    )

    rhs_fixed = -yfs.dot(vfix) if free_rows.size else np.zeros(0, dtype=complex)
    iterations = 0
    if free_rows.size == 0:
        vf = np.zeros(0, dtype=complex)
        mism = 0.0
    elif not nonlinear:
        vf = lu.solve(rhs_fixed)
        resid = rhs_fixed - yff.dot(vf)
        mism = float(np.max(np.abs(resid))) if resid.size else 0.0
    else:
        iterations, vf, mism = _newton_free(
            net, idx, ybus, free_rows, fixed_rows, vfix, yff, yfs,
            s_i, s_p, s_c, warm_start, tol, max_iter,
        )

    # Scatter to the full node vector.
    vall = np.zeros(idx.n, dtype=complex)
    if free_rows.size:
        vall[free_rows] = vf
    vall[fixed_rows] = vfix

    cur_all, _, _ = _power_currents(vall, s_i, s_p, s_c)
    inet = ybus.matrix.dot(vall)

    voltages = {}
    for bus_id, bus in net.buses.items():
        if bus_id not in idx.energized_buses:
            voltages[bus_id] = ThreePhasePhasor(
                **{p.lower(): Phasor(0.0, 0.0) for p in bus.phases}
            )
            continue
        kw = {}
        for ph in bus.phases:
            row = idx.row_of(bus_id, ph)
            kw[ph.lower()] = Phasor.from_complex(vall[row])
        voltages[bus_id] = ThreePhasePhasor(**kw)

    currents = {}
    for bus in fixed:
        if bus not in idx.energized_buses:
            currents[bus] = ThreePhasePhasor(
                **{p.lower(): Phasor(0.0, 0.0) for p in net.buses[bus].phases}
            )
            continue
        kw = {}
        for ph in net.buses[bus].phases:
            row = idx.row_of(bus, ph)
            kw[ph.lower()] = Phasor.from_complex(inet[row] - cur_all[row])
        currents[bus] = ThreePhasePhasor(**kw)

    return NetworkSolution(
        voltages=voltages,
        currents=currents,
        iterations=iterations,
        max_mismatch=mism,
        free_values=vf,
    )


def _flat_start(net, idx, free_rows, fixed_rows, vfix):
    """Per island, seed free nodes from the island's fixed-bus phasors."""
    vall = np.zeros(idx.n, dtype=complex)
    vall[fixed_rows] = vfix
    # Representative fixed value per (island root set, phase).
    by_phase = {}
    row_to_key = {row: key for key, row in idx.rows.items()}
    island_of = {}
    for k, isl in enumerate(idx.islands):
        for b in isl.buses:
            island_of[b] = k
    for row, v in zip(fixed_rows, vfix):
        root, ph = row_to_key[row]
        by_phase.setdefault((island_of[root], ph), v)
    for row in free_rows:
        root, ph = row_to_key[row]
        vall[row] = by_phase.get((island_of[root], ph), 1.0 + 0j)
    return vall


def _newton_free(net, idx, ybus, free_rows, fixed_rows, vfix, yff, yfs,
                 s_i, s_p, s_c, warm_start, tol, max_iter):
    n = free_rows.size
    if warm_start is not None and warm_start.size == n:
        vf = warm_start.astype(complex).copy()
    else:
        vf = _flat_start(net, idx, free_rows, fixed_rows, vfix)[free_rows]

    si, sp_, sc = s_i[free_rows], s_p[free_rows], s_c[free_rows]
    g = yff.real.tocsc()
    b = yff.imag.tocsc()
    rhs_fixed = -yfs.dot(vfix)

    def mismatch(v):
        cur, c1, c2 = _power_currents(v, si, sp_, sc)
        return cur + rhs_fixed - yff.dot(v), c1, c2

    f, c1, c2 = mismatch(vf)
    norm = float(np.max(np.abs(f)))
    for it in range(1, max_iter + 1):
        if norm < tol:
            return it - 1, vf, norm
        d_a = c1 + c2
        d_b = 1j * (c1 - c2)
        jac = sp.bmat(
            [
                [-g + sp.diags(d_a.real), b + sp.diags(d_b.real)],
                [-b + sp.diags(d_a.imag), -g + sp.diags(d_b.imag)],
            ],
            format="csc",
        )
        step = spla.spsolve(jac, -np.concatenate([f.real, f.imag]))
        dv = step[:n] + 1j * step[n:]
        scale = 1.0
        for _ in range(8):
            vt = vf + scale * dv
            ft, c1t, c2t = mismatch(vt)
            nt = float(np.max(np.abs(ft)))
            if nt < norm or nt < tol:
                vf, f, c1, c2, norm = vt, ft, c1t, c2t, nt
                break
            scale *= 0.5
        else:
            raise NonConvergence(
                "network Newton stalled at mismatch %.3e after %d iterations" % (norm, it)
            )
    raise NonConvergence(
        "network Newton did not reach %.1e in %d iterations (mismatch %.3e)"
        % (tol, max_iter, norm)
    )


# ---------------------------------------------------------------------------
# balanced initial power flow

def _positive_sequence_matrix(net, ybus):
    """Reduce the 3-phase Y matrix to positive sequence per supernode.

    Requires every energized bus to carry all three phases (balanced network
    data is a precondition of initialization).
    """
    idx = ybus.index
    roots = []
    root_rows = {}
    for (root, ph), row in idx.rows.items():
        root_rows.setdefault(root, {})[ph] = row
    for root, phmap in root_rows.items():
        if set(phmap) != set(PHASES):
            raise NonConvergence(
                "initial power flow requires three-phase buses; supernode of %r is %s"
                % (root, sorted(phmap))
            )
        roots.append(root)
    roots.sort(key=lambda r: min(idx.rows[(r, ph)] for ph in PHASES))

    dense = ybus.matrix.toarray()
    n1 = len(roots)
    y1 = np.zeros((n1, n1), dtype=complex)
    a = _POS_SEQ
    for i, ri in enumerate(roots):
        rows_i = [root_rows[ri][ph] for ph in PHASES]
        for j, rj in enumerate(roots):
            rows_j = [root_rows[rj][ph] for ph in PHASES]
            block = dense[np.ix_(rows_i, rows_j)]
            y1[i, j] = (a.conjugate() @ block @ a) / 3.0
    return roots, y1


def _aggregate_sequence_loads(net, idx, roots):
    """Per supernode: mean per-phase I/P load terms and constant injections."""
    pos = {r: k for k, r in enumerate(roots)}
    n1 = len(roots)
    s_i = np.zeros(n1, dtype=complex)
    s_p = np.zeros(n1, dtype=complex)
    s_c = np.zeros(n1, dtype=complex)
    for ld in net.loads:
        if ld.bus not in idx.energized_buses:
            continue
        k = pos[idx.merge[ld.bus]]
        for ph, s0 in ld.s_nom.items():
            _, i_frac, p_frac = ld.zip_frac[ph]
            s_i[k] += s0 * i_frac / 3.0
            s_p[k] += s0 * p_frac / 3.0
    for inj in net.injections:
        if inj.bus not in idx.energized_buses:
            continue
        k = pos[idx.merge[inj.bus]]
        for s0 in inj.s.values():
            s_c[k] += s0 / 3.0
    return s_i, s_p, s_c


def _sequence_newton(y1, vmag, vang, kinds, p_spec, s_i, s_p, s_c,
                     tol=1e-10, max_iter=50):
    """Polar Newton power flow on the positive-sequence network.

    kinds: 0 = fixed (slack/source), 1 = PV (angle free), 2 = PQ.
    p_spec holds generated P at PV nodes.  Loads enter through s_i/s_p
    (voltage dependent) and s_c (constant injections).
    """
    n = len(vmag)
    ang_idx = [k for k in range(n) if kinds[k] != 0]
    mag_idx = [k for k in range(n) if kinds[k] == 2]
    if not ang_idx and not mag_idx:
        return vmag, vang, 0

    g, b = y1.real, y1.imag
    norm = np.inf
    for it in range(max_iter + 1):
        v = vmag * np.exp(1j * vang)
        s_calc = v * (y1 @ v).conjugate()
        s_load = s_i * vmag + s_p  # I and P portions at current magnitude
        s_inj = s_c - s_load
        dp = p_spec + s_inj.real - s_calc.real
        dq = s_inj.imag - s_calc.imag
        f = np.concatenate([dp[ang_idx], dq[mag_idx]])
        norm = float(np.max(np.abs(f)))
        if norm < tol:
            return vmag, vang, it
        if it == max_iter:
            break

        th = vang[:, None] - vang[None, :]
        ct, st = np.cos(th), np.sin(th)
        vv = vmag[:, None] * vmag[None, :]
        h_full = vv * (g * st - b * ct)        # dP/dtheta off-diagonal
        n_full = vmag[:, None] * (g * ct + b * st)  # dP/dV
        j_full = -vv * (g * ct + b * st)       # dQ/dtheta
        l_full = vmag[:, None] * (g * st - b * ct)  # dQ/dV
        p_calc, q_calc = s_calc.real, s_calc.imag
        kk = np.arange(n)
        h_full[kk, kk] = -q_calc - b.diagonal() * vmag**2
        n_full[kk, kk] = p_calc / vmag + g.diagonal() * vmag
        j_full[kk, kk] = p_calc - g.diagonal() * vmag**2
        l_full[kk, kk] = q_calc / vmag - b.diagonal() * vmag
        # Voltage dependence of the I-portion of the load.
        n_full[kk, kk] += s_i.real
        l_full[kk, kk] += s_i.imag

        jac = np.block(
            [
                [h_full[np.ix_(ang_idx, ang_idx)], n_full[np.ix_(ang_idx, mag_idx)]],
                [j_full[np.ix_(mag_idx, ang_idx)], l_full[np.ix_(mag_idx, mag_idx)]],
            ]
        )
        try:
            step = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError as exc:
            raise NonConvergence("singular Jacobian in initial power flow: %s" % exc) from None
        na = len(ang_idx)
        vang[ang_idx] += step[:na]
        vmag[mag_idx] += step[na:]
        if np.any(vmag[mag_idx] <= 0.0):
            raise NonConvergence("initial power flow produced non-positive voltage magnitude")
    raise NonConvergence("initial power flow did not converge (mismatch %.3e)" % norm)


def initial_powerflow(net, dispatch=None):
    """Balanced pre-disturbance power flow.

    ``dispatch`` optionally overrides machine (P_mw, V_setpoint) pairs by
    machine id.  Returns (NetworkSolution, conditions) where conditions maps
    machine id to (terminal ThreePhasePhasor, P_pu, Q_pu) ready for machine
    initialization.
    """
    ybus = assemble_ybus(net)
    idx = ybus.index
    roots, y1 = _positive_sequence_matrix(net, ybus)
    pos = {r: k for k, r in enumerate(roots)}
    s_i, s_p, s_c = _aggregate_sequence_loads(net, idx, roots)

    n1 = len(roots)
    kinds = np.full(n1, 2, dtype=int)
    vmag = np.ones(n1)
    vang = np.zeros(n1)
    p_spec = np.zeros(n1)

    for src in net.sources:
        if src.bus not in idx.energized_buses:
            continue
        k = pos[idx.merge[src.bus]]
        kinds[k] = 0
        pa = src.phasors.a
        vmag[k], vang[k] = pa.magnitude, pa.angle

    dispatch = dispatch or {}
    machines = [m for m in net.machines if m.bus in idx.energized_buses]
    for m in machines:
        k = pos[idx.merge[m.bus]]
        if kinds[k] != 2:
            raise ValueError("machine %r shares an electrical node with another fixed device" % m.id)
        p_mw, vset = dispatch.get(m.id, (m.p_mw, m.v_setpoint))
        vmag[k] = vset
        kinds[k] = 1
        p_spec[k] = p_mw / net.mva_base

    # Every energized island needs one angle reference: a source if present,
    # else the island's slack-flagged (or first) machine.
    island_of_root = {}
    for isl_no, isl in enumerate(idx.islands):
        for bus in isl.buses:
            island_of_root[idx.merge[bus]] = isl_no
    islands_with_ref = {island_of_root[r] for r in roots if kinds[pos[r]] == 0}
    for isl_no, isl in enumerate(idx.islands):
        if not isl.energized or isl_no in islands_with_ref:
            continue
        cands = [m for m in machines if island_of_root[idx.merge[m.bus]] == isl_no]
        if not cands:
            raise UnsourcedIsland("energized island without source or machine")
        slack = next((m for m in cands if m.slack), cands[0])
        kinds[pos[idx.merge[slack.bus]]] = 0
        islands_with_ref.add(isl_no)

    # Linear start for the PQ nodes, with sources and PV machines pinned:
    # propagates transformer phase shifts and taps, without which Newton can
    # start 30 degrees off and diverge.
    fixed_k = np.nonzero(kinds != 2)[0]
    free_k = np.nonzero(kinds == 2)[0]
    if free_k.size:
        vfix0 = vmag[fixed_k] * np.exp(1j * vang[fixed_k])
        yff = y1[np.ix_(free_k, free_k)]
        vfree0 = np.linalg.solve(yff, -y1[np.ix_(free_k, fixed_k)] @ vfix0)
        vang[free_k] = np.angle(vfree0)
        vmag[free_k] = np.abs(vfree0)

    vmag, vang, _ = _sequence_newton(y1, vmag, vang, kinds, p_spec, s_i, s_p, s_c)

    fixed = {}
    for src in net.sources:
        fixed[src.bus] = src.phasors
    for m in machines:
        k = pos[idx.merge[m.bus]]
        fixed.setdefault(m.bus, ThreePhasePhasor.balanced(vmag[k], vang[k]))

    sol = solve_network(net, fixed, ybus=ybus)

    conditions = {}
    for m in machines:
        term = sol.voltages[m.bus]
        cur = sol.currents[m.bus]
        s = 0j
        for ph in PHASES:
            s += term.phase(ph).to_complex() * cur.phase(ph).to_complex().conjugate()
        s /= 3.0
        conditions[m.id] = (term, s.real, s.imag)
    return sol, conditions
