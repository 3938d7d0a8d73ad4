"""Fixed-step partitioned simulation loop.

Each step alternates one network solve with one rotor integration per machine,
inputs frozen across the step.  Terminal voltage phasors are refreshed by
evaluating the machine stator equations at two instants eps apart near the end
of the step, rotating both to the abc frame, and recovering per-phase phasors
from the two samples.  Events snap to step boundaries and take effect in the
next network solve.

Within one step the machine advances are mutually independent (no shared
mutable state) and may run concurrently; the network solve is a barrier on
both sides.  The shipped loop executes them sequentially in machine order, so
results are bit-for-bit deterministic regardless of that contract.

Scenario files are JSON:

    {"duration_s": 2.0,
     "record": ["gen.G1", "bus.4"],          # optional, default everything
     "events": [
        {"time_s": 0.1, "action": "scale_load", "bus": "4", "multiplier": 3.0},
        {"time_cycles": 50, "action": "apply_fault", "bus": "M1",
         "phases": "A", "r_ohm": 0.2, "ref": "f1"},
        {"time_cycles": 60, "action": "switch", "id": "B1", "status": "open"},
        {"time_s": 1.0, "action": "clear_fault", "ref": "f1"},
        {"time_s": 1.0, "action": "set_injection", "bus": "T", "p_mw": 5.0,
         "q_mvar": 1.0}]}
"""

import json
from dataclasses import dataclass, field
from math import pi

import numpy as np

from . import machine as mc
from .frames import (
    Dq0Vector,
    SamplePair,
    ThreePhasePhasor,
    inverse_park_matrix,
    park_matrix,
    phasor_to_instant,
    recover_phasor,
)
from .netmodel import PHASES, ConstantInjection, apply_switch_action, zbase_ohm
from .powerflow import assemble_ybus, initial_powerflow, solve_network


class IntegrationError(RuntimeError):
    """Trapezoidal corrector failed to converge."""


class SimulationAborted(RuntimeError):
    """Solver failure mid-run; the partial trajectory is kept in .series."""

    def __init__(self, message, time_s, series):
        super().__init__(message)
        self.time_s = time_s
        self.series = series


@dataclass
class EngineConfig:
    duration: float
    dt: float = 1.0 / 240.0
    eps: float = None
    record: list = None            # [("gen"|"bus", id), ...]; None = everything
    corrector_tol: float = 1e-10
    corrector_max_iter: int = 10

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.eps is None:
            self.eps = self.dt / 20.0
        if not 0.0 < self.eps < self.dt / 10.0:
            raise ValueError("eps must satisfy 0 < eps < dt/10")
        if self.duration < 0.0:
            raise ValueError("duration must be >= 0")


@dataclass
class Event:
    time_s: float
    action: str
    params: dict = field(default_factory=dict)


@dataclass
class TimeSeries:
    time: np.ndarray
    data: dict                     # column name -> ndarray

    def columns(self):
        return list(self.data.keys())

    def __getitem__(self, name):
        return self.data[name]

    def to_csv(self, path):
        cols = self.columns()
        with open(path, "w") as f:
            f.write("time_s," + ",".join(cols) + "\n")
            for k in range(len(self.time)):
                vals = [self.time[k]] + [self.data[c][k] for c in cols]
                f.write(",".join("%.9g" % v for v in vals) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as f:
            header = f.readline().strip().split(",")
            if not header or header[0] != "time_s":
                raise ValueError("%s: first CSV column must be time_s" % path)
            rows = []
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                rows.append([float(x) for x in line.split(",")])
        arr = np.array(rows) if rows else np.zeros((0, len(header)))
        data = {name: arr[:, i + 1] for i, name in enumerate(header[1:])}
        return cls(time=arr[:, 0] if rows else np.zeros(0), data=data)


def parse_scenario(source):
    """Read a scenario from a path, dict or list of event dicts.

    Returns (events, meta) where meta may carry duration_s and record.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source) as f:
            data = json.load(f)
    else:
        data = source
    if isinstance(data, list):
        data = {"events": data}
    events = []
    for raw in data.get("events", []):
        raw = dict(raw)
        if "time_s" in raw:
            t = float(raw.pop("time_s"))
        elif "time_cycles" in raw:
            t = float(raw.pop("time_cycles")) / 60.0
        else:
            raise ValueError("event %r has neither time_s nor time_cycles" % raw)
        action = raw.pop("action")
        events.append(Event(time_s=t, action=action, params=raw))
    events.sort(key=lambda e: e.time_s)
    meta = {}
    if "duration_s" in data:
        meta["duration_s"] = float(data["duration_s"])
    if "record" in data:
        meta["record"] = [tuple(item.split(".", 1)) for item in data["record"]]
    return events, meta


def trapezoidal_step(f, x0, h, tol=1e-10, max_iter=10):
    """One implicit trapezoidal step, fixed-point corrector.

    Solves x1 = x0 + h/2 (f(x0) + f(x1)) starting from an explicit Euler
    predictor.  For dx/dt = a*x this reproduces the exact growth factor
    (1 + a*h/2)/(1 - a*h/2) at the fixed point.
    """
    x0 = np.asarray(x0, dtype=float)
    f0 = np.asarray(f(x0))
    base = x0 + 0.5 * h * f0
    x = x0 + h * f0
    delta = np.inf
    for _ in range(max_iter):
        x_new = base + 0.5 * h * np.asarray(f(x))
        delta = float(np.max(np.abs(x_new - x)))
        x = x_new
        if delta < tol:
            return x
    raise IntegrationError(
        "trapezoidal corrector stuck at delta %.3e after %d iterations" % (delta, max_iter)
    )


def _multiplier_for(params, ph):
    mult = params.get("multiplier", 1.0)
    if isinstance(mult, dict):
        return float(mult.get(ph, mult.get(ph.lower(), 1.0)))
    return float(mult)


def apply_event(net, faults, ev):
    """Mutate the network / fault table for one event.

    Returns True when the admittance matrix must be rebuilt.
    """
    p = ev.params
    if ev.action == "apply_fault":
        bus = str(p["bus"])
        if bus not in net.buses:
            raise ValueError("apply_fault: unknown bus %r" % bus)
        z_ohm = complex(float(p.get("r_ohm", 0.0)), float(p.get("x_ohm", 0.0)))
        if z_ohm == 0:
            raise ValueError("apply_fault at %r: fault impedance must be nonzero" % bus)
        y_pu = zbase_ohm(net.buses[bus].base_kv, net.mva_base) / z_ohm
        ref = str(p.get("ref", bus))
        shunts = {}
        for ph in str(p.get("phases", "ABC")).upper():
            shunts[(bus, ph)] = y_pu
        faults[ref] = shunts
        return True
    if ev.action == "clear_fault":
        ref = str(p["ref"])
        if ref not in faults:
            raise ValueError("clear_fault: unknown fault ref %r" % ref)
        del faults[ref]
        return True
    if ev.action == "switch":
        apply_switch_action(net, str(p["id"]), str(p["status"]))
        return True
    if ev.action == "scale_load":
        bus = str(p["bus"])
        hits = [ld for ld in net.loads if ld.bus == bus]
        if not hits:
            raise ValueError("scale_load: no load at bus %r" % bus)
        for ld in hits:
            for ph in ld.s_nom:
                ld.s_nom[ph] *= _multiplier_for(p, ph)
        return True
    if ev.action == "set_injection":
        bus = str(p["bus"])
        if bus not in net.buses:
            raise ValueError("set_injection: unknown bus %r" % bus)
        phases = net.buses[bus].phases
        s = {}
        if "phases" in p:
            for ph, rec in p["phases"].items():
                s[ph.upper()] = complex(float(rec.get("p_mw", 0.0)), float(rec.get("q_mvar", 0.0))) / (
                    net.mva_base / 3.0
                )
        else:
            total = complex(float(p.get("p_mw", 0.0)), float(p.get("q_mvar", 0.0)))
            for ph in phases:
                s[ph] = total / len(phases) / (net.mva_base / 3.0)
        for inj in net.injections:
            if inj.bus == bus:
                inj.s = s
                return False
        net.injections.append(ConstantInjection(bus=bus, s=s))
        return False
    raise ValueError("unknown event action %r" % ev.action)


class _MachineRunner:
    """Per-machine state carried through the loop."""

    def __init__(self, spec, params, state, inputs):
        self.spec = spec
        self.params = params
        self.state = state
        self.inputs = inputs
        self.te = inputs.pm


def _advance_machine(m, currents, t, dt, eps, cfg):
    """Integrate one machine over [t, t+dt] and recover terminal phasors."""
    p = m.params
    ws = p.omega_s
    cplx = [currents.phase(ph) for ph in PHASES]

    iabc_t = np.array([phasor_to_instant(c, t) for c in cplx])
    theta_t = ws * t + m.state.delta - pi / 2.0
    idq0_t = Dq0Vector(*(park_matrix(theta_t) @ iabc_t))

    def rhs(x):
        return mc.derivatives(mc.MachineState.from_array(x), idq0_t, m.inputs, p)

    x1 = trapezoidal_step(
        rhs, m.state.as_array(), dt, tol=cfg.corrector_tol, max_iter=cfg.corrector_max_iter
    )
    st1 = mc.MachineState.from_array(x1)

    t1 = t + dt - eps
    t2 = t + dt

    # Two stator evaluations eps apart, states held, current phasors frozen
    # ("the waveform does not change across the step").  Sampling and
    # transforming the currents at each evaluation instant keeps both samples
    # on one exact sinusoid per phase, so the recovery divides consistent
    # quantities; mixing transform instants amplifies any unbalance by
    # 1/sin(w_s*eps) per step and the loop diverges.
    vabc = []
    idq0_s = None
    for ts in (t1, t2):
        theta = ws * ts + st1.delta - pi / 2.0
        iabc = np.array([phasor_to_instant(c, ts) for c in cplx])
        idq0_s = Dq0Vector(*(park_matrix(theta) @ iabc))
        psi_d, psi_q = mc.flux_linkages(st1, idq0_s, p)
        v_s = mc.stator_voltages(psi_d, psi_q, idq0_s, st1.omega, p)
        vabc.append(inverse_park_matrix(theta) @ v_s.as_array())

    phasors = {}
    for k, ph in enumerate(PHASES):
        phasors[ph.lower()] = recover_phasor(SamplePair(vabc[0][k], vabc[1][k], t1, t2))

    m.state = st1
    psi_d, psi_q = mc.flux_linkages(st1, idq0_s, p)
    m.te = mc.electrical_torque(psi_d, psi_q, idq0_s)
    return ThreePhasePhasor(**phasors)


def run(net, cfg, events=(), stats=None):
    """Simulate; returns a TimeSeries sampled every cfg.dt from 0 to duration.

    Raises SimulationAborted (with the partial TimeSeries attached) on solver
    failure.  The network object is mutated by events; callers that reuse a
    network across runs should reload it.  ``stats``, when given, is a dict
    filled with solver diagnostics.
    """
    if abs(net.freq_hz - 60.0) > 1e-9:
        raise ValueError("engine assumes a fixed 60 Hz network frequency")
    dt, eps = cfg.dt, cfg.eps
    nsteps = int(round(cfg.duration / dt))

    events_by_step = {}
    for ev in events:
        step = int(round(ev.time_s / dt))
        if not 0 <= step <= nsteps:
            raise ValueError("event at t=%gs is outside the run duration" % ev.time_s)
        events_by_step.setdefault(step, []).append(ev)

    sol, conditions = initial_powerflow(net)
    runners = []
    for spec in net.machines:
        params = spec.params.validate().to_system_base(net.mva_base)
        term, p_pu, q_pu = conditions[spec.id]
        state, inputs = mc.initialize(term, p_pu, q_pu, params)
        runners.append(_MachineRunner(spec, params, state, inputs))

    fixed = {src.bus: src.phasors for src in net.sources}
    for r in runners:
        fixed[r.spec.bus] = conditions[r.spec.id][0]

    rec_gens = [r for r in runners]
    rec_buses = list(net.buses)
    if cfg.record is not None:
        want_g = {i for kind, i in cfg.record if kind == "gen"}
        want_b = {i for kind, i in cfg.record if kind == "bus"}
        rec_gens = [r for r in runners if r.spec.id in want_g]
        rec_buses = [b for b in net.buses if b in want_b]
        unknown = (want_g - {r.spec.id for r in runners}) | (want_b - set(net.buses))
        if unknown:
            raise ValueError("record list names unknown elements: %s" % sorted(unknown))

    columns = []
    for r in rec_gens:
        gid = r.spec.id
        columns += ["gen.%s.speed_dev_hz" % gid, "gen.%s.delta_rad" % gid, "gen.%s.te_pu" % gid]
    for b in rec_buses:
        for ph in net.buses[b].phases:
            columns += ["bus.%s.%s.vmag_pu" % (b, ph), "bus.%s.%s.vang_rad" % (b, ph)]

    times = []
    rows = []

    def record(t, sol):
        row = np.empty(len(columns))
        k = 0
        for r in rec_gens:
            row[k] = (r.state.omega - r.params.omega_s) / (2.0 * pi)
            row[k + 1] = r.state.delta
            row[k + 2] = r.te
            k += 3
        for b in rec_buses:
            tpp = sol.voltages[b]
            for ph in net.buses[b].phases:
                phs = tpp.phase(ph)
                row[k] = phs.magnitude
                row[k + 1] = phs.angle
                k += 2
        times.append(t)
        rows.append(row)

    def partial():
        return TimeSeries(
            time=np.array(times),
            data={c: np.array([r[i] for r in rows]) for i, c in enumerate(columns)},
        )

    faults = {}
    dirty = False
    for ev in events_by_step.pop(0, []):
        dirty |= apply_event(net, faults, ev)
    ybus = assemble_ybus(net, _flatten_faults(faults))
    warm = None

    if stats is None:
        stats = {}
    stats.update({"steps": nsteps, "network_iterations_max": 0, "network_mismatch_max": 0.0})

    t = 0.0
    try:
        for j in range(nsteps + 1):
            t = j * dt
            sol = solve_network(net, fixed, ybus=ybus, warm_start=warm)
            warm = sol.free_values
            stats["network_iterations_max"] = max(stats["network_iterations_max"], sol.iterations)
            stats["network_mismatch_max"] = max(stats["network_mismatch_max"], sol.max_mismatch)
            record(t, sol)
            if j == nsteps:
                break
            for r in runners:
                fixed[r.spec.bus] = _advance_machine(r, sol.currents[r.spec.bus], t, dt, eps, cfg)
            dirty = False
            for ev in events_by_step.pop(j + 1, []):
                dirty |= apply_event(net, faults, ev)
            if dirty:
                ybus = assemble_ybus(net, _flatten_faults(faults))
                warm = None
    except (RuntimeError, ValueError) as exc:
        if isinstance(exc, SimulationAborted):
            raise
        raise SimulationAborted(
            "aborted at t=%.6gs: %s" % (t, exc), time_s=t, series=partial()
        ) from exc

    return partial()


def _flatten_faults(faults):
    shunts = {}
    for table in faults.values():
        for key, y in table.items():
            shunts[key] = shunts.get(key, 0j) + y
    return shunts
