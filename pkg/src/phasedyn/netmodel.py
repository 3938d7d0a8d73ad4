"""In-memory network model, JSON ingestion, per-unit conversion and topology.

All electrical quantities are stored in per-unit on the single system MVA base
and per-bus kV bases.  Per-phase quantities use the phase-ground voltage base
and one third of the system MVA, so a balanced network behaves per phase
exactly like its positive-sequence equivalent.  Angles are degrees in files
and radians in memory.

A Network is treated as immutable while a solve is running; mutations (switch
actions, load scaling) happen only between engine steps, so read-only sharing
across threads is safe.

File schema (JSON, one object):

    mva_base      system MVA base (> 0)
    frequency_hz  optional, defaults to 60
    buses         [{id, base_kv, phases?="ABC"}]
    branches      [{id?, from, to, phases?, in_service?, impedance...}]
                  impedance either "z_abc" (n x n of [r, x] p.u., optional
                  "y_shunt_abc" n x n of [g, b]) or sequence shorthand
                  "z1"/"z0" ([r, x]) with optional "b1"/"b0" charging
                  susceptances (three-phase only), or "z_self"/"z_mutual".
    transformers  [{id?, from, to, connection, x, r?=0, tap?=1, phase?}]
                  connection in {wye-g/wye-g, delta/wye-g, wye-g/delta,
                  single-phase}; impedance p.u. on system base.
    loads         [{bus, zip?=[1,0,0], p_mw/q_mvar balanced totals or
                  phases: {A: {p_mw, q_mvar, zip?}, ...}}]
    switches      [{id, from, to, phases?, status: open|closed,
                  normally_open?=false}]
    sources       [{bus, v_pu, angle_deg?=0} or per-phase "phases" map]
    injections    [{bus, p_mw/q_mvar balanced or per-phase "phases" map}]
    machines      [{id, bus, mva_base, rs, xd, xq, xdp, xqp, xdpp, xqpp, xl,
                  tdo_p, tqo_p, tdo_pp, tqo_pp, h, d?=0, p_mw, v_setpoint,
                  slack?=false}]
"""

import json
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .frames import Phasor, ThreePhasePhasor
from .machine import MachineParams

PHASES = "ABC"

TRANSFORMER_CONNECTIONS = ("wye-g/wye-g", "delta/wye-g", "wye-g/delta", "single-phase")


class ParseError(ValueError):
    """Network file is not valid JSON or misses required structure."""


class ValidationError(ValueError):
    """Network data violates a model invariant; message names the element."""


def zbase_ohm(base_kv, mva_base):
    """Per-phase impedance base in ohm for a line-line kV base."""
    return base_kv * base_kv / mva_base


def s_phase_to_pu(p_mw, q_mvar, mva_base):
    """Per-phase MW/MVAr to per-phase per-unit (base = system MVA / 3)."""
    return complex(p_mw, q_mvar) / (mva_base / 3.0)


def s_phase_to_mva(s_pu, mva_base):
    s = s_pu * (mva_base / 3.0)
    return s.real, s.imag


@dataclass
class Bus:
    id: str
    base_kv: float
    phases: str = PHASES


@dataclass
class Branch:
    id: str
    from_bus: str
    to_bus: str
    phases: str
    z: np.ndarray          # series impedance, n x n complex p.u.
    ysh: np.ndarray        # total shunt admittance, n x n complex p.u.
    in_service: bool = True


@dataclass
class TransformerBank:
    id: str
    from_bus: str
    to_bus: str
    connection: str
    z: complex
    tap: float = 1.0
    phase: str = ""        # only for single-phase banks


@dataclass
class ZipLoad:
    bus: str
    s_nom: dict            # phase -> complex p.u. at nominal voltage
    zip_frac: dict         # phase -> (z, i, p)


@dataclass
class Switch:
    id: str
    from_bus: str
    to_bus: str
    phases: str
    closed: bool
    normally_open: bool = False


@dataclass
class SourceBus:
    bus: str
    phasors: ThreePhasePhasor


@dataclass
class ConstantInjection:
    bus: str
    s: dict                # phase -> complex p.u. injected (positive into bus)


@dataclass
class MachineSpec:
    id: str
    bus: str
    params: MachineParams
    p_mw: float
    v_setpoint: float
    slack: bool = False


@dataclass
class Network:
    mva_base: float
    freq_hz: float = 60.0
    buses: dict = field(default_factory=dict)
    branches: list = field(default_factory=list)
    transformers: list = field(default_factory=list)
    loads: list = field(default_factory=list)
    switches: dict = field(default_factory=dict)
    sources: list = field(default_factory=list)
    injections: list = field(default_factory=list)
    machines: list = field(default_factory=list)

    @property
    def omega_s(self):
        return 2.0 * pi * self.freq_hz

    def machine_buses(self):
        return {m.bus for m in self.machines}

    def source_buses(self):
        return {s.bus for s in self.sources}

    def fixed_buses(self):
        return self.machine_buses() | self.source_buses()


@dataclass
class Island:
    buses: frozenset
    energized: bool


# ---------------------------------------------------------------------------
# topology

class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def closed_switch_groups(net):
    """Union-find over closed switches: bus id -> representative bus id.

    Closed switches are ideal (zero impedance); their endpoints form one
    electrical node.
    """
    uf = _UnionFind(net.buses.keys())
    for sw in net.switches.values():
        if sw.closed:
            uf.union(sw.from_bus, sw.to_bus)
    return {b: uf.find(b) for b in net.buses}


def energized_islands(net):
    """Partition buses into islands over the live topology.

    Connectivity follows in-service branches, transformer banks and closed
    switches.  An island is energized iff it contains a source bus or a
    machine bus.
    """
    uf = _UnionFind(net.buses.keys())
    for br in net.branches:
        if br.in_service:
            uf.union(br.from_bus, br.to_bus)
    for tr in net.transformers:
        uf.union(tr.from_bus, tr.to_bus)
    for sw in net.switches.values():
        if sw.closed:
            uf.union(sw.from_bus, sw.to_bus)

    groups = {}
    for bus in net.buses:                      # insertion order: deterministic
        groups.setdefault(uf.find(bus), []).append(bus)
    live = net.fixed_buses()
    return [
        Island(buses=frozenset(members), energized=bool(live.intersection(members)))
        for members in groups.values()
    ]


def apply_switch_action(net, switch_id, status):
    """Set a switch open/closed.  ``status`` is "open"/"closed" or a bool."""
    if switch_id not in net.switches:
        raise ValidationError("unknown switch id %r" % switch_id)
    if isinstance(status, str):
        if status not in ("open", "closed"):
            raise ValidationError("switch status must be 'open' or 'closed', got %r" % status)
        closed = status == "closed"
    else:
        closed = bool(status)
    net.switches[switch_id].closed = closed
    return net


# ---------------------------------------------------------------------------
# ingestion

def _pair_to_complex(v, what):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ParseError("%s must be a [re, im] pair, got %r" % (what, v))
    return complex(float(v[0]), float(v[1]))


def _matrix_to_complex(rows, n, what):
    m = np.zeros((n, n), dtype=complex)
    if len(rows) != n:
        raise ParseError("%s must be %dx%d" % (what, n, n))
    for i, row in enumerate(rows):
        if len(row) != n:
            raise ParseError("%s must be %dx%d" % (what, n, n))
        for j, cell in enumerate(row):
            m[i, j] = _pair_to_complex(cell, what)
    return m


def _phases_of(raw, default=PHASES):
    ph = str(raw or default).upper()
    if not ph or any(c not in PHASES for c in ph) or len(set(ph)) != len(ph):
        raise ParseError("invalid phase set %r" % raw)
    return "".join(p for p in PHASES if p in ph)


def _branch_impedance(raw, phases, label):
    n = len(phases)
    if "z_abc" in raw:
        z = _matrix_to_complex(raw["z_abc"], n, "%s z_abc" % label)
        ysh = (
            _matrix_to_complex(raw["y_shunt_abc"], n, "%s y_shunt_abc" % label)
            if "y_shunt_abc" in raw
            else np.zeros((n, n), dtype=complex)
        )
        return z, ysh
    if "z1" in raw:
        if n != 3:
            raise ParseError("%s: sequence impedances require three phases" % label)
        z1 = _pair_to_complex(raw["z1"], "%s z1" % label)
        z0 = _pair_to_complex(raw["z0"], "%s z0" % label) if "z0" in raw else z1
        zs = (z0 + 2.0 * z1) / 3.0
        zm = (z0 - z1) / 3.0
        z = np.full((3, 3), zm, dtype=complex)
        np.fill_diagonal(z, zs)
        b1 = float(raw.get("b1", 0.0))
        b0 = float(raw.get("b0", b1))
        bs = (b0 + 2.0 * b1) / 3.0
        bm = (b0 - b1) / 3.0
        ysh = 1j * np.full((3, 3), bm)
        np.fill_diagonal(ysh, 1j * bs)
        return z, ysh
    if "z_self" in raw:
        zs = _pair_to_complex(raw["z_self"], "%s z_self" % label)
        zm = _pair_to_complex(raw["z_mutual"], "%s z_mutual" % label) if "z_mutual" in raw else 0j
        z = np.full((n, n), zm, dtype=complex)
        np.fill_diagonal(z, zs)
        bs = float(raw.get("b_self", 0.0))
        ysh = np.zeros((n, n), dtype=complex)
        np.fill_diagonal(ysh, 1j * bs)
        return z, ysh
    raise ParseError("%s: no impedance given (need z_abc, z1 or z_self)" % label)


def _per_phase_powers(raw, phases, mva_base, label, default_zip=(1.0, 0.0, 0.0)):
    """Parse balanced totals or a per-phase map into p.u. per phase."""
    s_nom, zf = {}, {}
    if "phases" in raw:
        for ph, rec in raw["phases"].items():
            ph = ph.upper()
            if ph not in PHASES:
                raise ParseError("%s: bad phase %r" % (label, ph))
            s_nom[ph] = s_phase_to_pu(float(rec.get("p_mw", 0.0)), float(rec.get("q_mvar", 0.0)), mva_base)
            zf[ph] = tuple(float(x) for x in rec.get("zip", raw.get("zip", default_zip)))
    else:
        p = float(raw.get("p_mw", 0.0))
        q = float(raw.get("q_mvar", 0.0))
        frac = tuple(float(x) for x in raw.get("zip", default_zip))
        for ph in phases:
            s_nom[ph] = s_phase_to_pu(p / len(phases), q / len(phases), mva_base)
            zf[ph] = frac
    return s_nom, zf


_MACHINE_PARAM_KEYS = (
    "rs", "xd", "xq", "xdp", "xqp", "xdpp", "xqpp", "xl",
    "tdo_p", "tqo_p", "tdo_pp", "tqo_pp", "h",
)


def parse_network(data):
    """Build a Network from already-decoded JSON data."""
    if not isinstance(data, dict):
        raise ParseError("network file must contain a JSON object")
    try:
        mva = float(data["mva_base"])
    except KeyError:
        raise ParseError("network file is missing 'mva_base'") from None
    net = Network(mva_base=mva, freq_hz=float(data.get("frequency_hz", 60.0)))

    for raw in data.get("buses", []):
        bus = Bus(id=str(raw["id"]), base_kv=float(raw["base_kv"]), phases=_phases_of(raw.get("phases")))
        if bus.id in net.buses:
            raise ValidationError("duplicate bus id %r" % bus.id)
        net.buses[bus.id] = bus

    for k, raw in enumerate(data.get("branches", [])):
        label = str(raw.get("id", "branch[%d]" % k))
        phases = _phases_of(raw.get("phases"))
        z, ysh = _branch_impedance(raw, phases, label)
        net.branches.append(
            Branch(
                id=label,
                from_bus=str(raw["from"]),
                to_bus=str(raw["to"]),
                phases=phases,
                z=z,
                ysh=ysh,
                in_service=bool(raw.get("in_service", True)),
            )
        )

    for k, raw in enumerate(data.get("transformers", [])):
        label = str(raw.get("id", "transformer[%d]" % k))
        net.transformers.append(
            TransformerBank(
                id=label,
                from_bus=str(raw["from"]),
                to_bus=str(raw["to"]),
                connection=str(raw["connection"]),
                z=complex(float(raw.get("r", 0.0)), float(raw["x"])),
                tap=float(raw.get("tap", 1.0)),
                phase=str(raw.get("phase", "")).upper(),
            )
        )

    for k, raw in enumerate(data.get("loads", [])):
        bus = str(raw["bus"])
        phases = net.buses[bus].phases if bus in net.buses else PHASES
        s_nom, zf = _per_phase_powers(raw, phases, mva, "load at bus %s" % bus)
        net.loads.append(ZipLoad(bus=bus, s_nom=s_nom, zip_frac=zf))

    for raw in data.get("switches", []):
        sw = Switch(
            id=str(raw["id"]),
            from_bus=str(raw["from"]),
            to_bus=str(raw["to"]),
            phases=_phases_of(raw.get("phases")),
            closed=str(raw["status"]) == "closed",
            normally_open=bool(raw.get("normally_open", False)),
        )
        if sw.id in net.switches:
            raise ValidationError("duplicate switch id %r" % sw.id)
        net.switches[sw.id] = sw

    for raw in data.get("sources", []):
        bus = str(raw["bus"])
        if "phases" in raw:
            ph_map = {}
            for ph, rec in raw["phases"].items():
                ph_map[ph.upper()] = Phasor(float(rec["v_pu"]), float(rec.get("angle_deg", 0.0)) * pi / 180.0)
            phasors = ThreePhasePhasor(**{p.lower(): ph_map.get(p) for p in PHASES})
        else:
            phasors = ThreePhasePhasor.balanced(float(raw["v_pu"]), float(raw.get("angle_deg", 0.0)) * pi / 180.0)
        net.sources.append(SourceBus(bus=bus, phasors=phasors))

    for k, raw in enumerate(data.get("injections", [])):
        bus = str(raw["bus"])
        phases = net.buses[bus].phases if bus in net.buses else PHASES
        s_nom, _ = _per_phase_powers(raw, phases, mva, "injection at bus %s" % bus)
        net.injections.append(ConstantInjection(bus=bus, s=s_nom))

    for raw in data.get("machines", []):
        try:
            params = MachineParams(
                mva_base=float(raw["mva_base"]),
                d=float(raw.get("d", 0.0)),
                **{key: float(raw[key]) for key in _MACHINE_PARAM_KEYS},
            )
        except KeyError as exc:
            raise ParseError("machine %r is missing parameter %s" % (raw.get("id"), exc)) from None
        net.machines.append(
            MachineSpec(
                id=str(raw["id"]),
                bus=str(raw["bus"]),
                params=params,
                p_mw=float(raw.get("p_mw", 0.0)),
                v_setpoint=float(raw.get("v_setpoint", 1.0)),
                slack=bool(raw.get("slack", False)),
            )
        )

    problems = validate_network(net)
    if problems:
        raise ValidationError("; ".join(problems))
    return net


def load_network(path):
    """Load and fully validate a network file."""
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ParseError("cannot parse %s: %s" % (path, exc)) from None
    return parse_network(data)


def validate_network(net):
    """Return a list of invariant violations (empty when valid)."""
    problems = []
    if net.mva_base <= 0.0:
        problems.append("mva_base must be positive")
    for bus in net.buses.values():
        if bus.base_kv <= 0.0:
            problems.append("bus %r: base_kv must be positive" % bus.id)
        if not bus.phases:
            problems.append("bus %r: empty phase set" % bus.id)

    def check_bus(bid, owner):
        if bid not in net.buses:
            problems.append("%s references unknown bus %r" % (owner, bid))
            return False
        return True

    for br in net.branches:
        ok = check_bus(br.from_bus, "branch %r" % br.id) & check_bus(br.to_bus, "branch %r" % br.id)
        n = len(br.phases)
        if br.z.shape != (n, n):
            problems.append("branch %r: impedance is %s for %d phases" % (br.id, br.z.shape, n))
            continue
        if not np.allclose(br.z, br.z.T, atol=1e-12):
            problems.append("branch %r: series impedance must be symmetric" % br.id)
        if br.in_service and abs(np.linalg.det(br.z)) < 1e-15:
            problems.append("branch %r: series impedance is singular" % br.id)
        if ok:
            for bid in (br.from_bus, br.to_bus):
                missing = set(br.phases) - set(net.buses[bid].phases)
                if missing:
                    problems.append("branch %r: bus %r lacks phases %s" % (br.id, bid, sorted(missing)))

    for tr in net.transformers:
        check_bus(tr.from_bus, "transformer %r" % tr.id)
        check_bus(tr.to_bus, "transformer %r" % tr.id)
        if tr.connection not in TRANSFORMER_CONNECTIONS:
            problems.append("transformer %r: unsupported connection %r" % (tr.id, tr.connection))
        if tr.z == 0:
            problems.append("transformer %r: leakage impedance must be nonzero" % tr.id)
        if not 0.8 <= tr.tap <= 1.2:
            problems.append("transformer %r: tap %.3f outside [0.8, 1.2]" % (tr.id, tr.tap))
        if tr.connection == "single-phase":
            if tr.phase not in ("A", "B", "C"):
                problems.append("transformer %r: single-phase bank needs a phase" % tr.id)

    for ld in net.loads:
        if not check_bus(ld.bus, "load"):
            continue
        for ph, frac in ld.zip_frac.items():
            if ph not in net.buses[ld.bus].phases:
                problems.append("load at bus %r: phase %s not on bus" % (ld.bus, ph))
            if any(f < 0.0 for f in frac):
                problems.append("load at bus %r: negative ZIP fraction on phase %s" % (ld.bus, ph))
            if abs(sum(frac) - 1.0) > 1e-9:
                problems.append(
                    "load at bus %r: ZIP fractions on phase %s sum to %.12g, expected 1"
                    % (ld.bus, ph, sum(frac))
                )

    for sw in net.switches.values():
        ok = check_bus(sw.from_bus, "switch %r" % sw.id) & check_bus(sw.to_bus, "switch %r" % sw.id)
        if ok:
            for bid in (sw.from_bus, sw.to_bus):
                missing = set(sw.phases) - set(net.buses[bid].phases)
                if missing:
                    problems.append("switch %r: bus %r lacks phases %s" % (sw.id, bid, sorted(missing)))

    for src in net.sources:
        if check_bus(src.bus, "source"):
            for ph in net.buses[src.bus].phases:
                if src.phasors.phase(ph) is None:
                    problems.append("source at bus %r: missing phase %s" % (src.bus, ph))

    for inj in net.injections:
        check_bus(inj.bus, "injection")

    seen = set()
    for m in net.machines:
        if m.id in seen:
            problems.append("duplicate machine id %r" % m.id)
        seen.add(m.id)
        if check_bus(m.bus, "machine %r" % m.id):
            if set(net.buses[m.bus].phases) != set(PHASES):
                problems.append("machine %r: bus %r must have all three phases" % (m.id, m.bus))
        try:
            m.params.validate()
        except ValueError as exc:
            problems.append("machine %r: %s" % (m.id, exc))
        if m.v_setpoint <= 0.0:
            problems.append("machine %r: v_setpoint must be positive" % m.id)
    return problems
