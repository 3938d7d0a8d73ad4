"""Round-rotor synchronous machine: sixth-order unsaturated model.

States are E'_q, E'_d, psi_1d, psi_2q (flux-related), rotor angle delta (rad)
and rotor speed omega (rad/s).  Field voltage and mechanical power are held
constant (no exciter or governor).  All stator algebra uses the generator sign
convention: currents flow out of the machine, and

    v_d = -R_s*I_d - (w/w_s)*psi_q
    v_q = -R_s*I_q + (w/w_s)*psi_d
    v_0 = -R_s*I_0
"""

from dataclasses import dataclass, replace
from math import atan2, cos, pi, sin

import numpy as np

from .frames import OMEGA_S, Dq0Vector

_TWO_THIRDS_PI = 2.0 * pi / 3.0


class InitializationError(ValueError):
    """Steady-state initialization is not possible for the given dispatch."""


@dataclass
class MachineParams:
    """Reactances/resistance in p.u. on ``mva_base``, time constants in s."""

    rs: float
    xd: float
    xq: float
    xdp: float
    xqp: float
    xdpp: float
    xqpp: float
    xl: float
    tdo_p: float
    tqo_p: float
    tdo_pp: float
    tqo_pp: float
    h: float
    d: float = 0.0
    mva_base: float = 100.0
    omega_s: float = OMEGA_S

    def validate(self):
        if not (self.xd >= self.xdp >= self.xdpp > self.xl > 0.0):
            raise ValueError(
                "d-axis reactances must satisfy xd >= xd' >= xd'' > xl > 0"
            )
        if not (self.xq >= self.xqp >= self.xqpp > self.xl):
            raise ValueError(
                "q-axis reactances must satisfy xq >= xq' >= xq'' > xl"
            )
        for name in ("tdo_p", "tqo_p", "tdo_pp", "tqo_pp", "h"):
            if getattr(self, name) <= 0.0:
                raise ValueError("%s must be positive" % name)
        if self.mva_base <= 0.0:
            raise ValueError("mva_base must be positive")
        return self

    def to_system_base(self, system_mva):
        """Convert impedances and inertia from machine base to system base."""
        k = system_mva / self.mva_base
        return replace(
            self,
            rs=self.rs * k,
            xd=self.xd * k,
            xq=self.xq * k,
            xdp=self.xdp * k,
            xqp=self.xqp * k,
            xdpp=self.xdpp * k,
            xqpp=self.xqpp * k,
            xl=self.xl * k,
            h=self.h / k,
            d=self.d / k,
            mva_base=system_mva,
        )


@dataclass
class MachineState:
    eq_p: float
    ed_p: float
    psi1d: float
    psi2q: float
    delta: float
    omega: float

    def as_array(self):
        return np.array(
            [self.eq_p, self.ed_p, self.psi1d, self.psi2q, self.delta, self.omega]
        )

    @classmethod
    def from_array(cls, x):
        return cls(x[0], x[1], x[2], x[3], x[4], x[5])


@dataclass
class MachineInputs:
    efd: float
    pm: float


def flux_linkages(state, i, p):
    """d and q axis flux linkages for given states and dq currents.

    psi_d'' interpolates E'_q and psi_1d with leakage-referred weights that
    sum to one; the stator contribution is the subtransient reactance drop.
    """
    wd = (p.xdpp - p.xl) / (p.xdp - p.xl)
    wq = (p.xqpp - p.xl) / (p.xqp - p.xl)
    psi_d_pp = wd * state.eq_p + (1.0 - wd) * state.psi1d
    psi_q_pp = -wq * state.ed_p + (1.0 - wq) * state.psi2q
    psi_d = psi_d_pp - p.xdpp * i.d
    psi_q = psi_q_pp - p.xqpp * i.q
    return psi_d, psi_q


def stator_voltages(psi_d, psi_q, i, omega, p):
    """Stator algebraic equations; see module docstring."""
    w = omega / p.omega_s
    return Dq0Vector(
        d=-p.rs * i.d - w * psi_q,
        q=-p.rs * i.q + w * psi_d,
        zero=-p.rs * i.zero,
    )


def electrical_torque(psi_d, psi_q, i):
    return psi_d * i.q - psi_q * i.d


def derivatives(state, i, u, p):
    """Right-hand sides of the six rotor ODEs with currents held fixed.

    Ordering matches MachineState.as_array().  Uses only arithmetic on the
    state values so complex-step differentiation works in tests.
    """
    xd_num = (p.xdp - p.xdpp) / ((p.xdp - p.xl) ** 2)
    xq_num = (p.xqp - p.xqpp) / ((p.xqp - p.xl) ** 2)

    sat_d = state.psi1d + (p.xdp - p.xl) * i.d - state.eq_p
    sat_q = state.psi2q + (p.xqp - p.xl) * i.q + state.ed_p

    deq_p = (-state.eq_p + u.efd - (p.xd - p.xdp) * (i.d - xd_num * sat_d)) / p.tdo_p
    ded_p = (-state.ed_p + (p.xq - p.xqp) * (i.q - xq_num * sat_q)) / p.tqo_p
    dpsi1d = (-state.psi1d + state.eq_p - (p.xdp - p.xl) * i.d) / p.tdo_pp
    dpsi2q = (-state.psi2q - state.ed_p - (p.xqp - p.xl) * i.q) / p.tqo_pp

    psi_d, psi_q = flux_linkages(state, i, p)
    te = electrical_torque(psi_d, psi_q, i)
    ddelta = state.omega - p.omega_s
    domega = (p.omega_s / (2.0 * p.h)) * (
        u.pm * (p.omega_s / state.omega) - te - p.d * (state.omega - p.omega_s) / p.omega_s
    )
    return np.array([deq_p, ded_p, dpsi1d, dpsi2q, ddelta, domega])


def _check_balanced(terminal, tol=1e-6):
    for ph in "ABC":
        if terminal.phase(ph) is None:
            raise InitializationError("initialization requires all three phases")
    va, vb, vc = terminal.a, terminal.b, terminal.c
    mag_err = max(abs(vb.magnitude - va.magnitude), abs(vc.magnitude - va.magnitude))
    ang_b = atan2(sin(vb.angle - va.angle + _TWO_THIRDS_PI), cos(vb.angle - va.angle + _TWO_THIRDS_PI))
    ang_c = atan2(sin(vc.angle - va.angle - _TWO_THIRDS_PI), cos(vc.angle - va.angle - _TWO_THIRDS_PI))
    if mag_err > tol or abs(ang_b) > tol or abs(ang_c) > tol:
        raise InitializationError(
            "terminal phasors are not balanced (mag err %.2e, ang err %.2e/%.2e rad)"
            % (mag_err, ang_b, ang_c)
        )


def initialize(terminal, p_out, q_out, p):
    """Exact steady state for a balanced terminal condition and P, Q dispatch.

    Returns (MachineState, MachineInputs) with all six derivatives equal to
    zero.  P and Q are three-phase p.u. on the same base as the parameters,
    positive out of the machine.
    """
    _check_balanced(terminal)
    v = terminal.a.to_complex()
    if abs(v) < 1e-9:
        raise InitializationError("terminal voltage magnitude is zero")
    i = ((p_out + 1j * q_out) / v).conjugate()

    # Rotor position from the q-axis EMF V + (Rs + jXq) I.
    e = v + complex(p.rs, p.xq) * i
    delta = atan2(e.imag, e.real)
    rot = complex(cos(pi / 2.0 - delta), sin(pi / 2.0 - delta))
    vdq = v * rot
    idq = i * rot
    v_d, v_q = vdq.real, vdq.imag
    i_d, i_q = idq.real, idq.imag

    ed_p = (p.xq - p.xqp) * i_q
    eq_p = v_q + p.rs * i_q + p.xdp * i_d
    psi1d = eq_p - (p.xdp - p.xl) * i_d
    psi2q = -ed_p - (p.xqp - p.xl) * i_q
    efd = eq_p + (p.xd - p.xdp) * i_d
    if efd <= 0.0:
        raise InitializationError("dispatch requires non-positive field voltage")

    state = MachineState(eq_p, ed_p, psi1d, psi2q, delta, p.omega_s)
    cur = Dq0Vector(i_d, i_q, 0.0)
    psi_d, psi_q = flux_linkages(state, cur, p)
    pm = electrical_torque(psi_d, psi_q, cur)
    inputs = MachineInputs(efd=efd, pm=pm)
    return state, inputs
