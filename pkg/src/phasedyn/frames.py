"""Reference-frame math: Park transform, phasor/instantaneous conversion and
two-sample phasor recovery.

Conventions used throughout the package:

* Phasors are RMS magnitude + angle (rad).  A phasor (V, theta) corresponds to
  the waveform  x(t) = sqrt(2) * V * cos(w_s*t + theta)  at fixed 60 Hz.
* The Park transform is scaled so that a balanced three-phase set of phasors
  with RMS magnitude V maps to a constant dq vector with |(d, q)| = V.  With
  the per-machine transformation angle  theta_shaft = w_s*t + delta - pi/2
  a machine at angle delta sees  v_d = V*sin(delta - theta_v),
  v_q = V*cos(delta - theta_v), the usual generator orientation with the
  q axis leading.
"""

from dataclasses import dataclass
from math import atan2, cos, pi, sin, sqrt

import numpy as np

OMEGA_S = 2.0 * pi * 60.0
SQRT2 = sqrt(2.0)

# Sample pairs closer than this to the singular spacing n*pi/w_s are rejected.
SINGULARITY_TOL = 1e-6

_K = SQRT2 / 3.0
_TWO_THIRDS_PI = 2.0 * pi / 3.0


class SingularSampling(ValueError):
    """Sample spacing t2 - t1 is too close to a multiple of pi/w_s."""


def normalize_angle(a):
    """Map an angle into (-pi, pi]."""
    a = atan2(sin(a), cos(a))
    if a <= -pi:
        a = pi
    return a


@dataclass
class Phasor:
    """RMS phasor: magnitude >= 0, angle normalized into (-pi, pi]."""

    magnitude: float
    angle: float

    def __post_init__(self):
        if self.magnitude < 0.0:
            raise ValueError("phasor magnitude must be >= 0, got %r" % self.magnitude)
        self.angle = normalize_angle(self.angle)

    @classmethod
    def from_complex(cls, c):
        return cls(abs(c), atan2(c.imag, c.real))

    def to_complex(self):
        return self.magnitude * complex(cos(self.angle), sin(self.angle))


@dataclass
class ThreePhasePhasor:
    """One phasor per phase; absent phases are None."""

    a: Phasor | None = None
    b: Phasor | None = None
    c: Phasor | None = None

    @classmethod
    def balanced(cls, magnitude, angle_a=0.0):
        """Positive-sequence balanced set: phase B lags A by 120 degrees."""
        return cls(
            a=Phasor(magnitude, angle_a),
            b=Phasor(magnitude, angle_a - _TWO_THIRDS_PI),
            c=Phasor(magnitude, angle_a + _TWO_THIRDS_PI),
        )

    @classmethod
    def from_complexes(cls, values):
        """Build from a mapping phase letter -> complex (missing = absent)."""
        kw = {ph.lower(): Phasor.from_complex(v) for ph, v in values.items()}
        return cls(**kw)

    def phase(self, ph):
        return getattr(self, ph.lower())

    def present_phases(self):
        return "".join(p for p in "ABC" if self.phase(p) is not None)

    def to_complexes(self):
        return {p: self.phase(p).to_complex() for p in self.present_phases()}


@dataclass
class Dq0Vector:
    d: float
    q: float
    zero: float

    def as_array(self):
        return np.array([self.d, self.q, self.zero])


@dataclass
class SamplePair:
    """Two instantaneous samples of one waveform, t2 > t1."""

    x1: float
    x2: float
    t1: float
    t2: float


def park_matrix(shaft_angle):
    """Park matrix P(theta) mapping instantaneous abc values to dq0.

    Scaled (factor sqrt(2)/3) so that balanced phasor-derived waveforms of RMS
    magnitude V give |(d, q)| = V; see module docstring.  Invertible for every
    angle.
    """
    th = shaft_angle
    c1, c2, c3 = cos(th), cos(th - _TWO_THIRDS_PI), cos(th + _TWO_THIRDS_PI)
    s1, s2, s3 = sin(th), sin(th - _TWO_THIRDS_PI), sin(th + _TWO_THIRDS_PI)
    return np.array(
        [
            [_K * c1, _K * c2, _K * c3],
            [-_K * s1, -_K * s2, -_K * s3],
            [0.5 * _K, 0.5 * _K, 0.5 * _K],
        ]
    )


def inverse_park_matrix(shaft_angle):
    """Exact closed-form inverse of :func:`park_matrix`."""
    th = shaft_angle
    c1, c2, c3 = cos(th), cos(th - _TWO_THIRDS_PI), cos(th + _TWO_THIRDS_PI)
    s1, s2, s3 = sin(th), sin(th - _TWO_THIRDS_PI), sin(th + _TWO_THIRDS_PI)
    return SQRT2 * np.array(
        [
            [c1, -s1, 1.0],
            [c2, -s2, 1.0],
            [c3, -s3, 1.0],
        ]
    )


def phasor_to_instant(ph, t, omega_s=OMEGA_S):
    """Instantaneous value sqrt(2)*V*cos(w_s*t + theta) of an RMS phasor."""
    return SQRT2 * ph.magnitude * cos(omega_s * t + ph.angle)


def dq0_from_abc_instant(values, shaft_angle):
    """Forward Park transform of three instantaneous phase values."""
    m = park_matrix(shaft_angle)
    d, q, z = m @ np.asarray(values, dtype=float)
    return Dq0Vector(d, q, z)


def abc_instant_from_dq0(v, shaft_angle):
    """Inverse Park transform; returns instantaneous (a, b, c) values."""
    return inverse_park_matrix(shaft_angle) @ v.as_array()


def recover_phasor(s, omega_s=OMEGA_S, tol=SINGULARITY_TOL):
    """Recover (V, theta) of a fixed-frequency cosine from two samples.

    Solves  x_i = A*cos(w_s*t_i) + B*sin(w_s*t_i)  for the two samples and
    returns V = sqrt(A^2 + B^2)/sqrt(2), theta = atan2(-B, A).  Well posed
    whenever w_s*(t2 - t1) is not a multiple of pi.
    """
    if s.t2 <= s.t1:
        raise ValueError("sample pair requires t2 > t1 (got t1=%g, t2=%g)" % (s.t1, s.t2))
    den = sin(omega_s * (s.t2 - s.t1))
    # The relative margin keeps spacings exactly tol away from n*pi/w_s on the
    # rejected side despite rounding of the time difference.
    if abs(den) < tol * (1.0 + 1e-7):
        raise SingularSampling(
            "sample spacing %.3e s puts w_s*(t2-t1) within tolerance of n*pi" % (s.t2 - s.t1)
        )
    root2_v_cos = (s.x1 * sin(omega_s * s.t2) - s.x2 * sin(omega_s * s.t1)) / den
    root2_v_sin = (s.x1 * cos(omega_s * s.t2) - s.x2 * cos(omega_s * s.t1)) / den
    magnitude = sqrt(root2_v_cos * root2_v_cos + root2_v_sin * root2_v_sin) / SQRT2
    angle = atan2(root2_v_sin, root2_v_cos)
    return Phasor(magnitude, angle)
