"""Trajectory comparison and signal statistics.

Pure functions over uniformly sampled sequences: RMSE, Pearson correlation,
dominant spectral frequency and voltage-sag statistics.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class TrajectoryPair:
    a: np.ndarray
    b: np.ndarray
    spacing: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.a.shape != self.b.shape:
            raise ValueError("sequence lengths differ: %d vs %d" % (self.a.size, self.b.size))
        if self.a.size < 2:
            raise ValueError("need at least two samples")
        if self.spacing <= 0.0:
            raise ValueError("sample spacing must be positive")


def rmse(pair):
    """Root mean square difference of the two sequences."""
    d = pair.a - pair.b
    return float(np.sqrt(np.mean(d * d)))


def correlation(pair):
    """Pearson correlation coefficient; both sequences need nonzero variance."""
    a = pair.a - np.mean(pair.a)
    b = pair.b - np.mean(pair.b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("correlation undefined for zero-variance input")
    return float(np.dot(a, b) / (na * nb))


def dominant_frequency(seq, spacing):
    """Frequency (Hz) of the largest non-DC DFT bin, quadratically refined.

    The parabola fit uses the two neighbouring bin magnitudes; at the spectrum
    edges (including the Nyquist bin, e.g. a 120 Hz component sampled at
    240 Hz) no neighbour exists on one side and the raw bin frequency is
    returned.
    """
    x = np.asarray(seq, dtype=float)
    if x.size < 16:
        raise ValueError("sequence too short for spectral analysis (need >= 16 samples)")
    if spacing <= 0.0:
        raise ValueError("sample spacing must be positive")
    x = x - np.mean(x)
    mag = np.abs(np.fft.rfft(x))
    if mag.size < 2:
        raise ValueError("sequence too short for spectral analysis")
    k = 1 + int(np.argmax(mag[1:]))
    df = 1.0 / (spacing * x.size)
    if 1 <= k - 1 and k + 1 < mag.size:
        m1, m2, m3 = mag[k - 1], mag[k], mag[k + 1]
        denom = m1 - 2.0 * m2 + m3
        if denom != 0.0:
            shift = 0.5 * (m1 - m3) / denom
            return float((k + shift) * df)
    return float(k * df)


def sag_stats(values, spacing, threshold):
    """Minimum value and longest contiguous time below threshold.

    Returns (min_value, duration_s); duration counts samples strictly below
    the threshold times the sample spacing.
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("empty trajectory")
    below = x < threshold
    longest = 0
    current = 0
    for flag in below:
        current = current + 1 if flag else 0
        longest = max(longest, current)
    return float(np.min(x)), longest * spacing
