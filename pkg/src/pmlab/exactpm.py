"""Exact rational arithmetic for long 1-D discrete-channel runs.

After a few hundred steps the composed map contracts intervals below the
resolution of double precision, so pulled-back interval endpoints and
volumes are meaningless in floats.  Every quantity here (states, map
evaluations, inverses, interval endpoints) is an exact rational; only
channel sampling and logarithms touch floats.
"""

from __future__ import annotations

import numpy as np

from .errors import BadParam
from .transport import DiscretePhi, PmMapKit

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    from fractions import Fraction as _Q

ZERO = _Q(0)
ONE = _Q(1)


def to_rational(x) -> _Q:
    """Exact rational value of a float (binary floats are dyadic rationals)."""
    if isinstance(x, float):
        num, den = x.as_integer_ratio()
        return _Q(num, den)
    return _Q(x)


def log2_rational(q) -> float:
    """log2 of a positive rational with arbitrarily large numerator/denominator."""
    num, den = int(q.numerator), int(q.denominator)
    if num <= 0:
        raise BadParam("log2 of a non-positive rational")
    return _log2_int(num) - _log2_int(den)


def _log2_int(n: int) -> float:
    bl = n.bit_length()
    if bl <= 53:
        return float(np.log2(n))
    top = n >> (bl - 53)
    return float(np.log2(top)) + (bl - 53)


class ExactMonotone1D:
    """Piecewise-linear increasing bijection of [0,1] with rational data."""

    def __init__(self, xs, ys):
        self.xs = [to_rational(v) for v in xs]
        self.ys = [to_rational(v) for v in ys]
        self.slopes = [
            (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
            for i in range(len(self.xs) - 1)
        ]

    def _cell(self, w, knots) -> int:
        # knots are few (alphabet-sized); linear scan is exact and cheap
        k = len(knots) - 2
        for i in range(len(knots) - 1):
            if w < knots[i + 1]:
                return i
        return k

    def __call__(self, w):
        i = self._cell(w, self.xs)
        return self.ys[i] + self.slopes[i] * (w - self.xs[i])

    def inverse_at(self, v):
        i = self._cell(v, self.ys)
        return self.xs[i] + (v - self.ys[i]) / self.slopes[i]

    def slope_at(self, w):
        return self.slopes[self._cell(w, self.xs)]


class Exact1DSystem:
    """Exact-arithmetic twin of a 1-D discrete-channel session.

    Precomputes the per-output transport maps with rational breakpoints;
    trajectories, inverses and interval volumes are then exact at any n.
    """

    def __init__(self, kit: PmMapKit):
        if kit.flavor != "cdf1d" or not isinstance(kit.phi, DiscretePhi):
            raise BadParam("exact arithmetic supports the 1-D discrete flavor")
        self.kit = kit
        self.edges = [to_rational(e) for e in kit.phi.edges]
        self.maps = []
        for y in range(kit.channel.n_outputs):
            f = kit.s_constructor(y)
            self.maps.append(ExactMonotone1D(f.xs, f.ys))
        self._cum = np.cumsum(kit.channel.matrix, axis=1)

    def input_symbol(self, w) -> int:
        k = len(self.edges) - 2
        for i in range(len(self.edges) - 1):
            if w < self.edges[i + 1]:
                return i
        return k

    def run(self, w, n_steps: int, rng: np.random.Generator,
            checkpoints=(), forced_y=None):
        """Run n steps from message w; returns (trajectory record, final state).

        checkpoints: iterable of step counts at which to snapshot the exact
        state; forced_y: optional full output sequence (bypasses sampling).
        """
        w = to_rational(w)
        wt = w
        snaps = {}
        want = set(int(c) for c in checkpoints)
        ys = []
        i_sum_bits = 0.0
        i_at = {}
        for t in range(1, n_steps + 1):
            x = self.input_symbol(wt)
            if forced_y is not None:
                y = int(forced_y[t - 1])
            else:
                y = int(np.searchsorted(self._cum[x], rng.random(), side="right"))
            f = self.maps[y]
            i_sum_bits += log2_rational(f.slope_at(wt))
            wt = f(wt)
            ys.append(y)
            if t in want:
                snaps[t] = wt
                i_at[t] = i_sum_bits
        return ExactRun(w, ys, wt, snaps, i_at, i_sum_bits)

    def invert_interval(self, lo, hi, ys):
        """Exact pullback of [lo, hi] through the maps for output history ys."""
        lo, hi = to_rational(lo), to_rational(hi)
        for y in reversed(ys):
            f = self.maps[y]
            lo, hi = f.inverse_at(lo), f.inverse_at(hi)
        return lo, hi

    def invert_point(self, v, ys):
        v = to_rational(v)
        for y in reversed(ys):
            v = self.maps[y].inverse_at(v)
        return v


class ExactRun:
    """Trajectory record of an exact run."""

    __slots__ = ("w", "ys", "wt_final", "wt_at", "i_at", "i_sum_bits")

    def __init__(self, w, ys, wt_final, wt_at, i_at, i_sum_bits):
        self.w = w
        self.ys = ys
        self.wt_final = wt_final
        self.wt_at = wt_at
        self.i_at = i_at
        self.i_sum_bits = i_sum_bits
