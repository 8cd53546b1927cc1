"""Bit strings as message points: dyadic encode/decode and error-rate runs.

A k-bit string names the dyadic interval [0.b1..bk, 0.b1..bk + 2^-k); the
message point is its midpoint.  Decoding succeeds when the decoder's
credible box lies inside a single dyadic cell.  Long-block experiments run
on the exact rational engine, which has no length cap; the float helpers
cap k at 40 bits per axis to stay clear of double-precision artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exactpm
from .engine import PmSession
from .errors import BadParam
from .maps import translated_cube
from .transport import PmMapKit

FLOAT_BIT_CAP = 40

UNDECIDED = None


@dataclass(frozen=True)
class DyadicMessage:
    """A bit string and the midpoint of its dyadic interval."""

    bits: str

    def __post_init__(self):
        if not self.bits or set(self.bits) - {"0", "1"}:
            raise BadParam("bits must be a nonempty string over {0,1}")

    @property
    def k(self) -> int:
        return len(self.bits)

    @property
    def point(self) -> float:
        if self.k > FLOAT_BIT_CAP:
            raise BadParam(f"float midpoints support at most {FLOAT_BIT_CAP} bits")
        return float(self.point_exact)

    @property
    def point_exact(self):
        return exactpm._Q(2 * int(self.bits, 2) + 1, 2 ** (self.k + 1))


def encode_bits(bits: str) -> float:
    """Midpoint of the dyadic cell named by the bit string (k <= 40)."""
    return DyadicMessage(bits).point


def random_bits(k: int, rng: np.random.Generator) -> str:
    return "".join("1" if b else "0" for b in rng.integers(0, 2, size=k))


def decode_bits(lo, hi, k: int):
    """k-bit prefix if [lo, hi] sits inside one dyadic k-cell, else UNDECIDED.

    Accepts floats or exact rationals; the cell is treated as closed so an
    interval ending exactly on a cell boundary still decodes.
    """
    if k < 1:
        raise BadParam("k must be >= 1")
    lo_q = exactpm.to_rational(lo)
    hi_q = exactpm.to_rational(hi)
    if lo_q > hi_q or lo_q < 0 or hi_q > 1:
        raise BadParam("need 0 <= lo <= hi <= 1")
    scale = 2 ** k
    cell = (lo_q.numerator * scale) // lo_q.denominator
    if cell == scale:  # lo == 1 exactly
        cell -= 1
    upper = exactpm._Q(cell + 1, scale)
    if hi_q > upper:
        return UNDECIDED
    return format(int(cell), f"0{k}b")


def common_prefix_bits(lo: float, hi: float, k_max: int = FLOAT_BIT_CAP) -> str:
    """Longest dyadic prefix whose cell contains [lo, hi] (possibly empty)."""
    if not 0.0 <= lo <= hi <= 1.0:
        raise BadParam("need 0 <= lo <= hi <= 1")
    bits = ""
    for k in range(1, k_max + 1):
        decoded = decode_bits(lo, hi, k)
        if decoded is UNDECIDED:
            break
        bits = decoded
    return bits


def decode_box(session: PmSession, k: int, eps: float = 0.1):
    """Per-axis decoded prefixes from the session's pulled-back credible box."""
    box = session.credible_box(eps)
    return [decode_bits(float(box.bounds[j, 0]), float(box.bounds[j, 1]), k)
            for j in range(session.kit.d)]


@dataclass(frozen=True)
class BitErrorReport:
    """Outcome of a block-coding run; undecided trials count as errors."""

    trials: int
    k: int
    n_steps: int
    error_rate: float        # any wrong bit OR undecided
    undecided_rate: float
    decided_error_rate: float  # wrong bits among decided trials


def bit_error_experiment(kit: PmMapKit, k: int, n_steps: int, trials: int,
                         rng: np.random.Generator, eps: float = 0.1) -> BitErrorReport:
    """Random k-bit blocks through n steps of the scheme, then dyadic decode.

    The 1-D discrete flavor runs on the exact rational engine (no cap on k);
    other flavors use the float engine and inherit its 40-bit-per-axis cap.
    """
    if k < 1 or n_steps < 1 or trials < 1:
        raise BadParam("k, n_steps and trials must be positive")
    if kit.flavor == "cdf1d":
        return _bit_error_exact(kit, k, n_steps, trials, rng, eps)
    return _bit_error_float(kit, k, n_steps, trials, rng, eps)


def _bit_error_exact(kit, k, n_steps, trials, rng, eps):
    system = exactpm.Exact1DSystem(kit)
    eps_q = exactpm.to_rational(eps)
    side = 1 - eps_q
    wrong = undecided = 0
    for _ in range(trials):
        bits = random_bits(k, rng)
        run = system.run(DyadicMessage(bits).point_exact, n_steps, rng)
        lo_tau = run.wt_final * eps_q
        lo, hi = system.invert_interval(lo_tau, lo_tau + side, run.ys)
        decoded = decode_bits(lo, hi, k)
        if decoded is UNDECIDED:
            undecided += 1
        elif decoded != bits:
            wrong += 1
    return BitErrorReport(trials, k, n_steps,
                          (wrong + undecided) / trials,
                          undecided / trials,
                          wrong / max(trials - undecided, 1))


def _bit_error_float(kit, k, n_steps, trials, rng, eps):
    if k > FLOAT_BIT_CAP:
        raise BadParam(f"float engine caps k at {FLOAT_BIT_CAP} bits per axis")
    wrong = undecided = 0
    for _ in range(trials):
        axes = [random_bits(k, rng) for _ in range(kit.d)]
        message = [DyadicMessage(b).point for b in axes]
        session = PmSession(kit, message=message,
                            seed=int(rng.integers(0, 2 ** 63)))
        for _ in range(n_steps):
            session.step()
        decoded = decode_box(session, k, eps)
        if any(d is UNDECIDED for d in decoded):
            undecided += 1
        elif list(decoded) != axes:
            wrong += 1
    return BitErrorReport(trials, k, n_steps,
                          (wrong + undecided) / trials,
                          undecided / trials,
                          wrong / max(trials - undecided, 1))
