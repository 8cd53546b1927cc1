"""Memoryless channel models, samplers, likelihoods and capacity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import BadInput, BadParam, NoConvergence
from .linalg import SymMatrix

LOG2 = np.log(2.0)


class DmcKernel:
    """Discrete memoryless channel: row-stochastic transition matrix."""

    def __init__(self, matrix):
        p = np.asarray(matrix, dtype=float)
        if p.ndim != 2:
            raise BadParam("transition matrix must be 2-D")
        if np.any(p < 0):
            raise BadParam("transition probabilities must be nonnegative")
        rows = p.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-12):
            raise BadParam("each row must sum to 1 within 1e-12")
        self.matrix = p
        self.matrix.setflags(write=False)

    @property
    def n_inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.matrix.shape[1]

    def sample(self, x, rng: np.random.Generator):
        """Draw channel outputs for input symbol(s) x."""
        x = np.asarray(x)
        if np.any(x < 0) or np.any(x >= self.n_inputs):
            raise BadInput(f"input symbol out of range [0, {self.n_inputs})")
        u = rng.random(x.shape)
        cum = np.cumsum(self.matrix, axis=1)
        y = (u[..., None] >= cum[x]).sum(axis=-1)
        return y if x.shape else int(y)

    def likelihood(self, y, x):
        y = np.asarray(y)
        if np.any(y < 0) or np.any(y >= self.n_outputs):
            raise BadInput(f"output symbol out of range [0, {self.n_outputs})")
        return self.matrix[x, y]

    def output_marginal(self, px: np.ndarray) -> np.ndarray:
        return px @ self.matrix


def bsc(p: float) -> DmcKernel:
    """Binary symmetric channel with crossover probability p in [0, 1/2]."""
    if not 0.0 <= p <= 0.5:
        raise BadParam(f"crossover probability {p} outside [0, 0.5]")
    return DmcKernel([[1.0 - p, p], [p, 1.0 - p]])


def qsc(p: float) -> DmcKernel:
    """4-ary symmetric channel: diagonal 1-p, off-diagonal p/3."""
    if not 0.0 <= p <= 0.75:
        raise BadParam(f"total error probability {p} outside [0, 0.75]")
    m = np.full((4, 4), p / 3.0)
    np.fill_diagonal(m, 1.0 - p)
    return DmcKernel(m)


class GaussianChannel:
    """Vector additive-Gaussian channel Y = X + Z with fixed input covariance.

    The input covariance is user supplied (taken as the capacity-achieving
    one); no power optimization happens here.
    """

    def __init__(self, sigma_x: SymMatrix, sigma_n: SymMatrix):
        if sigma_x.d != sigma_n.d:
            raise BadParam("input and noise covariance dimensions differ")
        for name, m in (("sigma_x", sigma_x), ("sigma_n", sigma_n)):
            if m.min_eigenvalue() <= 1e-12:
                raise BadParam(f"{name} must be positive definite")
        self.sigma_x = sigma_x
        self.sigma_n = sigma_n
        self.d = sigma_x.d
        self.sigma_y = SymMatrix(sigma_x.array() + sigma_n.array())
        # B = Sigma_X Sigma_Y^-1 is the MMSE gain: E[X|Y] = B Y.
        self.gain = sigma_x.array() @ linalg.sym_inv(self.sigma_y).array()
        self.sigma_x_given_y = SymMatrix(sigma_x.array() - self.gain @ sigma_x.array())
        if self.sigma_x_given_y.min_eigenvalue() <= 1e-12:
            raise BadParam("posterior covariance not positive definite")
        self._chol_n = linalg.cholesky_lower(sigma_n)

    def sample(self, x, rng: np.random.Generator):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise BadInput(f"input must lie in R^{self.d}")
        z = rng.standard_normal(x.shape) @ self._chol_n.T
        return x + z

    def likelihood(self, y, x):
        r = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        inv = linalg.sym_inv(self.sigma_n).array()
        quad = np.einsum("...i,ij,...j->...", r, inv, r)
        w, _ = self.sigma_n.eigh()
        norm = (2 * np.pi) ** (-self.d / 2) * np.prod(w) ** -0.5
        return norm * np.exp(-0.5 * quad)


@dataclass(frozen=True)
class CapacityReport:
    capacity_bits: float
    input_distribution: object
    iterations: int = 0
    convergence_gap: float = 0.0

    def __post_init__(self):
        if self.capacity_bits < -1e-12:
            raise BadParam("capacity cannot be negative")
        px = self.input_distribution
        if isinstance(px, np.ndarray):
            if abs(px.sum() - 1.0) > 1e-12 or np.any(px < 0):
                raise BadParam("input distribution must be a probability vector")


def capacity_dmc(kernel: DmcKernel, tolerance: float = 1e-9,
                 max_iter: int = 100_000) -> CapacityReport:
    """Blahut-Arimoto iteration for unconstrained DMC capacity.

    Stops when the standard duality gap max_x D(P_Y|x || q_Y) - I(r) drops
    below `tolerance` (bits), which brackets the true capacity.
    """
    p = kernel.matrix
    m = kernel.n_inputs
    r = np.full(m, 1.0 / m)
    mask = p > 0
    logp = np.where(mask, np.log(np.where(mask, p, 1.0)), 0.0)
    for it in range(1, max_iter + 1):
        q = r @ p
        # d[x] = D(P_{Y|x} || q) in nats
        with np.errstate(divide="ignore"):
            logq = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), -np.inf)
        d = np.sum(np.where(mask, p * (logp - logq), 0.0), axis=1)
        lower = float(r @ d)
        upper = float(np.max(d))
        if upper - lower < tolerance * LOG2:
            return CapacityReport(lower / LOG2, r, it, (upper - lower) / LOG2)
        r = r * np.exp(d - upper)
        r = r / r.sum()
    raise NoConvergence(f"Blahut-Arimoto did not converge in {max_iter} iterations")


def capacity_gaussian(ch: GaussianChannel) -> CapacityReport:
    """Closed form 1/2 log2 det(Sigma_Y) / det(Sigma_N) for fixed Sigma_X."""
    _, ld_y = np.linalg.slogdet(ch.sigma_y.array())
    _, ld_n = np.linalg.slogdet(ch.sigma_n.array())
    c = 0.5 * (ld_y - ld_n) / LOG2
    return CapacityReport(c, ch.sigma_x)


def channel_config(ch) -> dict:
    """JSON-safe description of a channel, invertible by channel_from_config."""
    if isinstance(ch, GaussianChannel):
        return {"type": "gaussian", "sigma_x": ch.sigma_x.array().tolist(),
                "sigma_n": ch.sigma_n.array().tolist()}
    if isinstance(ch, DmcKernel):
        return {"type": "dmc", "matrix": ch.matrix.tolist()}
    raise BadParam(f"unknown channel object {type(ch).__name__}")


def channel_from_config(cfg: dict):
    """Build a channel from its JSON description.

    Accepted types: bsc {p}, qsc {p}, dmc {matrix}, awgn {snr},
    gaussian {sigma_x, sigma_n}.
    """
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise BadParam("channel config must be an object with a 'type' field")
    kind = cfg["type"]
    required = {"bsc": ("p",), "qsc": ("p",), "dmc": ("matrix",),
                "awgn": ("snr",), "gaussian": ("sigma_x", "sigma_n")}
    for key in required.get(kind, ()):
        if key not in cfg:
            raise BadParam(f"channel type {kind!r} requires field {key!r}")
    if kind == "bsc":
        return bsc(float(cfg["p"]))
    if kind == "qsc":
        return qsc(float(cfg["p"]))
    if kind == "dmc":
        return DmcKernel(cfg["matrix"])
    if kind == "awgn":
        snr = float(cfg["snr"])
        if snr <= 0:
            raise BadParam("snr must be positive")
        return GaussianChannel(SymMatrix([[snr]]), SymMatrix([[1.0]]))
    if kind == "gaussian":
        return GaussianChannel(SymMatrix(cfg["sigma_x"]), SymMatrix(cfg["sigma_n"]))
    raise BadParam(f"unknown channel type {kind!r}")


def binary_entropy(p: float) -> float:
    """H2(p) in bits."""
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))
