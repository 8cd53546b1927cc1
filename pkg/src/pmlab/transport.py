"""Construction of the two maps every matching scheme needs.

phi pushes the uniform prior on the unit cube to the capacity-achieving
input distribution; for each channel output y, s_constructor(y) builds an
invertible map pushing the one-step posterior back to uniform.  Four
flavors are supported: the 1-D conditional-CDF map, the Gaussian
symmetric-cost affine map, the Gaussian triangular map, and the
grid-conditioned triangular map for piecewise-constant posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import linalg
from .channels import DmcKernel, GaussianChannel, capacity_dmc
from .errors import BadParam, DegenerateDensity, NotPSD, ZeroLikelihood
from .linalg import SymMatrix
from .maps import AffineMap, MonotoneMap1D, PiecewiseConstantDensity1D, TriangularMap

# Cells with less relative mass than this get a uniform floor so the
# triangular map stays a total bijection even where the posterior vanishes.
_MASS_FLOOR = 1e-12


class DiscretePhi:
    """Quantile map [0,1) -> symbol index for a pmf.

    Right-continuous inverse CDF with half-open cells [F(k-1), F(k)), so
    uniform draws push forward to the pmf exactly.
    """

    def __init__(self, pmf):
        p = np.asarray(pmf, dtype=float)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise BadParam("pmf must be nonnegative and sum to 1")
        self.pmf = p
        self.edges = np.concatenate([[0.0], np.cumsum(p)])
        self.edges[-1] = 1.0

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        k = np.clip(np.searchsorted(self.edges, w, side="right") - 1, 0, len(self.pmf) - 1)
        return k if k.shape else int(k)

    def cell_bounds(self, k: int):
        return float(self.edges[k]), float(self.edges[k + 1])


class GridPhi:
    """Product quantile map [0,1]^d -> symbol index over a box partition.

    Symbols are the raveled multi-index of per-axis cells (axis 0 fastest
    varying is NOT used; numpy C-order: last axis fastest).  Cell volumes
    are the symbol prior masses.
    """

    def __init__(self, axis_edges):
        self.axis_edges = [np.asarray(e, dtype=float) for e in axis_edges]
        for e in self.axis_edges:
            if e[0] != 0.0 or abs(e[-1] - 1.0) > 1e-12 or np.any(np.diff(e) <= 0):
                raise BadParam("axis edges must increase strictly from 0 to 1")
        self.d = len(self.axis_edges)
        self.shape = tuple(len(e) - 1 for e in self.axis_edges)

    def cells(self, W):
        W = np.atleast_2d(np.asarray(W, dtype=float))
        return tuple(
            np.clip(np.searchsorted(self.axis_edges[j], W[:, j], side="right") - 1,
                    0, self.shape[j] - 1)
            for j in range(self.d)
        )

    def __call__(self, w):
        scalar = np.asarray(w).ndim == 1
        idx = np.ravel_multi_index(self.cells(w), self.shape)
        return int(idx[0]) if scalar else idx

    def symbol_masses(self) -> np.ndarray:
        vols = np.diff(self.axis_edges[0])
        for e in self.axis_edges[1:]:
            vols = np.multiply.outer(vols, np.diff(e))
        return vols.ravel()


class GaussianPhi:
    """phi(w) = L ndtri(w) componentwise, L the lower Cholesky of Sigma_X.

    A valid pushforward of the uniform cube to N(0, Sigma_X); deterministic
    and invertible (optimality of phi is not required).
    """

    def __init__(self, sigma_x: SymMatrix):
        self.sigma_x = sigma_x
        self.chol = linalg.cholesky_lower(sigma_x)
        self._inv_chol = np.linalg.inv(self.chol)
        self.d = sigma_x.d

    def __call__(self, w):
        z = ndtri(np.asarray(w, dtype=float))
        return z @ self.chol.T

    def inverse_at(self, x):
        z = np.asarray(x, dtype=float) @ self._inv_chol.T
        return ndtr(z)

    def log_det_jacobian(self, w) -> float:
        """log |det D phi| at w; phi'(w) = L diag(1 / pdf(ndtri(w)))."""
        z = ndtri(np.asarray(w, dtype=float))
        log_pdf = -0.5 * z ** 2 - 0.5 * np.log(2 * np.pi)
        return float(np.sum(np.log(np.diag(self.chol))) - np.sum(log_pdf))


def phi_1d(px_star):
    """1-D prior-to-input map: quantile map for a pmf, Gaussian otherwise.

    px_star is a pmf array for discrete channels, or a scalar variance for
    the scalar Gaussian channel.
    """
    if np.ndim(px_star) == 0:
        return GaussianPhi(SymMatrix([[float(px_star)]]))
    return DiscretePhi(px_star)


def posterior_cells_1d(kernel: DmcKernel, phi: DiscretePhi, y: int):
    """One-step posterior of the state given Y = y, as cell densities."""
    lik = kernel.matrix[:, y]
    masses = phi.pmf * lik
    total = masses.sum()
    if total <= 1e-300:
        raise ZeroLikelihood(f"output {y} has probability zero")
    widths = np.diff(phi.edges)
    dens = np.where(widths > 0, lik / total, 0.0)
    return phi.edges.copy(), dens


def s_cdf_1d(kernel: DmcKernel, phi: DiscretePhi, y: int) -> MonotoneMap1D:
    """Conditional-CDF transport map for a discrete-output channel."""
    edges, dens = posterior_cells_1d(kernel, phi, y)
    if np.any(dens <= 0):
        dens = np.maximum(dens, _MASS_FLOOR)
        dens = dens / np.sum(dens * np.diff(edges))
    return PiecewiseConstantDensity1D(edges, dens, normalize=True).cdf()


def brenier_gaussian(ch: GaussianChannel):
    """Symmetric-quadratic-cost affine map for the Gaussian channel.

    Returns (alpha, s_constructor) with
    alpha = Sx^(1/2) (Sx^(1/2) S_{X|Y} Sx^(1/2))^(-1/2) Sx^(1/2)
    and s_constructor(y)(x) = alpha (x - B y).  Verifies the defining
    identity alpha S_{X|Y} alpha^T = Sigma_X at construction.
    """
    half = linalg.sym_sqrt(ch.sigma_x).array()
    inner = SymMatrix(half @ ch.sigma_x_given_y.array() @ half)
    alpha = SymMatrix(half @ linalg.sym_inv_sqrt(inner).array() @ half)
    a = alpha.array()
    err = np.linalg.norm(a @ ch.sigma_x_given_y.array() @ a.T - ch.sigma_x.array())
    if err > 1e-8:
        raise NotPSD(f"transport identity violated, residual {err:.3e}")

    def s_constructor(y):
        y = np.asarray(y, dtype=float)
        return AffineMap(a, -a @ (ch.gain @ y))

    return alpha, s_constructor


def kr_gaussian(ch: GaussianChannel):
    """Triangular (successive-cancellation) map for the Gaussian channel.

    The linear part T = L_prior L_post^-1 is the unique lower-triangular
    positive-diagonal solution of T S_{X|Y} T^T = Sigma_X, obtained by
    matching lower Cholesky factors.
    """
    if ch.d < 2:
        raise BadParam("triangular Gaussian map needs d >= 2")
    l_prior = linalg.cholesky_lower(ch.sigma_x)
    l_post = linalg.cholesky_lower(ch.sigma_x_given_y)
    t = l_prior @ np.linalg.inv(l_post)

    def s_constructor(y):
        y = np.asarray(y, dtype=float)
        return AffineMap(t, -t @ (ch.gain @ y))

    return t, s_constructor


class GridDensity:
    """Piecewise-constant probability density on a box partition of [0,1]^d."""

    def __init__(self, axis_edges, masses, normalize: bool = False):
        self.axis_edges = [np.asarray(e, dtype=float) for e in axis_edges]
        m = np.asarray(masses, dtype=float)
        if m.shape != tuple(len(e) - 1 for e in self.axis_edges):
            raise BadParam("mass array shape does not match the grid")
        if np.any(m < 0):
            raise BadParam("masses must be nonnegative")
        total = float(m.sum())
        if total < 1e-12:
            raise DegenerateDensity("total mass below 1e-12")
        if normalize or abs(total - 1.0) > 1e-12:
            if not normalize and abs(total - 1.0) > 1e-9:
                raise BadParam(f"masses sum to {total!r}, not 1")
            m = m / total
        self.masses = m
        self.d = len(self.axis_edges)


def kr_grid(density: GridDensity) -> TriangularMap:
    """Triangular map from a grid density to the uniform cube.

    Coordinate k applies the conditional CDF of the density given the grid
    cell of the preceding coordinates.  Cells with (numerically) zero mass
    receive a uniform floor, which keeps every conditional strictly
    increasing and makes empty prefix cells condition as identity.
    """
    m = density.masses
    if np.any(m < _MASS_FLOOR / m.size):
        m = m + _MASS_FLOOR / m.size
        m = m / m.sum()
    d = density.d
    conds = []
    for k in range(d):
        # aggregate out trailing axes: shape (m1, ..., m_{k+1})
        agg = m.sum(axis=tuple(range(k + 1, d)))
        prefix_shape = agg.shape[:-1]
        table = np.empty(prefix_shape, dtype=object)
        edges = density.axis_edges[k]
        for idx in np.ndindex(*prefix_shape):
            v = agg[idx]
            total = v.sum()
            if total < _MASS_FLOOR:
                table[idx] = MonotoneMap1D.identity()
                continue
            ys = np.concatenate([[0.0], np.cumsum(v / total)])
            ys[-1] = 1.0
            table[idx] = MonotoneMap1D(edges, ys)
        conds.append(table)
    return TriangularMap(density.axis_edges, conds)


@dataclass(frozen=True)
class MEpsilonFamily:
    """Diagonal cost weights interpolating Brenier (eps=1) toward KR (eps->0)."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise BadParam("dimension must be >= 1")


def weighted_cost_schedule(family: MEpsilonFamily, eps: float) -> np.ndarray:
    """Geometric weight vector (1, eps, eps^2, ...) for the quadratic cost.

    Documents which finite-eps member approximates the triangular limit;
    the package implements the two endpoint maps exactly, so this is used
    for plots and docs only.
    """
    if not 0.0 < eps <= 1.0:
        raise BadParam("eps must lie in (0, 1]")
    return eps ** np.arange(family.d)


FLAVORS = ("cdf1d", "brenier", "kr-gaussian", "kr-grid")


@dataclass(frozen=True)
class PmMapKit:
    """Everything a session needs: phi, the S_y constructor, and metadata."""

    flavor: str
    d: int
    channel: object
    phi: object
    s_constructor: object
    px_star: object = None

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise BadParam(f"unknown flavor {self.flavor!r}")


def make_kit(channel, flavor: str, px_star=None) -> PmMapKit:
    """Build the map kit for a channel/flavor pair.

    For DMC channels px_star defaults to the Blahut-Arimoto optimum; a
    Gaussian channel's input covariance is part of the channel itself.
    """
    if flavor == "cdf1d":
        if not isinstance(channel, DmcKernel):
            raise BadParam("cdf1d flavor needs a discrete channel")
        if px_star is None:
            px_star = capacity_dmc(channel).input_distribution
        phi = DiscretePhi(px_star)
        return PmMapKit("cdf1d", 1, channel, phi,
                        lambda y: s_cdf_1d(channel, phi, y), px_star)
    if flavor == "brenier":
        if not isinstance(channel, GaussianChannel):
            raise BadParam("brenier flavor needs a Gaussian channel")
        _, s = brenier_gaussian(channel)
        return PmMapKit("brenier", channel.d, channel, GaussianPhi(channel.sigma_x), s)
    if flavor == "kr-gaussian":
        if not isinstance(channel, GaussianChannel):
            raise BadParam("kr-gaussian flavor needs a Gaussian channel")
        _, s = kr_gaussian(channel)
        return PmMapKit("kr-gaussian", channel.d, channel, GaussianPhi(channel.sigma_x), s)
    if flavor == "kr-grid":
        if not isinstance(channel, DmcKernel):
            raise BadParam("kr-grid flavor needs a discrete channel")
        if channel.n_inputs == 4:
            phi = GridPhi([[0.0, 0.5, 1.0], [0.0, 0.5, 1.0]])
        elif channel.n_inputs == 2:
            phi = GridPhi([[0.0, 0.5, 1.0]])
        else:
            raise BadParam("kr-grid flavor supports 2- or 4-ary inputs")
        if px_star is not None and not np.allclose(
                np.asarray(px_star), phi.symbol_masses(), atol=1e-9):
            raise BadParam("kr-grid quantile grid requires the uniform input optimum")

        def s(y):
            return kr_grid(grid_posterior(channel, phi, y))

        return PmMapKit("kr-grid", phi.d, channel, phi, s)
    raise BadParam(f"unknown flavor {flavor!r}")


def grid_posterior(kernel: DmcKernel, phi: GridPhi, y: int) -> GridDensity:
    """One-step posterior over the phi partition given Y = y."""
    lik = kernel.matrix[:, y]
    masses = phi.symbol_masses() * lik
    total = masses.sum()
    if total <= 1e-300:
        raise ZeroLikelihood(f"output {y} has probability zero")
    return GridDensity(phi.axis_edges, (masses / total).reshape(phi.shape))
