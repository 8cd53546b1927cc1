"""Invertible map primitives on the unit cube and on R^d.

The 1-D workhorse is a piecewise-linear strictly increasing map fixing the
endpoints of [0, 1]; d-dimensional transport is either affine (Gaussian
cases) or triangular with grid-conditioned 1-D maps per coordinate.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import BadParam, OutOfDomain

# Breakpoints closer than this are merged; keeps maps well conditioned
# over thousands of compositions.
DEDUP_TOL = 1e-14
# Past this many breakpoints a composition falls back to a lazy factor list.
MAX_BREAKPOINTS = 10_000


def _dedup(xs: np.ndarray, ys: np.ndarray):
    keep = np.empty(len(xs), dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(xs) > DEDUP_TOL
    keep[-1] = True
    if not keep[-2] and xs[-1] - xs[-2] <= DEDUP_TOL:
        keep[-2] = False
    return xs[keep], ys[keep]


class MonotoneMap1D:
    """Piecewise-linear strictly increasing bijection of [0, 1].

    breakpoints and values are equal-length, strictly increasing, with
    fixed endpoints 0 -> 0 and 1 -> 1.
    """

    __slots__ = ("xs", "ys")

    def __init__(self, breakpoints, values):
        xs = np.asarray(breakpoints, dtype=float)
        ys = np.asarray(values, dtype=float)
        if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 2:
            raise BadParam("breakpoints/values must be matching 1-D arrays, length >= 2")
        if abs(xs[0]) > 0 or abs(xs[-1] - 1) > 1e-12 or abs(ys[0]) > 0 or abs(ys[-1] - 1) > 1e-12:
            raise BadParam("map must fix 0 -> 0 and 1 -> 1")
        if np.any(np.diff(xs) < -DEDUP_TOL) or np.any(np.diff(ys) < -DEDUP_TOL):
            raise BadParam("breakpoints and values must be strictly increasing")
        xs, ys = _dedup(xs, ys)
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise BadParam("breakpoints and values must be strictly increasing")
        xs[-1] = 1.0
        ys[-1] = 1.0
        self.xs = xs
        self.ys = ys

    @classmethod
    def identity(cls) -> "MonotoneMap1D":
        return cls([0.0, 1.0], [0.0, 1.0])

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    def inverse_at(self, y):
        return np.interp(y, self.ys, self.xs)

    def inverted(self) -> "MonotoneMap1D":
        """Swap breakpoints and values; an exact involution."""
        return MonotoneMap1D(self.ys.copy(), self.xs.copy())

    def slope_at(self, x) -> np.ndarray:
        """Slope of the segment containing x (right segment at breakpoints)."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.xs) - 2)
        return (self.ys[idx + 1] - self.ys[idx]) / (self.xs[idx + 1] - self.xs[idx])

    def is_identity(self) -> bool:
        return len(self.xs) == 2 and np.array_equal(self.xs, self.ys)

    def n_breakpoints(self) -> int:
        return len(self.xs)

    def __repr__(self):
        return f"MonotoneMap1D({len(self.xs)} breakpoints)"


class ComposedMap1D:
    """Lazy ordered composition of monotone 1-D maps.

    Used when explicit breakpoint refinement would blow past
    MAX_BREAKPOINTS; evaluation applies factors in order, inversion walks
    them backwards so round-trip error stays linear in the factor count.
    """

    __slots__ = ("factors",)

    def __init__(self, factors):
        self.factors = list(factors)

    def __call__(self, x):
        for f in self.factors:
            x = f(x)
        return x

    def inverse_at(self, y):
        for f in reversed(self.factors):
            y = f.inverse_at(y)
        return y

    def slope_at(self, x):
        s = np.ones_like(np.asarray(x, dtype=float))
        for f in self.factors:
            s = s * f.slope_at(x)
            x = f(x)
        return s


def invert1d(f: MonotoneMap1D) -> MonotoneMap1D:
    return f.inverted()


def compose1d(f, g):
    """h with h(x) = g(f(x)).

    For explicit maps the result refines breakpoints exactly:
    f's breakpoints union the f-preimages of g's breakpoints.  Oversized or
    lazy operands produce a lazy factor list instead.
    """
    if isinstance(f, ComposedMap1D) or isinstance(g, ComposedMap1D):
        fs = f.factors if isinstance(f, ComposedMap1D) else [f]
        gs = g.factors if isinstance(g, ComposedMap1D) else [g]
        return ComposedMap1D(fs + gs)
    xs = np.union1d(f.xs, f.inverse_at(g.xs))
    if len(xs) > MAX_BREAKPOINTS:
        return ComposedMap1D([f, g])
    ys = g(f(xs))
    # deep in a contracted tail distinct breakpoints can map to the same
    # float value; collapse such runs so the result stays strictly monotone
    _, idx = np.unique(ys, return_index=True)
    if len(idx) < len(ys):
        if idx[-1] != len(ys) - 1:
            idx[-1] = len(ys) - 1  # keep the x = 1 endpoint of a flat top run
        xs, ys = xs[idx], ys[idx]
    return MonotoneMap1D(xs, ys)


class PiecewiseConstantDensity1D:
    """Probability density on [0, 1], constant on cells between breakpoints."""

    def __init__(self, breakpoints, densities, normalize: bool = False):
        xs = np.asarray(breakpoints, dtype=float)
        d = np.asarray(densities, dtype=float)
        if xs.ndim != 1 or len(xs) < 2 or len(d) != len(xs) - 1:
            raise BadParam("need k+1 breakpoints for k cell densities")
        if abs(xs[0]) > 0 or abs(xs[-1] - 1) > 1e-12 or np.any(np.diff(xs) <= 0):
            raise BadParam("breakpoints must increase strictly from 0 to 1")
        if np.any(d < 0):
            raise BadParam("density must be nonnegative")
        total = float(np.sum(d * np.diff(xs)))
        if normalize:
            if total <= 0:
                raise BadParam("cannot normalize zero density")
            d = d / total
        elif abs(total - 1.0) > 1e-12:
            raise BadParam(f"density integrates to {total!r}, not 1")
        self.xs = xs
        self.values = d

    def at(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.values) - 1)
        return self.values[idx]

    def cdf(self) -> MonotoneMap1D:
        masses = self.values * np.diff(self.xs)
        ys = np.concatenate([[0.0], np.cumsum(masses)])
        ys[-1] = 1.0
        return MonotoneMap1D(self.xs, ys)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.cdf().inverse_at(rng.random(n))


class AffineMap:
    """Invertible affine map x -> A x + b on R^d."""

    def __init__(self, matrix, offset):
        a = np.asarray(matrix, dtype=float)
        b = np.asarray(offset, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != (a.shape[0],):
            raise BadParam("matrix must be square with matching offset")
        sign, logdet = np.linalg.slogdet(a)
        if sign == 0 or not np.isfinite(logdet):
            raise BadParam("matrix is singular")
        self.matrix = a
        self.offset = b
        self.log_abs_det = float(logdet)
        self.condition_number = float(np.linalg.cond(a))
        self._inv = np.linalg.inv(a)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def inverse_matrix(self) -> np.ndarray:
        return self._inv

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.matrix.T + self.offset

    def inverse_at(self, v):
        v = np.asarray(v, dtype=float)
        return (v - self.offset) @ self._inv.T

    def inverted(self) -> "AffineMap":
        return AffineMap(self._inv, -self._inv @ self.offset)


class Box:
    """Axis-aligned box, stored as (d, 2) [lo, hi] pairs."""

    __slots__ = ("bounds",)

    def __init__(self, bounds):
        b = np.asarray(bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 0] > b[:, 1]):
            raise BadParam("box bounds must be (d, 2) with lo <= hi")
        self.bounds = b

    @property
    def d(self) -> int:
        return self.bounds.shape[0]

    def volume(self) -> float:
        return float(np.prod(self.bounds[:, 1] - self.bounds[:, 0]))

    def contains(self, w) -> bool:
        w = np.asarray(w, dtype=float)
        return bool(np.all(w >= self.bounds[:, 0]) and np.all(w <= self.bounds[:, 1]))

    def __repr__(self):
        return f"Box({self.bounds.tolist()})"


def translated_cube(center, eps: float) -> Box:
    """Axis-aligned hypercube of volume 1-eps containing `center`.

    Translated (never clipped or shrunk) to fit inside the unit cube: along
    each axis the window is (u*(1-side), u*(1-side) + side), the linear
    interpolation of the endpoint cases (0, side) and (1-side, 1).  Volume
    is exactly 1-eps, the center is always a member, and both endpoints stay
    strictly interior for interior centers — pulling a window that touches
    the cube boundary back through the composed bijection would drag the
    entire probability tail along with it and ruin the volume measurement.
    """
    if not 0.0 < eps < 0.5:
        raise BadParam("eps must lie in (0, 1/2)")
    c = np.atleast_1d(np.asarray(center, dtype=float))
    side = (1.0 - eps) ** (1.0 / len(c))
    lo = c * (1.0 - side)
    return Box(np.stack([lo, lo + side], axis=1))


class TriangularMap:
    """Lower-triangular transport map on [0, 1]^d.

    Coordinate k applies a MonotoneMap1D selected by the grid cell that
    coordinates 0..k-1 of the *input* fall into, so the Jacobian is lower
    triangular with positive diagonal everywhere.

    conditionals[k] is an object-array of MonotoneMap1D with one axis per
    prefix coordinate (shape () for k == 0); grids[j] holds the conditioning
    breakpoints along input axis j.
    """

    def __init__(self, grids, conditionals):
        self.grids = [np.asarray(g, dtype=float) for g in grids]
        self.d = len(conditionals)
        self.conditionals = []
        for k, table in enumerate(conditionals):
            arr = np.asarray(table, dtype=object)
            want = tuple(len(self.grids[j]) - 1 for j in range(k))
            if arr.shape != want:
                raise BadParam(f"conditional table {k} has shape {arr.shape}, expected {want}")
            self.conditionals.append(arr)

    @classmethod
    def identity(cls, d: int) -> "TriangularMap":
        grids = [np.array([0.0, 1.0]) for _ in range(d)]
        conds = []
        for k in range(d):
            shape = tuple(1 for _ in range(k))
            table = np.empty(shape, dtype=object)
            table[...] = MonotoneMap1D.identity()
            conds.append(table)
        return cls(grids, conds)

    def _cell(self, j: int, x):
        g = self.grids[j]
        return np.clip(np.searchsorted(g, x, side="right") - 1, 0, len(g) - 2)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.d,):
            raise OutOfDomain(f"expected point in [0,1]^{self.d}")
        if np.any(w < 0) or np.any(w > 1):
            raise OutOfDomain(f"point {w} outside the unit cube")
        out = np.empty(self.d)
        for k in range(self.d):
            idx = tuple(int(self._cell(j, w[j])) for j in range(k))
            out[k] = self.conditionals[k][idx](w[k])
        return out

    def inverse_at(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(v < 0) or np.any(v > 1):
            raise OutOfDomain(f"point {v} outside the unit cube")
        w = np.empty(self.d)
        for k in range(self.d):
            idx = tuple(int(self._cell(j, w[j])) for j in range(k))
            w[k] = self.conditionals[k][idx].inverse_at(v[k])
        return w

    def eval_batch(self, W: np.ndarray) -> np.ndarray:
        """Vectorized forward evaluation of an (n, d) array of points."""
        W = np.asarray(W, dtype=float)
        out = np.empty_like(W)
        cells = [self._cell(j, W[:, j]) for j in range(self.d - 1)]
        for k in range(self.d):
            table = self.conditionals[k]
            if k == 0:
                out[:, 0] = table[()](W[:, 0])
                continue
            flat = np.ravel_multi_index(tuple(cells[j] for j in range(k)), table.shape)
            for cell_id in np.unique(flat):
                mask = flat == cell_id
                out[mask, k] = table.flat[cell_id](W[mask, k])
        return out

    def invert_batch(self, V: np.ndarray) -> np.ndarray:
        V = np.asarray(V, dtype=float)
        W = np.empty_like(V)
        for k in range(self.d):
            table = self.conditionals[k]
            if k == 0:
                W[:, 0] = table[()].inverse_at(V[:, 0])
                continue
            cells = tuple(self._cell(j, W[:, j]) for j in range(k))
            flat = np.ravel_multi_index(cells, table.shape)
            for cell_id in np.unique(flat):
                mask = flat == cell_id
                W[mask, k] = table.flat[cell_id].inverse_at(V[mask, k])
        return W

    def _split_points(self, j: int, lo: float, hi: float):
        g = self.grids[j]
        inner = g[(g > lo + 1e-15) & (g < hi - 1e-15)]
        return np.concatenate([[lo], inner, [hi]])

    def push_boxes(self, boxes):
        """Exact image of a union of axis-aligned boxes: a union of boxes.

        Each input box is split along every conditioning grid line it
        straddles; within a split piece each coordinate uses a single 1-D
        map, so the image of the piece is again a box.
        """
        pieces = []
        for box in boxes:
            b = box.bounds
            edges = [self._split_points(j, b[j, 0], b[j, 1]) for j in range(self.d - 1)]
            edges.append(np.array([b[self.d - 1, 0], b[self.d - 1, 1]]))
            ranges = [range(len(e) - 1) for e in edges[: self.d - 1]]
            for combo in itertools.product(*ranges):
                sub = np.empty((self.d, 2))
                for j, i in enumerate(combo):
                    sub[j] = edges[j][i], edges[j][i + 1]
                sub[self.d - 1] = b[self.d - 1]
                out = np.empty((self.d, 2))
                mid = 0.5 * (sub[:, 0] + sub[:, 1])
                for k in range(self.d):
                    idx = tuple(int(self._cell(j, mid[j])) for j in range(k))
                    f = self.conditionals[k][idx]
                    out[k] = f(sub[k, 0]), f(sub[k, 1])
                pieces.append(Box(out))
        return pieces

    def pull_boxes(self, boxes):
        """Exact preimage of a union of boxes, as a union of boxes."""
        pieces = []
        for box in boxes:
            stack = [(np.array(box.bounds, dtype=float), 0, np.empty((self.d, 2)))]
            while stack:
                b, k, acc = stack.pop()
                if k == self.d:
                    pieces.append(Box(acc.copy()))
                    continue
                idx = tuple(int(self._cell(j, 0.5 * (acc[j, 0] + acc[j, 1]))) for j in range(k))
                f = self.conditionals[k][idx]
                lo, hi = f.inverse_at(b[k, 0]), f.inverse_at(b[k, 1])
                if k == self.d - 1:
                    acc2 = acc.copy()
                    acc2[k] = lo, hi
                    pieces.append(Box(acc2))
                    continue
                for a, c in zip(*(lambda e: (e[:-1], e[1:]))(self._split_points(k, lo, hi))):
                    acc2 = acc.copy()
                    acc2[k] = a, c
                    stack.append((b, k + 1, acc2))
        return pieces

    def log_det_at(self, w) -> float:
        """log of the (lower-triangular) Jacobian determinant at w."""
        w = np.asarray(w, dtype=float)
        total = 0.0
        for k in range(self.d):
            idx = tuple(int(self._cell(j, w[j])) for j in range(k))
            total += float(np.log(self.conditionals[k][idx].slope_at(w[k])))
        return total


def triangular_eval(t: TriangularMap, w):
    return t(w)


def triangular_invert(t: TriangularMap, v):
    return t.inverse_at(v)
