"""Small dense symmetric-matrix utilities.

Everything here targets desk-scale problems (d <= 16).  The eigendecomposition
is a cyclic Jacobi sweep: deterministic, dependency-free and accurate to
near machine precision at these sizes.
"""

from __future__ import annotations

import numpy as np

from .errors import BadParam, NotPSD

MAX_DIM = 16
_JACOBI_TOL = 1e-14


class SymMatrix:
    """Symmetric real matrix; only the lower triangle is authoritative.

    The constructor symmetrizes its input so storage is exactly symmetric.
    """

    def __init__(self, m):
        a = np.asarray(m, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise BadParam(f"expected square matrix, got shape {a.shape}")
        if a.shape[0] > MAX_DIM:
            raise BadParam(f"dimension {a.shape[0]} exceeds supported {MAX_DIM}")
        lower = np.tril(a)
        self._a = lower + np.tril(lower, -1).T
        self._a.setflags(write=False)

    @property
    def d(self) -> int:
        return self._a.shape[0]

    def array(self) -> np.ndarray:
        return self._a

    def __repr__(self):
        return f"SymMatrix({self._a.tolist()!r})"

    def eigh(self):
        """Eigendecomposition via cyclic Jacobi rotations.

        Returns (eigenvalues ascending, orthogonal matrix V) with
        a = V diag(w) V^T.
        """
        return jacobi_eigh(self._a)

    def min_eigenvalue(self) -> float:
        return float(self.eigh()[0][0])

    def is_psd(self, tol: float = 1e-12) -> bool:
        return self.min_eigenvalue() >= -tol


def jacobi_eigh(a: np.ndarray, tol: float = _JACOBI_TOL, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Sweeps all off-diagonal pairs until their Frobenius norm drops below
    `tol` times the matrix norm.  Returns eigenvalues sorted ascending and
    the matching orthonormal eigenvector columns.
    """
    a = np.array(a, dtype=float)
    d = a.shape[0]
    v = np.eye(d)
    if d == 1:
        return a.diagonal().copy(), v
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot = np.eye(d)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    order = np.argsort(a.diagonal())
    return a.diagonal()[order].copy(), v[:, order]


def sym_sqrt(m: SymMatrix, psd_tol: float = 1e-9) -> SymMatrix:
    """Symmetric PSD square root: s with s @ s = m.

    Raises NotPSD when the smallest eigenvalue is below -psd_tol; small
    negative eigenvalues above that threshold are clipped to zero.
    """
    w, v = m.eigh()
    if w[0] < -psd_tol:
        raise NotPSD(f"min eigenvalue {w[0]:.3e} < {-psd_tol:.0e}")
    w = np.clip(w, 0.0, None)
    return SymMatrix(v @ np.diag(np.sqrt(w)) @ v.T)


def sym_inv(m: SymMatrix) -> SymMatrix:
    w, v = m.eigh()
    if np.min(np.abs(w)) < 1e-14:
        raise BadParam("matrix numerically singular")
    return SymMatrix(v @ np.diag(1.0 / w) @ v.T)


def sym_inv_sqrt(m: SymMatrix, psd_tol: float = 1e-9) -> SymMatrix:
    w, v = m.eigh()
    if w[0] < -psd_tol:
        raise NotPSD(f"min eigenvalue {w[0]:.3e} < {-psd_tol:.0e}")
    if w[0] <= 0:
        raise BadParam("matrix singular, cannot form inverse square root")
    return SymMatrix(v @ np.diag(w ** -0.5) @ v.T)


def cholesky_lower(m: SymMatrix) -> np.ndarray:
    """Lower Cholesky factor (strictly PD input)."""
    a = m.array()
    d = a.shape[0]
    l = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1):
            s = a[i, j] - l[i, :j] @ l[j, :j]
            if i == j:
                if s <= 0:
                    raise NotPSD(f"leading minor {i + 1} not positive")
                l[i, j] = np.sqrt(s)
            else:
                l[i, j] = s / l[j, j]
    return l
