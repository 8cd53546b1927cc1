"""Shared fixtures, goodness-of-fit helpers, and the acceptance scorecard."""

import numpy as np
import pytest
from scipy import stats

from pmlab.channels import GaussianChannel, bsc, qsc
from pmlab.linalg import SymMatrix
from pmlab.transport import make_kit


# One line per headline criterion, filled in by tests/test_acceptance.py and
# echoed after the run regardless of output capture.
acceptance_scorecard: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_scorecard:
        terminalreporter.section("acceptance scorecard")
        for line in acceptance_scorecard:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bsc02_kit():
    return make_kit(bsc(0.2), "cdf1d")


@pytest.fixture(scope="session")
def qsc03_grid_kit():
    return make_kit(qsc(0.3), "kr-grid")


@pytest.fixture(scope="session")
def awgn_channel():
    return GaussianChannel(SymMatrix([[1.0]]), SymMatrix([[1.0]]))


@pytest.fixture(scope="session")
def awgn_kit(awgn_channel):
    return make_kit(awgn_channel, "brenier")


@pytest.fixture(scope="session")
def mimo_channel():
    return GaussianChannel(SymMatrix([[2.0, 0.5], [0.5, 1.0]]),
                           SymMatrix([[1.0, 0.0], [0.0, 1.0]]))


@pytest.fixture(scope="session")
def mimo_brenier_kit(mimo_channel):
    return make_kit(mimo_channel, "brenier")


@pytest.fixture(scope="session")
def mimo_kr_kit(mimo_channel):
    return make_kit(mimo_channel, "kr-gaussian")


def ks_uniform_pvalue(samples) -> float:
    """Kolmogorov-Smirnov p-value against Uniform[0, 1]."""
    return float(stats.kstest(np.asarray(samples, dtype=float), "uniform").pvalue)


def chi2_uniform_cube_pvalue(samples, bins_per_axis: int = 8) -> float:
    """Chi-square p-value of d-dimensional samples against Uniform[0,1]^d."""
    w = np.atleast_2d(np.asarray(samples, dtype=float))
    n, d = w.shape
    edges = np.linspace(0.0, 1.0, bins_per_axis + 1)
    idx = np.zeros(n, dtype=np.int64)
    for j in range(d):
        idx = idx * bins_per_axis + np.clip(
            np.searchsorted(edges, w[:, j], side="right") - 1, 0, bins_per_axis - 1)
    counts = np.bincount(idx, minlength=bins_per_axis ** d)
    expected = n / bins_per_axis ** d
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    return float(stats.chi2.sf(chi2, bins_per_axis ** d - 1))


def chi2_pmf_pvalue(samples, pmf) -> float:
    """Chi-square p-value of integer samples against a target pmf."""
    pmf = np.asarray(pmf, dtype=float)
    counts = np.bincount(np.asarray(samples, dtype=np.int64), minlength=len(pmf))
    n = counts.sum()
    keep = pmf > 0
    chi2 = float(np.sum((counts[keep] - n * pmf[keep]) ** 2 / (n * pmf[keep])))
    return float(stats.chi2.sf(chi2, keep.sum() - 1))


def gaussian_gof_pvalue(samples, sigma: np.ndarray) -> float:
    """KS p-value of vector samples against N(0, sigma), whitened per axis.

    Whitening by the true Cholesky factor reduces the check to d independent
    standard-normal margins; the returned p-value is the Bonferroni-adjusted
    minimum.
    """
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    lw = np.linalg.inv(np.linalg.cholesky(np.asarray(sigma, dtype=float)))
    z = x @ lw.T
    ps = [stats.kstest(z[:, j], "norm").pvalue for j in range(z.shape[1])]
    return float(min(1.0, min(ps) * z.shape[1]))
