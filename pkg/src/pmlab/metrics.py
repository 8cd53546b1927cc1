"""Rate and reliability instrumentation.

Pulled-back credible sets, the rate sequence R_n, the normalized
information density i_n, two-prior total-variation sensitivity, and mixing
diagnostics.  Long 1-D discrete runs use exact rational arithmetic; the
Gaussian flavors use exact affine algebra plus log-domain volumes, since
pulled-back volumes fall below float resolution within a few hundred steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import multivariate_normal

from . import exactpm
from .engine import LOG2, PmSession, simulate_ensemble
from .errors import BadParam, BadPrior
from .maps import Box, PiecewiseConstantDensity1D, translated_cube
from .transport import PmMapKit

# While the composed log2-determinant is below this, Gaussian pulled-back
# volumes are computed with an exact rectangle probability; beyond it the
# flat-density form is exact to O(2^-2n) and floats could not hold the
# rectangle parameters anyway.
_EXACT_VOLUME_LOG2DET = 45.0

CSV_COLUMNS = ("trial", "n", "vol_An", "R_n_bits", "i_n_bits", "tv", "seed")


@dataclass(frozen=True)
class EpsilonWindow:
    """Rule producing the volume-(1-eps) window around a state point."""

    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise BadParam("eps must lie in (0, 1/2)")

    def window(self, center) -> Box:
        return translated_cube(center, self.eps)


@dataclass
class RateTrace:
    """Checkpointed rate/information record of a single run."""

    eps: float
    ns: np.ndarray
    log2_vol: np.ndarray     # log2 Lebesgue volume of the pulled-back set
    r_bits: np.ndarray       # (1/n) log2((1-eps) / vol)
    i_bits: np.ndarray       # normalized information density at the message
    mass: np.ndarray         # posterior mass of the pulled-back set

    def final(self, name: str) -> float:
        return float(getattr(self, name)[-1])


def default_checkpoints(n_max: int, count: int = 24) -> np.ndarray:
    """Geometrically spaced step counts, always including n_max."""
    if n_max < 1:
        raise BadParam("n_max must be >= 1")
    pts = np.unique(np.geomspace(1, n_max, count).round().astype(int))
    return pts


def rate_trace(kit: PmMapKit, eps: float, n_steps: int, rng: np.random.Generator,
               checkpoints=None, message=None) -> RateTrace:
    """Run one session to n_steps, recording R_n, i_n and volumes.

    The trace is recorded at the given checkpoints (default: geometric grid).
    """
    window = EpsilonWindow(eps)
    cps = np.asarray(checkpoints if checkpoints is not None
                     else default_checkpoints(n_steps), dtype=int)
    if cps[-1] != n_steps or np.any(cps < 1):
        raise BadParam("checkpoints must end at n_steps and be >= 1")
    if kit.flavor == "cdf1d":
        return _rate_trace_exact(kit, window, n_steps, rng, cps, message)
    if kit.flavor in ("brenier", "kr-gaussian"):
        return _rate_trace_gaussian(kit, window, n_steps, rng, cps, message)
    return _rate_trace_grid(kit, window, n_steps, rng, cps, message)


def _rate_trace_exact(kit, window, n_steps, rng, cps, message):
    system = exactpm.Exact1DSystem(kit)
    if message is None:
        message = rng.random()
    run = system.run(float(np.atleast_1d(message)[0]), n_steps, rng,
                     checkpoints=cps)
    eps = window.eps
    log2_vol, r_bits, i_bits, mass = [], [], [], []
    eps_q = exactpm.to_rational(eps)
    side = 1 - eps_q
    for n in cps:
        wt = run.wt_at[int(n)]
        lo_tau = wt * eps_q
        hi_tau = lo_tau + side
        lo, hi = system.invert_interval(lo_tau, hi_tau, run.ys[:n])
        vol = hi - lo
        lv = exactpm.log2_rational(vol)
        log2_vol.append(lv)
        r_bits.append((exactpm.log2_rational(side) - lv) / n)
        i_bits.append(run.i_at[int(n)] / n)
        # bijection round trip is exact in rational arithmetic, so the
        # posterior mass of the pulled-back interval is the window volume
        mass.append(float(side))
    return RateTrace(eps, cps, np.array(log2_vol), np.array(r_bits),
                     np.array(i_bits), np.array(mass))


def gaussian_log2_volume(session: PmSession, eps: float) -> float:
    """log2 Lebesgue volume of the pulled-back window of a Gaussian session.

    Exact rectangle probability while the composed determinant is small;
    beyond that the posterior-density form
    log2 vol = log2 Leb(Z-box) + log2 p_X(x_hat) + log2 det L - sum log2|det A_k|
    whose relative error decays with the squared contraction factor.
    """
    tau = translated_cube(session._state_point(), eps)
    with np.errstate(divide="ignore"):
        zlo = ndtri(tau.bounds[:, 0])
        zhi = ndtri(tau.bounds[:, 1])
    chol = session.kit.phi.chol
    sum_log2det = session._sum_logdet / LOG2
    x_hat = session._xt.copy()
    for s in reversed(session.factors):
        x_hat = s.inverse_at(x_hat)
    if sum_log2det < _EXACT_VOLUME_LOG2DET:
        c_mat = np.linalg.inv(session._dinv)
        t = session._linv @ c_mat
        mean = session._linv @ session._xt - t @ x_hat
        cov = t @ session.kit.channel.sigma_x.array() @ t.T
        if session.kit.d == 1:
            s = np.sqrt(cov[0, 0])
            from scipy.special import ndtr
            p = ndtr((zhi[0] - mean[0]) / s) - ndtr((zlo[0] - mean[0]) / s)
        else:
            dist = multivariate_normal(mean=mean, cov=cov, allow_singular=True)
            p = dist.cdf(zhi, lower_limit=zlo)
        if p > 0:
            return float(np.log2(p))
        # fall through to the asymptotic form on underflow
    sigma_x_inv = np.linalg.inv(session.kit.channel.sigma_x.array())
    log2_px = (-0.5 * session.kit.d * np.log(2 * np.pi)
               - np.sum(np.log(np.diag(chol)))
               - 0.5 * x_hat @ sigma_x_inv @ x_hat) / LOG2
    log2_leb = float(np.sum(np.log2(zhi - zlo)))
    log2_detl = float(np.sum(np.log2(np.diag(chol))))
    return log2_leb + log2_px + log2_detl - sum_log2det


def _rate_trace_gaussian(kit, window, n_steps, rng, cps, message):
    seed = int(rng.integers(0, 2 ** 63))
    session = PmSession(kit, message=message, seed=seed)
    eps = window.eps
    want = set(int(c) for c in cps)
    log2_vol, r_bits, i_bits = [], [], []
    for t in range(1, n_steps + 1):
        session.step()
        if t in want:
            lv = gaussian_log2_volume(session, eps)
            log2_vol.append(lv)
            r_bits.append((np.log2(1.0 - eps) - lv) / t)
            i_bits.append(session._i_sum_bits / t)
    mass = np.full(len(cps), 1.0 - eps)
    return RateTrace(eps, cps, np.array(log2_vol), np.array(r_bits),
                     np.array(i_bits), mass)


def _rate_trace_grid(kit, window, n_steps, rng, cps, message):
    seed = int(rng.integers(0, 2 ** 63))
    session = PmSession(kit, message=message, seed=seed)
    eps = window.eps
    want = set(int(c) for c in cps)
    log2_vol, r_bits, i_bits, mass = [], [], [], []
    for t in range(1, n_steps + 1):
        session.step()
        if t in want:
            pieces = session.pulled_back_pieces(eps)
            vol = sum(p.volume() for p in pieces)
            if vol <= 0:
                raise BadParam("pulled-back volume underflowed; reduce n_steps")
            lv = float(np.log2(vol))
            log2_vol.append(lv)
            r_bits.append((np.log2(1.0 - eps) - lv) / t)
            i_bits.append(session._i_sum_bits / t)
            forward = pieces
            for s in session.factors:
                forward = s.push_boxes(forward)
            mass.append(float(sum(p.volume() for p in forward)))
    return RateTrace(eps, cps, np.array(log2_vol), np.array(r_bits),
                     np.array(i_bits), np.array(mass))


def pulled_back_set(session: PmSession, eps: float):
    """The pulled-back window with its exact volume: (region, volume).

    For piecewise flavors the region is a list of boxes; for Gaussian
    flavors it is the bounding box of the pulled-back parallelotope and the
    volume is computed analytically.
    """
    if session.kit.flavor in ("brenier", "kr-gaussian"):
        return session.credible_box(eps), float(2.0 ** gaussian_log2_volume(session, eps))
    pieces = session.pulled_back_pieces(eps)
    return pieces, float(sum(p.volume() for p in pieces))


def rate_sequence(trace: RateTrace) -> np.ndarray:
    """R_n = (1/n) log2(posterior mass / prior volume) of the pulled-back set."""
    return (np.log2(trace.mass) - trace.log2_vol) / trace.ns


def information_density_trace(kit: PmMapKit, n_steps: int, rng: np.random.Generator,
                              checkpoints=None, message=None):
    """(checkpoints, i_n) for one trajectory: the per-step log-Jacobian average."""
    trace = rate_trace(kit, 0.25, n_steps, rng, checkpoints, message)
    return trace.ns, trace.i_bits


def prior_sensitivity(kit: PmMapKit, nu, n_max: int, trials: int,
                      rng: np.random.Generator, checkpoints=None,
                      grid: int = 1024):
    """Mean total variation between the posteriors under two priors.

    The encoder runs the standard (uniform-prior) scheme with the message
    drawn from the alternative prior nu; two Bayes recursions on a shared
    grid track the posterior under nu and under the uniform prior for the
    same output stream.  Returns (checkpoints, mean TV per checkpoint).
    """
    if kit.flavor != "cdf1d":
        raise BadParam("prior sensitivity is implemented for the 1-D discrete flavor")
    if isinstance(nu, PiecewiseConstantDensity1D):
        nu_cdf = nu.cdf()
    else:
        raise BadPrior("alternative prior must be a piecewise-constant density on [0,1]")
    cps = np.asarray(checkpoints if checkpoints is not None
                     else default_checkpoints(n_max), dtype=int)
    edges = np.linspace(0.0, 1.0, grid + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    nu_mass = np.diff(nu_cdf(edges))
    nu_mass = nu_mass / nu_mass.sum()
    uni_mass = np.full(grid, 1.0 / grid)

    channel = kit.channel
    maps = [kit.s_constructor(y) for y in range(channel.n_outputs)]
    phi_edges = kit.phi.edges
    cum = np.cumsum(channel.matrix, axis=1)
    tv_sum = np.zeros(len(cps))
    for _ in range(trials):
        w = float(nu_cdf.inverse_at(rng.random()))
        wt = w
        cells = centers.copy()
        post_nu = nu_mass.copy()
        post_uni = uni_mass.copy()
        k = 0
        for t in range(1, int(cps[-1]) + 1):
            x = int(np.clip(np.searchsorted(phi_edges, wt, side="right") - 1,
                            0, channel.n_inputs - 1))
            y = int(np.searchsorted(cum[x], rng.random(), side="right"))
            x_cells = np.clip(np.searchsorted(phi_edges, cells, side="right") - 1,
                              0, channel.n_inputs - 1)
            lik = channel.matrix[x_cells, y]
            post_nu = post_nu * lik
            post_uni = post_uni * lik
            post_nu /= post_nu.sum()
            post_uni /= post_uni.sum()
            wt = float(maps[y](wt))
            cells = maps[y](cells)
            if t == cps[k]:
                tv_sum[k] += 0.5 * np.abs(post_nu - post_uni).sum()
                k += 1
    return cps, tv_sum / trials


@dataclass
class MixingReport:
    """Empirical mixing gaps |P(W_n in A, W_1 in B) - vol(A) vol(B)|."""

    lags: np.ndarray
    gap: np.ndarray              # max over the panel, per lag
    ci: np.ndarray               # 95% binomial half-width, per lag
    panel: list = field(default_factory=list)


def _dyadic_panel(d: int):
    """Four dyadic boxes per axis: both halves and two quarters."""
    cells = [(0.0, 0.5), (0.5, 1.0), (0.0, 0.25), (0.5, 0.75)]
    panel = []
    for axis in range(d):
        for lo, hi in cells:
            bounds = np.tile([0.0, 1.0], (d, 1))
            bounds[axis] = (lo, hi)
            panel.append(Box(bounds))
    return panel


def ergodicity_diagnostics(kit: PmMapKit, lags=(2, 5, 10, 25, 50),
                           trials: int = 2000,
                           rng: np.random.Generator = None) -> MixingReport:
    """Mixing surrogate for ergodicity over a fixed panel of dyadic boxes."""
    if trials < 1000:
        raise BadParam("need at least 10^3 trials for stable gap estimates")
    rng = rng if rng is not None else np.random.default_rng()
    lags = np.asarray(sorted(set(int(v) for v in lags)), dtype=int)
    result = simulate_ensemble(kit, int(lags[-1]), trials, rng,
                               snapshot_steps=[1, *lags.tolist()])
    panel = _dyadic_panel(kit.d)
    w1 = result.wt_at[1]
    members1 = [np.all((w1 >= b.bounds[:, 0]) & (w1 < b.bounds[:, 1]), axis=1)
                for b in panel]
    gaps, cis = [], []
    for lag in lags:
        wn = result.wt_at[int(lag)]
        worst, worst_ci = 0.0, 0.0
        for a in panel:
            in_a = np.all((wn >= a.bounds[:, 0]) & (wn < a.bounds[:, 1]), axis=1)
            for b, in_b in zip(panel, members1):
                p_joint = float(np.mean(in_a & in_b))
                target = a.volume() * b.volume()
                gap = abs(p_joint - target)
                if gap > worst:
                    worst = gap
                    worst_ci = 1.96 * np.sqrt(max(p_joint * (1 - p_joint), 1e-12) / trials)
        gaps.append(worst)
        cis.append(worst_ci)
    return MixingReport(lags, np.array(gaps), np.array(cis), panel)


def format_volume(log2_vol: float) -> str:
    """Decimal scientific notation from a base-2 log, safe below float range."""
    if not np.isfinite(log2_vol):
        return "0"
    log10 = log2_vol * np.log10(2.0)
    e = int(np.floor(log10))
    m = 10.0 ** (log10 - e)
    return f"{m:.6f}e{e:+03d}"


def write_metrics_csv(path, rows) -> None:
    """Write trace rows with the fixed column set, deterministically formatted."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row["trial"],
                row["n"],
                format_volume(row["log2_vol"]) if "log2_vol" in row else row.get("vol_An", ""),
                "" if row.get("R_n_bits") is None else f"{row['R_n_bits']:.9f}",
                "" if row.get("i_n_bits") is None else f"{row['i_n_bits']:.9f}",
                "" if row.get("tv") is None else f"{row['tv']:.9f}",
                row["seed"],
            ])
