"""End-to-end acceptance checks for the posterior-matching laboratory.

Each test covers one headline criterion and prints a single PASS/FAIL line
with the measured values, so the suite output doubles as a scorecard.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from pmlab import codec, experiments
from pmlab.channels import (GaussianChannel, binary_entropy, bsc,
                            capacity_dmc, capacity_gaussian, qsc)
from pmlab.engine import PmSession, simulate_ensemble
from pmlab.linalg import SymMatrix
from pmlab.metrics import prior_sensitivity, rate_trace
from pmlab.transport import brenier_gaussian, make_kit

import conftest
from bayes_oracle import posterior_grid
from conftest import (chi2_pmf_pvalue, chi2_uniform_cube_pvalue,
                      gaussian_gof_pvalue, ks_uniform_pvalue)

C_BSC02 = 0.27807190511263774
C_AWGN1 = 0.5
C_MIMO = 1.2617809780285068


def _criterion(name: str, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} | {name} | {detail}"
    print(line, flush=True)
    conftest.acceptance_scorecard.append(line)
    assert ok, f"{name}: {detail}"


# -- capacity references ------------------------------------------------------

def test_capacity_references(mimo_channel):
    t0 = time.perf_counter()
    worst = 0.0
    for p in (0.05, 0.1, 0.2, 0.4):
        got = capacity_dmc(bsc(p)).capacity_bits
        worst = max(worst, abs(got - (1.0 - binary_entropy(p))))
    row = np.array([0.7, 0.1, 0.1, 0.1])
    h_row = -np.sum(row * np.log2(row))
    worst = max(worst, abs(capacity_dmc(qsc(0.3)).capacity_bits - (2.0 - h_row)))
    sy = mimo_channel.sigma_y.array()
    sn = mimo_channel.sigma_n.array()
    closed = 0.5 * np.log2(np.linalg.det(sy) / np.linalg.det(sn))
    gauss_err = abs(capacity_gaussian(mimo_channel).capacity_bits - closed)
    elapsed = time.perf_counter() - t0
    _criterion(
        "capacity references",
        worst < 1e-6 and gauss_err < 1e-12 and elapsed < 1.0,
        f"max DMC error {worst:.2e}, Gaussian error {gauss_err:.2e}, "
        f"{elapsed:.2f}s")


# -- one-step transport compatibility -----------------------------------------

def _discrete_posterior_samples(kit, y, count, rng):
    """Samples from the one-step posterior of the state given Y=y."""
    matrix = kit.channel.matrix
    lik_max = matrix[:, y].max()
    out = []
    have = 0
    while have < count:
        w = rng.random((4 * count, kit.d))
        if kit.d == 1:
            x = np.clip(np.searchsorted(kit.phi.edges, w[:, 0],
                                        side="right") - 1,
                        0, kit.channel.n_inputs - 1)
        else:
            x = kit.phi(w)
        keep = rng.random(len(w)) < matrix[x, y] / lik_max
        out.append(w[keep])
        have += keep.sum()
    return np.concatenate(out)[:count]


def _gaussian_posterior_samples(ch, y, count, rng):
    l_post = np.linalg.cholesky(ch.sigma_x_given_y.array())
    z = rng.standard_normal((count, ch.d))
    return ch.gain @ y + z @ l_post.T


def test_transport_pushforward_suites(bsc02_kit, qsc03_grid_kit,
                                      mimo_channel, mimo_brenier_kit,
                                      mimo_kr_kit):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260823)
    draws, n_samples, alpha = 20, 100_000, 0.01
    results = {}

    for kit in (bsc02_kit, qsc03_grid_kit):
        py = kit.channel.output_marginal(
            kit.px_star if kit.px_star is not None
            else kit.phi.symbol_masses())
        ps = []
        for _ in range(draws):
            y = int(rng.choice(len(py), p=py))
            w = _discrete_posterior_samples(kit, y, n_samples, rng)
            s = kit.s_constructor(y)
            if kit.d == 1:
                ps.append(ks_uniform_pvalue(s(w[:, 0])))
            else:
                ps.append(chi2_uniform_cube_pvalue(s.eval_batch(w)))
        results[kit.flavor] = min(ps)

    l_y = np.linalg.cholesky(mimo_channel.sigma_y.array())
    for kit in (mimo_brenier_kit, mimo_kr_kit):
        ps = []
        for _ in range(draws):
            y = l_y @ rng.standard_normal(2)
            x = _gaussian_posterior_samples(mimo_channel, y, n_samples, rng)
            u = kit.s_constructor(y)(x)
            ps.append(gaussian_gof_pvalue(u, mimo_channel.sigma_x.array()))
        results[kit.flavor] = min(ps)

    elapsed = time.perf_counter() - t0
    ok = all(p > alpha / draws for p in results.values()) and elapsed < 60.0
    detail = ", ".join(f"{k} min-p {v:.4f}" for k, v in results.items())
    _criterion("transport pushforward suites",
               ok, f"{detail} (threshold {alpha / draws}), {elapsed:.1f}s")


# -- stationarity invariants ---------------------------------------------------

def test_stationarity_invariants(bsc02_kit):
    rng = np.random.default_rng(11)
    res = simulate_ensemble(bsc02_kit, 20, 10_000, rng,
                            snapshot_steps=(1, 5, 20))
    px = np.asarray(bsc02_kit.px_star)
    py = bsc02_kit.channel.output_marginal(px)
    ps = {}
    for n in (1, 5, 20):
        ps[f"state uniform n={n}"] = ks_uniform_pvalue(res.wt_at[n][:, 0])
        ps[f"input dist n={n}"] = chi2_pmf_pvalue(res.x_at[n], px)
        ps[f"output marginal n={n}"] = chi2_pmf_pvalue(res.y[:, n - 1], py)
    for a, b in ((1, 2), (5, 20)):
        table = np.zeros((2, 2))
        for ya, yb in zip(res.y[:, a - 1], res.y[:, b - 1]):
            table[ya, yb] += 1
        ps[f"output independence ({a},{b})"] = float(
            stats.chi2_contingency(table).pvalue)
    worst = min(ps, key=ps.get)
    _criterion("stationarity invariants", ps[worst] > 0.01,
               f"min p {ps[worst]:.4f} at '{worst}' over 10k sessions")


# -- round-trip invertibility --------------------------------------------------

def test_message_recovery_round_trip(bsc02_kit, mimo_brenier_kit):
    err_1d = 0.0
    for seed in range(100):
        session = PmSession(bsc02_kit, seed=seed)
        for _ in range(100):
            session.step()
        err_1d = max(err_1d, float(np.max(np.abs(
            session.recover_message() - session.message))))
    err_2d = 0.0
    for seed in range(100):
        session = PmSession(mimo_brenier_kit, seed=seed)
        for _ in range(50):
            session.step()
        err_2d = max(err_2d, float(np.max(np.abs(
            session.recover_message() - session.message))))
    _criterion("message recovery round trip",
               err_1d < 1e-9 and err_2d < 1e-8,
               f"1-D n=100 max error {err_1d:.2e}, "
               f"MIMO n=50 max error {err_2d:.2e}, 100 seeds each")


# -- Gaussian transport identity -----------------------------------------------

def test_gaussian_transport_identity():
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(50):
        d = int(rng.integers(1, 5))
        ax = rng.standard_normal((d, d))
        an = rng.standard_normal((d, d))
        ch = GaussianChannel(SymMatrix(ax @ ax.T + 0.1 * np.eye(d)),
                             SymMatrix(an @ an.T + 0.1 * np.eye(d)))
        a = brenier_gaussian(ch)[0].array()
        res = np.linalg.norm(
            a @ ch.sigma_x_given_y.array() @ a.T - ch.sigma_x.array())
        worst = max(worst, res)
    scalar_err = 0.0
    for snr in (0.5, 1.0, 2.0, 4.0):
        ch = GaussianChannel(SymMatrix([[snr]]), SymMatrix([[1.0]]))
        a = float(brenier_gaussian(ch)[0].array()[0, 0])
        scalar_err = max(scalar_err, abs(a - math.sqrt(1.0 + snr)))
    _criterion("Gaussian transport identity",
               worst < 1e-10 and scalar_err < 1e-12,
               f"max Frobenius residual {worst:.2e} over 50 PD pairs, "
               f"scalar sqrt(1+SNR) error {scalar_err:.2e}")


# -- rate convergence ----------------------------------------------------------

@pytest.fixture(scope="module")
def bsc_long_traces(bsc02_kit):
    root = np.random.default_rng(42)
    t0 = time.perf_counter()
    traces = [rate_trace(bsc02_kit, 0.1, 2000,
                         np.random.default_rng(root.integers(2 ** 63)),
                         checkpoints=[2000])
              for _ in range(100)]
    return traces, time.perf_counter() - t0


def test_rate_convergence(bsc_long_traces, awgn_kit, mimo_brenier_kit):
    traces, elapsed = bsc_long_traces
    t0 = time.perf_counter()
    r_bsc = float(np.mean([t.final("r_bits") for t in traces]))
    root = np.random.default_rng(43)
    r_sk = float(np.mean([
        rate_trace(awgn_kit, 0.1, 200,
                   np.random.default_rng(root.integers(2 ** 63)),
                   checkpoints=[200]).final("r_bits")
        for _ in range(100)]))
    r_mimo = float(np.mean([
        rate_trace(mimo_brenier_kit, 0.1, 200,
                   np.random.default_rng(root.integers(2 ** 63)),
                   checkpoints=[200]).final("r_bits")
        for _ in range(100)]))
    elapsed += time.perf_counter() - t0
    ok = (abs(r_bsc - C_BSC02) < 0.03 and abs(r_sk - C_AWGN1) < 0.02
          and abs(r_mimo - C_MIMO) < 0.05 and elapsed < 300.0)
    _criterion("rate convergence",
               ok,
               f"BSC mean R_2000 {r_bsc:.4f} (C {C_BSC02:.4f}), "
               f"scalar Gaussian R_200 {r_sk:.4f} (C {C_AWGN1}), "
               f"MIMO R_200 {r_mimo:.4f} (C {C_MIMO:.4f}), {elapsed:.0f}s")


# -- information density -------------------------------------------------------

def test_information_density(bsc02_kit, bsc_long_traces):
    rng = np.random.default_rng(12)
    res = simulate_ensemble(bsc02_kit, 1, 100_000, rng)
    i1 = res.i_sum_bits
    se = float(i1.std(ddof=1) / np.sqrt(len(i1)))
    mean_gap = abs(float(i1.mean()) - C_BSC02)
    traces, _ = bsc_long_traces
    med = float(np.median([t.final("i_bits") for t in traces]))
    _criterion("information density",
               mean_gap < 3 * se and abs(med - C_BSC02) < 0.03,
               f"mean i_1 gap {mean_gap:.5f} (3 SE = {3 * se:.5f}), "
               f"median i_2000 {med:.4f} (C {C_BSC02:.4f})")


# -- posterior oracle equivalence ----------------------------------------------

def test_posterior_matches_independent_bayes(bsc02_kit, qsc03_grid_kit):
    rng = np.random.default_rng(13)
    worst_1d = 0.0
    for _ in range(600):
        ys = rng.integers(0, 2, int(rng.integers(8, 13)))
        session = PmSession.decoder(bsc02_kit)
        for y in ys:
            session.observe(int(y))
        masses, _ = session.density_grid(1024)
        oracle = posterior_grid(bsc02_kit.channel.matrix, 1, ys, 1024)
        worst_1d = max(worst_1d, 0.5 * float(np.abs(masses - oracle).sum()))
    worst_2d = 0.0
    for _ in range(400):
        ys = rng.integers(0, 4, int(rng.integers(4, 7)))
        session = PmSession.decoder(qsc03_grid_kit)
        for y in ys:
            session.observe(int(y))
        masses, _ = session.density_grid(32)
        oracle = posterior_grid(qsc03_grid_kit.channel.matrix, 2, ys, 32)
        worst_2d = max(worst_2d, 0.5 * float(np.abs(masses - oracle).sum()))
    _criterion("posterior oracle equivalence",
               worst_1d < 1e-9 and worst_2d < 1e-6,
               f"worst TV 1-D {worst_1d:.2e} (600 sequences, 1024 cells), "
               f"2-D grid {worst_2d:.2e} (400 sequences, 32x32 cells)")


# -- prior sensitivity ---------------------------------------------------------

def test_prior_sensitivity_diagnostic(bsc02_kit):
    from pmlab.maps import PiecewiseConstantDensity1D
    nu = PiecewiseConstantDensity1D([0.0, 0.5, 1.0], [1.5, 0.5])
    _, tv_good = prior_sensitivity(bsc02_kit, nu, 500, 100,
                                   np.random.default_rng(14),
                                   checkpoints=[500])
    useless = make_kit(bsc(0.5), "cdf1d")
    _, tv_bad = prior_sensitivity(useless, nu, 500, 100,
                                  np.random.default_rng(15),
                                  checkpoints=[500])
    _criterion("prior sensitivity",
               tv_good[-1] < 0.05 and tv_bad[-1] > 0.2,
               f"informative channel TV@500 {tv_good[-1]:.4f}, "
               f"useless channel TV@500 {tv_bad[-1]:.4f} (100 trials each)")


# -- operational bit error -----------------------------------------------------

def test_block_coding_error_rates(bsc02_kit):
    n = 2000
    k_lo = math.floor(0.9 * C_BSC02 * n)
    k_hi = math.floor(1.2 * C_BSC02 * n)
    below = codec.bit_error_experiment(bsc02_kit, k=k_lo, n_steps=n,
                                       trials=200,
                                       rng=np.random.default_rng(16))
    above = codec.bit_error_experiment(bsc02_kit, k=k_hi, n_steps=n,
                                       trials=200,
                                       rng=np.random.default_rng(17))
    _criterion("block coding error rates",
               below.error_rate < 0.05 and above.error_rate > 0.20,
               f"R=0.9C (k={k_lo}) error+undecided {below.error_rate:.3f}, "
               f"R=1.2C (k={k_hi}) {above.error_rate:.3f}, 200 trials each")


# -- replay determinism --------------------------------------------------------

def test_replay_determinism(tmp_path):
    cfg = {"name": "replay", "scenario": "rate",
           "channel": {"type": "bsc", "p": 0.2}, "flavor": "cdf1d",
           "seed": 99, "n_max": 200, "trials": 5}
    experiments.run_experiment(cfg, tmp_path / "a")
    experiments.run_experiment(cfg, tmp_path / "b")
    same = ((tmp_path / "a" / "trace.csv").read_bytes()
            == (tmp_path / "b" / "trace.csv").read_bytes())
    _criterion("replay determinism", same,
               "identical seed+config produced byte-identical trace.csv")
