"""Named, config-driven experiment runs with deterministic artifacts.

A run is described by a JSON config (validated against a strict schema: a
mandatory seed, a scenario name, a channel, a flavor, and scenario
parameters; unknown fields are rejected).  Each run writes a summary.json
plus, for trace scenarios, a trace.csv with the fixed column set and an
SVG plot.  Same config in, byte-identical artifacts out.
"""

from __future__ import annotations

import json
import os

import jsonschema
import numpy as np

from . import codec, metrics, svgplot
from .channels import (DmcKernel, capacity_dmc, capacity_gaussian,
                       channel_from_config)
from .errors import BadParam
from .maps import PiecewiseConstantDensity1D
from .transport import FLAVORS, make_kit

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "scenario", "channel", "flavor", "seed"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "scenario": {"enum": ["rate", "prior-sensitivity", "bit-error",
                              "ergodicity"]},
        "channel": {"type": "object"},
        "flavor": {"enum": list(FLAVORS)},
        "seed": {"type": "integer", "minimum": 0},
        "eps": {"type": "number", "exclusiveMinimum": 0,
                "exclusiveMaximum": 0.5},
        "n_max": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "checkpoints": {"type": "array", "minItems": 1,
                        "items": {"type": "integer", "minimum": 1}},
        "rate_factor": {"type": "number", "exclusiveMinimum": 0},
        "block_bits": {"type": "integer", "minimum": 1},
        "prior": {
            "type": "object",
            "additionalProperties": False,
            "required": ["breakpoints", "densities"],
            "properties": {
                "breakpoints": {"type": "array", "minItems": 2,
                                "items": {"type": "number"}},
                "densities": {"type": "array", "minItems": 1,
                              "items": {"type": "number", "minimum": 0}},
            },
        },
        "lags": {"type": "array", "minItems": 1,
                 "items": {"type": "integer", "minimum": 2}},
    },
}

_DEFAULTS = dict(eps=0.1, n_max=200, trials=20)


def validate_config(config: dict) -> dict:
    """Schema-check a config and fill scenario defaults; raises BadParam."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise BadParam(f"invalid experiment config: {exc.message}") from exc
    channel_from_config(config["channel"])  # raises BadParam when malformed
    merged = {**_DEFAULTS, **config}
    if merged["scenario"] == "prior-sensitivity" and "prior" not in merged:
        raise BadParam("prior-sensitivity scenario needs a 'prior' field")
    return merged


def channel_capacity(channel):
    return (capacity_dmc(channel) if isinstance(channel, DmcKernel)
            else capacity_gaussian(channel))


def run_experiment(config: dict, out_dir) -> dict:
    """Run one named experiment and write its artifacts into out_dir.

    Returns the summary document (also written as summary.json).
    """
    cfg = validate_config(config)
    os.makedirs(out_dir, exist_ok=True)
    channel = channel_from_config(cfg["channel"])
    kit = make_kit(channel, cfg["flavor"])
    rng = np.random.default_rng(cfg["seed"])
    runner = {
        "rate": _run_rate,
        "prior-sensitivity": _run_prior_sensitivity,
        "bit-error": _run_bit_error,
        "ergodicity": _run_ergodicity,
    }[cfg["scenario"]]
    summary = runner(cfg, kit, rng, out_dir)
    summary = {
        "name": cfg["name"],
        "scenario": cfg["scenario"],
        "channel": cfg["channel"],
        "flavor": cfg["flavor"],
        "seed": cfg["seed"],
        "capacity_bits": round(float(channel_capacity(channel).capacity_bits), 12),
        **summary,
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_rate(cfg, kit, rng, out_dir):
    cps = (np.asarray(cfg["checkpoints"], dtype=int)
           if "checkpoints" in cfg else metrics.default_checkpoints(cfg["n_max"]))
    rows = []
    r_final, i_final = [], []
    r_sum = np.zeros(len(cps))
    i_sum = np.zeros(len(cps))
    for trial in range(cfg["trials"]):
        seed = int(rng.integers(0, 2 ** 63))
        trace = metrics.rate_trace(kit, cfg["eps"], cfg["n_max"],
                                   np.random.default_rng(seed), checkpoints=cps)
        r_sum += trace.r_bits
        i_sum += trace.i_bits
        r_final.append(trace.final("r_bits"))
        i_final.append(trace.final("i_bits"))
        for j, n in enumerate(trace.ns):
            rows.append(dict(trial=trial, n=int(n),
                             log2_vol=float(trace.log2_vol[j]),
                             R_n_bits=float(trace.r_bits[j]),
                             i_n_bits=float(trace.i_bits[j]),
                             tv=None, seed=seed))
    metrics.write_metrics_csv(os.path.join(out_dir, "trace.csv"), rows)
    capacity = channel_capacity(kit.channel).capacity_bits
    svgplot.line_plot(
        os.path.join(out_dir, "plot.svg"),
        [dict(xs=cps, ys=r_sum / cfg["trials"], label="mean R_n"),
         dict(xs=cps, ys=i_sum / cfg["trials"], label="mean i_n")],
        title=cfg["name"], xlabel="n", ylabel="bits per use",
        hlines=[(capacity, "capacity")], log_x=bool(cps[-1] >= 50))
    return dict(
        eps=cfg["eps"], n_max=cfg["n_max"], trials=cfg["trials"],
        mean_rate_bits=float(np.mean(r_final)),
        std_rate_bits=float(np.std(r_final)),
        mean_info_density_bits=float(np.mean(i_final)),
        std_info_density_bits=float(np.std(i_final)),
    )


def _run_prior_sensitivity(cfg, kit, rng, out_dir):
    prior = PiecewiseConstantDensity1D(cfg["prior"]["breakpoints"],
                                       cfg["prior"]["densities"],
                                       normalize=True)
    cps = (np.asarray(cfg["checkpoints"], dtype=int)
           if "checkpoints" in cfg else metrics.default_checkpoints(cfg["n_max"]))
    ns, tv = metrics.prior_sensitivity(kit, prior, cfg["n_max"], cfg["trials"],
                                       rng, checkpoints=cps)
    rows = [dict(trial=0, n=int(n), tv=float(t), R_n_bits=None, i_n_bits=None,
                 seed=cfg["seed"], vol_An="")
            for n, t in zip(ns, tv)]
    metrics.write_metrics_csv(os.path.join(out_dir, "trace.csv"), rows)
    svgplot.line_plot(
        os.path.join(out_dir, "plot.svg"),
        [dict(xs=ns, ys=tv, label="mean TV")],
        title=cfg["name"], xlabel="n", ylabel="total variation",
        log_x=bool(ns[-1] >= 50))
    return dict(
        n_max=cfg["n_max"], trials=cfg["trials"],
        checkpoints=[int(n) for n in ns],
        mean_tv=[round(float(t), 9) for t in tv],
        final_tv=float(tv[-1]),
    )


def _run_bit_error(cfg, kit, rng, out_dir):
    capacity = channel_capacity(kit.channel).capacity_bits
    if "block_bits" in cfg:
        k = cfg["block_bits"]
    elif "rate_factor" in cfg:
        k = max(1, round(cfg["rate_factor"] * capacity * cfg["n_max"] / kit.d))
    else:
        raise BadParam("bit-error scenario needs block_bits or rate_factor")
    report = codec.bit_error_experiment(kit, k, cfg["n_max"], cfg["trials"],
                                        rng, eps=cfg["eps"])
    return dict(
        n_max=cfg["n_max"], trials=cfg["trials"], eps=cfg["eps"],
        block_bits=k,
        rate_bits=float(k * kit.d / cfg["n_max"]),
        error_rate=report.error_rate,
        undecided_rate=report.undecided_rate,
        decided_error_rate=report.decided_error_rate,
    )


def _run_ergodicity(cfg, kit, rng, out_dir):
    lags = cfg.get("lags", [2, 5, 10, 25, 50])
    report = metrics.ergodicity_diagnostics(kit, lags=lags,
                                            trials=max(cfg["trials"], 1000),
                                            rng=rng)
    svgplot.line_plot(
        os.path.join(out_dir, "plot.svg"),
        [dict(xs=report.lags, ys=report.gap, label="max joint gap"),
         dict(xs=report.lags, ys=report.ci, label="95% CI half-width")],
        title=cfg["name"], xlabel="lag", ylabel="probability gap")
    return dict(
        trials=max(cfg["trials"], 1000),
        lags=[int(v) for v in report.lags],
        max_gap=[round(float(g), 9) for g in report.gap],
        ci_half_width=[round(float(c), 9) for c in report.ci],
    )


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise BadParam(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise BadParam(f"config is not valid JSON: {exc}") from exc
