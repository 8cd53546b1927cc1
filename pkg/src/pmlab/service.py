"""HTTP facade for interactive sessions over discrete channels.

The client plays the encoder: each posted symbol is the channel input, the
service applies the channel noise, folds the output into the session, and
answers with decoder-side summaries (median query point, credible box,
decoded dyadic prefix, posterior heatmap, warp lattice).  Sessions created
without reveal never expose the target or the encoder state.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import codec
from .channels import DmcKernel, channel_config, channel_from_config
from .engine import PmSession
from .errors import BadInput, BadParam, PmLabError
from .transport import make_kit

MAX_RESOLUTION = 64
_PREFIX_BITS = 16
_CREDIBLE_EPS = 0.1


@dataclass
class _Record:
    id: str
    session: PmSession
    mode: str                      # "human" or "hidden"
    reveal: bool
    lock: threading.Lock = field(default_factory=threading.Lock)
    last: dict | None = None


def _state_doc(rec: _Record) -> dict:
    s = rec.session
    d = s.kit.d
    box = s.central_credible_box(_CREDIBLE_EPS)
    doc = {
        "id": rec.id,
        "n": s.n,
        "mode": rec.mode,
        "reveal": rec.reveal,
        "flavor": s.kit.flavor,
        "channel": channel_config(s.kit.channel),
        "dim": d,
        "n_inputs": s.kit.channel.n_inputs,
        "query": ({"type": "median", "point": [float(s.median_point()[0])]}
                  if d == 1 else
                  {"type": "cell", "center": [0.5] * d}),
        "median": [float(v) for v in s.median_point()],
        "credible_box": [[float(lo), float(hi)] for lo, hi in box.bounds],
        "decoded_prefix": [
            codec.common_prefix_bits(float(box.bounds[j, 0]),
                                     float(box.bounds[j, 1]),
                                     k_max=_PREFIX_BITS)
            for j in range(d)
        ],
        "last": rec.last,
    }
    if rec.reveal and rec.mode == "hidden":
        doc["target"] = [float(v) for v in rec.session._w]
        doc["state"] = [float(v) for v in rec.session._wt]
    return doc


def _require_fields(body, allowed: set, required: set = frozenset()):
    if not isinstance(body, dict):
        raise BadInput("request body must be a JSON object")
    unknown = set(body) - allowed
    if unknown:
        raise BadInput(f"unknown fields: {sorted(unknown)}")
    missing = required - set(body)
    if missing:
        raise BadInput(f"missing fields: {sorted(missing)}")


def create_app(default_channel: dict | None = None,
               default_flavor: str | None = None) -> FastAPI:
    app = FastAPI(title="posterior-matching session service")
    records: dict[str, _Record] = {}
    registry_lock = threading.Lock()
    counter = itertools.count(1)

    @app.exception_handler(RequestValidationError)
    async def _bad_body(request, exc):
        return JSONResponse(status_code=400, content={
            "error": {"type": "BadInput", "message": "malformed request body"}})

    @app.exception_handler(PmLabError)
    async def _pm_error(request, exc: PmLabError):
        status = 409 if isinstance(exc, _ArityConflict) else 400
        return JSONResponse(status_code=status, content={
            "error": {"type": type(exc).__name__, "message": str(exc)}})

    def _get(session_id: str) -> _Record:
        rec = records.get(session_id)
        if rec is None:
            raise _NotFound(session_id)
        return rec

    @app.exception_handler(_NotFound)
    async def _nf(request, exc):
        return JSONResponse(status_code=404, content={
            "error": {"type": "NotFound",
                      "message": f"no session {exc.args[0]!r}"}})

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        _require_fields(body, {"channel", "flavor", "mode", "reveal",
                               "seed", "target"})
        channel_cfg = body.get("channel", default_channel)
        flavor = body.get("flavor", default_flavor)
        if channel_cfg is None or flavor is None:
            raise BadInput("channel and flavor are required "
                           "(no server defaults configured)")
        mode = body.get("mode", "human")
        if mode not in ("human", "hidden"):
            raise BadInput("mode must be 'human' or 'hidden'")
        reveal = bool(body.get("reveal", False))
        seed = body.get("seed")
        if seed is not None and not isinstance(seed, int):
            raise BadInput("seed must be an integer")
        channel = channel_from_config(channel_cfg)
        if not isinstance(channel, DmcKernel):
            raise BadParam("the session service covers discrete channels")
        kit = make_kit(channel, flavor)
        if mode == "human":
            if "target" in body:
                raise BadInput("human mode keeps the target on the client")
            session = PmSession.decoder(kit, seed=seed)
        else:
            target = body.get("target")
            session = PmSession(kit, message=target, seed=seed, reveal=reveal)
        with registry_lock:
            sid = f"s{next(counter):06d}"
            rec = _Record(sid, session, mode, reveal)
            records[sid] = rec
        return _state_doc(rec)

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        rec = _get(session_id)
        with rec.lock:
            return _state_doc(rec)

    @app.post("/sessions/{session_id}/input")
    async def post_input(session_id: str, body: dict):
        rec = _get(session_id)
        _require_fields(body, {"symbol"})
        with rec.lock:
            session = rec.session
            n_inputs = session.kit.channel.n_inputs
            if "symbol" in body:
                symbol = body["symbol"]
                if not isinstance(symbol, int) or isinstance(symbol, bool):
                    raise BadInput("symbol must be an integer")
                if not 0 <= symbol < n_inputs:
                    raise _ArityConflict(
                        f"symbol {symbol} outside the channel alphabet "
                        f"[0, {n_inputs})")
            elif rec.mode == "hidden":
                symbol = int(session.current_input())
            else:
                raise BadInput("human mode requires a symbol")
            y = session.kit.channel.sample(symbol, session.rng)
            session.observe(int(y))
            rec.last = {"x": int(symbol), "y": int(y)}
            return {"x": int(symbol), "y": int(y), "state": _state_doc(rec)}

    @app.get("/sessions/{session_id}/posterior")
    async def posterior(session_id: str, resolution: int = 32):
        rec = _get(session_id)
        if not 1 <= resolution <= MAX_RESOLUTION:
            raise BadInput(f"resolution must lie in [1, {MAX_RESOLUTION}]")
        with rec.lock:
            masses, edges = rec.session.density_grid(resolution)
        return {"resolution": resolution,
                "masses": [round(float(v), 12) for v in masses.ravel()],
                "edges": [[float(e) for e in ax] for ax in edges]}

    @app.get("/sessions/{session_id}/warp")
    async def warp(session_id: str, resolution: int = 64):
        rec = _get(session_id)
        if not 1 <= resolution <= MAX_RESOLUTION:
            raise BadInput(f"resolution must lie in [1, {MAX_RESOLUTION}]")
        with rec.lock:
            points = _warp_lattice(rec.session, resolution)
        return {"resolution": resolution, "points": points}

    @app.delete("/sessions/{session_id}", status_code=204)
    async def delete_session(session_id: str):
        with registry_lock:
            if records.pop(session_id, None) is None:
                raise _NotFound(session_id)
        return None

    return app


def _warp_lattice(session: PmSession, resolution: int):
    """Inverse-image lattice: screen coordinates u pulled back to w-space.

    Screen pixel u shows base-image content at the composed-inverse image
    of u, so regions of high posterior mass occupy large screen area.
    Row-major over a (resolution+1)^d lattice of cell corners.
    """
    d = session.kit.d
    axis = np.linspace(0.0, 1.0, resolution + 1)
    if d == 1:
        u = axis.copy()
        for s in reversed(session.factors):
            u = np.interp(u, s.ys, s.xs)
        return [[float(v)] for v in u]
    g0, g1 = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([g0.ravel(), g1.ravel()], axis=1)
    for s in reversed(session.factors):
        pts = s.invert_batch(pts)
    return [[float(a), float(b)] for a, b in pts]


class _NotFound(Exception):
    pass


class _ArityConflict(BadInput):
    pass
