"""Steppable engines wrapping the compute modules for live sessions.

An engine owns the evolving state of one experiment.  ``advance(n)``
performs n simulation steps and returns the frame payload covering them;
``apply(patch)`` mutates hot parameters between advances; ``keyframe()``
returns a full-state snapshot for late or re-joining subscribers.  Escape
engines are render-on-demand instead of stepped: ``render_tiles_iter``
yields tile payloads and is restarted by the server whenever a hot patch
arrives.
"""

from __future__ import annotations

import math
from typing import Any, Iterator

import numpy as np

from .flows import hh_field, hh_momentum_on_section, hh_seeds, lorenz_field
from .flows import LorenzParams
from .fractals import Viewport, _render_region
from .lattice import (KdvParams, _kdv_rhs, fput_accel, mode_energies,
                      two_soliton_field)
from .maps import HENON_ESCAPE_RADIUS
from .protocol import pack_array
from .reaction_diffusion import (Field2D, TuringParams, initial_fields,
                                 turing_step)
from .curves import CurveD, count_points_mod_p, primes_upto
from .schema import SchemaError

STEPPED_ENGINES: dict[str, type] = {}
ESCAPE_ENGINES: dict[str, type] = {}


def _register(registry, name):
    def deco(cls):
        registry[name] = cls
        cls.experiment = name
        return cls
    return deco


class EngineFailure(RuntimeError):
    """The simulation cannot continue (escape, blow-up); fails the session."""


class SteppedEngine:
    """Base for experiments advanced step by step."""

    kind = "field-snapshot"
    steps_per_frame = 100

    def __init__(self, params: dict[str, Any], seed: int = 0):
        self.params = params
        self.seed = seed

    def apply(self, patch: dict[str, Any]) -> None:
        self.params.update(patch)

    def advance(self, n: int) -> dict[str, Any]:
        raise NotImplementedError

    def keyframe(self) -> dict[str, Any]:
        raise NotImplementedError


def _rk4(field, state, dt):
    k1 = field(state)
    k2 = field(state + 0.5 * dt * k1)
    k3 = field(state + 0.5 * dt * k2)
    k4 = field(state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@_register(STEPPED_ENGINES, "lorenz")
class LorenzEngine(SteppedEngine):
    kind = "trajectory-batch"
    steps_per_frame = 50

    def __init__(self, params, seed: int = 0):
        super().__init__(params, seed)
        self.state = np.array([params["x0"], params["y0"], params["z0"]])
        self.t = 0.0

    def _field(self):
        return lorenz_field(LorenzParams(self.params["sigma"],
                                         self.params["r"], self.params["b"]))

    def advance(self, n):
        field = self._field()
        dt = self.params["dt"]
        out = np.empty((n, 3))
        state = self.state
        for i in range(n):
            state = _rk4(field, state, dt)
            out[i] = state
        if not np.all(np.isfinite(state)):
            raise EngineFailure("trajectory left the finite range")
        self.state = state
        self.t += n * dt
        return {"states": pack_array(out), "t_end": self.t,
                "dt": dt}

    def keyframe(self):
        return {"states": pack_array(self.state[None, :]), "t_end": self.t,
                "dt": self.params["dt"]}


@_register(STEPPED_ENGINES, "henon-heiles")
class HenonHeilesEngine(SteppedEngine):
    kind = "series-append"
    steps_per_frame = 400

    def __init__(self, params, seed: int = 0):
        super().__init__(params, seed)
        self._seed()

    def _seed(self):
        energy = self.params["energy"]
        seeds, self.skipped = hh_seeds(energy, self.params["n_seeds"],
                                       self.params["seed_rule"])
        states = []
        for y, py in seeds:
            px = hh_momentum_on_section(energy, y, py)
            states.append([0.0, y, px, py])
        self.states = np.array(states) if states else np.empty((0, 4))
        self.points: list[tuple[float, float]] = []

    def apply(self, patch):
        super().apply(patch)
        if "energy" in patch:
            # Hot energy change re-seeds the section sweep.
            self._seed()

    def advance(self, n):
        dt = self.params["dt"]
        new_points = []
        states = self.states
        if len(states) == 0:
            return {"points": pack_array(np.empty((0, 2))),
                    "energy": self.params["energy"]}
        for _ in range(n):
            prev_x = states[:, 0].copy()
            nxt = np.array([_rk4(hh_field, s, dt) for s in states])
            crossed = (prev_x < 0.0) & (nxt[:, 0] >= 0.0) & (nxt[:, 2] > 0.0)
            for idx in np.flatnonzero(crossed):
                a, b = states[idx], nxt[idx]
                theta = (0.0 - a[0]) / (b[0] - a[0]) if b[0] != a[0] else 0.0
                point = a + theta * (b - a)
                new_points.append((float(point[1]), float(point[3])))
            states = nxt
        self.states = states
        self.points.extend(new_points)
        pts = np.array(new_points) if new_points else np.empty((0, 2))
        return {"points": pack_array(pts), "energy": self.params["energy"]}

    def keyframe(self):
        pts = np.array(self.points[-5000:]) if self.points \
            else np.empty((0, 2))
        return {"points": pack_array(pts), "energy": self.params["energy"]}


@_register(STEPPED_ENGINES, "fput")
class FputEngine(SteppedEngine):
    kind = "field-snapshot"
    steps_per_frame = 200

    def __init__(self, params, seed: int = 0):
        super().__init__(params, seed)
        n = params["n_masses"]
        j = np.arange(n + 1)
        self.u = params["amplitude"] * np.sin(
            j * params["init_mode"] * math.pi / n)
        self.u[0] = self.u[-1] = 0.0
        self.udot = np.zeros(n + 1)
        self.accel = fput_accel(self.u, params["alpha"])
        self.t = 0.0

    def apply(self, patch):
        super().apply(patch)
        if "alpha" in patch:
            self.accel = fput_accel(self.u, self.params["alpha"])

    def advance(self, n):
        dt = self.params["dt"]
        alpha = self.params["alpha"]
        u, udot, a = self.u, self.udot, self.accel
        for _ in range(n):
            u = u + dt * udot + (0.5 * dt * dt) * a
            u[0] = u[-1] = 0.0
            a_new = fput_accel(u, alpha)
            udot = udot + (0.5 * dt) * (a + a_new)
            a = a_new
        if not np.all(np.isfinite(u)):
            raise EngineFailure("chain displacement diverged")
        self.u, self.udot, self.accel = u, udot, a
        self.t += n * dt
        return self.keyframe()

    def keyframe(self):
        n = self.params["n_masses"]
        energies = mode_energies(self.u, self.udot, n)
        total = float(energies.sum())
        mode = self.params["init_mode"]
        share = float(energies[mode - 1] / total) if total > 0 else 1.0
        return {"field": pack_array(self.u), "t": self.t,
                "mode_share": share}


@_register(STEPPED_ENGINES, "kdv")
class KdvEngine(SteppedEngine):
    kind = "field-snapshot"
    steps_per_frame = 500

    def __init__(self, params, seed: int = 0):
        super().__init__(params, seed)
        self._params_obj = KdvParams(delta=params["delta"], dx=params["dx"],
                                     dt=params["dt"], length=params["length"])
        if params["init"] == "cosine":
            self.v = np.cos(math.pi * self._params_obj.grid())
        else:
            self.v = two_soliton_field(self._params_obj)
        self.v_prev: np.ndarray | None = None
        self.t = 0.0

    def validate_patch(self, patch):
        if "delta" in patch:
            # Raises when the new dispersion violates the dt stability bound.
            KdvParams(delta=patch["delta"], dx=self.params["dx"],
                      dt=self.params["dt"], length=self.params["length"])

    def apply(self, patch):
        if "delta" in patch:
            self._params_obj = KdvParams(delta=patch["delta"],
                                         dx=self.params["dx"],
                                         dt=self.params["dt"],
                                         length=self.params["length"])
        super().apply(patch)

    def advance(self, n):
        p = self._params_obj
        for _ in range(n):
            if self.v_prev is None:
                nxt = self.v + p.dt * _kdv_rhs(self.v, p)
            else:
                nxt = self.v_prev + 2.0 * p.dt * _kdv_rhs(self.v, p)
            self.v_prev, self.v = self.v, nxt
        if not np.all(np.isfinite(self.v)):
            raise EngineFailure("wave field diverged")
        self.t += n * p.dt
        return self.keyframe()

    def keyframe(self):
        return {"field": pack_array(self.v), "t": self.t,
                "dx": self.params["dx"]}


@_register(STEPPED_ENGINES, "turing")
class TuringEngine(SteppedEngine):
    kind = "field-snapshot"
    steps_per_frame = 100
    transient_keys = frozenset({"perturb"})  # one-shot action, never stored

    def __init__(self, params, seed: int = 0):
        super().__init__(params, seed)
        self._params_obj = self._build(params["A"], params["B"])
        self.u, self.v = initial_fields(self._params_obj, seed,
                                        params["noise_amp"])
        self.t = 0.0

    def _build(self, a, b):
        return TuringParams(A=a, B=b, dt=self.params["dt"],
                            dx=self.params["dx"], nx=self.params["nx"],
                            ny=self.params["ny"],
                            cross_diffusion=self.params["cross_diffusion"])

    def validate_patch(self, patch):
        if "A" in patch or "B" in patch:
            # Raises when the new coefficients violate the dt guard.
            self._build(patch.get("A", self.params["A"]),
                        patch.get("B", self.params["B"]))
        if "perturb" in patch and patch["perturb"] is not None:
            bump = patch["perturb"]
            if (not isinstance(bump, (list, tuple)) or len(bump) != 4
                    or not all(isinstance(v, (int, float)) for v in bump)):
                raise ValueError(
                    "perturb expects [row, col, amplitude, radius]")

    def apply(self, patch):
        patch = dict(patch)
        perturb = patch.pop("perturb", None)
        if "A" in patch or "B" in patch:
            self._params_obj = self._build(patch.get("A", self.params["A"]),
                                           patch.get("B", self.params["B"]))
        super().apply(patch)
        if perturb is not None:
            row, col, amp, radius = perturb
            ii = np.arange(self.params["nx"])[:, None]
            jj = np.arange(self.params["ny"])[None, :]
            bump = amp * np.exp(-((ii - row) ** 2 + (jj - col) ** 2)
                                / max(radius, 1e-9) ** 2)
            self.u = Field2D(self.u.values + bump, self.u.dx)

    def advance(self, n):
        for _ in range(n):
            self.u, self.v = turing_step(self.u, self.v, self._params_obj)
        self.t += n * self.params["dt"]
        return self.keyframe()

    def keyframe(self):
        return {"field": pack_array(self.u.values), "t": self.t,
                "std": float(self.u.values.std())}


@_register(STEPPED_ENGINES, "logistic")
class LogisticEngine(SteppedEngine):
    kind = "series-append"
    steps_per_frame = 64

    def __init__(self, params, seed: int = 0):
        super().__init__(params, seed)
        self.x = params["x0"]
        self.index = 0

    def advance(self, n):
        r = self.params["r"]
        xs = np.empty(n)
        x = self.x
        for i in range(n):
            x = r * x * (1.0 - x)
            xs[i] = x
        self.x = x
        start = self.index
        self.index += n
        return {"values": pack_array(xs), "start_index": start,
                "r": r}

    def keyframe(self):
        return {"values": pack_array(np.array([self.x])),
                "start_index": self.index, "r": self.params["r"]}


@_register(STEPPED_ENGINES, "henon")
class HenonEngine(SteppedEngine):
    kind = "series-append"
    steps_per_frame = 256

    def __init__(self, params, seed: int = 0):
        super().__init__(params, seed)
        self.x = params["x0"]
        self.y = params["y0"]

    def advance(self, n):
        a, b = self.params["a"], self.params["b"]
        pts = np.empty((n, 2))
        x, y = self.x, self.y
        for i in range(n):
            x, y = y + 1.0 - a * x * x, b * x
            if abs(x) > HENON_ESCAPE_RADIUS:
                raise EngineFailure(f"orbit escaped at local step {i + 1}")
            pts[i] = (x, y)
        self.x, self.y = x, y
        return {"points": pack_array(pts)}

    def keyframe(self):
        return {"points": pack_array(np.array([[self.x, self.y]]))}


@_register(STEPPED_ENGINES, "bsd")
class BsdEngine(SteppedEngine):
    kind = "series-append"
    steps_per_frame = 25

    def __init__(self, params, seed: int = 0):
        super().__init__(params, seed)
        self.curve = CurveD(params["d"])
        self.queue = [p for p in primes_upto(params["x_max"])
                      if (2 * params["d"]) % p != 0]
        self.position = 0
        self.acc = 0.0
        self.projective = params["projective"]

    def advance(self, n):
        take = self.queue[self.position:self.position + n]
        rows = np.empty((len(take), 2))
        for i, p in enumerate(take):
            n_p = count_points_mod_p(self.curve, p, projective=self.projective)
            self.acc += math.log(n_p / p)
            rows[i] = (p, self.acc)
        self.position += len(take)
        return {"points": pack_array(rows), "done": self.position >= len(self.queue)}

    def keyframe(self):
        last_p = self.queue[self.position - 1] if self.position else 0
        return {"points": pack_array(np.array([[last_p, self.acc]])),
                "done": self.position >= len(self.queue)}


class EscapeEngine:
    """Render-on-mutation engine for the escape-grid experiments."""

    kind = "escape-tile"
    experiment = "escape"

    def __init__(self, params: dict[str, Any], seed: int = 0):
        self.params = params
        self.seed = seed

    def apply(self, patch: dict[str, Any]) -> None:
        self.params.update(patch)

    def _viewport(self) -> Viewport:
        p = self.params
        return Viewport(center=complex(p["center_re"], p["center_im"]),
                        width=p["width"], pixel_cols=p["pixel_cols"],
                        pixel_rows=p["pixel_rows"])

    def _tiles(self):
        vp = self._viewport()
        size = self.params["tile_size"]
        for r0 in range(0, vp.pixel_rows, size):
            for c0 in range(0, vp.pixel_cols, size):
                yield (r0, min(size, vp.pixel_rows - r0),
                       c0, min(size, vp.pixel_cols - c0))

    def render_tiles_iter(self) -> Iterator[dict[str, Any]]:
        p = self.params
        vp = self._viewport()
        for row0, rows, col0, cols in self._tiles():
            out = _render_region(self._grid_kind(), vp, p["max_iter"], row0,
                                 rows, col0, cols,
                                 complex(p.get("c_re", 0.0),
                                         p.get("c_im", 0.0)),
                                 p.get("tol", 1e-9),
                                 bool(p.get("smooth", False)), None)
            yield self._tile_payload(row0, rows, col0, cols, out)

    def _grid_kind(self) -> str:
        raise NotImplementedError

    def _tile_payload(self, row0, rows, col0, cols, out) -> dict[str, Any]:
        raise NotImplementedError

    def keyframe(self) -> dict[str, Any]:
        p = self.params
        return {"viewport": {"center_re": p["center_re"],
                             "center_im": p["center_im"],
                             "width": p["width"],
                             "pixel_cols": p["pixel_cols"],
                             "pixel_rows": p["pixel_rows"]},
                "restart": True}


def _escape_cls(name, grid_kind):
    class _Engine(EscapeEngine):
        def _grid_kind(self):
            return grid_kind

        def _tile_payload(self, row0, rows, col0, cols, out):
            if grid_kind == "newton":
                labels, iters, _ = out
                return {"row0": row0, "col0": col0, "rows": rows,
                        "cols": cols, "labels": pack_array(labels),
                        "iterations": pack_array(iters)}
            counts, smooth = out
            payload = {"row0": row0, "col0": col0, "rows": rows,
                       "cols": cols, "counts": pack_array(counts),
                       "max_iter": self.params["max_iter"]}
            if smooth is not None:
                payload["smooth"] = pack_array(smooth)
            return payload

    _Engine.__name__ = f"{name.title()}Engine"
    _Engine.experiment = name
    ESCAPE_ENGINES[name] = _Engine
    return _Engine


_escape_cls("julia", "julia")
_escape_cls("mandelbrot", "mandelbrot")
_escape_cls("newton", "newton")


def make_engine(experiment: str, params: dict[str, Any], seed: int = 0):
    if experiment in STEPPED_ENGINES:
        return STEPPED_ENGINES[experiment](params, seed)
    if experiment in ESCAPE_ENGINES:
        return ESCAPE_ENGINES[experiment](params, seed)
    raise SchemaError(f"no engine for experiment {experiment!r}",
                      experiment=experiment)
