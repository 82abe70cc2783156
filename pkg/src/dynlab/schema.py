"""Shared experiment registry: one schema per experiment, used by the batch
CLI and the steering server so parameter names, defaults and hot/cold
classification cannot drift apart.

Hot parameters may be patched into a running session between steps; cold
ones are fixed at creation (grid sizes, seeds, step sizes) and patching them
is a restart-level change.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any


class SchemaError(ValueError):
    """A parameter map violates an experiment schema."""

    def __init__(self, message: str, field_name: str | None = None,
                 experiment: str | None = None):
        super().__init__(message)
        self.field = field_name
        self.experiment = experiment


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str                  # float | int | bool | str | json
    default: Any = None        # None means required
    hot: bool = False
    doc: str = ""
    minimum: float | None = None
    maximum: float | None = None
    choices: tuple[str, ...] | None = None
    required: bool = False

    def coerce(self, value: Any, experiment: str) -> Any:
        try:
            if self.kind == "float":
                out: Any = float(value)
            elif self.kind == "int":
                if isinstance(value, float) and value != int(value):
                    raise ValueError("not an integer")
                out = int(value)
            elif self.kind == "bool":
                if isinstance(value, str):
                    if value.lower() in ("true", "1", "yes"):
                        out = True
                    elif value.lower() in ("false", "0", "no"):
                        out = False
                    else:
                        raise ValueError("not a boolean")
                else:
                    out = bool(value)
            elif self.kind == "str":
                out = str(value)
            elif self.kind == "json":
                out = json.loads(value) if isinstance(value, str) else value
            else:
                raise ValueError(f"unknown kind {self.kind}")
        except (TypeError, ValueError) as err:
            raise SchemaError(
                f"{experiment}.{self.name}: cannot parse {value!r} as "
                f"{self.kind} ({err})", field_name=self.name,
                experiment=experiment) from None
        if self.kind in ("float", "int"):
            if not math.isfinite(out):
                raise SchemaError(f"{experiment}.{self.name}: must be finite",
                                  field_name=self.name, experiment=experiment)
            if self.minimum is not None and out < self.minimum:
                raise SchemaError(
                    f"{experiment}.{self.name}: {out} below minimum "
                    f"{self.minimum}", field_name=self.name,
                    experiment=experiment)
            if self.maximum is not None and out > self.maximum:
                raise SchemaError(
                    f"{experiment}.{self.name}: {out} above maximum "
                    f"{self.maximum}", field_name=self.name,
                    experiment=experiment)
        if self.choices is not None and out not in self.choices:
            raise SchemaError(
                f"{experiment}.{self.name}: {out!r} not one of {self.choices}",
                field_name=self.name, experiment=experiment)
        return out


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    doc: str
    params: tuple[ParamSpec, ...]
    output_kinds: tuple[str, ...]          # batch CLI artifact kinds
    frame_kind: str                        # primary live frame kind

    def param(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise SchemaError(f"{self.name}: unknown parameter {name!r}",
                          field_name=name, experiment=self.name)

    def hot_keys(self) -> set[str]:
        return {p.name for p in self.params if p.hot}


def _f(name, default, hot=False, doc="", minimum=None, maximum=None,
       required=False):
    return ParamSpec(name, "float", default, hot, doc, minimum, maximum,
                     required=required)


def _i(name, default, hot=False, doc="", minimum=None, maximum=None,
       required=False):
    return ParamSpec(name, "int", default, hot, doc, minimum, maximum,
                     required=required)


def _b(name, default, doc=""):
    return ParamSpec(name, "bool", default, False, doc)


def _s(name, default, doc="", choices=None, hot=False):
    return ParamSpec(name, "str", default, hot, doc, choices=choices)


EXPERIMENTS: dict[str, ExperimentSpec] = {}


def _register(spec: ExperimentSpec):
    EXPERIMENTS[spec.name] = spec


_register(ExperimentSpec(
    "lorenz",
    "Chaotic convection flow: trajectory sampling after a transient.",
    (
        _f("sigma", 10.0, hot=True),
        _f("r", 28.0, hot=True),
        _f("b", 8.0 / 3.0, hot=True),
        _f("dt", 0.01, minimum=1e-6, maximum=0.05),
        _f("x0", 1.0), _f("y0", 1.0), _f("z0", 1.0),
        _i("transient_steps", 1000, minimum=0),
        _i("sample_steps", 20_000, minimum=0),
    ),
    output_kinds=("csv", "json"),
    frame_kind="trajectory-batch",
))

_register(ExperimentSpec(
    "henon-heiles",
    "Galactic-orbit Hamiltonian: section points on x=0 with px>0.",
    (
        _f("energy", 1.0 / 12.0, hot=True, minimum=1e-9, maximum=1.0 / 6.0),
        _i("n_seeds", 6, minimum=1, maximum=400),
        _i("n_crossings", 200, minimum=0),
        _f("dt", 1e-2, minimum=1e-5, maximum=0.05),
        _s("seed_rule", "grid", choices=("grid", "axis")),
    ),
    output_kinds=("csv", "json"),
    frame_kind="series-append",
))

_register(ExperimentSpec(
    "fput",
    "Nonlinear mass-spring chain: normal-mode energies and recurrence.",
    (
        _i("n_masses", 32, minimum=2, maximum=1024),
        _f("alpha", 0.25, hot=True),
        _f("dt", 0.05, minimum=1e-5),
        _i("init_mode", 1, minimum=1),
        _f("amplitude", 1.0),
        _f("t_end", 10_000.0, minimum=0.0),
        _f("record_dt", 10.0, minimum=1e-5),
    ),
    output_kinds=("csv", "json"),
    frame_kind="field-snapshot",
))

_register(ExperimentSpec(
    "kdv",
    "Dispersive wave equation: pulse formation and collisions on a ring.",
    (
        _f("delta", 0.022, hot=True, minimum=1e-4),
        _f("dx", 2.0 / 256, minimum=1e-4),
        _f("dt", 1e-4, minimum=1e-9),
        _f("length", 2.0, minimum=0.1),
        _s("init", "cosine", choices=("cosine", "two-solitons")),
        _f("t_end", 3.6, minimum=0.0),
        _f("record_dt", 0.05, minimum=1e-6),
        _f("min_pulse_height", 0.5, minimum=1e-6),
    ),
    output_kinds=("csv", "pgm", "json"),
    frame_kind="field-snapshot",
))

_register(ExperimentSpec(
    "turing",
    "Activator-inhibitor grid: seeded noise driven to a saturated pattern.",
    (
        _f("A", 1.0, hot=True, minimum=0.0),
        _f("B", 20.0, hot=True, minimum=0.0),
        _f("dt", 0.0114, minimum=1e-9),
        _f("dx", 1.0, minimum=1e-6),
        _i("nx", 64, minimum=8, maximum=512),
        _i("ny", 64, minimum=8, maximum=512),
        _f("noise_amp", 0.01, minimum=0.0),
        _i("n_steps", 40_000, minimum=0),
        _i("record_every", 4000, minimum=1),
        _b("cross_diffusion", False,
           "inhibitor diffusion reads the activator field"),
        ParamSpec("perturb", "json", None, hot=True,
                  doc="one-shot local bump [row, col, amplitude, radius]"),
    ),
    output_kinds=("pgm", "csv", "json"),
    frame_kind="field-snapshot",
))

_register(ExperimentSpec(
    "logistic",
    "Iterated interval map: bifurcation cloud (batch) or live orbit.",
    (
        _f("r", 3.6, hot=True, minimum=1e-9, maximum=4.0),
        _f("x0", 0.5, minimum=0.0, maximum=1.0),
        _f("r_min", 2.4, minimum=1e-9, maximum=4.0),
        _f("r_max", 4.0, minimum=1e-9, maximum=4.0),
        _i("n_r", 600, minimum=2),
        _i("transient", 300, minimum=0),
        _i("samples", 120, minimum=1),
    ),
    output_kinds=("csv", "json"),
    frame_kind="series-append",
))

_register(ExperimentSpec(
    "henon",
    "Quadratic planar map: attractor orbit and fixed points.",
    (
        _f("a", 1.4, hot=True),
        _f("b", 0.3, hot=True),
        _f("x0", 0.0), _f("y0", 0.0),
        _i("transient", 100, minimum=0),
        _i("n", 2000, minimum=0),
    ),
    output_kinds=("csv", "json"),
    frame_kind="series-append",
))


def _viewport_params(center_re, center_im, width, cols, rows):
    return (
        _f("center_re", center_re, hot=True),
        _f("center_im", center_im, hot=True),
        _f("width", width, hot=True, minimum=1e-12),
        _i("pixel_cols", cols, minimum=1, maximum=4096),
        _i("pixel_rows", rows, minimum=1, maximum=4096),
        _i("max_iter", 256, hot=True, minimum=1, maximum=100_000),
        _i("tile_size", 64, minimum=1),
    )


_register(ExperimentSpec(
    "julia",
    "Escape-time set for fixed c, seeded from every pixel.",
    (
        _f("c_re", -0.8, hot=True),
        _f("c_im", 0.156, hot=True),
        *_viewport_params(0.0, 0.0, 3.0, 256, 256),
        _b("smooth", True, "emit fractional escape layer"),
        _s("palette", "ember-v1", choices=("ember-v1", "gray-v1")),
    ),
    output_kinds=("pgm", "ppm", "json"),
    frame_kind="escape-tile",
))

_register(ExperimentSpec(
    "mandelbrot",
    "Escape-time set over the parameter plane, orbit seeded at 0.",
    (
        *_viewport_params(-0.5, 0.0, 3.0, 256, 192),
        _b("smooth", True, "emit fractional escape layer"),
        _s("palette", "ember-v1", choices=("ember-v1", "gray-v1")),
    ),
    output_kinds=("pgm", "ppm", "json"),
    frame_kind="escape-tile",
))

_register(ExperimentSpec(
    "newton",
    "Root-finder basins for the cubic z^3 = 1.",
    (
        *_viewport_params(0.0, 0.0, 4.0, 256, 256),
        _f("tol", 1e-9, minimum=1e-15, maximum=1e-3),
        _s("palette", "basins-v1", choices=("basins-v1",)),
    ),
    output_kinds=("pgm", "ppm", "json"),
    frame_kind="escape-tile",
))

_register(ExperimentSpec(
    "bsd",
    "Prime-by-prime point counts and the rank-slope product series.",
    (
        _i("d", None, minimum=1, required=True,
           doc="curve selector; historical ranks 0..4 at 1, 5, 34, 1254, 29274"),
        _i("x_max", 10_000, minimum=3),
        _i("p_min", 100, minimum=2),
        _b("projective", True,
           "count the point at infinity (the plotted convention)"),
    ),
    output_kinds=("csv", "json"),
    frame_kind="series-append",
))


def validate_params(experiment: str, values: dict[str, Any] | None,
                    partial: bool = False) -> dict[str, Any]:
    """Coerce and validate a parameter map against an experiment schema.

    Full mode fills defaults and rejects missing required params; partial
    mode (server patches) validates only the provided keys.
    """
    if experiment not in EXPERIMENTS:
        raise SchemaError(
            f"unknown experiment {experiment!r}; valid: "
            f"{sorted(EXPERIMENTS)}", experiment=experiment)
    spec = EXPERIMENTS[experiment]
    values = dict(values or {})
    out: dict[str, Any] = {}
    for key in values:
        param = spec.param(key)  # raises on unknown keys
        out[key] = param.coerce(values[key], experiment)
    if partial:
        return out
    for param in spec.params:
        if param.name in out:
            continue
        if param.required and param.default is None:
            raise SchemaError(
                f"{experiment}: missing required parameter {param.name!r}",
                field_name=param.name, experiment=experiment)
        out[param.name] = param.default
    return out


def registry_dump() -> dict[str, Any]:
    """JSON-safe registry description served to clients."""
    return {
        name: {
            "doc": spec.doc,
            "frame_kind": spec.frame_kind,
            "output_kinds": list(spec.output_kinds),
            "params": {
                p.name: {
                    "kind": p.kind,
                    "default": p.default,
                    "hot": p.hot,
                    "doc": p.doc,
                    "minimum": p.minimum,
                    "maximum": p.maximum,
                    "choices": list(p.choices) if p.choices else None,
                }
                for p in spec.params
            },
        }
        for name, spec in EXPERIMENTS.items()
    }
