"""Run configuration: parsing, schema validation, system construction.

Configs are JSON documents validated against the shipped schema
(``lpreduce/schema/config_schema.json``); defaults are filled during
normalization so a normalized config round-trips byte-identically. Systems
are either built-in by name or fully expression-defined (see
:mod:`lpreduce.exprfield` for the grammar).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from . import exprfield, fdiff, lie_group
from .builtin_systems import builtin_system
from .errors import ConfigError
from .system_model import SystemDefinition

_DEFAULT_TOLERANCES = {
    "gauge": 1e-12,
    "compare_state": 1e-5,
    "compare_reconstruction": 1e-4,
    "energy": 1e-7,
    "vertical": 1e-7,
    "equilibrium": 1e-10,
}


def load_schema():
    with resources.files("lpreduce.schema").joinpath("config_schema.json").open() as handle:
        return json.load(handle)


@dataclass
class RunConfig:
    command: str
    raw: dict
    system: SystemDefinition
    seed: int
    dt: float
    t_end: float
    tolerances: dict
    validation_samples: int

    def normalized(self):
        """The schema-complete config dict (defaults filled, keys sorted)."""
        return self.raw


def _validate_schema(data):
    try:
        jsonschema.validate(data, load_schema())
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(exc.message, field=path) from exc


def _normalize(data):
    out = dict(data)
    out.setdefault("seed", 42)
    out.setdefault("dt", 1e-3)
    out.setdefault("t_end", 1.0)
    tol = dict(_DEFAULT_TOLERANCES)
    tol.update(out.get("tolerances", {}))
    out["tolerances"] = tol
    validation = dict(out.get("validation", {}))
    validation.setdefault("samples", 50)
    out["validation"] = validation
    if "equilibria" in out:
        eq = dict(out["equilibria"])
        eq.setdefault("eigen_index", 0)
        eq.setdefault("verify_t_end", 1.0)
        out["equilibria"] = eq
    return out


def parse_config(data, overrides=None):
    """Validate, normalize and materialize a config mapping."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", field="<root>")
    _validate_schema(data)
    data = _normalize(data)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key.startswith("tol_"):
            name = key[4:]
            if name not in data["tolerances"]:
                raise ConfigError(f"unknown tolerance override {name!r}", field="tolerances")
            data["tolerances"][name] = float(value)
        elif key in ("seed",):
            data[key] = int(value)
        elif key in ("dt", "t_end"):
            data[key] = float(value)
        else:
            raise ConfigError(f"unknown override {key!r}")
    _validate_schema(data)
    system = build_system(data["system"])
    _check_dimensions(data, system)
    return RunConfig(command=data["command"], raw=data, system=system,
                     seed=int(data["seed"]), dt=float(data["dt"]),
                     t_end=float(data["t_end"]), tolerances=data["tolerances"],
                     validation_samples=int(data["validation"]["samples"]))


def load_config(path, overrides=None):
    try:
        with open(path) as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", field=str(path)) from exc
    return parse_config(data, overrides)


def _check_dimensions(data, system):
    def expect(vec, n, where):
        if len(vec) != n:
            raise ConfigError(f"expected {n} components, got {len(vec)}", field=where)

    initial = data.get("initial", {})
    if "full" in initial:
        full = initial["full"]
        expect(full["q"], system.n_p, "initial.full.q")
        expect(full["f"], system.n_v, "initial.full.f")
        expect(full["qdot"], system.n_p, "initial.full.qdot")
        expect(full["fdot"], system.n_v, "initial.full.fdot")
    if "reduced" in initial:
        red = initial["reduced"]
        expect(red["q_star"], system.n_p, "initial.reduced.q_star")
        expect(red["f_tilde"], system.n_v, "initial.reduced.f_tilde")
        expect(red["omega_p"], system.n_p, "initial.reduced.omega_p")
        expect(red["omega_v"], system.n_v, "initial.reduced.omega_v")
        expect(red["p"], system.n_g, "initial.reduced.p")
        expect(red["a"], system.n_g, "initial.reduced.a")
    if "equilibria" in data:
        eq = data["equilibria"]
        expect(eq["seed_q_star"], system.n_p, "equilibria.seed_q_star")
        expect(eq["seed_f_tilde"], system.n_v, "equilibria.seed_f_tilde")
    if "derive_point" in data:
        expect(data["derive_point"]["q"], system.n_p, "derive_point.q")
        expect(data["derive_point"]["f"], system.n_v, "derive_point.f")


def build_system(spec):
    """SystemDefinition from a config system block."""
    if "builtin" in spec:
        try:
            return builtin_system(spec["builtin"])
        except KeyError as exc:
            raise ConfigError(str(exc), field="system.builtin") from exc
    return _expression_system(spec)


def _build_group(spec):
    if "builtin" in spec:
        try:
            return lie_group.builtin_group(spec["builtin"], spec.get("chart_radius"))
        except KeyError as exc:
            raise ConfigError(str(exc), field="system.group.builtin") from exc
    constants = np.asarray(spec["structure_constants"], dtype=float)
    realization = np.asarray(spec["realization"], dtype=float)
    if realization.ndim == 4:  # [generator, re/im, row, col]
        realization = realization[:, 0] + 1j * realization[:, 1]
    try:
        return lie_group.LieGroupChart("custom", constants.shape[0], constants,
                                       realization,
                                       spec.get("chart_radius", 0.9 * np.pi))
    except ValueError as exc:
        raise ConfigError(str(exc), field="system.group") from exc


def _expression_system(spec):
    group = _build_group(spec["group"])
    n_p, n_v, n_g = int(spec["n_p"]), int(spec["n_v"]), group.dim
    q_names = exprfield.indexed_names("Q", n_p)
    f_names = exprfield.indexed_names("f", n_v)
    a_names = exprfield.indexed_names("a", n_g)

    def matrix_exprs(entries, variables, where, shape):
        if (len(entries), len(entries[0])) != shape:
            raise ConfigError(f"expected a {shape[0]}x{shape[1]} matrix", field=where)
        return [[exprfield.compile_expression(cell, variables, f"{where}[{i}][{j}]")
                 for j, cell in enumerate(row)] for i, row in enumerate(entries)]

    metric_exprs = matrix_exprs(spec["metric_p"], q_names, "system.metric_p", (n_p, n_p))
    rep_exprs = matrix_exprs(spec["representation"], a_names, "system.representation", (n_v, n_v))
    if len(spec["action"]) != n_p:
        raise ConfigError(f"expected {n_p} action expressions", field="system.action")
    action_exprs = [exprfield.compile_expression(cell, q_names + a_names, f"system.action[{i}]")
                    for i, cell in enumerate(spec["action"])]
    if len(spec["gauge"]) != n_g:
        raise ConfigError(f"expected {n_g} gauge expressions", field="system.gauge")
    gauge_exprs = [exprfield.compile_expression(cell, q_names, f"system.gauge[{i}]")
                   for i, cell in enumerate(spec["gauge"])]
    potential_expr = exprfield.compile_expression(spec["potential"], q_names + f_names,
                                                  "system.potential")
    metric_v = np.asarray(spec["metric_v"], dtype=float)
    if metric_v.shape != (n_v, n_v):
        raise ConfigError(f"expected a {n_v}x{n_v} numeric matrix", field="system.metric_v")

    def metric_p(Q):
        Q = np.asarray(Q, dtype=float)
        env = exprfield.indexed_env("Q", Q)
        out = np.zeros(Q.shape[:-1] + (n_p, n_p))
        for i in range(n_p):
            for j in range(n_p):
                out[..., i, j] = metric_exprs[i][j](**env)
        return out

    def action(Q, a):
        Q = np.asarray(Q, dtype=float)
        a = np.asarray(a, dtype=float)
        env = exprfield.indexed_env("Q", Q)
        env.update({f"a{i + 1}": a[i] for i in range(n_g)})
        out = np.zeros(Q.shape)
        for i in range(n_p):
            out[..., i] = action_exprs[i](**env)
        return out

    def representation(a):
        a = np.asarray(a, dtype=float)
        env = {f"a{i + 1}": a[i] for i in range(n_g)}
        out = np.zeros((n_v, n_v))
        for i in range(n_v):
            for j in range(n_v):
                out[i, j] = rep_exprs[i][j](**env)
        return out

    def potential(Q, f):
        Q = np.asarray(Q, dtype=float)
        f = np.asarray(f, dtype=float)
        env = exprfield.indexed_env("Q", Q)
        env.update(exprfield.indexed_env("f", f))
        return np.asarray(potential_expr(**env), dtype=float)

    def gauge(Q):
        Q = np.asarray(Q, dtype=float)
        env = exprfield.indexed_env("Q", Q)
        out = np.zeros(Q.shape[:-1] + (n_g,))
        for i in range(n_g):
            out[..., i] = gauge_exprs[i](**env)
        return out

    # generators of Dbar(a) = D(a^-1) by differentiating D at the identity
    gen = []
    for alpha in range(n_g):
        e = np.zeros(n_g)
        e[alpha] = fdiff.STEP
        samples = [representation(off * e) for off in fdiff.FD4_OFFSETS]
        gen.append(-sum(w * s for w, s in zip(fdiff.FD4_WEIGHTS, samples)) / (12.0 * fdiff.STEP))
    rep_generators = np.stack(gen)

    return SystemDefinition(
        name=spec.get("name", "expression-system"),
        group=group, n_p=n_p, n_v=n_v,
        metric_p=metric_p, metric_v=metric_v,
        action=action, representation=representation,
        rep_generators=rep_generators,
        potential=potential, gauge=gauge)
