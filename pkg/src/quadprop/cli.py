"""Command-line front end driven by a single JSON config.

Exit status: 0 success, 1 the run finished but a check failed or Picard did
not converge, 2 invalid config, 3 numerical failure.
"""
import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np
import sympy as sp

from . import __version__
from ._expr import parse
from .coefficients import COEFFICIENT_NAMES, CoefficientSet, get_model
from .errors import ExpressionError, QuadPropError, UnknownModelError
from .evolution import (DEFAULT_DOMAIN, DEFAULT_N, WaveFunction, apply_forward, apply_inverse,
                        gaussian)
from .nonlinear import DEFAULT_NODES, SCHEMES, NonlinearTerm, picard_solve
from .propagator import ROUTES, propagator_for

TASKS = ("evolve", "invert", "nonlinear", "verify")
EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigValidationError(ValueError):
    pass


@dataclass
class RunConfig:
    model: object = "free_particle"
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=lambda: {"x_min": DEFAULT_DOMAIN[0],
                                                "x_max": DEFAULT_DOMAIN[1], "n": DEFAULT_N})
    initial: dict = field(default_factory=lambda: {"type": "gaussian", "center": 0.0,
                                                   "width": 1.0, "momentum": 0.0})
    task: str = "evolve"
    times: list = field(default_factory=lambda: [0.5])
    nonlinear: dict = field(default_factory=dict)
    route: str = "auto"
    output: str = "quadprop_out"

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigValidationError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.grid = {**cls().grid, **cfg.grid}
        if cfg.initial.get("type", "gaussian") == "gaussian":
            cfg.initial = {**cls().initial, **cfg.initial}
        cfg.nonlinear = {"lambda": None, "nu": 1.0, "h": None, "tol": 1e-8, "max_iter": 20,
                         "n_t": DEFAULT_NODES, "scheme": "composed", **cfg.nonlinear}
        if cfg.nonlinear["lambda"] is None and cfg.nonlinear["h"] is None:
            cfg.nonlinear["lambda"] = 0.0
        return cfg

    def to_dict(self):
        return asdict(self)


def build_model(cfg):
    if isinstance(cfg.model, str):
        return get_model(cfg.model, **cfg.params)
    if isinstance(cfg.model, dict):
        spec = dict(cfg.model)
        name = spec.pop("name", "custom")
        mu = spec.pop("mu", None)
        bad = set(spec) - set(COEFFICIENT_NAMES)
        if bad:
            raise ConfigValidationError(f"unknown coefficient keys {sorted(bad)}")
        return CoefficientSet.from_expressions(name, mu=mu, **spec)
    raise ConfigValidationError("model must be a registry name or a coefficient mapping")


def build_initial(cfg):
    g, init = cfg.grid, cfg.initial
    kind = init.get("type", "gaussian")
    if kind == "gaussian":
        return gaussian(g["x_min"], g["x_max"], g["n"], width=float(init["width"]),
                        center=float(init["center"]), momentum=float(init["momentum"]),
                        normalized=bool(init.get("normalized", False)))
    if kind == "expression":
        x = sp.Symbol("x", real=True)
        re = sp.lambdify(x, parse(init.get("re", "0"), ("x",)), modules="numpy")
        im = sp.lambdify(x, parse(init.get("im", "0"), ("x",)), modules="numpy")
        return WaveFunction.from_function(lambda xs: re(xs) + 1j * np.asarray(im(xs)),
                                          g["x_min"], g["x_max"], g["n"])
    if kind == "file":
        path = init["path"]
        return WaveFunction.from_json(path) if path.endswith(".json") else WaveFunction.from_csv(path)
    raise ConfigValidationError(f"initial.type must be gaussian, expression or file, got {kind!r}")


def validate(cfg):
    """Check the config and return ``(coeffs, psi0, nonlinear_term or None)``."""
    if cfg.task not in TASKS:
        raise ConfigValidationError(f"task must be one of {TASKS}, got {cfg.task!r}")
    if cfg.route not in ROUTES:
        raise ConfigValidationError(f"route must be one of {ROUTES}")
    g = cfg.grid
    n = g.get("n")
    if not isinstance(n, int) or n < 3 or n % 2 == 0:
        raise ConfigValidationError(f"grid.n must be an odd integer >= 3, got {n!r}")
    if not float(g["x_min"]) < float(g["x_max"]):
        raise ConfigValidationError("grid.x_min must be below grid.x_max")
    coeffs = build_model(cfg)
    psi0 = None
    nl = None
    if cfg.task != "verify":
        if not isinstance(cfg.times, list) or not cfg.times:
            raise ConfigValidationError("times must be a non-empty list")
        prop = propagator_for(coeffs, cfg.route)
        for t in cfg.times:
            if isinstance(t, bool) or not isinstance(t, (int, float)):
                raise ConfigValidationError(f"times must be numbers, got {t!r}")
            prop.check_time(t)
        psi0 = build_initial(cfg)
    if cfg.task == "nonlinear":
        p = cfg.nonlinear
        if p["scheme"] not in SCHEMES:
            raise ConfigValidationError(f"nonlinear.scheme must be one of {SCHEMES}")
        if not 0 < float(p["nu"]) <= 1:
            raise ConfigValidationError(f"nonlinear.nu must satisfy 0 < nu <= 1, got {p['nu']}")
        if p["h"] is not None:
            nl = NonlinearTerm.power(h=p["h"], nu=float(p["nu"]))
        else:
            nl = NonlinearTerm.power(float(p["lambda"]), nu=float(p["nu"]))
    return coeffs, psi0, nl


def _time_record(prop, t, psi):
    return {"t": t, "mu": prop.mu(t), "phases": prop.phases(t).to_dict(),
            "norms": {"l1": psi.norm_l1(), "l2": psi.norm_l2(), "sup": psi.norm_sup()}}


def run(cfg, out_dir=None, quiet=False):
    """Execute a validated :class:`RunConfig`; returns the exit status."""
    out_dir = out_dir or cfg.output
    try:
        coeffs, psi0, nl = validate(cfg)
    except (ConfigValidationError, UnknownModelError, ExpressionError, KeyError,
            TypeError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadPropError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    os.makedirs(out_dir, exist_ok=True)
    meta = {"version": __version__, "config": cfg.to_dict(), "model": coeffs.describe(),
            "task": cfg.task, "results": []}
    status = EXIT_OK
    try:
        if cfg.task == "verify":
            from .verify import format_table, reports_to_json, run_battery
            reports = run_battery([coeffs], route=cfg.route)
            reports_to_json(reports, os.path.join(out_dir, "report.json"))
            meta["results"] = [r.to_dict() for r in reports]
            if not quiet:
                print(format_table(reports))
            if not all(r.passed for r in reports):
                status = EXIT_CHECK_FAILED
        else:
            prop = propagator_for(coeffs, cfg.route)
            for k, t in enumerate(cfg.times):
                t = float(t)
                record = {}
                if cfg.task == "evolve":
                    psi = apply_forward(psi0, coeffs, t, route=cfg.route)
                elif cfg.task == "invert":
                    psi = apply_inverse(psi0, coeffs, t, route=cfg.route)
                else:
                    p = cfg.nonlinear
                    res = picard_solve(psi0, coeffs, nl, t, tol=float(p["tol"]),
                                       max_iter=int(p["max_iter"]), n_t=int(p["n_t"]),
                                       scheme=p["scheme"], route=cfg.route)
                    psi = res.psi
                    log_name = f"iterations_{k:03d}.json"
                    res.to_json(os.path.join(out_dir, log_name))
                    record.update(iterations=res.iterations, converged=res.converged,
                                  log=log_name)
                    if not res.converged:
                        status = EXIT_CHECK_FAILED
                name = f"psi_{k:03d}.csv"
                psi.to_csv(os.path.join(out_dir, name), include_abs=True)
                record.update(_time_record(prop, t, psi), file=name)
                meta["results"].append(record)
                if not quiet:
                    print(f"{cfg.task} t={t:.6g} -> {name}  l2={psi.norm_l2():.12g}")
    except QuadPropError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        meta["error"] = {"type": type(exc).__name__, "message": str(exc)}
        status = EXIT_NUMERIC
    with open(os.path.join(out_dir, "metadata.json"), "w") as fh:
        json.dump(meta, fh, indent=2, default=float)
    return status


def main(argv=None):
    parser = argparse.ArgumentParser(prog="quadprop",
                                     description="Propagators for quadratic Hamiltonians.")
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--task", choices=TASKS, help="override the config's task")
    parser.add_argument("--out", help="output directory (overrides config 'output')")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary output")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            data = json.load(fh)
        cfg = RunConfig.from_dict(data)
    except (OSError, json.JSONDecodeError, ConfigValidationError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.task:
        cfg.task = args.task
    return run(cfg, args.out, args.quiet)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
