"""Command-line experiment runner.

Experiments are described by a flat ``key = value`` file (``#`` comments
allowed, an optional ``[experiment]`` header). Powers are given in dBm and
the SIR threshold in dB; everything else is in SI units. Example::

    mode = sweep
    sweep = beta, c_bar
    sweep_beta = 0.1:0.9:9
    sweep_c_bar = 3, 4, 5
    estimators = mc, analytic
    trials = 100000
    seed = 7
    output = out/ps_vs_beta.csv

Each run writes one CSV and a JSON manifest next to it. The manifest holds
the fully resolved spec in the same key vocabulary, so
``wpbc run manifest.json`` repeats the run exactly.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import itertools
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__, analytic, optimize
from .analytic import QuadSpec, QuadratureError
from .geometry import Matern, Thomas
from .mc_engine import DEFAULT_WINDOW_RADIUS, SimConfig, simulate, sweep_beta
from .power import ModelConfig, db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm

__all__ = [
    "SpecError",
    "SweepSpec",
    "ExperimentSpec",
    "parse_spec",
    "load_spec",
    "execute",
    "run",
    "reproduce_figures",
    "main",
]

MODES = ("success", "outage", "capacity", "laplace", "bound", "sweep", "optimize", "region")
QUANTITIES = ("success", "outage", "capacity", "laplace", "bound")
SWEEP_PARAMS = ("D", "beta", "lambda_p", "c_bar", "theta", "P_c", "eta")
ESTIMATORS = ("mc", "analytic")

# CSV column per sweep parameter, named with the unit used in spec files
_COLUMN = {"D": "D", "beta": "beta", "lambda_p": "lambda_p", "c_bar": "c_bar",
           "theta": "theta_db", "P_c": "P_c_dbm", "eta": "eta_dbm"}
_TAIL_COLUMNS = ["mc_value", "mc_std_error", "analytic_value", "trials", "seed"]


class SpecError(ValueError):
    """Invalid experiment spec; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class SweepSpec:
    params: tuple
    values: tuple          # one tuple of file-unit values per parameter
    estimators: tuple = ESTIMATORS

    def points(self):
        return list(itertools.product(*self.values))


@dataclass(frozen=True)
class ExperimentSpec:
    model: ModelConfig
    sim: SimConfig
    quad: QuadSpec
    mode: str
    output_path: str
    sweep: SweepSpec | None = None
    quantity: str = "success"
    s_values: tuple = (1.0,)
    objective: str = "success_lower_bound"
    variable: str = "beta"
    budget: int = 60
    epsilon: float = 0.1
    grid_step: float = 0.1
    raw: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------------------
# parsing


_DEFAULTS = {
    "mode": "success",
    "output": "results.csv",
    "lambda_p": "0.2",
    "c_bar": "3",
    "duty_cycle": "0.4",
    "beta": "0.6",
    "eta_dbm": "40",
    "g": "1",
    "P_c_dbm": "7",
    "alpha1": "3",
    "alpha2": "3",
    "theta_db": "-5",
    "d2d_distance": "1",
    "cluster": "thomas",
    "sigma2": "4",
    "a": "20",
    "trials": "100000",
    "seed": "0",
    "workers": "1",
    "window_radius": str(DEFAULT_WINDOW_RADIUS),
    "include_intra": "true",
    "include_inter": "true",
    "rel_tol": "1e-4",
    "abs_tol": "1e-8",
    "max_subdivisions": "200",
    "outer_truncation_radius": "",
    "quantity": "success",
    "s_values": "1",
    "estimators": "mc, analytic",
    "sweep": "",
    "objective": "success_lower_bound",
    "variable": "beta",
    "budget": "60",
    "epsilon": "0.1",
    "grid_step": "0.1",
}
_SWEEP_KEYS = {f"sweep_{p}" for p in SWEEP_PARAMS}


def _num(raw: dict, key: str, kind=float):
    text = raw[key].strip()
    try:
        value = kind(text) if kind is not int else int(float(text))
    except ValueError:
        raise SpecError(f"{key}: expected a number, got {text!r}", key) from None
    if kind is int and float(text) != value:
        raise SpecError(f"{key}: expected an integer, got {text!r}", key)
    return value


def _bool(raw: dict, key: str) -> bool:
    text = raw[key].strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise SpecError(f"{key}: expected true/false, got {raw[key]!r}", key)


def _list(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def _values(key: str, text: str) -> tuple:
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, steps = text.split(":")
            n = int(steps)
            if n < 1:
                raise SpecError(f"{key}: steps must be >= 1", key)
            vals = np.linspace(float(lo), float(hi), n) if n > 1 else np.array([float(lo)])
            return tuple(float(v) for v in np.round(vals, 12))
        out = tuple(float(t) for t in _list(text))
    except ValueError:
        raise SpecError(f"{key}: expected 'min:max:steps' or a comma list of numbers", key) from None
    if not out:
        raise SpecError(f"{key}: empty value list", key)
    return out


def _model(raw: dict) -> ModelConfig:
    kind = raw["cluster"].strip().lower()
    if kind == "thomas":
        cluster = Thomas(_num(raw, "sigma2"))
    elif kind == "matern":
        cluster = Matern(_num(raw, "a"))
    else:
        raise SpecError(f"cluster: expected 'thomas' or 'matern', got {raw['cluster']!r}", "cluster")
    return ModelConfig(
        lambda_p=_num(raw, "lambda_p"), c_bar=_num(raw, "c_bar"),
        duty_cycle=_num(raw, "duty_cycle"), beta=_num(raw, "beta"),
        eta=dbm_to_watts(_num(raw, "eta_dbm")), g=_num(raw, "g"),
        P_c=dbm_to_watts(_num(raw, "P_c_dbm")), alpha1=_num(raw, "alpha1"),
        alpha2=_num(raw, "alpha2"), theta=db_to_linear(_num(raw, "theta_db")),
        d2d_distance=_num(raw, "d2d_distance"), cluster=cluster)


def _apply(cfg: ModelConfig, param: str, value: float) -> ModelConfig:
    """Set a sweep parameter given in file units."""
    if param == "D":
        return cfg.replace(duty_cycle=value)
    if param == "theta":
        return cfg.replace(theta=db_to_linear(value))
    if param == "P_c":
        return cfg.replace(P_c=dbm_to_watts(value))
    if param == "eta":
        return cfg.replace(eta=dbm_to_watts(value))
    return cfg.replace(**{param: value})


def parse_spec(raw: dict) -> ExperimentSpec:
    """Validate a flat key-value mapping and build an :class:`ExperimentSpec`.

    Unknown keys are rejected. Missing keys take the defaults of the
    reference scenario.
    """
    unknown = sorted(set(raw) - set(_DEFAULTS) - _SWEEP_KEYS)
    if unknown:
        raise SpecError(f"unknown key(s): {', '.join(unknown)}", unknown[0])
    full = dict(_DEFAULTS)
    full.update({k: str(v) for k, v in raw.items()})

    mode = full["mode"].strip()
    if mode not in MODES:
        raise SpecError(f"mode: expected one of {MODES}, got {mode!r}", "mode")
    try:
        model = _model(full)
        window = _num(full, "window_radius")
        sim = SimConfig(model, window, _num(full, "trials", int), _num(full, "seed", int),
                        _num(full, "workers", int), _bool(full, "include_intra"),
                        _bool(full, "include_inter"))
        outer = full["outer_truncation_radius"].strip()
        quad = QuadSpec(_num(full, "rel_tol"), _num(full, "abs_tol"),
                        _num(full, "max_subdivisions", int),
                        float(outer) if outer else window)
    except SpecError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecError(str(exc), _guess_key(str(exc))) from None
    if sim.trials < 1:
        raise SpecError("trials must be >= 1", "trials")
    if sim.workers < 1:
        raise SpecError("workers must be >= 1", "workers")

    quantity = full["quantity"].strip()
    if quantity not in QUANTITIES:
        raise SpecError(f"quantity: expected one of {QUANTITIES}, got {quantity!r}", "quantity")
    s_values = _values("s_values", full["s_values"])
    if any(not s >= 0 for s in s_values):
        raise SpecError("s_values must be >= 0", "s_values")
    estimators = tuple(_list(full["estimators"]))
    if not estimators or any(e not in ESTIMATORS for e in estimators):
        raise SpecError(f"estimators: expected a subset of {ESTIMATORS}", "estimators")

    sweep = None
    if mode == "sweep":
        params = tuple(_list(full["sweep"]))
        if not 1 <= len(params) <= 2:
            raise SpecError("sweep: name one or two parameters", "sweep")
        for p in params:
            if p not in SWEEP_PARAMS:
                raise SpecError(f"sweep: {p!r} is not one of {SWEEP_PARAMS}", "sweep")
            if f"sweep_{p}" not in full:
                raise SpecError(f"sweep_{p}: values missing", f"sweep_{p}")
        if len(set(params)) != len(params):
            raise SpecError("sweep: parameters must be distinct", "sweep")
        values = tuple(_values(f"sweep_{p}", full[f"sweep_{p}"]) for p in params)
        sweep = SweepSpec(params, values, estimators)
        for point in sweep.points():
            cfg = model
            try:
                for p, v in zip(params, point):
                    cfg = _apply(cfg, p, v)
            except ValueError as exc:
                raise SpecError(f"sweep point {dict(zip(params, point))}: {exc}",
                                f"sweep_{params[0]}") from None
    elif any(k in raw for k in _SWEEP_KEYS):
        raise SpecError("sweep_* keys are only valid with mode = sweep",
                        sorted(set(raw) & _SWEEP_KEYS)[0])

    objective = full["objective"].strip()
    variable = full["variable"].strip()
    budget = _num(full, "budget", int)
    if mode == "optimize":
        try:
            optimize.OptProblem(objective, variable, budget=budget)
        except ValueError as exc:
            raise SpecError(str(exc), "objective") from None
    epsilon = _num(full, "epsilon")
    grid_step = _num(full, "grid_step")
    if mode == "region":
        if not 0 < epsilon < 1:
            raise SpecError("epsilon must lie in (0, 1)", "epsilon")
        if not 0 < grid_step <= 0.5:
            raise SpecError("grid_step must lie in (0, 0.5]", "grid_step")
    if mode in ("bound", "region") or (mode == "optimize" and not objective.startswith("mc_")):
        if model.beta <= 0 and mode != "region":
            raise SpecError("beta must be > 0 for the success bound", "beta")

    return ExperimentSpec(model, sim, quad, mode, full["output"].strip(), sweep, quantity,
                          s_values, objective, variable, budget, epsilon, grid_step, full)


def _guess_key(message: str) -> str | None:
    if "beta * duty_cycle" in message:
        return "beta*duty_cycle"
    for key in sorted(_DEFAULTS, key=len, reverse=True):
        if message.startswith(key) or f" {key} " in message:
            return key
    return None


def load_spec(path) -> ExperimentSpec:
    """Read a spec file, or the ``spec`` block of a run manifest (``.json``)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return parse_spec(json.loads(text)["spec"])
    if not text.lstrip().startswith("["):
        text = "[experiment]\n" + text
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (P_c_dbm)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise SpecError(f"cannot parse {path}: {exc}") from None
    raw = {}
    for section in parser.sections():
        raw.update(parser.items(section))
    return parse_spec(raw)


# ---------------------------------------------------------------------------
# execution


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def _with_model(sim: SimConfig, cfg: ModelConfig) -> SimConfig:
    return dataclasses.replace(sim, model=cfg)


def _analytic(quantity: str, cfg: ModelConfig, quad: QuadSpec, s: float | None = None):
    if quantity in ("success", "bound"):
        return float(analytic.success_lower_bound(cfg, quad))
    if quantity == "outage":
        return analytic.power_outage(cfg)
    if quantity == "capacity":
        return analytic.capacity_approx(cfg)
    return float(analytic.charfun(s, cfg, quad))


def _mc_rows(quantity: str, sim: SimConfig, s_values) -> list:
    """MC (value, std_error) per row: one row, or one per s for Laplace."""
    if quantity == "laplace":
        res = simulate(sim, s_values)
        return [(e.value, e.std_error) for e in res["laplace"]]
    res = simulate(sim)
    if quantity == "outage":
        e = res["outage"]
        return [(e.value, e.std_error)]
    e = res["success"]
    scale = 1.0
    if quantity == "capacity":
        m = sim.model
        scale = m.lambda_p * m.c_bar * m.duty_cycle
    return [(scale * e.value, scale * e.std_error)]


def _point_rows(spec: ExperimentSpec, cfg: ModelConfig, quantity: str, estimators,
                mc_cache: dict | None = None) -> list:
    sim = _with_model(spec.sim, cfg)
    svals = spec.s_values if quantity == "laplace" else (None,)
    mc = [(None, None)] * len(svals)
    if "mc" in estimators and quantity != "bound":
        mc = mc_cache[cfg] if mc_cache and cfg in mc_cache else _mc_rows(quantity, sim, svals)
    rows = []
    for s, (v, se) in zip(svals, mc):
        an = _analytic(quantity, cfg, spec.quad, s) if "analytic" in estimators else None
        row = {} if s is None else {"s": s}
        row.update({"mc_value": v, "mc_std_error": se, "analytic_value": an,
                    "trials": spec.sim.trials if v is not None else None,
                    "seed": spec.sim.seed if v is not None else None})
        rows.append(row)
    return rows


def _beta_batches(spec: ExperimentSpec, configs: list, shared: dict | None = None) -> dict:
    """Precompute MC success/capacity for configs differing only in beta.

    Points sharing every other parameter are simulated in one pass with
    common random numbers; the result equals per-point simulation.
    ``shared`` maps a full :class:`SimConfig` to its success estimate and
    lets several runs reuse the same simulations.
    """
    shared = {} if shared is None else shared
    groups: dict = {}
    for cfg in configs:
        groups.setdefault(cfg.replace(beta=0.5), []).append(cfg)
    for members in groups.values():
        todo = [c for c in members if _with_model(spec.sim, c) not in shared]
        if todo:
            res = sweep_beta(_with_model(spec.sim, todo[0]), [c.beta for c in todo])
            for c, r in zip(todo, res):
                shared[_with_model(spec.sim, c)] = r["success"]
    out = {}
    for c in configs:
        e = shared[_with_model(spec.sim, c)]
        scale = c.lambda_p * c.c_bar * c.duty_cycle if spec.quantity == "capacity" else 1.0
        out[c] = [(scale * e.value, scale * e.std_error)]
    return out


def _run_sweep(spec: ExperimentSpec, shared: dict | None = None):
    sw = spec.sweep
    header = [_COLUMN[p] for p in sw.params]
    if spec.quantity == "laplace":
        header.append("s")
    configs = []
    for point in sw.points():
        cfg = spec.model
        for p, v in zip(sw.params, point):
            cfg = _apply(cfg, p, v)
        configs.append((point, cfg))
    cache = None
    if "beta" in sw.params and "mc" in sw.estimators and spec.quantity in ("success", "capacity"):
        cache = _beta_batches(spec, [c for _, c in configs], shared)
    rows = []
    for point, cfg in configs:
        for r in _point_rows(spec, cfg, spec.quantity, sw.estimators, cache):
            rows.append({**{_COLUMN[p]: v for p, v in zip(sw.params, point)}, **r})
    return header + _TAIL_COLUMNS, rows


def _run_optimize(spec: ExperimentSpec):
    problem = optimize.OptProblem(spec.objective, spec.variable, budget=spec.budget)
    ctx = spec.sim if problem.is_mc else spec.quad
    res = optimize.maximize(problem, spec.model, ctx)
    if problem.variable == "joint":
        D, beta, value = res.D, res.beta, res.value
    else:
        D = res.arg if problem.variable == "D" else spec.model.duty_cycle
        beta = res.arg if problem.variable == "beta" else spec.model.beta
        value = res.value
    row = {"D": D, "beta": beta, "mc_value": None, "mc_std_error": None,
           "analytic_value": None, "trials": None, "seed": None}
    if problem.is_mc:
        row.update(mc_value=value, trials=spec.sim.trials, seed=spec.sim.seed)
    else:
        row["analytic_value"] = value
    return ["D", "beta"] + _TAIL_COLUMNS, [row]


def _run_region(spec: ExperimentSpec):
    reg = analytic.feasible_region(spec.model, spec.epsilon, spec.grid_step, spec.quad)
    rows = []
    for i, D in enumerate(reg.D_values):
        for j, b in enumerate(reg.beta_values):
            v = reg.charfun[i, j]
            rows.append({"D": D, "beta": b, "mc_value": None, "mc_std_error": None,
                         "analytic_value": None if np.isnan(v) else v, "trials": None,
                         "seed": None, "feasible": bool(reg.feasible[i, j]),
                         "quad_failed": bool(reg.failed[i, j])})
    return ["D", "beta"] + _TAIL_COLUMNS + ["feasible", "quad_failed"], rows


def execute(spec: ExperimentSpec, shared: dict | None = None):
    """Run a spec and return ``(header, rows)`` without writing anything.

    ``shared`` is an optional cache of beta-sweep simulations, reused across
    calls within one process.
    """
    if spec.mode == "sweep":
        return _run_sweep(spec, shared)
    if spec.mode == "optimize":
        return _run_optimize(spec)
    if spec.mode == "region":
        return _run_region(spec)
    estimators = ("analytic",) if spec.mode == "bound" else ESTIMATORS
    rows = _point_rows(spec, spec.model, spec.mode, estimators)
    header = (["s"] if spec.mode == "laplace" else []) + _TAIL_COLUMNS
    return header, rows


def _write_csv(path: Path, header: list, rows: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r.get(h)) for h in header])


def _versions() -> dict:
    return {"wpbc": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def _resolved_model(cfg: ModelConfig) -> dict:
    """Model parameters in spec-file units, with every default filled in."""
    out = {
        "lambda_p": repr(cfg.lambda_p), "c_bar": repr(cfg.c_bar),
        "duty_cycle": repr(cfg.duty_cycle), "beta": repr(cfg.beta),
        "eta_dbm": repr(watts_to_dbm(cfg.eta)), "g": repr(cfg.g),
        "P_c_dbm": repr(watts_to_dbm(cfg.P_c)), "alpha1": repr(cfg.alpha1),
        "alpha2": repr(cfg.alpha2), "theta_db": repr(linear_to_db(cfg.theta)),
        "d2d_distance": repr(cfg.d2d_distance),
    }
    if isinstance(cfg.cluster, Thomas):
        out.update(cluster="thomas", sigma2=repr(cfg.cluster.sigma2))
    else:
        out.update(cluster="matern", a=repr(cfg.cluster.a))
    return out


def _write_manifest(path: Path, spec_block: dict, extra: dict) -> None:
    manifest = {"spec": spec_block, "versions": _versions(), **extra}
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run(spec: ExperimentSpec, shared: dict | None = None) -> Path:
    """Execute ``spec``, write its CSV and manifest, return the CSV path."""
    t0 = time.perf_counter()
    header, rows = execute(spec, shared)
    out = Path(spec.output_path)
    _write_csv(out, header, rows)
    # the raw block already holds every key; model values are the parsed ones
    block = {k: v for k, v in spec.raw.items()}
    _write_manifest(out.with_suffix(".json"), block, {
        "model_resolved": _resolved_model(spec.model),
        "model_si": spec.model.as_dict(),
        "csv": out.name,
        "rows": len(rows),
        "wall_time_s": round(time.perf_counter() - t0, 3),
    })
    return out


# ---------------------------------------------------------------------------
# figure reproduction

FIGURES = {
    "ps_vs_beta": ("sweep", "success", {"sweep": "beta, c_bar", "sweep_beta": "0.1:0.9:9"}),
    "ps_vs_D": ("sweep", "success", {"sweep": "D, c_bar", "sweep_D": "0.1:0.9:9"}),
    "capacity_vs_lambda_p": ("sweep", "capacity", {
        "sweep": "lambda_p, c_bar",
        "sweep_lambda_p": "0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.5, 1, 1.5, 2"}),
    "capacity_vs_beta": ("sweep", "capacity", {"sweep": "beta, c_bar", "sweep_beta": "0.1:0.9:9"}),
}


def figure_spec(name: str, out_dir, seed: int = 0, trials: int = 100_000,
                workers: int = 1) -> ExperimentSpec:
    """Spec of one reference figure; swept over ``c_bar`` in {3, 4, 5}."""
    mode, quantity, keys = FIGURES[name]
    raw = {"mode": mode, "quantity": quantity, "sweep_c_bar": "3, 4, 5",
           "seed": str(seed), "trials": str(trials), "workers": str(workers),
           "output": str(Path(out_dir) / f"{name}.csv"), **keys}
    return parse_spec(raw)


def reproduce_figures(out_dir, seed: int = 0, trials: int = 100_000, workers: int = 1,
                      names=None) -> list:
    """Write the four reference CSVs into ``out_dir``; returns their paths."""
    shared: dict = {}   # capacity_vs_beta reuses the ps_vs_beta simulations
    return [run(figure_spec(n, out_dir, seed, trials, workers), shared)
            for n in (names or FIGURES)]


# ---------------------------------------------------------------------------
# entry point


def _error_record(exc: BaseException) -> dict:
    rec = {"status": "error", "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SpecError):
        rec["key"] = exc.key
    if isinstance(exc, QuadratureError):
        rec["value"] = exc.value
        rec["error_estimate"] = exc.error
    return rec


def _override(spec: ExperimentSpec, args) -> ExperimentSpec:
    raw = dict(spec.raw)
    for key in ("seed", "trials", "workers"):
        if getattr(args, key) is not None:
            raw[key] = str(getattr(args, key))
    return parse_spec(raw)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wpbc", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment spec (or repeat a run manifest)")
    r.add_argument("spec_file")
    f = sub.add_parser("reproduce-figures", help="write the four reference figure CSVs")
    f.add_argument("out_dir")
    f.add_argument("--only", nargs="+", choices=sorted(FIGURES), help="subset of figures")
    for q in (r, f):
        q.add_argument("--seed", type=int)
        q.add_argument("--trials", type=int)
        q.add_argument("--workers", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            spec = _override(load_spec(args.spec_file), args)
            out = run(spec)
            print(json.dumps({"status": "ok", "csv": str(out)}))
        else:
            paths = reproduce_figures(
                args.out_dir,
                seed=0 if args.seed is None else args.seed,
                trials=100_000 if args.trials is None else args.trials,
                workers=1 if args.workers is None else args.workers,
                names=args.only)
            print(json.dumps({"status": "ok", "csv": [str(p) for p in paths]}))
    except SpecError as exc:
        print(json.dumps(_error_record(exc)), file=sys.stderr)
        return 2
    except QuadratureError as exc:
        print(json.dumps(_error_record(exc)), file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(json.dumps(_error_record(exc)), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
