"""Command-line front end: bounds, speed, profile, limit, sweep and validate."""

import argparse
import copy
import csv
import dataclasses
import io
import json
import math
import os
import sys

import numpy as np

from .errors import BornFrontError
from .golden import run_golden
from .profile import classify_regime, front_profile, make_limit_profile
from .reaction import CATALOG, classify, reaction_from_config, reaction_to_config
from .reduction import DEFAULT_CONTROLS, Controls, ModelParams
from .speed import compute_bounds, compute_speed, limit_speed_prediction
from .sweep import AXES, OUTPUTS, SweepPlan, coupled_params, format_value, round_value, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_DEVIATION = 0, 2, 3, 4
COMMANDS = ("bounds", "speed", "profile", "limit", "sweep", "validate")
NEEDS_REACTION = {"bounds", "speed", "profile", "limit", "sweep"}


class ConfigError(Exception):
    """Invalid configuration; the message starts with the offending field path."""


def default_config() -> dict:
    return {
        "model": {"a": 1.0, "b": 1.0, "linear": False},
        "solver": dataclasses.asdict(DEFAULT_CONTROLS),
        "output": {"format": "csv", "path": None, "digits": 9, "figures": None},
        "sweep": {"outputs": ["speeds", "bounds"], "limit": None, "window": [-1.0, 4.0],
                  "expected_order": None},
        "limit": {"regime": None, "trend_a": None, "trend_b": None, "ratio_trend": None,
                  "b2_over_a_trend": None, "window": [-1.0, 4.0], "n": 501},
        "golden": None,
        "jobs": 1,
        "seedless": False,
    }


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "reaction":
            out[k] = _merge(out[k], v, f"{path}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


# --- validation -------------------------------------------------------------------

def _positive(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0 \
            or not math.isfinite(value):
        raise ConfigError(f"{path}: must be a positive finite number, got {value!r}")
    return float(value)


def _check_keys(block, allowed, path):
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: must be an object")
    extra = set(block) - set(allowed)
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}: unknown field")


def validate_config(cfg: dict, command: str) -> dict:
    """Check every block; returns the config with the reaction block normalised."""
    _check_keys(cfg, set(default_config()) | {"reaction"}, "config")
    if command in NEEDS_REACTION and not cfg.get("golden"):
        if cfg.get("reaction") is None:
            raise ConfigError("reaction: missing block")
        block = cfg["reaction"]
        if not isinstance(block, dict):
            raise ConfigError("reaction: must be an object")
        if "catalog" in block and block["catalog"] not in CATALOG:
            raise ConfigError(f"reaction.catalog: unknown name {block['catalog']!r}; "
                              f"choose from {sorted(CATALOG)}")
        try:
            spec = reaction_from_config(block)
            classify(spec)
        except (ValueError, TypeError, BornFrontError) as exc:
            raise ConfigError(f"reaction: {exc}") from None
        cfg["reaction"] = reaction_to_config(spec)

    model = cfg["model"]
    _check_keys(model, {"a", "b", "linear", "coupling", "value", "values", "fixed_a",
                        "fixed_b", "pairs"}, "model")
    coupling = model.get("coupling")
    if coupling is not None and coupling not in AXES:
        raise ConfigError(f"model.coupling: must be one of {AXES}, got {coupling!r}")
    for key in ("a", "b", "fixed_a", "fixed_b", "value"):
        if model.get(key) is not None:
            _positive(model[key], f"model.{key}")
    if model.get("values") is not None:
        if not isinstance(model["values"], list) or not model["values"]:
            raise ConfigError("model.values: must be a non-empty list")
        for i, v in enumerate(model["values"]):
            _positive(v, f"model.values[{i}]")
    if model.get("pairs") is not None:
        for i, p in enumerate(model["pairs"]):
            if not isinstance(p, list) or len(p) != 2:
                raise ConfigError(f"model.pairs[{i}]: must be [a, b]")
            _positive(p[0], f"model.pairs[{i}][0]")
            _positive(p[1], f"model.pairs[{i}][1]")
    if command == "sweep" and not cfg.get("golden"):
        if coupling is None:
            raise ConfigError("model.coupling: required for sweep")
        if coupling == "custom" and not model.get("pairs"):
            raise ConfigError("model.pairs: required for the custom coupling")
        if coupling != "custom" and not model.get("values"):
            raise ConfigError("model.values: required for sweep")
    if coupling == "custom" and command != "sweep":
        raise ConfigError("model.coupling: custom pairs are only valid for sweep")

    solver = cfg["solver"]
    fields = {f.name: f.type for f in dataclasses.fields(Controls)}
    _check_keys(solver, fields, "solver")
    for k, v in solver.items():
        if k in ("max_steps", "max_expansions"):
            if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                raise ConfigError(f"solver.{k}: must be a positive integer, got {v!r}")
        else:
            _positive(v, f"solver.{k}")

    out = cfg["output"]
    _check_keys(out, {"format", "path", "digits", "figures"}, "output")
    if out["format"] not in ("csv", "json"):
        raise ConfigError(f"output.format: must be csv or json, got {out['format']!r}")
    if isinstance(out["digits"], bool) or not isinstance(out["digits"], int) \
            or not 1 <= out["digits"] <= 17:
        raise ConfigError(f"output.digits: must be an integer in [1, 17], got {out['digits']!r}")

    sw = cfg["sweep"]
    _check_keys(sw, {"outputs", "limit", "window", "expected_order"}, "sweep")
    for i, o in enumerate(sw["outputs"]):
        if o not in OUTPUTS:
            raise ConfigError(f"sweep.outputs[{i}]: must be one of {OUTPUTS}, got {o!r}")
    _window(sw["window"], "sweep.window")

    lim = cfg["limit"]
    _check_keys(lim, set(default_config()["limit"]), "limit")
    _window(lim["window"], "limit.window")
    if command == "limit" and lim["regime"] is None and (lim["trend_a"] is None
                                                         or lim["trend_b"] is None):
        raise ConfigError("limit.regime: give a regime key or trend_a and trend_b")

    if cfg["golden"] not in (None, "appendix"):
        raise ConfigError(f"golden: only 'appendix' is available, got {cfg['golden']!r}")
    if isinstance(cfg["jobs"], bool) or not isinstance(cfg["jobs"], int) or cfg["jobs"] < 1:
        raise ConfigError(f"jobs: must be a positive integer, got {cfg['jobs']!r}")
    return cfg


def _window(w, path):
    if not isinstance(w, list) or len(w) != 2 or not all(isinstance(x, (int, float)) for x in w) \
            or not w[1] > w[0]:
        raise ConfigError(f"{path}: must be [lo, hi] with lo < hi")


# --- argument parsing -------------------------------------------------------------

def _parse_param(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    return k, float(v)


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("general")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--golden", choices=("appendix",), help="run the reference speed table")
    g.add_argument("--seedless", action="store_true", help="reserved; no RNG is used")
    g.add_argument("--jobs", type=int, help="worker processes for sweeps and tables")
    g.add_argument("--dump-config", action="store_true", help="print the merged config and exit")
    g.add_argument("--figures", metavar="DIR", help="also write PNG figures into DIR")
    g.add_argument("--digits", type=int, help="significant digits in output")
    r = common.add_argument_group("reaction")
    r.add_argument("--reaction", choices=sorted(CATALOG), help="catalog reaction")
    r.add_argument("--param", action="append", type=_parse_param, default=[],
                   metavar="KEY=VALUE", help="catalog parameter (repeatable)")
    r.add_argument("--coeffs", type=_float_list, help="polynomial coefficients c0,c1,...")
    m = common.add_argument_group("model")
    m.add_argument("--a", type=float)
    m.add_argument("--b", type=float)
    m.add_argument("--coupling", choices=AXES)
    m.add_argument("--value", type=float, help="single coupling value")
    m.add_argument("--values", type=_float_list, help="sweep values v1,v2,...")
    m.add_argument("--linear", action="store_true", help="linear diffusion v'' instead")
    s = common.add_argument_group("solver")
    for name in ("ctol", "rtol", "atol", "y_floor", "v_floor", "delta_start"):
        s.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    lg = common.add_argument_group("limits and sweeps")
    lg.add_argument("--regime", help="limit regime key")
    lg.add_argument("--trend-a", choices=("zero", "bounded", "infinity"))
    lg.add_argument("--trend-b", choices=("zero", "bounded", "infinity"))
    lg.add_argument("--ratio-trend", choices=("zero", "bounded", "infinity"))
    lg.add_argument("--b2a-trend", choices=("zero", "bounded", "infinity"))
    lg.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
    lg.add_argument("--outputs", type=lambda t: [x for x in t.split(",") if x],
                    help="sweep outputs, comma-separated")
    lg.add_argument("--limit", dest="sweep_limit", help="limit regime for sweep distances")
    lg.add_argument("--expected-order", type=float)

    parser = argparse.ArgumentParser(prog="bornfront",
                                     description="Critical speeds and front profiles for "
                                                 "reaction-diffusion with saturating flux.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _flag_overrides(args) -> dict:
    over: dict = {}

    def put(path, value):
        if value is None:
            return
        node = over
        for k in path[:-1]:
            node = node.setdefault(k, {})
        node[path[-1]] = value

    if args.reaction:
        over["reaction"] = {"catalog": args.reaction, "params": dict(args.param)}
    elif args.coeffs:
        over["reaction"] = {"coeffs": args.coeffs}
    elif args.param:
        over["reaction_params"] = dict(args.param)
    put(("model", "a"), args.a)
    put(("model", "b"), args.b)
    put(("model", "coupling"), args.coupling)
    put(("model", "value"), args.value)
    put(("model", "values"), args.values)
    if args.linear:
        put(("model", "linear"), True)
    for name in ("ctol", "rtol", "atol", "y_floor", "v_floor", "delta_start"):
        put(("solver", name), getattr(args, name))
    put(("output", "format"), args.format)
    put(("output", "path"), args.out)
    put(("output", "figures"), args.figures)
    put(("output", "digits"), args.digits)
    put(("limit", "regime"), args.regime)
    put(("limit", "trend_a"), args.trend_a)
    put(("limit", "trend_b"), args.trend_b)
    put(("limit", "ratio_trend"), args.ratio_trend)
    put(("limit", "b2_over_a_trend"), args.b2a_trend)
    if args.window:
        put(("limit", "window"), list(args.window))
        put(("sweep", "window"), list(args.window))
    put(("sweep", "outputs"), args.outputs)
    put(("sweep", "limit"), args.sweep_limit)
    put(("sweep", "expected_order"), args.expected_order)
    put(("golden",), args.golden)
    put(("jobs",), args.jobs)
    if args.seedless:
        over["seedless"] = True
    return over


def load_config(args) -> dict:
    """Defaults, then the config file, then flags."""
    cfg = default_config()
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(user, dict):
            raise ConfigError("config: top level must be an object")
        cfg = _merge(cfg, user)
    over = _flag_overrides(args)
    extra_params = over.pop("reaction_params", None)
    cfg = _merge(cfg, over)
    if extra_params:
        if not isinstance(cfg.get("reaction"), dict) or "catalog" not in cfg["reaction"]:
            raise ConfigError("reaction.params: --param needs a catalog reaction")
        cfg["reaction"].setdefault("params", {}).update(extra_params)
    # a single coupling value fixes (a, b)
    model = cfg["model"]
    if model.get("coupling") not in (None, "custom") and model.get("value") is not None \
            and args.command != "sweep":
        try:
            p = coupled_params(model["coupling"], float(model["value"]),
                               model.get("fixed_a", 1.0), model.get("fixed_b", 1.0))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"model.value: {exc}") from None
        model["a"], model["b"] = p.a, p.b
    return validate_config(cfg, args.command)


# --- output -----------------------------------------------------------------------

def _csv(header, rows, digits) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(_py(x), digits) for x in row])
    return buf.getvalue()


def _py(x):
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _json(obj, digits) -> str:
    def clean(o):
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        o = _py(o)
        if isinstance(o, float):
            if not math.isfinite(o):
                return str(o)
            return round_value(o, digits)
        return o

    return json.dumps(clean(obj), sort_keys=True, indent=1) + "\n"


def _emit(text: str, cfg: dict):
    path = cfg["output"]["path"]
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _figure_path(cfg, name):
    d = cfg["output"]["figures"]
    return None if not d else os.path.join(d, name)


# --- commands ---------------------------------------------------------------------

def _calc(cfg):
    return classify(reaction_from_config(cfg["reaction"]))


def _params(cfg):
    if cfg["model"].get("linear"):
        return None
    return ModelParams(float(cfg["model"]["a"]), float(cfg["model"]["b"]))


def _controls(cfg) -> Controls:
    return Controls(**cfg["solver"])


def _bound_kind(name):
    if name.startswith("lower"):
        return "lower"
    if name.startswith("upper"):
        return "upper"
    return "estimate" if name.startswith("estimate") else "constant"


def cmd_bounds(cfg) -> int:
    calc = _calc(cfg)
    p = _params(cfg)
    if p is None:
        raise ConfigError("model.linear: bounds are defined for the saturating operator only")
    rec = compute_bounds(calc, p).to_record()
    rows = [(k, _bound_kind(k), v) for k, v in rec.items() if v is not None]
    digits = cfg["output"]["digits"]
    if cfg["output"]["format"] == "json":
        _emit(_json({"a": p.a, "b": p.b, "reaction": calc.name,
                     "bounds": {k: v for k, _, v in rows}}, digits), cfg)
    else:
        _emit(_csv(("bound", "kind", "value"), rows, digits), cfg)
    return EXIT_OK


def _speed_record(res, p):
    rec = {"a": None if p is None else p.a, "b": None if p is None else p.b}
    rec.update(res.to_record())
    rec["c_star_rounded"] = f"{res.c_star:.3f}"
    return rec


def cmd_speed(cfg) -> int:
    if cfg["golden"] == "appendix":
        return _golden(cfg)
    calc = _calc(cfg)
    p = _params(cfg)
    res = compute_speed(calc, p, _controls(cfg), linear=p is None)
    rec = _speed_record(res, p)
    digits = cfg["output"]["digits"]
    if cfg["output"]["format"] == "json":
        rec["bracket_history"] = res.bracket_history
        _emit(_json(rec, digits), cfg)
    else:
        _emit(_csv(list(rec), [list(rec.values())], digits), cfg)
    fig = _figure_path(cfg, "reduction.png")
    if fig:
        from .plotting import plot_reduction
        from .profile import critical_reduction
        plot_reduction(critical_reduction(calc, p, res.c_star, _controls(cfg), p is None), fig)
    return EXIT_OK


def _golden(cfg) -> int:
    outcomes = run_golden(_controls(cfg), include_extra=False, jobs=cfg["jobs"])
    recs = [o.to_record() for o in outcomes]
    digits = cfg["output"]["digits"]
    if cfg["output"]["format"] == "json":
        _emit(_json({"cells": recs}, digits), cfg)
    else:
        _emit(_csv(list(recs[0]), [list(r.values()) for r in recs], digits), cfg)
    bad = [o for o in outcomes if not o.passed]
    sys.stderr.write(f"{len(outcomes) - len(bad)}/{len(outcomes)} cells within tolerance\n")
    for o in bad:
        note = " (reference value below a proven lower bound)" if o.expected_below_bound else ""
        sys.stderr.write(f"deviation: {o.cell.row} {o.cell.axis}={o.cell.value:g} "
                         f"expected {o.cell.expected} got "
                         f"{'error' if o.c_star is None else format(o.c_star, '.4f')}{note}\n")
    return EXIT_DEVIATION if bad else EXIT_OK


def cmd_profile(cfg) -> int:
    calc = _calc(cfg)
    p = _params(cfg)
    res, prof = front_profile(calc, p, _controls(cfg), linear=p is None)
    digits = cfg["output"]["digits"]
    if cfg["output"]["format"] == "json":
        body = _speed_record(res, p)
        body.update({"V0": prof.V0, "z": prof.z.tolist(), "v": prof.v.tolist(),
                     "dv": prof.dv.tolist(), "max_slope": prof.max_slope})
        _emit(_json(body, digits), cfg)
    else:
        _emit(_csv(("z", "v", "dv"), zip(prof.z, prof.v, prof.dv), digits), cfg)
    fig = _figure_path(cfg, "profile.png")
    if fig:
        from .plotting import plot_profiles
        plot_profiles(prof, fig)
    return EXIT_OK


def _regime(cfg):
    lim = cfg["limit"]
    if lim["regime"] is not None:
        return lim["regime"]
    try:
        return classify_regime(lim["trend_a"], lim["trend_b"], lim["ratio_trend"],
                               lim["b2_over_a_trend"])
    except BornFrontError as exc:
        raise ConfigError(f"limit: {exc}") from None


def cmd_limit(cfg) -> int:
    calc = _calc(cfg)
    regime = _regime(cfg)
    key = getattr(regime, "key", regime)
    ratio = float(cfg["model"]["b"]) / float(cfg["model"]["a"])
    controls = _controls(cfg)
    limit = make_limit_profile(calc, regime, ratio=ratio, controls=controls)
    speed = limit_speed_prediction(calc, regime, ratio=ratio, controls=controls)
    lo, hi = cfg["limit"]["window"]
    z = np.linspace(lo, hi, int(cfg["limit"]["n"]))
    v = np.asarray(limit(z), dtype=float)
    scalars = {k: val for k, val in limit.parameters.items()
               if isinstance(_py(val), (int, float)) and not isinstance(_py(val), bool)}
    digits = cfg["output"]["digits"]
    if cfg["output"]["format"] == "json":
        _emit(_json({"regime": key, "kind": limit.kind, "parameters": scalars,
                     "speed": dataclasses.asdict(speed), "z": z.tolist(), "v": v.tolist()},
                    digits), cfg)
    else:
        keys = sorted(scalars)
        rows = ([zi, vi] + [scalars[k] for k in keys] for zi, vi in zip(z, v))
        _emit(_csv(["z", "v"] + keys, rows, digits), cfg)
    fig = _figure_path(cfg, "limit.png")
    if fig:
        from .plotting import plot_profiles
        try:
            _, prof = front_profile(calc, _params(cfg), controls)
            plot_profiles(prof, fig, limit=limit, window=(lo, hi))
        except BornFrontError:
            pass
    return EXIT_OK


def cmd_sweep(cfg) -> int:
    model, sw = cfg["model"], cfg["sweep"]
    try:
        plan = SweepPlan(reaction_from_config(cfg["reaction"]), model["coupling"],
                         values=model.get("values") or (), outputs=sw["outputs"],
                         fixed_a=model.get("fixed_a", 1.0), fixed_b=model.get("fixed_b", 1.0),
                         pairs=model.get("pairs") or (), limit=sw["limit"],
                         window=tuple(sw["window"]))
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    report = run_sweep(plan, _controls(cfg), jobs=cfg["jobs"],
                       expected_order=sw["expected_order"])
    digits = cfg["output"]["digits"]
    if cfg["output"]["format"] == "json":
        _emit(report.to_json(digits) + "\n", cfg)
    else:
        _emit(report.to_csv(digits), cfg)
    if report.fitted_order is not None:
        f = report.fitted_order
        sys.stderr.write(f"fitted order {f.slope:.4f} +- {f.stderr:.2g} over {f.n} points\n")
    fig = _figure_path(cfg, "sweep.png")
    if fig:
        from .plotting import plot_sweep
        plot_sweep(report, fig)
    failed = [r for r in report.rows if r.error]
    for r in failed:
        sys.stderr.write(f"row {r.value:g}: {r.error}\n")
    return EXIT_SOLVER if failed and len(failed) == len(report.rows) else EXIT_OK


def cmd_validate(cfg) -> int:
    from .validate import run_validation
    report = run_validation(_controls(cfg), jobs=cfg["jobs"])
    digits = cfg["output"]["digits"]
    if cfg["output"]["format"] == "json":
        _emit(_json({"passed": report.passed,
                     "checks": [dataclasses.asdict(c) for c in report.checks]}, digits), cfg)
    else:
        _emit(_csv(("check", "passed", "value", "threshold", "detail"),
                   ([c.name, c.passed, c.value, c.threshold, c.detail] for c in report.checks),
                   digits), cfg)
    for line in report.lines():
        sys.stderr.write(line + "\n")
    return EXIT_OK if report.passed else EXIT_DEVIATION


HANDLERS = {"bounds": cmd_bounds, "speed": cmd_speed, "profile": cmd_profile,
            "limit": cmd_limit, "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.dump_config:
            sys.stdout.write(json.dumps(cfg, sort_keys=True, indent=1) + "\n")
            return EXIT_OK
        return HANDLERS[args.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except BornFrontError as exc:
        sys.stderr.write(f"solver error: {type(exc).__name__}: {exc}\n")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
