"""Command-line front end.

Every experiment is a subcommand. Settings come from an optional JSON config
file (``--config``) and are overridden by flags. Output is a CSV table with a
mandatory header, or a JSON array of row objects.

Exit codes: 0 success, 2 configuration error, 3 degenerate computation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

from . import detector, experiments
from .correlator import NORMALIZATIONS, CoincidenceResult, detector_intensities, normalize
from .errors import ConfigurationError, DegenerateError, DomainError
from .sources import SpreadSpec

SUBCOMMANDS = ("clauser", "ghz", "ghz-table", "ghz-skew", "franson", "ghosh-mandel", "brendel", "mc")
ALIASES = {"clauser-aspect": "clauser"}
MC_PRESETS = ("clauser", "ghz", "franson", "ghosh-mandel", "brendel")

# swept/fixed parameters per experiment, with defaults in radians
PARAMS: dict[str, dict[str, float]] = {
    "clauser": {"theta1": 0.0, "theta2": math.pi / 2},
    "ghz": dict(zip(("theta1", "theta2", "theta3", "theta4"), experiments.GHZ_PEAK_REGIME)),
    "ghz-table": {},
    "ghz-skew": {"epsilon": 0.0},
    "franson": {"phi": 0.0, "psi": 0.0},
    "ghosh-mandel": {"phi": 0.0, "psi": 0.0},
    "brendel": {"phi": 0.0, "psi": 0.0},
}

DEFAULT_SWEEPS = {
    "clauser": ("theta2", 0.0, math.pi, 0.01),
    "ghz-skew": ("epsilon", 0.0, math.pi / 2, math.pi / 200),
    "franson": ("phi", 0.0, 2 * math.pi, math.pi / 100),
    "ghosh-mandel": ("phi", 0.0, 2 * math.pi, math.pi / 100),
    "brendel": ("phi", 0.0, 40 * math.pi, math.pi / 20),
}

_PI_LITERAL = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi\s*$")


class ConfigError(ConfigurationError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line

    def __str__(self) -> str:
        msg = super().__str__()
        return f"config line {self.line}: {msg}" if self.line else msg


def parse_angle(value: Any) -> float:
    """Radians from a number, a numeric string, or a ``<x>pi`` literal such as ``0.25pi``."""
    if isinstance(value, bool):
        raise ValueError(f"not an angle: {value!r}")
    if isinstance(value, (int, float)):
        x = float(value)
    else:
        text = str(value)
        m = _PI_LITERAL.match(text)
        if m:
            x = float(m.group(1) or 1.0) * math.pi
        else:
            x = float(text)
    if not math.isfinite(x):
        raise ValueError(f"angle must be finite: {value!r}")
    return x


@dataclass
class Sweep:
    param: str
    start: float
    stop: float
    step: float

    def grid(self) -> list[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(n)]


@dataclass
class RunConfig:
    experiment: str
    settings: dict[str, float] = field(default_factory=dict)
    sweep: Sweep | None = None
    normalization: str = "max"
    crosstalk: bool = True
    skew_mode: str = "same"
    s_max: float = 0.05
    nodes: int = 201
    preset: str = "clauser"
    trials: int = 100_000
    seed: int = 0
    window: float | None = None
    out: str | None = None
    format: str = "csv"
    pi_units: bool = False
    workers: int = 1

    @property
    def params_experiment(self) -> str:
        return self.preset if self.experiment == "mc" else self.experiment


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    pattern = re.compile(r'"%s"\s*:' % re.escape(key))
    for i, line in enumerate(text.splitlines(), 1):
        if pattern.search(line):
            return i
    return None


_TOP_KEYS = {
    "experiment", "settings", "sweep", "normalization", "crosstalk", "skew_mode",
    "spread", "mc", "output", "workers",
}


def parse_config(document: str | dict, overrides: dict | None = None) -> RunConfig:
    """Validate a JSON config document (text or already-decoded) into a RunConfig.

    ``overrides`` holds flag values, in the same nested layout, that replace
    document values.
    """
    text = document if isinstance(document, str) else None
    if text is not None:
        try:
            doc = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc.msg} (column {exc.colno})", exc.lineno)
    else:
        doc = dict(document)
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", 1)

    def where(key):
        return _line_of(text, key)

    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key {key!r}", where(key))

    doc = _merge(doc, overrides or {})

    exp = doc.get("experiment")
    if exp is None:
        raise ConfigError("no experiment given (use a subcommand or set \"experiment\" in --config)")
    exp = ALIASES.get(exp, exp)
    if exp not in SUBCOMMANDS:
        raise ConfigError(
            f"unknown experiment {doc.get('experiment')!r}; expected one of {', '.join(SUBCOMMANDS)}",
            where("experiment"),
        )
    cfg = RunConfig(experiment=exp)

    norm = doc.get("normalization", "max")
    if norm == "max-of-sweep":
        norm = "max"
    if norm not in NORMALIZATIONS:
        raise ConfigError(f"unknown normalization {norm!r}", where("normalization"))
    cfg.normalization = norm

    crosstalk = doc.get("crosstalk", True)
    if isinstance(crosstalk, str):
        if crosstalk not in ("on", "off"):
            raise ConfigError(f"crosstalk must be on/off, got {crosstalk!r}", where("crosstalk"))
        crosstalk = crosstalk == "on"
    if not isinstance(crosstalk, bool):
        raise ConfigError(f"crosstalk must be a boolean, got {crosstalk!r}", where("crosstalk"))
    cfg.crosstalk = crosstalk

    cfg.skew_mode = doc.get("skew_mode", "same")
    if cfg.skew_mode not in ("same", "opposite"):
        raise ConfigError(f"skew_mode must be same/opposite, got {cfg.skew_mode!r}", where("skew_mode"))

    spread = _section(doc, "spread", where)
    try:
        cfg.s_max = float(spread.get("s_max", 0.05))
        cfg.nodes = _int(spread.get("nodes", 201))
        SpreadSpec(cfg.s_max, cfg.nodes)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad spread: {exc}", where("spread"))

    mc = _section(doc, "mc", where)
    preset = ALIASES.get(mc.get("preset", "clauser"), mc.get("preset", "clauser"))
    if preset not in MC_PRESETS:
        raise ConfigError(f"unknown mc preset {preset!r}", where("preset") or where("mc"))
    cfg.preset = preset
    try:
        cfg.trials = _int(mc.get("trials", cfg.trials))
        cfg.seed = _int(mc.get("seed", 0))
        window = mc.get("window")
        cfg.window = None if window is None else float(window)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad mc block: {exc}", where("mc"))
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1", where("trials"))
    if not 0 <= cfg.seed <= detector.SEED_MAX:
        raise ConfigError("seed must be a 64-bit unsigned integer", where("seed"))
    if cfg.window is not None and not cfg.window > 0:
        raise ConfigError("window must be positive", where("window"))

    output = _section(doc, "output", where)
    cfg.out = output.get("path")
    cfg.format = output.get("format", "csv")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}", where("format"))
    cfg.pi_units = bool(output.get("pi_units", False))
    try:
        cfg.workers = _int(doc.get("workers", 1))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad workers: {exc}", where("workers"))
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1", where("workers"))

    allowed = PARAMS[cfg.params_experiment]
    cfg.settings = dict(allowed)
    for name, value in _section(doc, "settings", where).items():
        if name not in allowed:
            raise ConfigError(f"{exp} has no parameter {name!r}", where(name))
        try:
            cfg.settings[name] = parse_angle(value)
        except ValueError as exc:
            raise ConfigError(str(exc), where(name))

    sweep = doc.get("sweep")
    if sweep is None:
        default = DEFAULT_SWEEPS.get(cfg.params_experiment)
        cfg.sweep = Sweep(*default) if default and exp != "mc" else None
    else:
        cfg.sweep = _parse_sweep(sweep, allowed, where)
    return cfg


def _int(value: Any) -> int:
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise ValueError(f"expected an integer, got {value!r}")
    return int(value)


def _section(doc: dict, key: str, where) -> dict:
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{key!r} must be an object", where(key))
    return value


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for k, v in overrides.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_sweep(sweep: Any, allowed: dict, where) -> Sweep:
    line = where("sweep")
    if not isinstance(sweep, dict) or set(sweep) != {"param", "start", "stop", "step"}:
        raise ConfigError("sweep needs exactly param, start, stop, step", line)
    if sweep["param"] not in allowed:
        raise ConfigError(f"cannot sweep {sweep['param']!r}; choose from {sorted(allowed)}", line)
    try:
        start, stop, step = (parse_angle(sweep[k]) for k in ("start", "stop", "step"))
    except ValueError as exc:
        raise ConfigError(f"malformed sweep: {exc}", line)
    if not step > 0:
        raise ConfigError("sweep step must be > 0", line)
    if stop < start:
        raise ConfigError("sweep stop must be >= start", line)
    return Sweep(sweep["param"], start, stop, step)


# evaluation

def _points(cfg: RunConfig) -> list[dict[str, float]]:
    if cfg.sweep is None:
        return [dict(cfg.settings)]
    return [{**cfg.settings, cfg.sweep.param: x} for x in cfg.sweep.grid()]


def _evaluator(cfg: RunConfig) -> Callable[[dict[str, float]], CoincidenceResult]:
    exp = cfg.experiment
    if exp == "clauser":
        return lambda p: experiments.clauser_aspect(p["theta1"], p["theta2"])
    if exp == "ghz":
        return lambda p: experiments.ghz_rate(_thetas(p), cfg.crosstalk)
    if exp == "ghz-skew":
        return lambda p: experiments.ghz_rate(
            experiments.ghz_skew_settings(p["epsilon"], cfg.skew_mode), cfg.crosstalk
        )
    if exp in ("franson", "ghosh-mandel"):
        fn = experiments.franson if exp == "franson" else experiments.ghosh_mandel
        return lambda p: fn(p["phi"], p["psi"])
    if exp == "brendel":
        spec = SpreadSpec(cfg.s_max, cfg.nodes)
        return lambda p: experiments.brendel(p["phi"], p["psi"], spec)
    raise ConfigurationError(f"no evaluator for {exp!r}")


def _thetas(p: dict[str, float]) -> tuple[float, ...]:
    return tuple(p[f"theta{i}"] for i in range(1, 5))


def _map(fn, items, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


@dataclass
class OutputTable:
    header: list[str]
    rows: list[list[float]]


def _param_columns(names: list[str], pi_units: bool) -> list[str]:
    cols = []
    for n in names:
        cols.append(f"{n}_rad")
        if pi_units:
            cols.append(f"{n}_pi")
    return cols


def _param_values(point: dict[str, float], names: list[str], pi_units: bool) -> list[float]:
    vals = []
    for n in names:
        vals.append(point[n])
        if pi_units:
            vals.append(point[n] / math.pi)
    return vals


def run(cfg: RunConfig) -> OutputTable:
    """Evaluate a validated config into a grid-ordered table."""
    if cfg.experiment == "mc":
        return _run_mc(cfg)
    if cfg.experiment == "ghz-table":
        rows = experiments.ghz_regime_table(cfg.crosstalk, cfg.normalization)
        names = ["theta1", "theta2", "theta3", "theta4"]
        return OutputTable(
            _param_columns(names, cfg.pi_units) + ["raw", "normalized"],
            [_param_values(r.params, names, cfg.pi_units) + [r.raw, r.normalized] for r in rows],
        )
    points = _points(cfg)
    results = normalize(_map(_evaluator(cfg), points, cfg.workers), cfg.normalization)
    names = list(PARAMS[cfg.experiment])
    return OutputTable(
        _param_columns(names, cfg.pi_units) + ["raw", "normalized"],
        [
            _param_values(p, names, cfg.pi_units) + [r.raw, r.value]
            for p, r in zip(points, results)
        ],
    )


def _run_mc(cfg: RunConfig) -> OutputTable:
    spread = SpreadSpec(cfg.s_max, cfg.nodes) if cfg.preset == "brendel" else None
    p = experiments.preset(cfg.preset, crosstalk=cfg.crosstalk, spread=spread)
    names = list(PARAMS[cfg.preset])
    points = _points(cfg)

    def split(point):
        if cfg.preset in ("clauser", "ghz"):
            return tuple(point[n] for n in names), ()
        return None, (point["phi"], point["psi"])

    def one(indexed):
        k, point = indexed
        theta, args = split(point)
        seed = (cfg.seed + k) & detector.SEED_MAX
        analytic = p.rate(theta, *args)
        est = detector.mc_estimate(p, theta, cfg.trials, seed, *args)
        row = [analytic.raw, est.mean, est.stderr]
        if cfg.window is not None:
            src_args = args + (0.0,) if p.spread is not None else args
            singles = detector_intensities(p.source(*src_args), p.network, p.settings(theta))
            count = detector.simulate_coincidences(
                cfg.trials * analytic.raw,
                [cfg.trials * i for i in singles],
                1.0,
                detector.CoincidenceWindow(cfg.window),
                seed,
            )
            row += [float(count), count / cfg.trials]
        return row

    header = _param_columns(names, cfg.pi_units) + ["analytic_raw", "mc_mean", "mc_stderr"]
    if cfg.window is not None:
        header += ["coinc_count", "coinc_rate"]
    rows = _map(one, list(enumerate(points)), cfg.workers)
    return OutputTable(
        header,
        [_param_values(pt, names, cfg.pi_units) + r for pt, r in zip(points, rows)],
    )


def fmt(x: float) -> str:
    return f"{x:.12g}"


def render(table: OutputTable, format: str) -> str:
    if format == "json":
        objs = [
            {h: float(fmt(v)) for h, v in zip(table.header, row)} for row in table.rows
        ]
        return json.dumps(objs, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


# argument handling

def _angle_arg(text: str) -> float:
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprb", description="Classical coherence-theory models of EPR-B coincidence experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--normalize", choices=("raw", "max", "denominator"))
    common.add_argument("--crosstalk", choices=("on", "off"))
    common.add_argument("--skew-mode", choices=("same", "opposite"))
    common.add_argument("--smax", type=float, help="fractional spread half-width (brendel)")
    common.add_argument("--nodes", type=int, help="Simpson nodes, odd (brendel)")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--window", type=float, help="coincidence window (mc)")
    common.add_argument("--preset", choices=MC_PRESETS, help="experiment sampled by mc")
    common.add_argument("--pi-units", action="store_true", default=None, help="add angle columns in units of pi")
    common.add_argument("--workers", type=int, help="parallel sweep workers")
    common.add_argument(
        "--sweep", nargs=4, metavar=("PARAM", "START", "STOP", "STEP"),
        help="swept parameter and range; angles accept e.g. 0.25pi",
    )
    for name in ("theta1", "theta2", "theta3", "theta4", "phi", "psi", "epsilon"):
        common.add_argument(f"--{name}", type=_angle_arg)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    sub.add_parser("run", parents=[common], help="experiment taken from --config")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    o: dict[str, Any] = {}
    if args.command != "run":
        o["experiment"] = args.command
    if args.normalize:
        o["normalization"] = args.normalize
    if args.crosstalk:
        o["crosstalk"] = args.crosstalk
    if args.skew_mode:
        o["skew_mode"] = args.skew_mode
    if args.workers is not None:
        o["workers"] = args.workers
    spread = {k: v for k, v in (("s_max", args.smax), ("nodes", args.nodes)) if v is not None}
    if spread:
        o["spread"] = spread
    mc = {
        k: v
        for k, v in (("trials", args.trials), ("seed", args.seed), ("window", args.window), ("preset", args.preset))
        if v is not None
    }
    if mc:
        o["mc"] = mc
    output = {k: v for k, v in (("path", args.out), ("format", args.format), ("pi_units", args.pi_units)) if v is not None}
    if output:
        o["output"] = output
    settings = {
        n: getattr(args, n)
        for n in ("theta1", "theta2", "theta3", "theta4", "phi", "psi", "epsilon")
        if getattr(args, n) is not None
    }
    if settings:
        o["settings"] = settings
    if args.sweep:
        param, start, stop, step = args.sweep
        o["sweep"] = {"param": param, "start": start, "stop": stop, "step": step}
    return o


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = "{}"
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}")
            try:
                declared = json.loads(text).get("experiment")
            except (json.JSONDecodeError, AttributeError):
                declared = None
            declared = ALIASES.get(declared, declared)
            if args.command != "run" and declared is not None and declared != args.command:
                raise ConfigError(
                    f"config experiment {declared!r} conflicts with subcommand {args.command!r}",
                    _line_of(text, "experiment"),
                )
        cfg = parse_config(text, _overrides(args))
        output = render(run(cfg), cfg.format)
    except (ConfigurationError, DomainError) as exc:
        print(f"eprb: error: {exc}", file=sys.stderr)
        return 2
    except DegenerateError as exc:
        print(f"eprb: degenerate: {exc}", file=sys.stderr)
        return 3
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(output)
    else:
        sys.stdout.write(output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
