"""Command-line front end: ``essential``, ``count``, ``sweep``, ``potential-dump``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical
non-convergence or an infeasible truncation (the CSV row is still printed).
"""

from __future__ import annotations

import argparse
import configparser
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, WarpspecError
from .geometry import MetricParams, neck_length
from .lab import (
    CountingReport,
    CrossSectionModel,
    SpectralWindow,
    counting_function,
    cross_section,
    sweep,
)
from .reduction import essential_interval, reduced_potential
from .solver import BC

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
CSV_HEADER = "eps,p,x,R,sigma,count,prediction,remainder,r0,flags"
FAILURE_FLAGS = ("unconverged", "tie", "r0_infeasible")


class ConfigError(WarpspecError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------

def fmt(v: float) -> str:
    """Shortest round-trip text of ``v`` rounded to 12 significant digits."""
    return repr(float(f"{float(v):.12g}"))


def format_row(rep: CountingReport) -> str:
    pred = fmt(rep.prediction)
    # computed from the printed prediction so the row re-derives it exactly
    rem = repr(rep.count - float(pred))
    return ",".join([
        fmt(rep.eps), str(rep.p), fmt(rep.x), fmt(rep.R), fmt(rep.sigma), str(rep.count),
        pred, rem, fmt(rep.r0), ";".join(rep.flags),
    ])


def render_csv(reports) -> str:
    return "\n".join([CSV_HEADER, *(format_row(r) for r in reports)]) + "\n"


def _failed(reports) -> bool:
    return any(f in FAILURE_FLAGS or f.startswith("error:") for r in reports for f in r.flags)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    params: MetricParams
    model: CrossSectionModel
    degrees: list[int]
    x_values: list[float]
    eps_values: list[float]
    options: dict = field(default_factory=dict)
    output: str | None = None
    jobs: int = 1


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return i
        elif current == section and key is not None:
            if re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
                return i
    return None


def _pairs(raw: str, cast) -> dict[int, object]:
    out = {}
    for item in filter(None, (t.strip() for t in raw.split(","))):
        k, _, v = item.partition(":")
        if not _:
            raise ValueError(f"expected 'degree:value', got {item!r}")
        out[int(k)] = cast(v.strip())
    return out


def _float_list(raw: str) -> list[float]:
    vals = [float(t) for t in raw.replace(",", " ").split()]
    if not vals:
        raise ValueError("list is empty")
    return vals


def _inline_model(sec, n: int) -> CrossSectionModel:
    betti = _pairs(sec.get("betti", ""), int)
    nu = _pairs(sec.get("nu", ""), float)
    modes = {}
    for key in sec:
        if key.startswith("modes."):
            p = int(key.split(".", 1)[1])
            pairs = []
            for item in filter(None, (t.strip() for t in sec[key].split(","))):
                mu, _, mult = item.partition(":")
                pairs.append((float(mu), int(mult) if _ else 1))
            modes[p] = tuple(pairs)
    return CrossSectionModel(sec.get("name", "inline"), n, betti, nu, modes)


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse an INI-style experiment file; errors name the line and field."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        first = str(exc).splitlines()[0]
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"{path}: line {line}: {first}" if line else f"{path}: {first}") from None

    def fail(section, key, msg):
        line = _line_of(text, section, key)
        where = f"line {line}, " if line else ""
        label = f"[{section}] {key}" if key else f"[{section}]"
        raise ConfigError(f"{path}: {where}{label}: {msg}")

    def get(section, key, cast, default=None, required=False):
        if not cp.has_section(section):
            if required:
                fail(section, None, "missing section")
            return default
        if key not in cp[section]:
            if required:
                fail(section, key, "missing field")
            return default
        raw = cp[section][key]
        try:
            return cast(raw)
        except (ValueError, KeyError) as exc:
            fail(section, key, f"invalid value {raw!r} ({exc})")

    a = get("metric", "a", float, required=True)
    b = get("metric", "b", float, 1.0)
    c1 = get("metric", "c1", float, 1.0)
    c2 = get("metric", "c2", float, 1.0)
    name = get("cross_section", "name", str, "circle")
    inline = cp.has_section("cross_section") and "betti" in cp["cross_section"]
    n = get("metric", "n", int, None)
    try:
        if inline:
            if n is None:
                fail("metric", "n", "required with an inline cross-section table")
            model = _inline_model(cp["cross_section"], n)
        else:
            model = cross_section(name)
    except (DomainError, ValueError) as exc:
        fail("cross_section", "betti" if inline else "name", str(exc))
    if n is None:
        n = model.n
    if n != model.n:
        fail("metric", "n", f"n = {n} does not match cross-section dimension {model.n}")
    try:
        params = MetricParams(a, b, c1, c2, 1.0, n)
    except DomainError as exc:
        fail("metric", None, str(exc))

    degrees = get("sweep", "degrees", lambda r: [int(t) for t in r.replace(",", " ").split()],
                  required=True)
    x_values = get("sweep", "x_values", _float_list, required=True)
    eps_values = get("sweep", "eps_values", _float_list, required=True)
    if not degrees:
        fail("sweep", "degrees", "list is empty")
    if any(not 0 <= p <= n for p in degrees):
        fail("sweep", "degrees", f"degrees must lie in [0, {n}]")
    if any(not (x > 0.0 and math.isfinite(x)) for x in x_values):
        fail("sweep", "x_values", "values must be positive and finite")
    if any(not (e > 0.0 and math.isfinite(e)) for e in eps_values):
        fail("sweep", "eps_values", "values must be positive and finite")

    options = {
        "bc_small": get("solver", "bc_left", BC.parse, BC.NEUMANN),
        "bc_junction": get("solver", "bc_right", BC.parse, BC.DIRICHLET),
        "method": get("solver", "method", _method, "auto"),
        "tol": get("solver", "tolerance", float, 1e-6),
        "grid": get("solver", "grid", int, 0),
        "neck": get("solver", "neck", _neck, "full"),
        "include_transverse": get("solver", "transverse", _bool, False),
    }
    if not options["tol"] > 0.0:
        fail("solver", "tolerance", "must be positive")
    if options["grid"] < 0:
        fail("solver", "grid", "must be nonnegative")
    jobs = get("solver", "jobs", int, 1)
    output = get("output", "path", str, None)
    return ExperimentConfig(params, model, degrees, x_values, eps_values, options, output,
                            max(1, jobs))


def _method(raw: str) -> str:
    v = raw.strip().lower()
    if v not in ("auto", "sturm", "prufer", "phase"):
        raise ValueError("expected auto, sturm, prufer or phase")
    return v


def _neck(raw: str) -> str:
    v = raw.strip().lower()
    if v not in ("full", "truncated"):
        raise ValueError("expected full or truncated")
    return v


def _bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _metric(args, eps: float = 1.0) -> MetricParams:
    return MetricParams(args.a, args.b, args.c1, args.c2, eps, args.n)


def cmd_essential(args, out=None) -> int:
    out = out or sys.stdout
    sigma, _ = essential_interval(_metric(args), args.p)
    s = f"{sigma:.12g}"
    out.write(f"sigma={s} interval=[{s},inf)\n")
    return EXIT_OK


def cmd_count(args, out=None) -> int:
    out = out or sys.stdout
    model = cross_section(args.cross_section)
    if args.n is None:
        args.n = model.n
    if args.n != model.n:
        raise DomainError(f"--n {args.n} does not match cross-section dimension {model.n}")
    params = _metric(args, args.eps)
    window = SpectralWindow.at_bottom(params, args.p, args.x)
    rep = counting_function(model, params, args.p, window, bc_small=args.bc_small,
                            bc_junction=args.bc_junction, neck=args.neck, method=args.method,
                            include_transverse=args.transverse, tol=args.tol, grid=args.grid)
    out.write(render_csv([rep]))
    return EXIT_NUMERIC if _failed([rep]) else EXIT_OK


def run_sweep(cfg: ExperimentConfig) -> list[CountingReport]:
    return sweep(cfg.model, cfg.params, cfg.degrees, cfg.x_values, cfg.eps_values,
                 jobs=cfg.jobs, **cfg.options)


def cmd_sweep(args, out=None) -> int:
    out = out or sys.stdout
    cfg = load_config(args.config)
    if args.jobs is not None:
        cfg.jobs = max(1, args.jobs)
    reports = run_sweep(cfg)
    text = render_csv(reports)
    target = args.output or cfg.output
    if target and target != "-":
        Path(target).write_text(text)
    else:
        out.write(text)
    return EXIT_NUMERIC if _failed(reports) else EXIT_OK


def cmd_potential_dump(args, out=None) -> int:
    out = out or sys.stdout
    params = _metric(args, args.eps)
    if args.points < 1:
        raise DomainError("--points must be positive")
    R = neck_length(params)
    tau = np.linspace(0.0, R, args.points + 1)
    tau[-1] = R
    r = np.atleast_1d(reduced_potential(params, args.p, tau))
    lines = ["tau,r"] + [f"{fmt(t)},{fmt(v)}" for t, v in zip(tau, r)]
    out.write("\n".join(lines) + "\n")
    return EXIT_OK


def _add_metric(p: argparse.ArgumentParser, n_required: bool = True) -> None:
    p.add_argument("--a", type=float, required=True, help="exponent a <= -1")
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--n", type=int, required=n_required, default=None,
                   help="cross-section dimension")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="warpspec", description="Spectra of degenerating warped necks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("essential", help="bottom of the essential spectrum")
    _add_metric(p)
    p.add_argument("--p", type=int, required=True, help="form degree")
    p.set_defaults(func=cmd_essential)

    p = sub.add_parser("count", help="count eigenvalues in [sigma, sigma + x^2)")
    _add_metric(p, n_required=False)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--cross-section", default="circle")
    p.add_argument("--bc-small", default="neumann", help="condition at tau = 0")
    p.add_argument("--bc-junction", default="dirichlet", help="condition at the compact piece")
    p.add_argument("--neck", choices=("full", "truncated"), default="full")
    p.add_argument("--method", choices=("auto", "sturm", "prufer", "phase"), default="auto")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--grid", type=int, default=0, help="minimum finite-difference grid")
    p.add_argument("--transverse", action="store_true",
                   help="add transverse-mode counts on the truncated neck")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("sweep", help="run a sweep described by a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output", default=None, help="CSV path ('-' for stdout)")
    p.add_argument("-j", "--jobs", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("potential-dump", help="tabulate r(tau) on [0, R]")
    _add_metric(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_potential_dump)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"warpspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WarpspecError as exc:
        print(f"warpspec: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
