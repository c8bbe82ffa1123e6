"""Command-line front end.

Subcommands ``q``, ``asym``, ``conditions``, ``check`` and ``catalog`` load a
model (catalog name or JSON file), evaluate it over a grid and print CSV or
JSON tables. Exit codes: 0 success, 1 suite failure, 2 model error,
3 convergence failure, 4 precondition failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from . import conditions as cond
from . import verify
from .errors import (
    BracketFailure,
    IntervalValidation,
    ModelError,
    NoConvergence,
    NotTraceNormalized,
)
from .hamiltonian import CATALOG, CATALOG_ALIASES, Hamiltonian, catalog, load_model
from .weyl import weyl_coefficient

EXIT_OK, EXIT_SUITE, EXIT_MODEL, EXIT_CONVERGENCE, EXIT_PRECONDITION = 0, 1, 2, 3, 4

DEFAULT_GRIDS = {"q": "log:1:10000:5", "asym": "log:1:10000:5", "conditions": "log:0.1:1e-8:71"}
CONDITIONS = ("ii", "iii", "iv")


class UsageError(Exception):
    """Bad flag values; reported as a precondition failure."""


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    params: dict = field(default_factory=dict)
    grid: np.ndarray | None = None
    tol: float = 1e-6
    seed: int = 42
    fmt: str = "csv"
    out: str | None = None
    suites: tuple = verify.SUITES
    n_random: int = 100
    conditions: tuple | None = None
    T: float = cond.DEFAULT_T
    jobs: int | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.grid is not None:
            g = np.asarray(self.grid, dtype=float)
            steps = np.diff(g)
            if g.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
                raise UsageError("grid must be strictly monotone")


def parse_grid(desc: str) -> np.ndarray:
    """``log:start:stop:count`` (geometric) or ``lin:start:stop:count``."""
    try:
        kind, a, b, n = desc.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise UsageError(f"bad grid {desc!r}; expected log:start:stop:count") from exc
    if n < 0:
        raise UsageError("grid count must be >= 0")
    if kind == "log":
        if not (a > 0 and b > 0):
            raise UsageError("log grid needs positive endpoints")
        return np.geomspace(a, b, n) if n else np.empty(0)
    if kind == "lin":
        return np.linspace(a, b, n)
    raise UsageError(f"unknown grid kind {kind!r}")


def fmt_num(x) -> str:
    """17 significant digits; infinities as ``inf``."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else fmt_num(x)
    return x


def render_table(columns, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([_json_safe(dict(zip(columns, r))) for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_num(v) for v in r])
    return buf.getvalue()


def load(cfg: RunConfig) -> Hamiltonian:
    if cfg.model is None:
        raise UsageError("--model is required")
    if os.path.exists(cfg.model) or cfg.model.endswith(".json"):
        try:
            return load_model(cfg.model)
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelError(f"cannot read model file {cfg.model}: {exc}") from exc
    try:
        return catalog(cfg.model, **cfg.params)
    except (TypeError, ValueError) as exc:
        raise ModelError(str(exc)) from exc


def _pmap(fn, xs, jobs):
    xs = list(xs)
    if len(xs) <= 1 or jobs == 1:
        return [fn(x) for x in xs]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, xs))


def _sample(H, z, tol):
    try:
        return weyl_coefficient(H, z, tol, strict=True)
    except NoConvergence as exc:
        return exc.sample


# ---------------------------------------------------------------------------
# commands

Q_COLUMNS = ("y", "re_q", "im_q", "abs_q", "ratio", "err", "T_used", "q_inf", "converged")


def cmd_q(cfg: RunConfig):
    """Rows of ``q(iy)`` over the grid; returns ``(columns, rows, exit code)``."""
    H = load(cfg)
    ys = cfg.grid if cfg.grid is not None else parse_grid(DEFAULT_GRIDS["q"])
    samples = _pmap(lambda y: _sample(H, 1j * float(y), cfg.tol), ys, cfg.jobs)
    rows = []
    for y, s in zip(ys, samples):
        q_inf = math.isinf(s.q.real) or math.isinf(s.q.imag)
        if q_inf:
            rows.append((y, math.inf, math.nan, math.inf, math.nan, s.err, s.T_used, True, s.converged))
        else:
            rows.append((y, s.q.real, s.q.imag, abs(s.q), s.ratio, s.err, s.T_used, False, s.converged))
    code = EXIT_OK if all(s.converged for s in samples) else EXIT_CONVERGENCE
    return Q_COLUMNS, rows, code


ASYM_COLUMNS = (
    "r", "t_hat", "A", "L", "d", "abs_q", "im_q", "ratio", "err", "converged",
    "slack_abs_lower", "slack_abs_upper", "slack_im_lower", "slack_im_upper", "slack_ratio",
)


def _asym_row(H, r, tol):
    row = asy.A_L(H, r)
    s = _sample(H, 1j * float(r), tol)
    aq, iq, ratio = abs(s.q), s.q.imag, s.ratio
    slacks = (
        aq - row.A / verify.BAND,
        verify.BAND * row.A - aq,
        iq - row.L / verify.IM_LOWER,
        verify.IM_UPPER * row.A - iq,
        ratio - row.d_at_t_hat / verify.CHAIN,
    )
    return (r, row.t_hat, row.A, row.L, row.d_at_t_hat, aq, iq, ratio, s.err, s.converged, *slacks)


def cmd_asym(cfg: RunConfig):
    H = load(cfg)
    rs = cfg.grid if cfg.grid is not None else parse_grid(DEFAULT_GRIDS["asym"])
    rows = _pmap(lambda r: _asym_row(H, float(r), cfg.tol), rs, cfg.jobs)
    code = EXIT_OK if all(r[9] for r in rows) else EXIT_CONVERGENCE
    return ASYM_COLUMNS, rows, code


def cmd_conditions(cfg: RunConfig) -> tuple[dict, int]:
    """JSON-ready report of the (ii), (iii) and (iv) checks."""
    H = load(cfg)
    grid = cfg.grid if cfg.grid is not None else parse_grid(DEFAULT_GRIDS["conditions"])
    wanted = cfg.conditions or CONDITIONS
    explicit = cfg.conditions is not None
    if "iv" in wanted and explicit and not H.is_trace_normalized:
        raise NotTraceNormalized("condition (iv) needs a trace-normalised model")
    out = {"model": H.to_dict(), "tol": cfg.tol, "seed": cfg.seed, "conditions": []}
    for c in wanted:
        if c == "ii":
            rep = cond.check_condition_ii(H, grid)
        elif c == "iii":
            rep = cond.check_condition_iii(H, T=cfg.T, s_grid=grid)
        elif not H.is_trace_normalized:
            out["conditions"].append({"condition": "iv", "skipped": "model is not trace-normalised"})
            continue
        else:
            rep = cond.check_condition_iv(H, t_grid=grid)
        out["conditions"].append(rep.as_dict())
    return _json_safe(out), EXIT_OK


CONDITION_COLUMNS = ("condition", "series", "along", "verdict", "slope", "last", "max_rebound")


def conditions_table(report: dict):
    rows = []
    for c in report["conditions"]:
        if "skipped" in c:
            rows.append((c["condition"], "", "", "skipped", math.nan, math.nan, math.nan))
            continue
        for s in c["series"]:
            rows.append(
                (c["condition"], s["name"], s.get("along", "t_grid"), s["verdict"],
                 s["slope"], s["last"], s["max_rebound"])
            )
    return CONDITION_COLUMNS, rows


def cmd_check(cfg: RunConfig) -> tuple[dict, int]:
    reports = [
        verify.run_suite(name, n_random=cfg.n_random, tol=cfg.tol, seed=cfg.seed)
        for name in cfg.suites
    ]
    ok = all(r.passed for r in reports)
    out = {"pass": ok, "suites": [r.as_dict() for r in reports]}
    return out, EXIT_OK if ok else EXIT_SUITE


CHECK_COLUMNS = ("suite", "digest", "label", "lhs", "rhs", "slack", "tolerance", "pass")


def check_table(report: dict):
    rows = []
    for s in report["suites"]:
        for c in s["cases"]:
            rows.append((s["suite"], c["digest"], c["label"], c["lhs"], c["rhs"], c["slack"], c["tolerance"], c["pass"]))
    return CHECK_COLUMNS, rows


def cmd_catalog(cfg: RunConfig):
    rows = []
    for name, (desc, _) in CATALOG.items():
        rows.append((name, desc, json.dumps(catalog(name).to_dict(), sort_keys=True)))
    for alias, target in CATALOG_ALIASES.items():
        rows.append((alias, f"alias of {target}", json.dumps(catalog(target).to_dict(), sort_keys=True)))
    return ("name", "description", "json"), rows, EXIT_OK


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="catalog name or path to a JSON model")
    common.add_argument("--params", default="{}", help="JSON object of catalog parameters")
    common.add_argument("--grid", help="log:start:stop:count")
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--jobs", type=int, default=None, help="worker threads for grid evaluation")

    p = argparse.ArgumentParser(prog="canonsys", description="Weyl coefficients of canonical systems.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("q", parents=[common], help="q(iy) over a grid of y")
    sub.add_parser("asym", parents=[common], help="A, L, d and q(ir) over a grid of r")
    pc = sub.add_parser("conditions", parents=[common], help="small-t condition checks")
    pc.add_argument("--conditions", help="comma list out of ii,iii,iv")
    pc.add_argument("--T", type=float, default=cond.DEFAULT_T, help="window for (iii)")
    pk = sub.add_parser("check", parents=[common], help="run verification suites")
    pk.add_argument("--suite", action="append", choices=verify.SUITES, help="repeatable; default all")
    pk.add_argument("--n-random", type=int, default=100)
    sub.add_parser("catalog", parents=[common], help="list builtin families")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    try:
        params = json.loads(ns.params)
    except json.JSONDecodeError as exc:
        raise ModelError(f"--params is not valid JSON: {exc}") from exc
    if not isinstance(params, dict):
        raise ModelError("--params must be a JSON object")
    conds = None
    if getattr(ns, "conditions", None):
        conds = tuple(c.strip() for c in ns.conditions.split(",") if c.strip())
        bad = set(conds) - set(CONDITIONS)
        if bad:
            raise UsageError(f"unknown conditions {sorted(bad)}")
    return RunConfig(
        command=ns.command,
        model=ns.model,
        params=params,
        grid=parse_grid(ns.grid) if ns.grid else None,
        tol=ns.tol,
        seed=ns.seed,
        fmt=ns.fmt,
        out=ns.out,
        suites=tuple(getattr(ns, "suite", None) or verify.SUITES),
        n_random=getattr(ns, "n_random", 100),
        conditions=conds,
        T=getattr(ns, "T", cond.DEFAULT_T),
        jobs=ns.jobs,
    )


def run(cfg: RunConfig) -> tuple[str, int]:
    """Execute ``cfg``; returns the rendered output and the exit code."""
    if cfg.command in ("q", "asym", "catalog"):
        fn = {"q": cmd_q, "asym": cmd_asym, "catalog": cmd_catalog}[cfg.command]
        cols, rows, code = fn(cfg)
        return render_table(cols, rows, cfg.fmt), code
    if cfg.command == "conditions":
        report, code = cmd_conditions(cfg)
        if cfg.fmt == "csv":
            return render_table(*conditions_table(report), "csv"), code
        return json.dumps(report, indent=1, sort_keys=True) + "\n", code
    report, code = cmd_check(cfg)
    if cfg.fmt == "csv":
        return render_table(*check_table(report), "csv"), code
    return json.dumps(report, indent=1, sort_keys=True) + "\n", code


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        text, code = run(cfg)
    except (UsageError, IntervalValidation, NotTraceNormalized) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ModelError, BracketFailure) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
