"""Seeded random Hamiltonians and executable inequality suites.

Each suite returns a :class:`SuiteReport` whose cases carry ``lhs``, ``rhs``
and ``slack = rhs - lhs``; a case passes when ``slack >= -tolerance``. The
numeric constants are module attributes so that a test can swap one out and
check that the harness notices.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asy
from .errors import ArcGeometryError, NotTraceNormalized
from .hamiltonian import (
    SWEEP_FAMILIES,
    Hamiltonian,
    PiecewiseConstant,
    PowerLog,
    SingularPower,
    catalog,
    gamma_entries,
    trace_reparameterize,
)
from .intervals import IntervalSet

SLACK_FLOOR = 1e-8
#: Two-sided band for |q(ir)| in units of A_H(r).
BAND = 44.0
#: Lower bound for Im q(ir) in units of L_H(r).
IM_LOWER = 64.0
#: Upper bound for Im q(ir) in units of A_H(r).
IM_UPPER = 79.0 / 2.0
#: Constant of the ratio bound Im q / |q| >= d(H, t_hat) / CHAIN.
CHAIN = 2816.0

DEFAULT_GAMMAS = (0.25, 0.5, 0.9)
DEFAULT_T_GRID = tuple(np.geomspace(1e-3, 1e2, 8))
DEFAULT_R_GRID = tuple(np.geomspace(1.0, 1e4, 21))
RANDOM_R_GRID = tuple(np.geomspace(1.0, 1e4, 5))
RANDOM_SEEDS = tuple(range(1, 101))


def c_gamma(gamma: float) -> float:
    return max(20.0, 6.0 / (1.0 - gamma))


# ---------------------------------------------------------------------------
# random models


@dataclass(frozen=True)
class RandomHamSpec:
    """Recipe for :func:`gen_random_ham`.

    Segment lengths are log-uniform on ``length_law``; entries are
    ``Gamma[sigma, exp(2 i phi)]`` with ``sigma ~ U[0, 1]``, ``phi ~ U[0, pi)``.
    """

    seed: int
    n_segments: int = 4
    length_law: tuple = (1e-3, 10.0)
    entry_law: str = "uniform-psd"

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("n_segments must be >= 1")
        lo, hi = self.length_law
        if not 0 < lo <= hi:
            raise ValueError("length_law must be a positive range")
        if self.entry_law != "uniform-psd":
            raise ValueError("only the uniform-psd entry law is available")


def gen_random_ham(spec: RandomHamSpec) -> PiecewiseConstant:
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.length_law
    lengths = np.exp(rng.uniform(math.log(lo), math.log(hi), spec.n_segments))
    sigma = rng.uniform(0.0, 1.0, spec.n_segments)
    phi = rng.uniform(0.0, math.pi, spec.n_segments)
    segs = tuple(
        (float(L), gamma_entries(float(s), complex(math.cos(2 * p), math.sin(2 * p))))
        for L, s, p in zip(lengths, sigma, phi)
    )
    return PiecewiseConstant(segs, (0.5, 0.5, 0.5))


def model_digest(H: Hamiltonian) -> str:
    blob = json.dumps(H.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def random_models(seeds=RANDOM_SEEDS, n_segments: int = 4) -> list[tuple[str, Hamiltonian]]:
    return [(f"random-{s}", gen_random_ham(RandomHamSpec(s, n_segments))) for s in seeds]


def catalog_models(names=SWEEP_FAMILIES) -> list[tuple[str, Hamiltonian]]:
    return [(n, catalog(n)) for n in names]


# ---------------------------------------------------------------------------
# reports


@dataclass
class Case:
    digest: str
    label: str
    lhs: float
    rhs: float
    tolerance: float = SLACK_FLOOR

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return bool(self.slack >= -self.tolerance)

    def as_dict(self):
        return {
            "digest": self.digest,
            "label": self.label,
            "lhs": _num(self.lhs),
            "rhs": _num(self.rhs),
            "slack": _num(self.slack),
            "tolerance": _num(self.tolerance),
            "pass": self.passed,
        }


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(repr(x)) if x != 0 else 0.0


@dataclass
class SuiteReport:
    suite: str
    cases: list = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def min_slack(self) -> float:
        return min((c.slack for c in self.cases), default=math.inf)

    def extend(self, other: "SuiteReport"):
        self.cases.extend(other.cases)
        self.runtime += other.runtime

    def as_dict(self, runtime: bool = False):
        out = {
            "suite": self.suite,
            "pass": self.passed,
            "min_slack": _num(self.min_slack),
            "cases": [c.as_dict() for c in self.cases],
        }
        if runtime:
            out["runtime"] = self.runtime
        return out

    def to_json(self, runtime: bool = False) -> str:
        return json.dumps(self.as_dict(runtime), sort_keys=True)


class _Timer:
    def __init__(self, report):
        self.report = report

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self.report

    def __exit__(self, *exc):
        self.report.runtime += time.perf_counter() - self.t0


def _require_normalized(H):
    if not H.is_trace_normalized:
        raise NotTraceNormalized("this suite needs a trace-normalised model")


# ---------------------------------------------------------------------------
# suites


def suite_offdiag_bound(H: Hamiltonian, gammas=DEFAULT_GAMMAS, t_grid=DEFAULT_T_GRID) -> SuiteReport:
    """``(1/t) lambda((0,t) & sigma^-1[0, gamma]) <= c(gamma) d(H, t)``."""
    _require_normalized(H)
    rep = SuiteReport("offdiag_bound")
    dig = model_digest(H)
    with _Timer(rep), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = asy.d_values(H, np.asarray(t_grid))
        for g in gammas:
            for t, dt in zip(t_grid, d):
                lhs = asy.preimage_measure(H, "sigma", (0.0, g), t).value / t
                rep.cases.append(Case(dig, f"gamma={g:g} t={t:.6g}", lhs, c_gamma(g) * dt))
    return rep


def default_intervals(H: Hamiltonian, seed: int = 0) -> list[IntervalSet]:
    """Whole line, one random interval and a union of two."""
    rng = np.random.default_rng(seed)
    a, b = np.sort(rng.uniform(0.0, 20.0, 2))
    c, d, e, f = np.sort(rng.uniform(0.0, 20.0, 4))
    return [
        IntervalSet.from_pairs([(0.0, math.inf)]),
        IntervalSet.from_pairs([(a, b)]),
        IntervalSet.from_pairs([(c, d), (e, f)]),
    ]


def suite_subinterval_bound(H: Hamiltonian, intervals=None, t_grid=DEFAULT_T_GRID) -> SuiteReport:
    """``d(H, t) >= det M(H 1_I, t) / t**2``."""
    _require_normalized(H)
    intervals = default_intervals(H) if intervals is None else intervals
    rep = SuiteReport("subinterval_bound")
    dig = model_digest(H)
    with _Timer(rep):
        d = asy.d_values(H, np.asarray(t_grid))
        for k, I in enumerate(intervals):
            for t, dt in zip(t_grid, d):
                m1, m3, m2 = asy.restricted_primitive(H, I, t)
                lhs = (m1 * m2 - m3 * m3) / t**2
                rep.cases.append(Case(dig, f"I#{k} t={t:.6g}", lhs, dt))
    return rep


@dataclass(frozen=True)
class ArcCase:
    """One of the three arc geometries (``variant`` picks the mirrored form)."""

    geometry: int
    a: float
    b: float
    variant: int = 0

    def arcs(self) -> tuple[tuple[float, float], tuple[float, float], float]:
        g, a, b = self.geometry, self.a, self.b
        pi = math.pi
        if g == 1:
            if not 0 <= a < b <= pi:
                raise ArcGeometryError("geometry 1 needs 0 <= phi0 < psi0 <= pi")
            return (-a, a), (b, 2 * pi - b), math.sin((b - a) / 2) ** 2
        if not (0 < a <= pi and 0 < b <= pi):
            raise ArcGeometryError("alpha and beta must lie in (0, pi]")
        if g == 2:
            const = math.sin(a / 2) ** 2 * math.sin(b / 2) ** 2
            if self.variant == 0:
                return (0.0, pi - a), (pi, 2 * pi - b), const
            return (pi + a, 2 * pi), (b, pi), const
        if g == 3:
            if a + b > pi:
                raise ArcGeometryError("geometry 3 needs alpha + beta <= pi")
            const = math.sin(min(a, b) / 2) ** 2
            if self.variant == 0:
                return (b, pi - a), (pi, 2 * pi), const
            return (pi + a, 2 * pi - b), (0.0, pi), const
        raise ArcGeometryError(f"unknown geometry {g}")


def default_arc_cases(seed: int = 0) -> list[ArcCase]:
    rng = np.random.default_rng(seed)
    p0, p1 = np.sort(rng.uniform(0.0, math.pi, 2))
    a2, b2 = rng.uniform(0.05, math.pi, 2)
    a3 = rng.uniform(0.05, math.pi / 2)
    b3 = rng.uniform(0.05, math.pi - a3)
    return [
        ArcCase(1, float(p0), float(p1)),
        ArcCase(1, 0.0, math.pi / 2),
        ArcCase(2, float(a2), float(b2), 0),
        ArcCase(2, float(a2), float(b2), 1),
        ArcCase(3, float(a3), float(b3), 0),
        ArcCase(3, float(a3), float(b3), 1),
    ]


def suite_arc_bounds(H: Hamiltonian, arc_cases=None, t_grid=DEFAULT_T_GRID) -> SuiteReport:
    """``d(H, t) >= const * lambda(I1 & (0,t))/t * lambda(I2 & (0,t))/t``."""
    _require_normalized(H)
    arc_cases = default_arc_cases() if arc_cases is None else arc_cases
    rep = SuiteReport("arc_bounds")
    dig = model_digest(H)
    with _Timer(rep), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = asy.d_values(H, np.asarray(t_grid))
        for case in arc_cases:
            arc1, arc2, const = case.arcs()
            for t, dt in zip(t_grid, d):
                l1 = asy.preimage_measure(H, "zeta-arc", arc1, t).value / t
                l2 = asy.preimage_measure(H, "zeta-arc", arc2, t).value / t
                label = f"geometry={case.geometry}/{case.variant} a={case.a:.6g} b={case.b:.6g} t={t:.6g}"
                rep.cases.append(Case(dig, label, const * l1 * l2, dt, 1e-10))
    return rep


def suite_weyl_estimates(H: Hamiltonian, r_grid=DEFAULT_R_GRID, tol: float = 1e-6) -> SuiteReport:
    """Two-sided band for ``|q(ir)|``, bounds for ``Im q(ir)`` and the ratio bound."""
    rep = SuiteReport("weyl_estimates")
    dig = model_digest(H)
    with _Timer(rep):
        for r in r_grid:
            row = asy.asymptotics_row(H, r, tol)
            tq = SLACK_FLOOR + row.err
            tr = SLACK_FLOOR + 2 * row.err / max(row.q_abs, 1e-300)
            rep.cases += [
                Case(dig, f"A/{BAND:g} <= |q| r={r:.6g}", row.A / BAND, row.q_abs, tq),
                Case(dig, f"|q| <= {BAND:g}A r={r:.6g}", row.q_abs, BAND * row.A, tq),
                Case(dig, f"L/{IM_LOWER:g} <= Im q r={r:.6g}", row.L / IM_LOWER, row.q_im, tq),
                Case(dig, f"Im q <= {IM_UPPER:g}A r={r:.6g}", row.q_im, IM_UPPER * row.A, tq),
                Case(dig, f"d/{CHAIN:g} <= Im q/|q| r={r:.6g}", row.d_at_t_hat / CHAIN, row.ratio, tr),
            ]
    return rep


def regular_variation_bound(r1: float, r2: float) -> float:
    return 1.0 - (math.sqrt(r1 * r2) / (0.5 * (r1 + r2))) ** 2


def suite_regular_variation(rho_pairs=((1.0, 3.0), (2.0, 2.0), (0.5, 4.0)), t_grid=None) -> SuiteReport:
    """Equality case of the liminf bound and the decay of ``d`` for a power-log model."""
    ts = np.geomspace(1e-8, 1.0, 33) if t_grid is None else np.asarray(t_grid)
    rep = SuiteReport("regular_variation")
    with _Timer(rep):
        for r1, r2 in rho_pairs:
            H = SingularPower((r1, r2))
            bound = regular_variation_bound(r1, r2)
            d = asy.d_values(H, ts)
            dig = model_digest(H)
            rep.cases.append(Case(dig, f"rho=({r1:g},{r2:g}) min d >= bound", bound, float(d.min())))
            rep.cases.append(
                Case(dig, f"rho=({r1:g},{r2:g}) min d <= bound", float(d.min()), bound)
            )
        H = PowerLog((1.0, 1.0), (2.0, 0.0))
        d3, d6 = asy.d_values(H, np.array([1e-3, 1e-6]))
        rep.cases.append(Case(model_digest(H), "power-log d(1e-6) < d(1e-3)/2", d6, 0.5 * d3, 0.0))
    return rep


# ---------------------------------------------------------------------------
# runners

SUITES = ("offdiag_bound", "arc_bounds", "subinterval_bound", "weyl_estimates", "regular_variation")


def run_suite(
    name: str, models=None, *, n_random: int = 100, tol: float = 1e-6, seed: int = 1
) -> SuiteReport:
    """One suite over the catalog families and ``n_random`` random models.

    The random models use seeds ``seed, seed + 1, ...``; ``seed`` also fixes
    the sampled intervals and arcs.
    """
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    if name == "regular_variation":
        return suite_regular_variation()
    if models is None:
        models = catalog_models() + random_models(range(seed, seed + n_random))
    total = SuiteReport(name)
    for label, H in models:
        random_model = label.startswith("random-")
        if name == "weyl_estimates":
            grid = RANDOM_R_GRID if random_model else DEFAULT_R_GRID
            total.extend(suite_weyl_estimates(H, grid, tol))
            continue
        Hn = trace_reparameterize(H)
        if name == "offdiag_bound":
            total.extend(suite_offdiag_bound(Hn))
        elif name == "subinterval_bound":
            total.extend(suite_subinterval_bound(Hn, default_intervals(Hn, seed)))
        else:
            total.extend(suite_arc_bounds(Hn, default_arc_cases(seed)))
    return total


def run_all(suites=SUITES, *, n_random: int = 100, tol: float = 1e-6, seed: int = 1) -> list[SuiteReport]:
    return [run_suite(s, n_random=n_random, tol=tol, seed=seed) for s in suites]
