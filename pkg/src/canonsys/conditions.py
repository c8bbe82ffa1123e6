"""Empirical checks of the small-``t`` conditions on a Hamiltonian.

Three families of limits are probed as ``t -> 0`` (or ``s -> 0``):

* ``(ii)``: ``d(H, t)``;
* ``(iii)``: measures of ``frak_t``-transported preimages of ``sigma`` and
  of the weighted ``pi`` inside a fixed window ``(0, T)``;
* ``(iv)``: the same without transport, normalised by ``1/t``, on a
  trace-normalised model.

A finite grid cannot decide a limit. The verdicts below are heuristic trend
labels: ``tends-to-zero``, ``bounded-away``, ``oscillating`` or
``indeterminate``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import d_values, preimage_measure
from .errors import IntervalValidation, NotTraceNormalized
from .hamiltonian import Hamiltonian

DEFAULT_GAMMAS = (0.0, 0.25, 0.5, 0.75, 0.9)
#: A sign pair (catches any two constants of opposite sign) and a decoy pair.
DEFAULT_IJ = (
    ((0.01, 100.0), (-100.0, -0.01)),
    ((200.0, 300.0), (-300.0, -200.0)),
)
DEFAULT_T = 2.0
REBOUND = 5.0
#: Known breakpoint sequences are probed down to this value.
PROBE_FLOOR = 1e-30


def log_grid(hi: float = 1e-1, lo: float = 1e-8, per_decade: int = 10) -> np.ndarray:
    n = int(round(per_decade * math.log10(hi / lo))) + 1
    return np.geomspace(hi, lo, n)


@dataclass
class Verdict:
    label: str
    slope: float
    last: float
    max_rebound: float

    def as_dict(self):
        return {
            "verdict": self.label,
            "slope": self.slope,
            "last": self.last,
            "max_rebound": self.max_rebound,
            "heuristic": True,
        }


def classify(xs, values) -> Verdict:
    """Trend label for ``values`` sampled along ``xs`` decreasing to 0.

    * identically zero, a log-log slope below ``-0.2``, or a monotone
      decrease by a factor of ten: ``tends-to-zero``;
    * a later value more than 5x an earlier running minimum: ``oscillating``;
    * ``|slope| <= 0.05`` with the last value above 0.01: ``bounded-away``;
    * anything else: ``indeterminate``.
    """
    x = np.asarray(xs, dtype=float)
    v = np.asarray(values, dtype=float)
    vmax = float(np.max(np.abs(v))) if v.size else 0.0
    if v.size == 0:
        return Verdict("indeterminate", math.nan, math.nan, math.nan)
    if vmax <= 1e-14:
        return Verdict("tends-to-zero", math.nan, float(v[-1]), 1.0)
    floor = 1e-12 * vmax
    run_min = np.minimum.accumulate(np.maximum(v, floor))
    rebound = float(np.max(np.maximum(v[1:], floor) / run_min[:-1])) if v.size > 1 else 1.0
    pos = v > floor
    slope = math.nan
    if pos.sum() >= 2:
        slope = float(np.polyfit(np.log(1.0 / x[pos]), np.log(v[pos]), 1)[0])
    last = float(v[-1])
    if rebound > REBOUND:
        return Verdict("oscillating", slope, last, rebound)
    monotone = bool(np.all(np.diff(v) <= 1e-12 * vmax))
    if (not math.isnan(slope) and slope < -0.2) or (monotone and last <= 0.1 * vmax):
        return Verdict("tends-to-zero", slope, last, rebound)
    if not math.isnan(slope) and abs(slope) <= 0.05 and last > 0.01:
        return Verdict("bounded-away", slope, last, rebound)
    return Verdict("indeterminate", slope, last, rebound)


def _liminf_label(v: Verdict, values) -> str:
    if v.label in ("tends-to-zero", "bounded-away"):
        return v.label
    vals = np.asarray(values, dtype=float)
    if v.label == "oscillating" and vals.min() <= 0.05 * vals.max():
        return "tends-to-zero"
    return v.label


def validate_pair(I, J):
    """Open intervals in R minus 0 with disjoint closures, one of them bounded."""
    for K in (I, J):
        a, b = K
        if not a < b:
            raise IntervalValidation(f"interval {K} is empty")
        if a < 0 < b:
            raise IntervalValidation(f"interval {K} contains 0")
    if math.isinf(I[0]) or math.isinf(I[1]):
        if math.isinf(J[0]) or math.isinf(J[1]):
            raise IntervalValidation("at least one of I and J must be bounded")
    if not (I[1] < J[0] or J[1] < I[0]):
        raise IntervalValidation(f"closures of {I} and {J} intersect")


def _probe_sequences(H: Hamiltonian, lo: float) -> dict:
    seq = getattr(H, "sequence", None)
    if seq is None:
        return {}
    seq = np.asarray(seq)
    seq = seq[seq >= lo]
    even = seq[1::2]  # t_2, t_4, ...
    return {"t_n": seq, "t_2n": even, "2t_2n": 2.0 * even}


@dataclass
class ConditionReport:
    condition: str
    probed: dict
    series: list = field(default_factory=list)

    def as_dict(self):
        return {"condition": self.condition, "probed": self.probed, "series": self.series}


def _series(name, xs, values, **extra):
    v = classify(xs, values)
    return {
        "name": name,
        "x": [float(x) for x in xs],
        "values": [float(y) for y in values],
        **v.as_dict(),
        **extra,
    }


def check_condition_ii(H: Hamiltonian, t_grid=None) -> ConditionReport:
    """Trend of ``d(H, t)`` as ``t -> 0``."""
    ts = log_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    vals = d_values(H, ts)
    v = classify(ts, vals)
    rep = ConditionReport("ii", {"t_grid": [float(t) for t in ts]})
    s = _series("d", ts, vals, along="t_grid")
    s["lim_verdict"] = v.label
    s["liminf_verdict"] = _liminf_label(v, vals)
    rep.series.append(s)
    for name, seq in _probe_sequences(H, PROBE_FLOOR).items():
        rep.series.append(_series("d", seq, d_values(H, seq), along=name))
    return rep


def sigma_term(H, s, T, gamma):
    return preimage_measure(H, "sigma", (0.0, gamma), T, s=s, transport="frak_t").value


def pi_product(H, s, T, I, J):
    a = preimage_measure(H, "pi_weighted", I, T, s=s, transport="frak_t").value
    b = preimage_measure(H, "pi_weighted", J, T, s=s, transport="frak_t").value
    return a * b


def check_condition_iii(
    H: Hamiltonian,
    T: float = DEFAULT_T,
    gammas=DEFAULT_GAMMAS,
    ij_pairs=DEFAULT_IJ,
    s_grid=None,
) -> ConditionReport:
    """Transported preimage measures in the window ``(0, T)`` as ``s -> 0``."""
    for I, J in ij_pairs:
        validate_pair(I, J)
    ss = log_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    probes = {"s_grid": ss, **_probe_sequences(H, PROBE_FLOOR)}
    rep = ConditionReport(
        "iii",
        {
            "T": T,
            "gammas": list(gammas),
            "ij_pairs": [list(map(list, p)) for p in ij_pairs],
            "s_grid": [float(s) for s in ss],
        },
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for along, seq in probes.items():
            for g in gammas:
                vals = [sigma_term(H, s, T, g) for s in seq]
                rep.series.append(_series(f"sigma gamma={g}", seq, vals, along=along))
            for I, J in ij_pairs:
                vals = [pi_product(H, s, T, I, J) for s in seq]
                rep.series.append(_series(f"pi product I={I} J={J}", seq, vals, along=along))
    return rep


def check_condition_iv(
    H: Hamiltonian,
    gammas=DEFAULT_GAMMAS,
    ij_pairs=DEFAULT_IJ,
    t_grid=None,
) -> ConditionReport:
    """Normalised preimage measures of ``sigma`` and ``pi`` as ``t -> 0``."""
    if not H.is_trace_normalized:
        raise NotTraceNormalized("condition (iv) is stated for trace-normalised models")
    for I, J in ij_pairs:
        validate_pair(I, J)
    ts = log_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    m = H.primitive(ts)
    liminf = float(np.min(m[0] * m[2] / ts**2))
    if liminf < 1e-3:
        warnings.warn(f"m1 m2 / t^2 drops to {liminf:.3g} on the grid; (iv) may not apply")
    rep = ConditionReport(
        "iv",
        {
            "gammas": list(gammas),
            "ij_pairs": [list(map(list, p)) for p in ij_pairs],
            "t_grid": [float(t) for t in ts],
            "min_m1m2_over_t2": liminf,
        },
    )
    probes = {"t_grid": ts, **_probe_sequences(H, PROBE_FLOOR)}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for along, seq in probes.items():
            for g in gammas:
                vals = [preimage_measure(H, "sigma", (0.0, g), t).value / t for t in seq]
                rep.series.append(_series(f"sigma gamma={g}", seq, vals, along=along))
            for I, J in ij_pairs:
                vals = [
                    preimage_measure(H, "pi", I, t).value * preimage_measure(H, "pi", J, t).value / t**2
                    for t in seq
                ]
                rep.series.append(_series(f"pi product I={I} J={J}", seq, vals, along=along))
    return rep
