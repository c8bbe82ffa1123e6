"""Hamiltonians of two-dimensional canonical systems on ``(0, inf)``.

A Hamiltonian is a locally integrable, positive semi-definite matrix function

    H(t) = [[h1(t), h3(t)],
            [h3(t), h2(t)]]

stored throughout as the triple ``(h1, h3, h2)``. Its primitive
``M(t) = int_0^t H`` is stored as ``(m1, m3, m2)``. Every model exposes
vectorised ``entries(t)`` and ``primitive(t)`` returning arrays of shape
``(3, *t.shape)``.

Models are immutable. Piecewise models (``piecewise = True``) are constant
between consecutive ``breakpoints``; at a breakpoint the right limit is used.
"""

from __future__ import annotations

import json
import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from .errors import (
    ModelDomainError,
    ModelError,
    NonPositiveTime,
    NotLimitPoint,
    NotMonotone,
    RangeError,
)
from . import quadrature

#: Finite stand-in for entries that diverge at an isolated point (PowerLog at t=1).
SENTINEL_CAP = 1e30
PSD_SLACK = 1e-12
#: Breakpoints below this are merged into the first cell; the omitted mass is < 1e-300.
SMALLEST_BREAKPOINT = 1e-300


def _as_time(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise ModelDomainError("evaluation point must be finite")
    if np.any(arr <= 0):
        raise NonPositiveTime("Hamiltonians live on (0, inf); got t <= 0")
    return arr


def _check_psd(h, where=""):
    h1, h3, h2 = (float(x) for x in h)
    scale = max(1.0, abs(h1), abs(h2))
    if h1 < 0 or h2 < 0 or h3 * h3 > h1 * h2 + PSD_SLACK * scale * scale:
        raise ModelError(f"entries {h} are not positive semi-definite{where}")


class Hamiltonian:
    """Common interface of all model kinds."""

    kind = "abstract"
    piecewise = False
    closed_form_primitive = True
    limit_point_declared = True
    is_trace_normalized = False

    def entries(self, t) -> np.ndarray:
        raise NotImplementedError

    def primitive(self, t) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self, lo: float = 0.0, hi: float = math.inf) -> np.ndarray:
        """Known discontinuities or kinks in the open interval ``(lo, hi)``."""
        return np.empty(0)

    def trace_primitive(self, t) -> np.ndarray:
        m = self.primitive(t)
        return m[0] + m[2]

    def trace_inverse(self, tau) -> np.ndarray:
        """Solve ``m1(t) + m2(t) = tau`` by vectorised bisection on ``log t``."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        lo = np.full(tau.shape, -700.0)
        hi = np.full(tau.shape, 700.0)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                below = self.trace_primitive(np.exp(mid)) < tau
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
        return np.exp(0.5 * (lo + hi))

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# piecewise constant


@dataclass(frozen=True, eq=False)
class PiecewiseConstant(Hamiltonian):
    """Constant on consecutive segments starting at 0, then a constant tail.

    ``segments`` is a sequence of ``(length, (h1, h3, h2))``.
    """

    segments: tuple
    tail: tuple
    kind = "piecewise_constant"
    piecewise = True

    def __post_init__(self):
        segs = tuple((float(L), tuple(float(x) for x in h)) for L, h in self.segments)
        tail = tuple(float(x) for x in self.tail)
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "tail", tail)
        for i, (L, h) in enumerate(segs):
            if not L > 0 or not math.isfinite(L):
                raise ModelError(f"segment {i} has non-positive length {L}")
            _check_psd(h, f" in segment {i}")
            if h[0] + h[2] <= 0:
                raise ModelError(f"segment {i} has zero trace")
        _check_psd(tail, " in tail")
        if tail[0] + tail[2] <= 0:
            raise NotLimitPoint("tail must have positive trace for the limit point case")
        lengths = np.array([L for L, _ in segs])
        table = np.array([h for _, h in segs] + [tail]).T  # (3, n+1)
        edges = np.cumsum(lengths)
        starts = np.concatenate([[0.0], edges])
        cum = np.zeros((3, len(segs) + 1))
        if segs:
            cum[:, 1:] = np.cumsum(table[:, :-1] * lengths, axis=1)
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_starts", starts)
        object.__setattr__(self, "_table", table)
        object.__setattr__(self, "_cum", cum)
        traces = table[0] + table[2]
        object.__setattr__(
            self, "is_trace_normalized", bool(np.all(np.abs(traces - 1.0) <= 1e-12))
        )

    @classmethod
    def constant(cls, h) -> "PiecewiseConstant":
        return cls((), tuple(h))

    def _index(self, t):
        return np.searchsorted(self._edges, t, side="right")

    def entries(self, t):
        t = _as_time(t)
        return self._table[:, self._index(t)]

    def primitive(self, t):
        t = _as_time(t)
        idx = self._index(t)
        return self._cum[:, idx] + (t - self._starts[idx]) * self._table[:, idx]

    def breakpoints(self, lo=0.0, hi=math.inf):
        e = self._edges
        return e[(e > lo) & (e < hi)]

    def trace_inverse(self, tau):
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        ctr = self._cum[0] + self._cum[2]
        tr = self._table[0] + self._table[2]
        idx = np.searchsorted(ctr, tau, side="right") - 1
        idx = np.clip(idx, 0, len(tr) - 1)
        return self._starts[idx] + (tau - ctr[idx]) / tr[idx]

    def to_dict(self):
        return {
            "kind": self.kind,
            "segments": [{"len": L, "h": list(h)} for L, h in self.segments],
            "tail": list(self.tail),
        }


# ---------------------------------------------------------------------------
# analytic families


def _rank_one_offdiag(h1, h2):
    """``sqrt(h1 h2)`` nudged down where rounding would put ``h3**2`` above ``h1 h2``."""
    prod = h1 * h2
    h3 = np.sqrt(prod)
    return np.where(h3 * h3 > prod, np.nextafter(h3, 0.0), h3)


def _power_log_primitive(a: float, b: float, t: np.ndarray) -> np.ndarray:
    """``int_0^t s**(a-1) |log s|**b ds`` for a > 0, b > -1."""
    base = a ** (-b - 1.0) * special.gamma(b + 1.0)
    out = np.empty_like(t)
    small = t <= 1.0
    L = -np.log(t[small])
    out[small] = base * special.gammaincc(b + 1.0, a * L)
    x = a * np.log(t[~small])
    with np.errstate(over="ignore"):
        grow = x ** (b + 1.0) / (b + 1.0) * special.hyp1f1(b + 1.0, b + 2.0, x)
    out[~small] = base + a ** (-b - 1.0) * grow
    return out


@dataclass(frozen=True, eq=False)
class PowerLog(Hamiltonian):
    """``h_j = t**(a_j - 1) |log t|**b_j`` with averaged exponents off the diagonal.

    Since the off-diagonal exponents are the means of the diagonal ones,
    ``h3 = sqrt(h1 h2)`` and the Hamiltonian has rank one a.e.
    """

    alpha: tuple = (1.0, 1.0)
    beta: tuple = (2.0, 0.0)
    kind = "power_log"

    def __post_init__(self):
        a = tuple(float(x) for x in self.alpha)
        b = tuple(float(x) for x in self.beta)
        if len(a) != 2 or len(b) != 2:
            raise ModelError("power_log needs two alphas and two betas")
        if min(a) <= 0:
            raise ModelError("power_log alphas must be positive")
        if min(b) <= -1:
            raise ModelError("power_log betas must exceed -1 for local integrability")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def alpha3(self):
        return 0.5 * (self.alpha[0] + self.alpha[1])

    @property
    def beta3(self):
        return 0.5 * (self.beta[0] + self.beta[1])

    def entries(self, t):
        t = _as_time(t)
        lt = np.abs(np.log(t))
        with np.errstate(divide="ignore", over="ignore"):
            h1 = t ** (self.alpha[0] - 1) * lt ** self.beta[0]
            h2 = t ** (self.alpha[1] - 1) * lt ** self.beta[1]
        h1 = np.minimum(h1, SENTINEL_CAP)
        h2 = np.minimum(h2, SENTINEL_CAP)
        return np.stack([h1, _rank_one_offdiag(h1, h2), h2])

    def primitive(self, t):
        t = np.atleast_1d(_as_time(t)).astype(float)
        shape = np.shape(np.asarray(t))
        flat = t.ravel()
        m1 = _power_log_primitive(self.alpha[0], self.beta[0], flat)
        m2 = _power_log_primitive(self.alpha[1], self.beta[1], flat)
        m3 = _power_log_primitive(self.alpha3, self.beta3, flat)
        return np.stack([m1, m3, m2]).reshape((3,) + shape)

    def breakpoints(self, lo=0.0, hi=math.inf):
        return np.array([1.0]) if lo < 1.0 < hi else np.empty(0)

    def to_dict(self):
        return {"kind": self.kind, "alpha": list(self.alpha), "beta": list(self.beta)}


@dataclass(frozen=True, eq=False)
class DiagonalPower(Hamiltonian):
    """``diag(r1 t**(r1-1), r2 t**(r2-1))`` so that ``m_j = t**r_j``."""

    rho: tuple = (1.0, 3.0)
    kind = "diagonal_power"

    def __post_init__(self):
        r = tuple(float(x) for x in self.rho)
        if len(r) != 2 or min(r) <= 0:
            raise ModelError("rho must be two positive numbers")
        object.__setattr__(self, "rho", r)

    def _off(self, t):
        return np.zeros_like(t)

    def _off_primitive(self, t):
        return np.zeros_like(t)

    def entries(self, t):
        t = _as_time(t)
        r1, r2 = self.rho
        return np.stack([r1 * t ** (r1 - 1), self._off(t), r2 * t ** (r2 - 1)])

    def primitive(self, t):
        t = _as_time(t)
        r1, r2 = self.rho
        return np.stack([t**r1, self._off_primitive(t), t**r2])

    def trace_inverse(self, tau):
        r1, r2 = self.rho
        if r1 == r2:
            return (np.asarray(tau, dtype=float) / 2.0) ** (1.0 / r1)
        return super().trace_inverse(tau)

    def to_dict(self):
        return {"kind": self.kind, "rho": list(self.rho)}


@dataclass(frozen=True, eq=False)
class SingularPower(DiagonalPower):
    """Same diagonal as :class:`DiagonalPower` with ``h3 = sqrt(h1 h2)``."""

    kind = "singular_power"

    def entries(self, t):
        h = super().entries(t)
        h[1] = _rank_one_offdiag(h[0], h[2])
        return h

    def _off(self, t):
        r1, r2 = self.rho
        return math.sqrt(r1 * r2) * t ** (0.5 * (r1 + r2) - 1)

    def _off_primitive(self, t):
        r1, r2 = self.rho
        return 2 * math.sqrt(r1 * r2) / (r1 + r2) * t ** (0.5 * (r1 + r2))


def exp_quadratic_sequence(c: float = 1.0) -> np.ndarray:
    """``t_n = exp(-c n**2)`` for n = 1, 2, ... down to ``SMALLEST_BREAKPOINT``."""
    n_max = int(math.sqrt(-math.log(SMALLEST_BREAKPOINT) / c)) + 1
    n = np.arange(1, n_max + 1)
    seq = np.exp(-c * n.astype(float) ** 2)
    return seq[seq >= SMALLEST_BREAKPOINT]


@dataclass(frozen=True, eq=False)
class TwoPhaseRotation(Hamiltonian):
    """Rank-one Hamiltonian alternating between two fixed directions.

    With a strictly decreasing sequence ``t_1 > t_2 > ...`` and ``t_0 = inf``,
    the angle is ``phi_minus`` on ``[t_{n+1}, t_n)`` for even ``n`` and
    ``phi_plus`` for odd ``n``; ``H = (cos^2, cos sin, sin^2)`` of that angle.

    ``t_seq`` is ``{"exp_quadratic": c}`` or ``{"explicit": [t_1, t_2, ...]}``.
    An explicit list is finite; below its last element the band continues
    with the parity it would have next.
    """

    phi_plus: float = math.pi / 3
    phi_minus: float = 2 * math.pi / 3
    t_seq: dict = field(default_factory=lambda: {"exp_quadratic": 1.0})
    kind = "two_phase"
    piecewise = True
    is_trace_normalized = True

    def __post_init__(self):
        pp, pm = float(self.phi_plus), float(self.phi_minus)
        for p in (pp, pm):
            if not 0 < p < math.pi or abs(p - math.pi / 2) < 1e-15:
                raise ModelError("phases must lie in (0, pi) minus pi/2")
        if pp == pm:
            raise ModelError("phi_plus and phi_minus must differ")
        object.__setattr__(self, "phi_plus", pp)
        object.__setattr__(self, "phi_minus", pm)
        if "exp_quadratic" in self.t_seq:
            c = float(self.t_seq["exp_quadratic"])
            if c <= 0:
                raise ModelError("exp_quadratic rate must be positive")
            seq = exp_quadratic_sequence(c)
        elif "explicit" in self.t_seq:
            seq = np.asarray(self.t_seq["explicit"], dtype=float)
            if seq.size == 0 or np.any(seq <= 0) or np.any(np.diff(seq) >= 0):
                raise ModelError("explicit t_n must be positive and strictly decreasing")
        else:
            raise ModelError("t_seq must be exp_quadratic or explicit")
        object.__setattr__(self, "_seq", seq)
        N = len(seq)
        # cell [t_{n+1}, t_n) carries phase minus for even n; the first cell is (0, t_N)
        phases = [self._phase(n) for n in range(N, 0, -1)]  # cells (0,t_N), ..., [t_2,t_1)
        lengths = np.diff(np.concatenate([[0.0], seq[::-1]]))
        segs = tuple((L, self._matrix(p)) for L, p in zip(lengths, phases))
        object.__setattr__(self, "_pc", PiecewiseConstant(segs, self._matrix(self.phi_minus)))

    def _phase(self, n):
        return self.phi_minus if n % 2 == 0 else self.phi_plus

    @staticmethod
    def _matrix(p):
        c, s = math.cos(p), math.sin(p)
        return (c * c, c * s, s * s)

    @property
    def sequence(self) -> np.ndarray:
        """The breakpoints ``t_1, t_2, ...`` (decreasing)."""
        return self._seq

    @property
    def c_plus(self):
        return math.copysign(math.tan(self.phi_plus) ** 2, math.pi / 2 - self.phi_plus)

    @property
    def c_minus(self):
        return math.copysign(math.tan(self.phi_minus) ** 2, math.pi / 2 - self.phi_minus)

    def band_measures(self, t) -> tuple[float, float]:
        """Exact ``lambda((0,t) & I_plus)`` and ``lambda((0,t) & I_minus)``."""
        m = self._pc.primitive(t)
        # m = a * u_plus + b * u_minus in the (h1, h3, h2) coordinates; solve on (h1, h2).
        up, um = self._matrix(self.phi_plus), self._matrix(self.phi_minus)
        A = np.array([[up[0], um[0]], [up[2], um[2]], [up[1], um[1]]])
        sol, *_ = np.linalg.lstsq(A, np.array([m[0], m[2], m[1]], dtype=float), rcond=None)
        return float(sol[0]), float(sol[1])

    def entries(self, t):
        return self._pc.entries(t)

    def primitive(self, t):
        return self._pc.primitive(t)

    def breakpoints(self, lo=0.0, hi=math.inf):
        return self._pc.breakpoints(lo, hi)

    def trace_inverse(self, tau):
        return np.atleast_1d(np.asarray(tau, dtype=float)).copy()

    def to_dict(self):
        seq = dict(self.t_seq)
        if "explicit" in seq:
            seq["explicit"] = [float(x) for x in seq["explicit"]]
        return {
            "kind": self.kind,
            "phi_plus": self.phi_plus,
            "phi_minus": self.phi_minus,
            "t_seq": seq,
        }


# ---------------------------------------------------------------------------
# scalar-pair representation


def _table_values(edges, values, t):
    return np.asarray(values)[np.searchsorted(edges, t, side="right")]


@dataclass(frozen=True, eq=False)
class GammaForm(Hamiltonian):
    """Trace-normalised Hamiltonian built from a pair ``(sigma, zeta)``.

    Both are piecewise-constant tables on ``(0, inf)``: ``edges`` are the
    interior breakpoints and there is one value more than edges.
    """

    edges: tuple
    sigma: tuple
    zeta: tuple
    kind = "gamma_form"
    piecewise = True
    is_trace_normalized = True

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        sig = np.asarray(self.sigma, dtype=float)
        zet = np.asarray(self.zeta, dtype=complex)
        if len(sig) != len(edges) + 1 or len(zet) != len(edges) + 1:
            raise RangeError("need one more table value than edges")
        if np.any(edges <= 0) or np.any(np.diff(edges) <= 0):
            raise RangeError("edges must be positive and increasing")
        if np.any(sig < 0) or np.any(sig > 1):
            raise RangeError("sigma values must lie in [0, 1]")
        if np.any(np.abs(np.abs(zet) - 1) > 1e-12):
            raise RangeError("zeta values must have unit modulus")
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "sigma", tuple(sig))
        object.__setattr__(self, "zeta", tuple(zet))
        mats = [gamma_entries(s, z) for s, z in zip(sig, zet)]
        lengths = np.diff(np.concatenate([[0.0], edges]))
        object.__setattr__(
            self, "_pc", PiecewiseConstant(tuple(zip(lengths, mats[:-1])), mats[-1])
        )

    def entries(self, t):
        return self._pc.entries(t)

    def primitive(self, t):
        return self._pc.primitive(t)

    def breakpoints(self, lo=0.0, hi=math.inf):
        return self._pc.breakpoints(lo, hi)

    def trace_inverse(self, tau):
        return np.atleast_1d(np.asarray(tau, dtype=float)).copy()

    def to_dict(self):
        return {
            "kind": self.kind,
            "edges": list(self.edges),
            "sigma": list(self.sigma),
            "zeta_angle": [float(np.angle(z)) for z in self.zeta],
        }


def gamma_entries(sigma: float, zeta: complex) -> tuple:
    """The matrix ``Gamma[sigma, zeta]`` as ``(h1, h3, h2)``.

    Written with the half angle ``phi = arg(zeta) / 2`` in ``[0, pi)`` as
    ``(cos^2 phi, sigma cos phi sin phi, sin^2 phi)``, which equals
    ``((1 + Re zeta)/2, sigma Im zeta / 2, (1 - Re zeta)/2)`` but keeps
    ``h3**2 <= h1 h2`` under rounding when ``zeta`` is close to 1.
    """
    phi = 0.5 * (cmath.phase(complex(zeta)) % (2 * math.pi))
    c, s = math.cos(phi), math.sin(phi)
    return (c * c, float(sigma) * c * s, s * s)


# ---------------------------------------------------------------------------
# monotone maps and wrappers


class MonotoneMap:
    """Strictly increasing bijection of ``(0, inf)``."""

    affine = False

    def __call__(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def inverse(self, t):
        raise NotImplementedError


@dataclass(frozen=True)
class Affine(MonotoneMap):
    c: float

    affine = True

    def __post_init__(self):
        if not self.c > 0:
            raise NotMonotone("affine map needs a positive factor")

    def __call__(self, x):
        return self.c * np.asarray(x, dtype=float)

    def deriv(self, x):
        return np.full(np.shape(x), self.c)

    def inverse(self, t):
        return np.asarray(t, dtype=float) / self.c

    def to_dict(self):
        return {"affine": self.c}


@dataclass(frozen=True)
class Power(MonotoneMap):
    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise NotMonotone("power map needs a positive exponent")

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** self.p

    def deriv(self, x):
        return self.p * np.asarray(x, dtype=float) ** (self.p - 1)

    def inverse(self, t):
        return np.asarray(t, dtype=float) ** (1.0 / self.p)

    def to_dict(self):
        return {"power": self.p}


class Tabulated(MonotoneMap):
    """Monotone cubic (PCHIP) interpolant through ``(x_k, y_k)``.

    The table must start at ``(0, 0)``; past the last node the map continues
    linearly with the end slope (the last secant if PCHIP clamps it to 0).
    """

    def __init__(self, x: Sequence[float], y: Sequence[float]):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.size < 2 or x[0] != 0 or y[0] != 0:
            raise NotMonotone("table must start at (0, 0) and have two or more nodes")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(y) <= 0):
            raise NotMonotone("tabulated map must be strictly increasing")
        self.x, self.y = x, y
        self._f = PchipInterpolator(x, y, extrapolate=False)
        self._df = self._f.derivative()
        self._finv = PchipInterpolator(y, x, extrapolate=False)
        self._slope = float(self._df(x[-1]))
        if self._slope <= 0:
            # PCHIP may clamp the one-sided end derivative to 0; continue with the last secant
            self._slope = float((y[-1] - y[-2]) / (x[-1] - x[-2]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.minimum(x, self.x[-1])
        return np.where(x <= self.x[-1], self._f(inside), self.y[-1] + self._slope * (x - self.x[-1]))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.minimum(x, self.x[-1])
        return np.where(x <= self.x[-1], self._df(inside), self._slope)

    def inverse(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.minimum(t, self.y[-1])
        return np.where(t <= self.y[-1], self._finv(inside), self.x[-1] + (t - self.y[-1]) / self._slope)

    def to_dict(self):
        return {"tabulated": {"x": self.x.tolist(), "y": self.y.tolist()}}


class TraceInverse(MonotoneMap):
    """Inverse of ``t -> m1(t) + m2(t)`` for a fixed model."""

    def __init__(self, model: Hamiltonian):
        self.model = model

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.model.trace_inverse(x.ravel()).reshape(x.shape)

    def deriv(self, x):
        h = self.model.entries(self(x))
        return 1.0 / (h[0] + h[2])

    def inverse(self, t):
        return self.model.trace_primitive(t)

    def to_dict(self):
        return {"trace_inverse": self.model.to_dict()}


class Reparameterized(Hamiltonian):
    """``H_hat(x) = H(phi(x)) phi'(x)``; primitives transform as ``M o phi``."""

    kind = "reparameterized"

    def __init__(self, base: Hamiltonian, phi: MonotoneMap):
        self.base = base
        self.phi = phi
        self.piecewise = base.piecewise and phi.affine
        self.limit_point_declared = base.limit_point_declared
        self.is_trace_normalized = isinstance(phi, TraceInverse) and phi.model is base

    def entries(self, x):
        x = _as_time(x)
        return self.base.entries(self.phi(x)) * self.phi.deriv(x)

    def primitive(self, x):
        x = _as_time(x)
        return self.base.primitive(self.phi(x))

    def breakpoints(self, lo=0.0, hi=math.inf):
        plo = float(self.phi(lo)) if lo > 0 else 0.0
        phi_hi = float(self.phi(hi)) if math.isfinite(hi) else math.inf
        bp = self.base.breakpoints(plo, phi_hi)
        return np.asarray(self.phi.inverse(bp), dtype=float)

    def trace_inverse(self, tau):
        if self.is_trace_normalized:
            return np.atleast_1d(np.asarray(tau, dtype=float)).copy()
        return super().trace_inverse(tau)

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(), "phi": self.phi.to_dict()}


class Rescaled(Hamiltonian):
    """Weighted rescaling ``t -> diag-weighted H(s t)``.

    Entries are ``s g1 h1(st), s g3 h3(st), s g2 h2(st)`` with
    ``g3 = sqrt(g1 g2)``; primitives are ``g1 m1(st), g3 m3(st), g2 m2(st)``.
    """

    kind = "rescaled"

    def __init__(self, base: Hamiltonian, s: float, g1: float, g2: float, mode: str):
        self.base = base
        self.s, self.g1, self.g2 = float(s), float(g1), float(g2)
        self.g3 = math.sqrt(self.g1 * self.g2)
        self.mode = mode
        self.piecewise = base.piecewise
        self.limit_point_declared = base.limit_point_declared
        self.is_trace_normalized = base.is_trace_normalized and mode == "plain-s"
        self._w = np.array([self.g1, self.g3, self.g2])[:, None]

    def _apply(self, arr, t):
        return (self._w * arr.reshape(3, -1)).reshape((3,) + np.shape(t))

    def entries(self, t):
        t = _as_time(t)
        return self.s * self._apply(self.base.entries(self.s * t), t)

    def primitive(self, t):
        t = _as_time(t)
        return self._apply(self.base.primitive(self.s * t), t)

    def breakpoints(self, lo=0.0, hi=math.inf):
        return self.base.breakpoints(self.s * lo, self.s * hi) / self.s

    def trace_inverse(self, tau):
        if self.is_trace_normalized:
            return np.atleast_1d(np.asarray(tau, dtype=float)).copy()
        if self.g1 == self.g2:
            return self.base.trace_inverse(np.asarray(tau, dtype=float) / self.g1) / self.s
        return super().trace_inverse(tau)

    def to_dict(self):
        return {
            "kind": self.kind,
            "base": self.base.to_dict(),
            "s": self.s,
            "g": [self.g1, self.g2],
            "mode": self.mode,
        }


# ---------------------------------------------------------------------------
# operations


@dataclass(frozen=True)
class PrimitiveMatrix:
    t: float
    m1: float
    m2: float
    m3: float

    @property
    def det(self) -> float:
        return self.m1 * self.m2 - self.m3 * self.m3

    @property
    def trace(self) -> float:
        return self.m1 + self.m2


def evaluate(H: Hamiltonian, t: float) -> tuple[float, float, float]:
    """Right-continuous representative ``(h1, h3, h2)`` at ``t``."""
    h = H.entries(np.asarray([t], dtype=float))
    return float(h[0, 0]), float(h[1, 0]), float(h[2, 0])


def primitive_by_quadrature(H: Hamiltonian, t: float, tol: float = 1e-10) -> PrimitiveMatrix:
    t = float(_as_time(t))
    bp = [float(b) for b in H.breakpoints(0.0, t)]
    m = quadrature.integrate_from_zero(H.entries, t, tol=tol, breakpoints=bp)
    return PrimitiveMatrix(t, float(m[0]), float(m[2]), float(m[1]))


def primitive(H: Hamiltonian, t: float, tol: float = 1e-10) -> PrimitiveMatrix:
    """``M(t)``: closed form when the model has one, adaptive quadrature otherwise."""
    if not H.closed_form_primitive:
        return primitive_by_quadrature(H, t, tol)
    m = H.primitive(np.asarray([t], dtype=float))
    return PrimitiveMatrix(float(t), float(m[0, 0]), float(m[2, 0]), float(m[1, 0]))


def reparameterize(H: Hamiltonian, phi: MonotoneMap) -> Hamiltonian:
    if not isinstance(phi, MonotoneMap):
        raise NotMonotone("phi must be a MonotoneMap descriptor")
    if isinstance(phi, Affine) and phi.c == 1.0:
        return H
    if isinstance(phi, Affine) and isinstance(H, PiecewiseConstant):
        segs = tuple((L / phi.c, tuple(phi.c * x for x in h)) for L, h in H.segments)
        return PiecewiseConstant(segs, tuple(phi.c * x for x in H.tail))
    return Reparameterized(H, phi)


def trace_reparameterize(H: Hamiltonian) -> Hamiltonian:
    """The unique trace-normalised representative on ``(0, inf)``."""
    if not H.limit_point_declared:
        raise NotLimitPoint("trace normalisation needs int_0^inf tr H = inf")
    if H.is_trace_normalized:
        return H
    if isinstance(H, PiecewiseConstant):
        segs = []
        for L, h in H.segments:
            tr = h[0] + h[2]
            segs.append((L * tr, tuple(x / tr for x in h)))
        tr = H.tail[0] + H.tail[2]
        return PiecewiseConstant(tuple(segs), tuple(x / tr for x in H.tail))
    if isinstance(H, DiagonalPower) and H.rho[0] == H.rho[1]:
        # t -> 2 t**rho has inverse (x/2)**(1/rho) and H_hat is constant.
        off = 0.5 if isinstance(H, SingularPower) else 0.0
        return PiecewiseConstant.constant((0.5, off, 0.5))
    return Reparameterized(H, TraceInverse(H))


# ---------------------------------------------------------------------------
# catalog and JSON schema

CATALOG = {
    "constant-singular": ("constant (1/2, 1/2, 1/2): singular, q = 1", lambda **p: PiecewiseConstant.constant((0.5, 0.5, 0.5))),
    "identity-half": ("constant identity/2: q = i", lambda **p: PiecewiseConstant.constant((0.5, 0.0, 0.5))),
    "two-phase": ("two-phase rotation, t_n = exp(-c n^2)", lambda **p: TwoPhaseRotation(
        p.get("phi_plus", math.pi / 3), p.get("phi_minus", 2 * math.pi / 3),
        {"exp_quadratic": p.get("c", 1.0)})),
    "power-log": ("t^(a-1)|log t|^b family", lambda **p: PowerLog(p.get("alpha", (1.0, 1.0)), p.get("beta", (2.0, 0.0)))),
    "singular-power": ("rank-one power family, h3 = sqrt(h1 h2)", lambda **p: SingularPower(p.get("rho", (1.0, 3.0)))),
    "diagonal-power": ("diag(r1 t^(r1-1), r2 t^(r2-1))", lambda **p: DiagonalPower(p.get("rho", (1.0, 3.0)))),
    "degenerate-h2": ("(1,0,0) on (0,1) then constant-singular tail", lambda **p: PiecewiseConstant(
        ((p.get("length", 1.0), (1.0, 0.0, 0.0)),), (0.5, 0.5, 0.5))),
    "degenerate-h1": ("(0,0,1) on (0,2) then constant-singular tail", lambda **p: PiecewiseConstant(
        ((p.get("length", 2.0), (0.0, 0.0, 1.0)),), (0.5, 0.5, 0.5))),
}
CATALOG_ALIASES = {"diag-half": "identity-half"}

#: The six families used for the high-energy estimate sweeps.
SWEEP_FAMILIES = (
    "constant-singular",
    "identity-half",
    "two-phase",
    "power-log",
    "singular-power",
    "diagonal-power",
)


def catalog(name: str, **params) -> Hamiltonian:
    name = CATALOG_ALIASES.get(name, name)
    if name not in CATALOG:
        raise ModelError(f"unknown catalog model {name!r}; known: {sorted(CATALOG)}")
    return CATALOG[name][1](**params)


def from_dict(d: dict) -> Hamiltonian:
    kind = d.get("kind")
    try:
        if kind == "piecewise_constant":
            segs = tuple((s["len"], tuple(s["h"])) for s in d.get("segments", []))
            return PiecewiseConstant(segs, tuple(d["tail"]))
        if kind == "power_log":
            return PowerLog(tuple(d["alpha"]), tuple(d["beta"]))
        if kind == "two_phase":
            return TwoPhaseRotation(d["phi_plus"], d["phi_minus"], d.get("t_seq", {"exp_quadratic": 1.0}))
        if kind == "diagonal_power":
            return DiagonalPower(tuple(d["rho"]))
        if kind == "singular_power":
            return SingularPower(tuple(d["rho"]))
        if kind == "gamma_form":
            zeta = np.exp(1j * np.asarray(d["zeta_angle"], dtype=float))
            return GammaForm(tuple(d["edges"]), tuple(d["sigma"]), tuple(zeta))
    except (KeyError, TypeError) as exc:
        raise ModelError(f"malformed {kind} model: {exc}") from exc
    raise ModelError(f"unknown model kind {kind!r}")


def load_model(path) -> Hamiltonian:
    with open(path) as fh:
        return from_dict(json.load(fh))
