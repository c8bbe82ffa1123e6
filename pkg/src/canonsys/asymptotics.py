"""Scalar diagnostics of a Hamiltonian.

Covers the determinant ratio ``d(H, t) = det M(t) / (m1(t) m2(t))``, the
spectral-to-spatial scale ``t_hat(r)``, the bounds ``A_H`` and ``L_H``, the
pointwise scalars ``sigma, phi, zeta, pi``, the normalised trace ``frak_t``,
the maps ``Gamma`` and ``Xi``, weighted rescalings and exact (or sampled)
measures of level-set preimages.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    BracketFailure,
    ModeAssumptionViolated,
    NotTraceNormalized,
    SamplingUnstable,
    ZeroDiagonalPrimitive,
)
from .hamiltonian import (
    DiagonalPower,
    GammaForm,
    Hamiltonian,
    PiecewiseConstant,
    Reparameterized,
    Rescaled,
    TwoPhaseRotation,
    gamma_entries,
)
from .intervals import Interval, IntervalSet
from . import quadrature
from .weyl import weyl_coefficient

SAMPLES = 2**16
TRACE_TOL = 1e-12


@dataclass(frozen=True)
class DetRatio:
    t: float
    value: float


@dataclass(frozen=True)
class ScalarRep:
    t: float
    sigma: float
    phi: float
    zeta: complex
    pi_val: float


@dataclass(frozen=True)
class AsymptoticsRow:
    r: float
    t_hat: float
    A: float
    L: float
    d_at_t_hat: float
    q_abs: float = math.nan
    q_im: float = math.nan
    ratio: float = math.nan
    err: float = math.nan


# ---------------------------------------------------------------------------
# d, t_hat, A, L


def d_values(H: Hamiltonian, t) -> np.ndarray:
    """Vectorised ``d(H, t)`` clamped to ``[0, 1]``."""
    m1, m3, m2 = H.primitive(np.asarray(t, dtype=float))
    if np.any(m1 <= 0) or np.any(m2 <= 0):
        raise ZeroDiagonalPrimitive("a diagonal primitive vanishes; d(H, t) is undefined")
    val = (m1 * m2 - m3 * m3) / (m1 * m2)
    return np.clip(val, 0.0, 1.0)


def d_of(H: Hamiltonian, t: float, tol: float = 1e-10) -> DetRatio:
    return DetRatio(float(t), float(d_values(H, np.array([t]))[0]))


def t_hat(H: Hamiltonian, r: float, tol: float = 1e-13) -> float:
    """Solve ``m1(t) m2(t) = 1/(8r)**2`` by bracketing and bisection on ``log t``."""
    if not r > 0:
        raise BracketFailure("t_hat needs r > 0")
    log_target = -2.0 * math.log(8.0 * r)

    def g(u):
        m = H.primitive(np.array([math.exp(u)]))
        with np.errstate(divide="ignore"):
            return float(np.log(m[0, 0]) + np.log(m[2, 0])) - log_target

    lo = hi = 0.0
    step = math.log(16.0)
    while g(lo) > 0:
        lo -= step
        if lo < math.log(1e-300):
            raise BracketFailure(f"no lower bracket for t_hat({r:g})")
    while g(hi) < 0:
        hi += step
        if hi > math.log(1e300):
            raise BracketFailure(f"no upper bracket for t_hat({r:g})")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(math.expm1(gm)) <= tol:
            return math.exp(mid)
        if gm < 0:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def A_L(H: Hamiltonian, r: float, tol: float = 1e-13) -> AsymptoticsRow:
    th = t_hat(H, r, tol)
    m1, m3, m2 = H.primitive(np.array([th]))[:, 0]
    A = math.sqrt(m1 / m2)
    d = float(d_values(H, np.array([th]))[0])
    return AsymptoticsRow(float(r), th, A, A * d, d)


def asymptotics_row(H: Hamiltonian, r: float, tol: float = 1e-6) -> AsymptoticsRow:
    """``A_L`` plus ``q(ir)`` from the Weyl solver."""
    row = A_L(H, r)
    s = weyl_coefficient(H, 1j * r, tol, strict=False)
    return AsymptoticsRow(
        row.r, row.t_hat, row.A, row.L, row.d_at_t_hat, abs(s.q), s.q.imag, s.ratio, s.err
    )


# ---------------------------------------------------------------------------
# pointwise scalars


def scalar_arrays(h: np.ndarray):
    """``sigma, phi, pi`` for stacked entries ``(h1, h3, h2)``."""
    h1, h3, h2 = (np.asarray(x, dtype=float) for x in h)
    nz = h3 != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma = np.where(nz, np.abs(h3) / np.sqrt(h1 * h2), 0.0)
        base = np.arctan2(np.sqrt(h2), np.sqrt(h1))  # Arccot sqrt(h1/h2)
        pi_val = np.where(nz, np.sign(h3) * h2 / h1, 0.0)
    sigma = np.minimum(sigma, 1.0)
    phi = np.where(h2 == 0, 0.0, np.where(h3 < 0, math.pi - base, base))
    return sigma, phi, pi_val


def scalar_rep(H: Hamiltonian, t: float) -> ScalarRep:
    h = H.entries(np.array([t]))
    sigma, phi, pi_val = (float(x[0]) for x in scalar_arrays(h))
    return ScalarRep(float(t), sigma, phi, complex(math.cos(2 * phi), math.sin(2 * phi)), pi_val)


def scalar_rep_from_entries(h1: float, h3: float, h2: float) -> ScalarRep:
    sigma, phi, pi_val = (float(x[0]) for x in scalar_arrays(np.array([[h1], [h3], [h2]])))
    return ScalarRep(math.nan, sigma, phi, complex(math.cos(2 * phi), math.sin(2 * phi)), pi_val)


def pi_weighted(H: Hamiltonian, s: float, t: float) -> float:
    """``pi_H(s t) * m1(s) / m2(s)``."""
    m1, _, m2 = H.primitive(np.array([s]))[:, 0]
    if m1 <= 0 or m2 <= 0:
        raise ZeroDiagonalPrimitive("weight m1(s)/m2(s) undefined")
    return scalar_rep(H, s * t).pi_val * m1 / m2


def frak_t(H: Hamiltonian, s: float, t) -> np.ndarray | float:
    """``m1(s t)/m1(s) + m2(s t)/m2(s)``."""
    ms = H.primitive(np.array([s]))[:, 0]
    if ms[0] <= 0 or ms[2] <= 0:
        raise ZeroDiagonalPrimitive("frak_t needs m1(s), m2(s) > 0")
    tt = np.asarray(t, dtype=float)
    st = s * tt
    pos = st > 0  # the primitive vanishes at 0, also when s t underflows
    m = H.primitive(np.where(pos, st, 1.0))
    out = np.where(pos, m[0] / ms[0] + m[2] / ms[2], 0.0).reshape(np.shape(tt))
    return float(out) if np.ndim(t) == 0 else out


def _linear_trace(H: Hamiltonian) -> bool:
    """Models whose ``m1`` and ``m2`` are both proportional to ``t``."""
    if isinstance(H, TwoPhaseRotation):
        return True
    return isinstance(H, PiecewiseConstant) and not H.segments


def frak_t_inv(H: Hamiltonian, s: float, x, tol: float = 1e-14):
    """Inverse of :func:`frak_t` in ``t``."""
    xs = np.asarray(x, dtype=float)
    if _linear_trace(H):
        out = xs / 2.0
    elif isinstance(H, DiagonalPower) and H.rho[0] == H.rho[1]:
        out = (xs / 2.0) ** (1.0 / H.rho[0])
    else:
        flat = np.atleast_1d(xs).ravel()
        lo = np.full(flat.shape, -1.0)
        hi = np.full(flat.shape, 1.0)
        for _ in range(60):
            bad = frak_t(H, s, np.exp(lo)) > flat
            if not bad.any():
                break
            lo = np.where(bad, lo - 8.0, lo)
        for _ in range(60):
            bad = frak_t(H, s, np.exp(hi)) < flat
            if not bad.any():
                break
            hi = np.where(bad, hi + 8.0, hi)
        if np.any(frak_t(H, s, np.exp(lo)) > flat) or np.any(frak_t(H, s, np.exp(hi)) < flat):
            raise BracketFailure("frak_t inverse could not be bracketed")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = frak_t(H, s, np.exp(mid)) < flat
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < tol:
                break
        out = np.exp(0.5 * (lo + hi)).reshape(np.shape(xs))
        out = np.where(xs > 0, out, 0.0)
    return float(out) if np.ndim(x) == 0 else out


# ---------------------------------------------------------------------------
# Gamma, Xi and rescaling


def gamma_map(edges, sigma, zeta) -> GammaForm:
    """``Gamma[sigma, zeta]`` for piecewise-constant tables on ``(0, inf)``."""
    return GammaForm(tuple(edges), tuple(sigma), tuple(zeta))


def xi_map(H: Hamiltonian, t: float) -> tuple[float, complex]:
    h = H.entries(np.array([t]))[:, 0]
    if abs(h[0] + h[2] - 1.0) > TRACE_TOL:
        raise NotTraceNormalized(f"tr H({t:g}) = {h[0] + h[2]:.15g}")
    rep = scalar_rep(H, t)
    return rep.sigma, rep.zeta


def gamma_stability_norm(a: tuple[float, complex], b: tuple[float, complex]) -> tuple[float, float]:
    """``(||Gamma[a] - Gamma[b]||_1, |d sigma| + |d zeta|)`` with the entrywise sum norm."""
    ga = np.array(gamma_entries(*a))
    gb = np.array(gamma_entries(*b))
    diff = np.abs(ga - gb)
    lhs = diff[0] + 2 * diff[1] + diff[2]
    return float(lhs), abs(a[0] - b[0]) + abs(a[1] - b[1])


def rescale(H: Hamiltonian, s: float, mode: str = "primitive-weights") -> Rescaled:
    """Weighted rescaling ``A_s H``.

    ``mode="primitive-weights"`` uses ``g_j = 1/m_j(s)``; ``mode="plain-s"``
    uses ``g1 = g2 = 1/s`` and needs a trace-normalised model (the caller
    vouches for ``liminf m1(t) m2(t) / t**2 > 0``).
    """
    if not s > 0:
        raise ModeAssumptionViolated("rescaling needs s > 0")
    if mode == "primitive-weights":
        m1, _, m2 = H.primitive(np.array([s]))[:, 0]
        if m1 <= 0 or m2 <= 0:
            raise ZeroDiagonalPrimitive("primitive weights need m1(s), m2(s) > 0")
        return Rescaled(H, s, 1.0 / m1, 1.0 / m2, mode)
    if mode == "plain-s":
        if not H.is_trace_normalized:
            raise ModeAssumptionViolated("plain-s rescaling needs tr H = 1")
        return Rescaled(H, s, 1.0 / s, 1.0 / s, mode)
    raise ModeAssumptionViolated(f"unknown rescaling mode {mode!r}")


# ---------------------------------------------------------------------------
# preimage measures


@dataclass(frozen=True)
class Measure:
    """Value of a preimage measure; ``estimates`` holds both sampled values."""

    value: float
    exact: bool
    estimates: tuple = ()

    def __float__(self):
        return self.value


def _values(quantity, scalars, s_weight):
    sigma, phi, pi_val = scalars
    if quantity == "sigma":
        return sigma
    if quantity == "pi":
        return pi_val
    if quantity == "pi_weighted":
        return pi_val * s_weight
    if quantity == "zeta-arc":
        return np.mod(2 * phi, 2 * math.pi)
    raise ValueError(f"unknown quantity {quantity!r}")


def _fast_map(phi, x: np.ndarray) -> np.ndarray:
    """``phi(x)`` through a log-log PCHIP table when ``x`` is large."""
    if x.size <= 4096:
        return phi(x)
    nodes = np.geomspace(x.min(), x.max(), 2049)
    table = PchipInterpolator(np.log(nodes), np.log(phi(nodes)))
    return np.exp(table(np.log(x)))


@functools.lru_cache(maxsize=256)
def _sampled_scalars(H, window, n, s, transport):
    x = (np.arange(n) + 0.5) * (window / n)
    u = frak_t_inv(H, s, x) if transport == "frak_t" else x
    if isinstance(H, Reparameterized):
        # sigma, phi and pi ignore the positive factor phi'(x)
        h = H.base.entries(_fast_map(H.phi, s * u))
    else:
        h = H.entries(s * u)
    return scalar_arrays(h)


def _member(quantity, vals, level):
    if quantity == "sigma":
        lo, hi = (0.0, float(level)) if np.ndim(level) == 0 else level
        return (vals >= lo - 1e-12) & (vals <= hi + 1e-12)
    if quantity in ("pi", "pi_weighted"):
        a, b = level
        return (vals > a) & (vals < b)
    alpha, beta = level
    width = beta - alpha
    rel = np.mod(vals - alpha, 2 * math.pi)
    on = (rel <= width + 1e-12) | (rel >= 2 * math.pi - 1e-12)
    return on if width < 2 * math.pi else np.ones_like(vals, dtype=bool)


def level_set(H: Hamiltonian, quantity: str, level, t_max: float, s: float = 1.0) -> IntervalSet:
    """``{u in (0, t_max) : Q_H(s u) in level}`` for piecewise models, exactly."""
    if not H.piecewise:
        raise ValueError("exact level sets need a piecewise model")
    weight = 1.0
    if quantity == "pi_weighted":
        m1, _, m2 = H.primitive(np.array([s]))[:, 0]
        weight = m1 / m2
    hi = s * t_max
    bp = np.concatenate([[0.0], H.breakpoints(0.0, hi), [hi]])
    probe = bp[:-1].copy()
    probe[0] = 0.5 * bp[1]
    h = H.entries(probe)
    inside = _member(quantity, _values(quantity, scalar_arrays(h), weight), level)
    return IntervalSet(Interval(a / s, b / s) for a, b, k in zip(bp[:-1], bp[1:], inside) if k)


def preimage_measure(
    H: Hamiltonian,
    quantity: str,
    level,
    window: float,
    s: float | None = None,
    transport: str = "none",
) -> Measure:
    """Lebesgue measure of ``(0, window) & T(E)`` where ``E`` is a preimage.

    ``E = {u : Q(s u) in level}`` with ``Q`` one of ``sigma``, ``pi``,
    ``pi_weighted`` (``pi`` times ``m1(s)/m2(s)``) or ``zeta-arc`` (the angle
    ``2 phi`` in ``[0, 2 pi)`` on the arc ``level = (alpha, beta)``). ``T`` is
    the identity or ``frak_t`` (``transport="frak_t"``).

    Piecewise models are handled with exact interval arithmetic; other models
    are sampled at ``2**16`` and ``2**17`` stratified midpoints, and a
    :class:`SamplingUnstable` warning is issued if the two differ by > 5%.
    """
    s = 1.0 if s is None else float(s)
    if transport not in ("none", "frak_t"):
        raise ValueError("transport must be 'none' or 'frak_t'")
    if transport == "frak_t":
        u_max = frak_t_inv(H, s, window)
    else:
        u_max = float(window)
    if H.piecewise:
        E = level_set(H, quantity, level, u_max, s)
        if transport == "none":
            return Measure(E.measure, True)
        total = math.fsum(float(frak_t(H, s, iv.hi)) - float(frak_t(H, s, iv.lo)) for iv in E)
        return Measure(total, True)
    weight = 1.0
    if quantity == "pi_weighted":
        m1, _, m2 = H.primitive(np.array([s]))[:, 0]
        weight = m1 / m2
    ests = []
    for n in (SAMPLES, 2 * SAMPLES):
        scalars = _sampled_scalars(H, float(window), n, s, transport)
        inside = _member(quantity, _values(quantity, scalars, weight), level)
        ests.append(float(window * inside.mean()))
    a, b = ests
    if abs(a - b) > 0.05 * max(abs(a), abs(b), 1e-300):
        warnings.warn(f"sampled measures {a:.6g} and {b:.6g} differ by > 5%", SamplingUnstable)
    return Measure(b, False, (a, b))


def restricted_primitive(H: Hamiltonian, I: IntervalSet, t: float) -> np.ndarray:
    """``int_0^t 1_I H`` as ``(m1, m3, m2)``, exact for closed-form primitives."""
    acc = np.zeros(3)
    for iv in I.clip(0.0, t):
        lo = H.primitive(np.array([iv.lo]))[:, 0] if iv.lo > 0 else np.zeros(3)
        acc += H.primitive(np.array([iv.hi]))[:, 0] - lo
    return acc


def det_integral_form(H: Hamiltonian, t: float, tol: float = 1e-10) -> float:
    """``(1/t) int_0^t det H / (h1 h2)`` with the integrand 1 where ``h1 h2 = 0``."""
    if H.piecewise:
        bp = np.concatenate([[0.0], H.breakpoints(0.0, t), [t]])
        probe = bp[:-1].copy()
        probe[0] = 0.5 * bp[1]
        sigma = scalar_arrays(H.entries(probe))[0]
        return float(math.fsum(np.diff(bp) * (1.0 - sigma**2)) / t)

    def f(x):
        return 1.0 - scalar_arrays(H.entries(x))[0] ** 2

    bp = [float(b) for b in H.breakpoints(0.0, t)]
    return float(quadrature.integrate_from_zero(f, t, tol=tol * t, breakpoints=bp) / t)


def sigma_square_average(H: Hamiltonian, t: float) -> float:
    """``(1/t) int_0^t sigma**2`` via the interval sets of each sigma level."""
    bp = np.concatenate([[0.0], H.breakpoints(0.0, t), [t]])
    probe = bp[:-1].copy()
    probe[0] = 0.5 * bp[1]
    sigma = scalar_arrays(H.entries(probe))[0]
    acc = []
    for level in np.unique(sigma):
        E = level_set(H, "sigma", (level, level), t)
        acc.append(level**2 * E.measure)
    return math.fsum(acc) / t
