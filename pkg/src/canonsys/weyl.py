"""Fundamental solutions, Weyl discs and Weyl coefficients.

The fundamental solution solves ``W' = -z W H J`` with ``W(0) = I``. Over a
cell ``[a, b]`` it is advanced by ``W <- W exp(Omega)`` where ``Omega`` is a
fourth-order Magnus approximation: the exact first term
``-z (M(b) - M(a)) J`` plus a commutator correction from two Gauss points.
``Omega`` is trace-free, so its exponential has the closed form
``cosh(mu) I + sinh(mu)/mu Omega`` with ``mu**2 = -det Omega``. For
piecewise-constant models the commutator vanishes and the step is exact.

Every step matrix is divided by ``exp(|Re mu|)``; the discarded logarithm is
accumulated separately. Mobius maps are projective, so discs and ``q`` do not
see the scaling.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NoDegenerateStart, NotLimitPoint, StepFailure
from .hamiltonian import Hamiltonian, PiecewiseConstant

#: Size of the first cell ``(0, t_lo)`` in units of ``1/|z|`` of trace.
FIRST_CELL = 1e-9
#: Trace-time cells per decade for smooth models; doubled until Richardson agrees.
CELLS_PER_DECADE = 12
MAX_CELLS_PER_DECADE = 768
MAX_DOUBLINGS = 40
COLLINEAR_TOL = 1e-14
#: ``det W`` is compared with 1 only while ``|W|**2`` stays below this.
DET_RESOLVABLE = 1e5
#: Stop doubling once a radius exceeds this multiple of the smallest one.
ROUNDING_GROWTH = 2.0
_GAUSS = 0.5 / math.sqrt(3.0)


@dataclass(frozen=True)
class FundamentalSolution:
    """``W(T, z)`` stored as ``exp(log_scale) * W_scaled``."""

    T: float
    z: complex
    W: np.ndarray
    log_scale: float = 0.0

    @property
    def unscaled(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.W * math.exp(min(self.log_scale, 700.0))

    @property
    def det(self) -> complex:
        w = self.W
        d = w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0]
        return complex(d * math.exp(2 * min(self.log_scale, 350.0)))

    @property
    def det_resolvable(self) -> bool:
        """Whether ``det`` is meaningful to 1e-8.

        The rounding of ``ad - bc`` after many products grows like
        ``n eps |W|**2``; measured worst cases stay below ``3e-14 |W|**2``.
        """
        return self.log_scale + math.log(max(np.abs(self.W).max(), 1e-300)) < 0.5 * math.log(DET_RESOLVABLE)


@dataclass(frozen=True)
class WeylDisc:
    T: float
    z: complex
    center: complex
    radius: float

    @property
    def half_plane(self) -> bool:
        return math.isinf(self.radius)


@dataclass(frozen=True)
class NevanlinnaSample:
    z: complex
    q: complex
    err: float
    T_used: float
    converged: bool = True

    @property
    def ratio(self) -> float:
        return self.q.imag / abs(self.q) if self.q != 0 else math.nan


# ---------------------------------------------------------------------------
# step kernel


def _cell_generators(H: Hamiltonian, z: complex, edges: np.ndarray, magnus4: bool) -> np.ndarray:
    """Trace-free Magnus exponents for the cells between consecutive ``edges``.

    ``edges`` starts at 0 (the first cell uses the primitive only).
    """
    M = np.zeros((3, len(edges)))
    M[:, 1:] = H.primitive(edges[1:])
    dM = np.diff(M, axis=1)
    n = dM.shape[1]
    m1, m3, m2 = dM
    om = np.empty((n, 2, 2), dtype=complex)
    # -z * dM * J with dM J = [[m3, -m1], [m2, -m3]]
    om[:, 0, 0] = -z * m3
    om[:, 0, 1] = z * m1
    om[:, 1, 0] = -z * m2
    om[:, 1, 1] = z * m3
    if magnus4 and n > 1:
        a, b = edges[1:-1], edges[2:]
        mid, half = 0.5 * (a + b), b - a
        h1 = H.entries(mid - _GAUSS * half)
        h2 = H.entries(mid + _GAUSS * half)
        # W' = W B acts from the right, so the correction is [B(g1), B(g2)]
        x = _hj(h1)
        y = _hj(h2)
        comm = x @ y - y @ x
        coef = (math.sqrt(3.0) / 12.0) * half**2 * z * z
        om[1:] += coef[:, None, None] * comm
        om[:, 1, 1] = -om[:, 0, 0]
    return om


def _hj(h):
    out = np.empty((h.shape[1], 2, 2))
    out[:, 0, 0] = h[1]
    out[:, 0, 1] = -h[0]
    out[:, 1, 0] = h[2]
    out[:, 1, 1] = -h[1]
    return out


def _expm_tracefree(om: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scaled exponentials of trace-free 2x2 matrices and their log scales."""
    mu2 = om[:, 0, 0] ** 2 + om[:, 0, 1] * om[:, 1, 0]
    mu = np.sqrt(mu2)  # principal branch, Re mu >= 0
    small = np.abs(mu) < 1e-4
    c = np.empty_like(mu)
    s = np.empty_like(mu)
    shift = np.where(small, 0.0, mu.real)
    ms = mu[~small]
    ep = np.exp(ms - ms.real)
    em = np.exp(-ms - ms.real)
    c[~small] = 0.5 * (ep + em)
    s[~small] = 0.5 * (ep - em) / ms
    m2s = mu2[small]
    c[small] = 1 + m2s / 2 + m2s * m2s / 24
    s[small] = 1 + m2s / 6 + m2s * m2s / 120
    E = s[:, None, None] * om
    E[:, 0, 0] += c
    E[:, 1, 1] += c
    if not np.all(np.isfinite(E)):
        raise StepFailure("non-finite step matrix")
    return E, shift


def _ordered_product(E: np.ndarray, shift: np.ndarray) -> tuple[np.ndarray, float]:
    """``E[0] @ E[1] @ ... @ E[n-1]`` by pairwise reduction with renormalisation."""
    logs = shift.astype(float).copy()
    while len(E) > 1:
        if len(E) % 2:
            E = np.concatenate([E, np.eye(2, dtype=complex)[None]])
            logs = np.append(logs, 0.0)
        P = E[0::2] @ E[1::2]
        logs = logs[0::2] + logs[1::2]
        norm = np.abs(P).max(axis=(1, 2))
        norm = np.where(norm > 0, norm, 1.0)
        E = P / norm[:, None, None]
        logs = logs + np.log(norm)
    if len(E) == 0:
        return np.eye(2, dtype=complex), 0.0
    return E[0], float(logs[0])


# ---------------------------------------------------------------------------
# propagation


class _Propagator:
    """Incremental propagation along a fixed trace-time grid."""

    def __init__(self, H: Hamiltonian, z: complex, K: int | None):
        self.H = H
        self.z = complex(z)
        self.K = K
        self.W = np.eye(2, dtype=complex)
        self.log_scale = 0.0
        self.chunks: list[np.ndarray] = []
        self.t = 0.0
        self.tau = 0.0
        az = max(abs(self.z), 1e-300)
        self._tau_lo = FIRST_CELL / az

    def _edges(self, tau_a: float, tau_b: float) -> np.ndarray:
        """Cell boundaries in ``t`` covering trace-time ``(tau_a, tau_b]``."""
        H = self.H
        if self.K is None:
            t_b = float(H.trace_inverse(np.array([tau_b]))[0])
            inner = H.breakpoints(self.t, t_b)
            return np.concatenate([inner, [t_b]])
        lo = max(tau_a, self._tau_lo)
        grid = []
        if tau_a == 0.0:
            grid.append(self._tau_lo)
        k0 = math.floor(self.K * math.log10(lo)) + 1
        k1 = math.ceil(self.K * math.log10(tau_b))
        ks = np.arange(k0, k1)
        grid.extend(10.0 ** (ks / self.K))
        grid = np.asarray(grid)
        grid = grid[(grid > tau_a) & (grid < tau_b)]
        ts = H.trace_inverse(np.concatenate([grid, [tau_b]]))
        t_b = float(ts[-1])
        bp = H.breakpoints(self.t, t_b)
        return np.unique(np.concatenate([ts, bp]))

    def advance(self, tau_b: float):
        edges = self._edges(self.tau, tau_b)
        edges = edges[edges > self.t]
        if len(edges):
            full = np.concatenate([[self.t], edges])
            om = self._generators(full)
            E, shift = _expm_tracefree(om)
            P, lp = _ordered_product(E, shift)
            self.chunks.append(P)
            W = self.W @ P
            nrm = np.abs(W).max()
            self.W = W / nrm
            self.log_scale += lp + math.log(nrm)
            self.t = float(edges[-1])
        self.tau = tau_b

    def pole(self) -> complex:
        """``W^{-1}(inf)``, composed chunk by chunk."""
        p = complex(math.inf)
        for P in self.chunks:
            p = mobius(np.array([[P[1, 1], -P[0, 1]], [-P[1, 0], P[0, 0]]]), p)
        return p

    def points(self) -> list[complex]:
        """Three boundary points of the current disc, composed chunk by chunk.

        The preimages are real points ``u + v tan(theta)``, ``theta`` in
        ``{-pi/3, 0, pi/3}``, where ``u - i v`` is the pole of ``W``; their
        images sit 120 degrees apart on the circle. The fixed choice 0, 1,
        inf can land within ``O(1/T**2)`` of each other on a disc of radius
        ``O(1/T)``, which leaves the circumcircle to rounding.
        """
        p = self.pole()
        if cmath.isfinite(p) and -p.imag > 0:
            u, v = p.real, -p.imag
            pts = [complex(u + v * math.tan(th)) for th in (-math.pi / 3, 0.0, math.pi / 3)]
        else:
            pts = [complex(0.0), complex(1.0), complex(math.inf)]
        for P in reversed(self.chunks):
            pts = [mobius(P, p) for p in pts]
        return pts

    def receding(self, tol: float) -> bool:
        """Whether the disc is a half-plane avoiding 0 at distance ``>= 1/tol``.

        On the Riemann sphere such a disc is a small cap around infinity,
        which is how ``q = inf`` (``h2 = 0`` near infinity) shows up.
        """
        fin = [p for p in self.points() if cmath.isfinite(p)]
        if len(fin) < 2 or fin[0] == fin[1]:
            return False
        a, b = self.W[0, 0], self.W[0, 1]
        if a == 0 or (-b / a).imag > 0:
            return False
        u = fin[1] - fin[0]
        dist = abs((u.conjugate() * -fin[0]).imag) / abs(u)
        return dist >= 1.0 / tol

    def disc(self) -> tuple[complex, float]:
        """Current Weyl disc by backward composition of the chunk maps.

        Multiplying the chunks out first loses the disc when the radius decays
        only algebraically (rounding grows like ``eps |W|**2``); applying the
        Mobius maps one after another keeps it at ``eps |W|``.
        """
        return circle_through(*self.points(), W=self.W, log_scale=self.log_scale)

    def advance_to_t(self, T: float):
        edges = self.H.breakpoints(self.t, T)
        if self.K is not None:
            tr = self.H.trace_primitive(np.array([T]))[0]
            lo = max(self.tau, self._tau_lo)
            if tr > lo:
                n = max(int(math.ceil(self.K * math.log10(tr / lo))), 1)
                taus = np.geomspace(lo, tr, n + 1)[:-1]
                if self.tau == 0.0:
                    taus = np.concatenate([[self._tau_lo], taus])
                ts = self.H.trace_inverse(taus)
                edges = np.concatenate([edges, ts])
        edges = np.unique(np.concatenate([edges, [T]]))
        edges = edges[(edges > self.t) & (edges <= T)]
        if len(edges):
            om = self._generators(np.concatenate([[self.t], edges]))
            E, shift = _expm_tracefree(om)
            P, lp = _ordered_product(E, shift)
            W = self.W @ P
            nrm = np.abs(W).max()
            self.W = W / nrm
            self.log_scale += lp + math.log(nrm)
            self.t = T

    def _generators(self, full):
        if full[0] == 0.0:
            return _cell_generators(self.H, self.z, full, self.K is not None)
        # cells start mid-way: prepend the already-covered part and drop it
        om = _cell_generators(self.H, self.z, np.concatenate([[0.0], full]), self.K is not None)
        return om[1:]

    def solution(self) -> FundamentalSolution:
        return FundamentalSolution(self.t, self.z, self.W.copy(), self.log_scale)


def _smooth(H: Hamiltonian) -> bool:
    return not H.piecewise


def propagate(H: Hamiltonian, T: float, z: complex, tol: float = 1e-10) -> FundamentalSolution:
    """Fundamental solution ``W(T, z)``.

    Piecewise-constant models are propagated exactly segment by segment.
    Smooth models use trace-time cells refined by doubling until two
    consecutive resolutions agree to ``tol`` (entrywise, after normalisation).

    Raises
    ------
    StepFailure
        If the refinement limit is reached without agreement.
    """
    if not T > 0:
        raise StepFailure("propagation needs T > 0")
    if not _smooth(H):
        p = _Propagator(H, z, None)
        p.advance_to_t(float(T))
        return p.solution()
    K = CELLS_PER_DECADE
    prev = None
    while K <= MAX_CELLS_PER_DECADE:
        p = _Propagator(H, z, K)
        p.advance_to_t(float(T))
        sol = p.solution()
        if prev is not None:
            a = prev.W * math.exp(prev.log_scale - sol.log_scale)
            if np.abs(a - sol.W).max() <= tol:
                return sol
        prev = sol
        K *= 2
    raise StepFailure(f"step refinement did not reach tol={tol:g} at T={T:g}")


# ---------------------------------------------------------------------------
# discs


def mobius(W: np.ndarray, zeta: complex) -> complex:
    if cmath.isinf(zeta):
        return W[0, 0] / W[1, 0] if W[1, 0] != 0 else complex(math.inf)
    den = W[1, 0] * zeta + W[1, 1]
    if den == 0:
        return complex(math.inf)
    return (W[0, 0] * zeta + W[0, 1]) / den


def disc_from_matrix(W: np.ndarray, log_scale: float = 0.0) -> tuple[complex, float]:
    """Circle through the images of 0, 1 and infinity under ``W``.

    Returns ``(nan, inf)`` when the image is a half-plane.
    """
    pts = [mobius(W, complex(0.0)), mobius(W, complex(1.0)), mobius(W, complex(math.inf))]
    return circle_through(*pts, W=W, log_scale=log_scale)


def circle_through(p0: complex, p1: complex, pinf: complex, W=None, log_scale: float = 0.0):
    """Circumcircle ``(center, radius)`` of three boundary points.

    A point at infinity or collinear points (relative tolerance
    ``COLLINEAR_TOL``) mean a half-plane, reported as ``(nan, inf)``. If the
    points agree to rounding, the radius falls back on the algebraic formula
    ``|det W| / (2 |Im(w21 conj(w22))|)`` for the accumulated matrix ``W``.
    """
    if not all(cmath.isfinite(p) for p in (p0, p1, pinf)):
        return complex(math.nan, math.nan), math.inf
    d1, d2 = p1 - p0, pinf - p0
    spread = max(abs(d1), abs(d2), abs(pinf - p1))
    ref = max(1.0, abs(p0))
    if spread <= 1e-12 * ref:
        if W is None:
            return p0, 0.5 * spread
        a, b, c, d = W[0, 0], W[0, 1], W[1, 0], W[1, 1]
        kappa = (c * d.conjugate()).imag
        det_s = math.exp(-2 * log_scale) if log_scale < 350 else 0.0
        alg = det_s / (2 * abs(kappa)) if kappa != 0 else math.inf
        return p0, max(alg, 0.5 * spread)
    cross = (d1.conjugate() * d2).imag
    if abs(cross) <= COLLINEAR_TOL * spread * spread:
        return complex(math.nan, math.nan), math.inf
    off = (abs(d1) ** 2 * d2 - abs(d2) ** 2 * d1) / (2j * cross)
    return p0 + off, abs(off)


def weyl_disc(H: Hamiltonian, T: float, z: complex, tol: float = 1e-10) -> WeylDisc:
    if not complex(z).imag > 0:
        raise ValueError("Weyl discs need Im z > 0")
    sol = propagate(H, T, z, tol)
    center, radius = disc_from_matrix(sol.W, sol.log_scale)
    return WeylDisc(float(T), complex(z), center, radius)


# ---------------------------------------------------------------------------
# Weyl coefficient


def _run(H, z, tol, K, tau0, record=None):
    p = _Propagator(H, z, K)
    best = None
    for k in range(MAX_DOUBLINGS + 1):
        p.advance(tau0 * 2.0**k)
        center, radius = p.disc()
        if record is not None:
            record.append((p.t, center, radius, p.solution()))
        if math.isfinite(radius):
            if best is None or radius <= best[1]:
                best = (center, radius, p.t)
            elif radius > ROUNDING_GROWTH * best[1]:
                # exact discs are nested: growth means rounding has taken over
                return best, False
            if radius <= tol:
                return best, True
        elif best is None and p.receding(tol):
            return (complex(math.inf, 0.0), 0.0, p.t), True
    return best, False


def weyl_coefficient(
    H: Hamiltonian,
    z: complex,
    tol: float = 1e-8,
    *,
    strict: bool = True,
    tau0: float = 1.0,
) -> NevanlinnaSample:
    """Weyl coefficient ``q_H(z)`` with an error bound.

    Truncation points double in trace time from ``tau0`` up to
    ``2**40 * tau0``; the disc centre at the first truncation with radius
    ``<= tol`` is returned. For smooth models the cell resolution is also
    doubled until two resolutions agree, and ``err`` adds their discrepancy
    to the radius.

    Raises
    ------
    NotLimitPoint
        If the model does not declare the limit point case.
    NoConvergence
        If ``strict`` and the radius stays above ``tol``; ``.sample`` holds
        the best estimate.
    """
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("q_H is evaluated in the open upper half-plane")
    if not H.limit_point_declared:
        raise NotLimitPoint("Weyl coefficient needs the limit point case")
    if not _smooth(H):
        best, ok = _run(H, z, tol, None, tau0)
        return _finish(z, best, ok, 0.0, tol, strict)
    K = CELLS_PER_DECADE
    prev = None
    while K <= MAX_CELLS_PER_DECADE:
        best, ok = _run(H, z, 0.5 * tol, K, tau0)
        if best is not None and prev is not None:
            diff = 0.0 if best[0] == prev[0] else abs(best[0] - prev[0])
            if diff <= 0.5 * tol or not ok:
                return _finish(z, best, ok, diff, tol, strict)
        prev = best
        K *= 2
    diff = abs(best[0] - prev[0]) if best and prev else math.inf
    return _finish(z, best, False, diff, tol, strict)


def _finish(z, best, ok, diff, tol, strict):
    if best is None:
        sample = NevanlinnaSample(z, complex(math.nan, math.nan), math.inf, math.nan, False)
        raise NoConvergence("Weyl disc never became bounded", sample)
    center, radius, T = best
    err = radius + diff
    sample = NevanlinnaSample(z, complex(center), float(err), float(T), bool(ok and err <= tol))
    if strict and not sample.converged:
        raise NoConvergence(f"Weyl disc radius {err:.3g} above tol {tol:.3g}", sample)
    return sample


def disc_history(H: Hamiltonian, z: complex, n_doublings: int = 15, tau0: float = 1.0):
    """Discs and fundamental solutions at ``tau0 * 2**k`` for ``k = 0..n``.

    Returns a list of ``(T, WeylDisc, FundamentalSolution)``.
    """
    K = CELLS_PER_DECADE * 4 if _smooth(H) else None
    p = _Propagator(H, complex(z), K)
    out = []
    for k in range(n_doublings + 1):
        p.advance(tau0 * 2.0**k)
        center, radius = p.disc()
        out.append((p.t, WeylDisc(p.t, complex(z), center, radius), p.solution()))
    return out


def constant_q(h1: float, h3: float, h2: float) -> complex | float:
    """Weyl coefficient of a constant Hamiltonian; ``math.inf`` when ``h2 = 0``."""
    det = h1 * h2 - h3 * h3
    if det <= 1e-14 * (h1 + h2) ** 2:
        return math.inf if h2 == 0 else complex(h3 / h2)
    return complex(h3, math.sqrt(det)) / h2


# ---------------------------------------------------------------------------
# initially degenerate Hamiltonians


@dataclass(frozen=True)
class DegenerateStartReport:
    side: str
    integral: float
    ys: tuple
    values: tuple
    expected: complex
    rel_dev: float
    ratios: tuple


def degenerate_start_asymptote(
    H: Hamiltonian, side: str, ys=(1e2, 1e3, 1e4), tol: float = 1e-10
) -> DegenerateStartReport:
    """Compare ``q(iy)/(iy)`` or ``y q(iy)`` with the degenerate-start limits.

    ``side="h2-vanishes"``: ``q(iy)/(iy) -> int tr H`` over the initial
    interval where ``h2 = 0``. ``side="h1-vanishes"``: ``y q(iy) -> i / int tr H``.
    """
    if not isinstance(H, PiecewiseConstant):
        raise NoDegenerateStart("degenerate starts are detected only for piecewise-constant models")
    idx = {"h2-vanishes": 2, "h1-vanishes": 0}.get(side)
    if idx is None:
        raise ValueError("side must be 'h2-vanishes' or 'h1-vanishes'")
    integral = 0.0
    for L, h in H.segments:
        if h[idx] != 0:
            break
        integral += L * (h[0] + h[2])
    if integral == 0.0:
        raise NoDegenerateStart(f"model does not start with {side}")
    values, ratios = [], []
    for y in ys:
        s = weyl_coefficient(H, 1j * y, tol * max(1.0, y) if idx == 2 else tol / y, strict=False)
        values.append(s.q / (1j * y) if idx == 2 else y * s.q)
        ratios.append(s.ratio)
    expected = complex(integral) if idx == 2 else 1j / integral
    rel = abs(values[-1] - expected) / abs(expected)
    return DegenerateStartReport(side, integral, tuple(ys), tuple(values), expected, rel, tuple(ratios))
