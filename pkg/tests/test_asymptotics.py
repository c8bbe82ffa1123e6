import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canonsys import asymptotics as asy
from canonsys.errors import ModeAssumptionViolated, NotTraceNormalized, ZeroDiagonalPrimitive
from canonsys.hamiltonian import (
    SWEEP_FAMILIES,
    Affine,
    DiagonalPower,
    GammaForm,
    PiecewiseConstant,
    Power,
    PowerLog,
    SingularPower,
    catalog,
    gamma_entries,
    reparameterize,
)
from canonsys.intervals import IntervalSet
from canonsys.weyl import weyl_coefficient

IDENTITY = PiecewiseConstant.constant((1.0, 0.0, 1.0))
HALF = catalog("identity-half")
SING = catalog("constant-singular")
# sigma = 1 on (0, 1/2), sigma = 0 on [1/2, 1), then the identity
SIGMA_STEP = PiecewiseConstant(((0.5, (0.5, 0.5, 0.5)), (0.5, (0.5, 0.0, 0.5))), (0.5, 0.0, 0.5))


# ---------------------------------------------------------------------------
# d, t_hat, A, L


def test_d_constant_cases():
    t = np.geomspace(1e-4, 1e4, 9)
    assert np.allclose(asy.d_values(HALF, t), 1.0)
    assert np.allclose(asy.d_values(SING, t), 0.0)


def test_d_singular_power_quarter():
    # sympy: 1 - (m3**2)/(m1 m2) with m3 = sqrt(3) t**2 / 2 simplifies to 1/4
    assert np.allclose(asy.d_values(SingularPower((1.0, 3.0)), np.geomspace(1e-8, 1e3, 12)), 0.25, atol=1e-14)


def test_d_of_record():
    rec = asy.d_of(HALF, 2.0)
    assert rec.t == 2.0 and rec.value == pytest.approx(1.0)


@pytest.mark.parametrize("name", SWEEP_FAMILIES)
def test_d_in_unit_interval(name):
    d = asy.d_values(catalog(name), np.geomspace(1e-8, 1e3, 60))
    assert np.all(d >= 0) and np.all(d <= 1)


def test_d_zero_diagonal_rejected():
    H = PiecewiseConstant(((1.0, (1.0, 0.0, 0.0)),), (0.5, 0.0, 0.5))
    with pytest.raises(ZeroDiagonalPrimitive):
        asy.d_values(H, np.array([0.5]))


@pytest.mark.parametrize("phi", [Affine(2.0), Power(2.0), Power(0.5)])
def test_d_reparameterisation_invariant(phi):
    H = PowerLog((1.0, 1.0), (2.0, 0.0))
    Hh = reparameterize(H, phi)
    s = np.array([0.01, 0.2, 0.7, 3.0])
    assert np.allclose(asy.d_values(Hh, s), asy.d_values(H, phi(s)), atol=1e-10)


def test_t_hat_values():
    assert asy.t_hat(IDENTITY, 1.0) == pytest.approx(1 / 8, rel=1e-12)
    assert asy.t_hat(HALF, 1.0) == pytest.approx(1 / 4, rel=1e-12)


@pytest.mark.parametrize("name", SWEEP_FAMILIES)
def test_t_hat_strictly_decreasing(name):
    H = catalog(name)
    th = [asy.t_hat(H, r) for r in np.geomspace(1e-2, 1e5, 15)]
    assert np.all(np.diff(th) < 0)


def test_A_L_identity_half():
    for r in (0.1, 1.0, 1e3):
        row = asy.A_L(HALF, r)
        assert row.A == pytest.approx(1.0) and row.L == pytest.approx(1.0)


@pytest.mark.parametrize("name", SWEEP_FAMILIES)
def test_L_at_most_A(name):
    H = catalog(name)
    for r in np.geomspace(1, 1e4, 5):
        row = asy.A_L(H, r)
        assert row.L <= row.A * (1 + 1e-12)


# ---------------------------------------------------------------------------
# scalars


def test_scalar_rep_examples():
    r = asy.scalar_rep_from_entries(0.25, math.sqrt(3) / 4, 0.75)
    assert r.sigma == pytest.approx(1.0) and r.phi == pytest.approx(math.pi / 3) and r.pi_val == pytest.approx(3.0)
    r = asy.scalar_rep_from_entries(1.0, -1.0, 2.0)
    assert r.sigma == pytest.approx(1 / math.sqrt(2)) and r.pi_val == pytest.approx(-2.0)
    r = asy.scalar_rep_from_entries(1.0, 0.0, 1.0)
    assert r.sigma == 0.0 and r.pi_val == 0.0


def test_pi_weighted():
    assert asy.pi_weighted(SING, 0.3, 2.0) == pytest.approx(1.0)
    H = catalog("two-phase")
    # m1(s) = m2(s) is not true for two-phase in general; weight makes the difference
    s, t = 0.2, 0.5
    m1, _, m2 = H.primitive(np.array([s]))[:, 0]
    assert asy.pi_weighted(H, s, t) == pytest.approx(asy.scalar_rep(H, s * t).pi_val * m1 / m2)


def test_frak_t_cases():
    for H in (catalog(n) for n in SWEEP_FAMILIES if n != "constant-singular"):
        assert asy.frak_t(H, 0.37, 1.0) == pytest.approx(2.0)
    t = np.array([0.1, 1.0, 3.0])
    assert np.allclose(asy.frak_t(IDENTITY, 0.5, t), 2 * t)
    assert np.allclose(asy.frak_t(DiagonalPower((1.0, 3.0)), 0.7, t), t + t**3)


def test_frak_t_inverse_diagonal_power():
    # scipy brentq root of t + t^3 = 3
    assert asy.frak_t_inv(DiagonalPower((1.0, 3.0)), 0.5, 3.0) == pytest.approx(1.2134116627622296, rel=1e-12)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e2))
def test_frak_t_inverse_roundtrip(s, x):
    H = PowerLog((1.0, 1.0), (2.0, 0.0))
    t = asy.frak_t_inv(H, min(s, 0.5), x)
    assert asy.frak_t(H, min(s, 0.5), t) == pytest.approx(x, rel=1e-9)


# ---------------------------------------------------------------------------
# Gamma / Xi


def test_gamma_map_examples():
    one = asy.gamma_map((), (1.0,), (1j,))
    assert tuple(one.entries(np.array([2.0]))[:, 0]) == pytest.approx((0.5, 0.5, 0.5))
    zero = asy.gamma_map((), (0.0,), (1.0,))
    assert tuple(zero.entries(np.array([2.0]))[:, 0]) == pytest.approx((1.0, 0.0, 0.0))
    third = asy.gamma_map((), (1.0,), (cmath.exp(2j * math.pi / 3),))
    assert tuple(third.entries(np.array([2.0]))[:, 0]) == pytest.approx((0.25, math.sqrt(3) / 4, 0.75))


def test_xi_map_examples():
    assert asy.xi_map(SING, 1.0) == pytest.approx((1.0, 1j))
    assert asy.xi_map(PiecewiseConstant.constant((1.0, 0.0, 0.0)), 1.0) == pytest.approx((0.0, 1.0))
    with pytest.raises(NotTraceNormalized):
        asy.xi_map(IDENTITY, 1.0)


def test_gamma_xi_roundtrip_two_phase():
    H = catalog("two-phase")
    for t in np.geomspace(1e-6, 10, 30):
        sig, zeta = asy.xi_map(H, t)
        assert np.allclose(gamma_entries(sig, zeta), H.entries(np.array([t]))[:, 0], atol=1e-12)


sigma_zeta = st.tuples(st.floats(0, 1), st.floats(0, 2 * math.pi))


@given(st.lists(sigma_zeta, min_size=1, max_size=6))
def test_gamma_output_psd_trace_one_and_roundtrip(pairs):
    sig = tuple(p[0] for p in pairs)
    zeta = tuple(cmath.exp(1j * p[1]) for p in pairs)
    edges = tuple(float(k + 1) for k in range(len(pairs) - 1))
    G = asy.gamma_map(edges, sig, zeta)
    t = np.arange(len(pairs)) + 0.5
    h = G.entries(t)
    assert np.allclose(h[0] + h[2], 1.0, atol=1e-15)
    assert np.all(h[1] ** 2 <= h[0] * h[2] + 1e-12)
    for k, tk in enumerate(t):
        s2, z2 = asy.xi_map(G, tk)
        assert np.allclose(gamma_entries(s2, z2), h[:, k], atol=1e-12)


@given(sigma_zeta, sigma_zeta)
def test_gamma_stability_constant_two(a, b):
    A = (a[0], cmath.exp(1j * a[1]))
    B = (b[0], cmath.exp(1j * b[1]))
    lhs, rhs = asy.gamma_stability_norm(A, B)
    assert lhs <= 2 * rhs + 1e-12


# ---------------------------------------------------------------------------
# rescaling


def test_rescale_plain_s_self_similar():
    A = asy.rescale(SING, 0.3, "plain-s")
    t = np.array([0.2, 1.0, 5.0])
    assert np.allclose(A.entries(t), SING.entries(t))


def test_rescale_d_identity_singular_power():
    H = SingularPower((1.0, 3.0))
    A = asy.rescale(H, 0.1)
    assert asy.d_values(A, np.array([3.0]))[0] == pytest.approx(asy.d_values(H, np.array([0.3]))[0])
    assert asy.d_values(A, np.array([3.0]))[0] == pytest.approx(0.25)


@pytest.mark.parametrize("name", SWEEP_FAMILIES)
def test_rescale_primitive_and_sigma_rules(name):
    H = catalog(name)
    rng = np.random.default_rng(11)
    for s, t in rng.uniform(0.01, 2.0, size=(5, 2)):
        A = asy.rescale(H, s)
        mA = A.primitive(np.array([t]))[:, 0]
        m = H.primitive(np.array([s * t]))[:, 0]
        assert np.allclose(mA, [A.g1 * m[0], A.g3 * m[1], A.g2 * m[2]], rtol=1e-12)
        sa = asy.scalar_arrays(A.entries(np.array([t])))[0]
        sh = asy.scalar_arrays(H.entries(np.array([s * t])))[0]
        assert np.allclose(sa, sh, atol=1e-12)


def test_rescale_weyl_identity_two_phase():
    H = catalog("two-phase")
    A = asy.rescale(H, 0.25)
    a = weyl_coefficient(A, 1j, 1e-7)
    b = weyl_coefficient(H, A.g3 * 1j, 1e-7)
    ratio = A.g3 / A.g2
    assert abs(a.q - ratio * b.q) <= a.err + ratio * b.err + 1e-8


def test_rescale_mode_checks():
    with pytest.raises(ModeAssumptionViolated):
        asy.rescale(IDENTITY, 0.5, "plain-s")
    with pytest.raises(ModeAssumptionViolated):
        asy.rescale(HALF, -1.0)


# ---------------------------------------------------------------------------
# preimage measures and integral forms


def test_preimage_sigma_step():
    m = asy.preimage_measure(SIGMA_STEP, "sigma", 0.5, 1.0)
    assert m.exact and m.value == pytest.approx(0.5)


def test_level_set_is_exact_interval_set():
    E = asy.level_set(SIGMA_STEP, "sigma", (0.0, 0.5), 1.0)
    assert isinstance(E, IntervalSet) and [(i.lo, i.hi) for i in E] == [(0.5, 1.0)]


def test_preimage_sampled_matches_exact_on_smooth_family():
    # diagonal power has sigma == 0 everywhere: the whole window
    m = asy.preimage_measure(DiagonalPower((1.0, 3.0)), "sigma", 0.5, 2.0)
    assert not m.exact and m.value == pytest.approx(2.0)
    m = asy.preimage_measure(SingularPower((1.0, 3.0)), "sigma", 0.5, 2.0)
    assert m.value == pytest.approx(0.0)


def test_preimage_zeta_arc_two_phase():
    H = catalog("two-phase")
    t = H.sequence[2]
    plus, minus = H.band_measures(t)
    arc = asy.preimage_measure(H, "zeta-arc", (2 * math.pi / 3 - 0.1, 2 * math.pi / 3 + 0.1), t)
    assert arc.value == pytest.approx(plus, rel=1e-12)
    arc = asy.preimage_measure(H, "zeta-arc", (4 * math.pi / 3 - 0.1, 4 * math.pi / 3 + 0.1), t)
    assert arc.value == pytest.approx(minus, rel=1e-12)


def test_two_phase_bounds_at_t2n():
    H = catalog("two-phase")
    seq = H.sequence
    for n in range(1, 5):
        t2n, t2n1 = seq[2 * n], seq[2 * n + 1]
        F = lambda t: (
            asy.preimage_measure(H, "pi", (0.01, 100.0), t).value
            * asy.preimage_measure(H, "pi", (-100.0, -0.01), t).value
            / t**2
        )
        assert F(t2n) <= t2n1 / t2n
        assert abs(F(2 * t2n) - 0.25) <= t2n1 / t2n + 1e-12


def test_det_integral_form_cases():
    assert asy.det_integral_form(SING, 2.0) == pytest.approx(0.0)
    assert asy.det_integral_form(HALF, 2.0) == pytest.approx(1.0)
    assert asy.det_integral_form(SIGMA_STEP, 1.0) == pytest.approx(0.5)


@pytest.mark.parametrize("t", [0.3, 0.75, 1.0, 4.0])
def test_det_integral_two_code_paths(t):
    for H in (SIGMA_STEP, catalog("two-phase")):
        assert asy.det_integral_form(H, t) == pytest.approx(1.0 - asy.sigma_square_average(H, t), abs=1e-12)


def test_det_integral_smooth():
    assert asy.det_integral_form(DiagonalPower((0.5, 2.0)), 1.0) == pytest.approx(1.0, abs=1e-9)
    assert asy.det_integral_form(SingularPower((0.5, 2.0)), 1.0) == pytest.approx(0.0, abs=1e-9)


def test_restricted_primitive_full_line():
    H = catalog("power-log")
    I = IntervalSet.from_pairs([(0.0, math.inf)])
    assert np.allclose(asy.restricted_primitive(H, I, 0.3), H.primitive(np.array([0.3]))[:, 0])
