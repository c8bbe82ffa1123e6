import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canonsys import asymptotics as asy
from canonsys.errors import QuadratureFailure, ModelError, NonPositiveTime, NotLimitPoint, NotMonotone
from canonsys.hamiltonian import (
    CATALOG,
    SENTINEL_CAP,
    Affine,
    DiagonalPower,
    GammaForm,
    PiecewiseConstant,
    Power,
    PowerLog,
    SingularPower,
    Tabulated,
    TwoPhaseRotation,
    catalog,
    evaluate,
    from_dict,
    load_model,
    primitive,
    primitive_by_quadrature,
    reparameterize,
    trace_reparameterize,
)

ANALYTIC = [
    PowerLog((1.0, 1.0), (2.0, 0.0)),
    PowerLog((0.5, 2.0), (0.5, 1.0)),
    DiagonalPower((1.0, 3.0)),
    DiagonalPower((0.5, 0.5)),
    SingularPower((1.0, 3.0)),
    SingularPower((0.5, 4.0)),
]


# ---------------------------------------------------------------------------
# eval


def test_eval_two_phase_plus_band():
    H = TwoPhaseRotation(math.pi / 3, 2 * math.pi / 3)
    t1, t2 = H.sequence[0], H.sequence[1]
    h = evaluate(H, 0.5 * (t1 + t2))  # [t_2, t_1) carries phi_plus
    assert h == pytest.approx((0.25, math.sqrt(3) / 4, 0.75), abs=1e-15)


def test_eval_diagonal_power_unit_indices():
    assert evaluate(DiagonalPower((1.0, 1.0)), 0.5) == (1.0, 0.0, 1.0)


def test_eval_tail_lookup_and_right_continuity():
    H = PiecewiseConstant(((1.0, (1.0, 0.0, 0.0)),), (0.0, 0.0, 1.0))
    assert evaluate(H, 2.0) == (0.0, 0.0, 1.0)
    assert evaluate(H, 1.0) == (0.0, 0.0, 1.0)
    assert evaluate(H, 0.999) == (1.0, 0.0, 0.0)


def test_eval_rejects_nonpositive_time():
    with pytest.raises(NonPositiveTime):
        evaluate(DiagonalPower((1.0, 3.0)), 0.0)


def test_quadrature_refuses_to_straddle_sentinel():
    # |log t|^{-1/2} at t = 1 cannot be resolved past the float spacing there
    with pytest.raises(QuadratureFailure):
        primitive_by_quadrature(PowerLog((1.0, 1.0), (-0.5, 0.0)), 2.0, tol=1e-12)


def test_power_log_sentinel_at_one():
    h = evaluate(PowerLog((1.0, 1.0), (-0.5, 0.0)), 1.0)
    assert h[0] == SENTINEL_CAP


# ---------------------------------------------------------------------------
# primitive


def test_primitive_diagonal_power():
    m = primitive(DiagonalPower((1.0, 3.0)), 2.0)
    assert (m.m1, m.m2, m.m3) == pytest.approx((2.0, 8.0, 0.0))


def test_primitive_singular_power_offdiagonal():
    # oracle: scipy quad of sqrt(h1 h2) = sqrt(3) t on (0, 1)
    m = primitive(SingularPower((1.0, 3.0)), 1.0)
    assert m.m3 == pytest.approx(0.8660254037844386, abs=1e-15)


def test_primitive_constant_singular():
    H = PiecewiseConstant(((1.0, (0.5, 0.5, 0.5)),), (0.5, 0.5, 0.5))
    m = primitive(H, 3.0)
    assert (m.m1, m.m3, m.m2) == pytest.approx((1.5, 1.5, 1.5))


def test_primitive_power_log_frozen():
    # oracle: mpmath quad of |log u|^2 at 30 digits
    m = PowerLog((1.0, 1.0), (2.0, 0.0)).primitive(np.array([0.5, 2.0]))
    assert m[0] == pytest.approx([1.93337368751904602, 2.18831730559662161], rel=1e-13)
    assert m[2] == pytest.approx([0.5, 2.0])


@pytest.mark.parametrize("H", ANALYTIC, ids=lambda H: H.to_json())
def test_primitive_matches_quadrature(H):
    for t in np.geomspace(1e-6, 1e2, 9):
        exact = primitive(H, t)
        quad = primitive_by_quadrature(H, t, tol=1e-8)
        for a, b in ((exact.m1, quad.m1), (exact.m2, quad.m2), (exact.m3, quad.m3)):
            # absolute 1e-8, relative once the entry exceeds 1 (float spacing)
            assert abs(a - b) <= 1e-8 * max(1.0, abs(a))


@pytest.mark.parametrize("H", ANALYTIC + [catalog("two-phase")], ids=lambda H: H.kind)
def test_primitive_monotone_and_psd(H):
    t = np.geomspace(1e-6, 1e2, 200)
    m = H.primitive(t)
    assert np.all(np.diff(m[0]) >= 0) and np.all(np.diff(m[2]) >= 0)
    assert np.all(m[1] ** 2 <= m[0] * m[2] * (1 + 1e-12) + 1e-300)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_psd_at_random_points(name):
    H = catalog(name)
    rng = np.random.default_rng(0)
    t = np.exp(rng.uniform(np.log(1e-8), np.log(1e3), 10_000))
    h1, h3, h2 = H.entries(t)
    assert np.all(h1 >= 0) and np.all(h2 >= 0)
    assert np.all(h3**2 <= h1 * h2 + 1e-12)


@given(
    st.lists(
        st.tuples(st.floats(0.01, 5), st.floats(0, 1), st.floats(0, math.pi), st.floats(0.1, 3)),
        min_size=1,
        max_size=5,
    )
)
def test_piecewise_trace_primitive_identity(segs):
    H = PiecewiseConstant(
        tuple((L, (a * math.cos(p) ** 2, 0.0, a * math.sin(p) ** 2 + 0.1)) for L, _, p, a in segs),
        (0.5, 0.0, 0.5),
    )
    t = np.linspace(0.01, 30, 50)
    tr = H.entries(t)
    m = H.primitive(t)
    ref = [primitive_by_quadrature(H, x, tol=1e-11) for x in t[::10]]
    assert np.allclose([r.m1 + r.m2 for r in ref], (m[0] + m[2])[::10], atol=1e-8)
    assert np.all(tr[0] + tr[2] > 0)


def test_trace_inverse_roundtrip():
    for H in ANALYTIC:
        tau = np.geomspace(1e-4, 1e4, 9)
        t = H.trace_inverse(tau)
        assert np.allclose(H.trace_primitive(t), tau, rtol=1e-12)


# ---------------------------------------------------------------------------
# validation


def test_piecewise_validation():
    with pytest.raises(ModelError):
        PiecewiseConstant(((0.0, (1, 0, 0)),), (0.5, 0, 0.5))
    with pytest.raises(ModelError):
        PiecewiseConstant(((1.0, (1, 2, 1)),), (0.5, 0, 0.5))
    with pytest.raises(NotLimitPoint):
        PiecewiseConstant((), (0.0, 0.0, 0.0))


def test_power_log_domain():
    with pytest.raises(ModelError):
        PowerLog((1.0, 1.0), (-1.0, 0.0))
    with pytest.raises(ModelError):
        PowerLog((0.0, 1.0), (0.0, 0.0))


def test_two_phase_sequence_ratio_tends_to_zero():
    seq = TwoPhaseRotation().sequence
    assert np.all(np.diff(seq) < 0)
    ratios = seq[1:] / seq[:-1]
    assert np.all(np.diff(ratios) < 0) and ratios[-1] < 1e-10


def test_gamma_form_range_checks():
    with pytest.raises(ModelError):
        GammaForm((1.0,), (0.5, 1.5), (1j, 1j))
    with pytest.raises(ModelError):
        GammaForm((1.0,), (0.5, 0.5), (1j, 2j))


# ---------------------------------------------------------------------------
# reparameterisation


def test_trace_reparameterize_piecewise_segment():
    H = PiecewiseConstant(((1.0, (2.0, 0.0, 0.0)),), (0.5, 0.0, 0.5))
    Hn = trace_reparameterize(H)
    assert Hn.segments == ((2.0, (1.0, 0.0, 0.0)),)
    assert Hn.is_trace_normalized


def test_trace_reparameterize_identity_cases():
    tp = catalog("two-phase")
    assert trace_reparameterize(tp) is tp
    half = catalog("identity-half")
    assert trace_reparameterize(half) is half


@pytest.mark.parametrize("H", ANALYTIC, ids=lambda H: H.to_json())
def test_trace_reparameterize_has_unit_trace(H):
    Hn = trace_reparameterize(H)
    h = Hn.entries(np.geomspace(1e-4, 1e3, 101))
    assert np.max(np.abs(h[0] + h[2] - 1.0)) <= 1e-12


def test_reparameterize_affine_constant():
    H = reparameterize(PiecewiseConstant.constant((0.5, 0.5, 0.5)), Affine(2.0))
    assert H.tail == (1.0, 1.0, 1.0)


def test_reparameterize_identity_is_noop():
    H = DiagonalPower((1.0, 3.0))
    assert reparameterize(H, Affine(1.0)) is H


def test_reparameterize_power_chain_rule():
    H = reparameterize(DiagonalPower((1.0, 3.0)), Power(2.0))
    t = np.array([0.3, 1.0, 2.5])
    h = H.entries(t)
    assert np.allclose(h[0], 2 * t) and np.allclose(h[2], 6 * t**5)
    assert np.allclose(H.primitive(t)[0], t**2) and np.allclose(H.primitive(t)[2], t**6)


@pytest.mark.parametrize("phi", [Affine(3.0), Power(0.5), Power(2.0), Tabulated([0, 1, 2, 5], [0, 0.5, 3, 4])])
@pytest.mark.parametrize("H", [catalog("two-phase"), SingularPower((1.0, 3.0)), PowerLog((1.0, 1.0), (2.0, 0.0))], ids=lambda H: H.kind)
def test_reparameterize_transform_rules(H, phi):
    Hh = reparameterize(H, phi)
    s = np.array([0.05, 0.4, 1.3, 3.0])
    assert np.allclose(Hh.primitive(s), H.primitive(phi(s)), rtol=1e-10, atol=1e-14)
    sig_h = asy.scalar_arrays(Hh.entries(s))[0]
    sig = asy.scalar_arrays(H.entries(phi(s)))[0]
    assert np.allclose(sig_h, sig, atol=1e-10)


def test_monotone_map_validation():
    with pytest.raises(NotMonotone):
        Affine(-1.0)
    with pytest.raises(NotMonotone):
        Tabulated([0, 1, 2], [0, 2, 1])


# ---------------------------------------------------------------------------
# schema


SCHEMA_EXAMPLES = [
    {"kind": "piecewise_constant", "segments": [{"len": 1.0, "h": [1.0, 0.0, 0.0]}], "tail": [0.5, 0.5, 0.5]},
    {"kind": "power_log", "alpha": [1.0, 1.0], "beta": [2.0, 0.0]},
    {"kind": "two_phase", "phi_plus": 1.0471975512, "phi_minus": 2.0943951024, "t_seq": {"exp_quadratic": 1.0}},
    {"kind": "diagonal_power", "rho": [1.0, 3.0]},
    {"kind": "singular_power", "rho": [1.0, 3.0]},
]


@pytest.mark.parametrize("d", SCHEMA_EXAMPLES, ids=lambda d: d["kind"])
def test_json_schema_roundtrip(d, tmp_path):
    H = from_dict(d)
    again = from_dict(json.loads(H.to_json()))
    assert again.to_json() == H.to_json()
    path = tmp_path / "m.json"
    path.write_text(json.dumps(d))
    assert load_model(path).to_json() == H.to_json()


def test_unknown_kind_rejected():
    with pytest.raises(ModelError):
        from_dict({"kind": "nope"})
    with pytest.raises(ModelError):
        from_dict({"kind": "power_log"})


def test_catalog_alias():
    assert catalog("diag-half").to_json() == catalog("identity-half").to_json()
    with pytest.raises(ModelError):
        catalog("missing")
