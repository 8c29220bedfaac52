import math

import numpy as np
import pytest

from cusplab import (
    CuspGeometry,
    GapPoint,
    ParameterError,
    eval_cusp_field,
    eval_global_field,
    phi_shape,
)
from cusplab.testfield import (
    Quantity,
    _CappedBody,
    component_coeffs,
    gradient_envelope,
    h_derivative_envelope,
    smoothstep,
    squared_magnitude_coeffs,
)

FIELDS = ("w_r", "w_3", "dr_wr", "d3_wr", "dr_w3", "d3_w3", "wr_over_r", "dh_wr", "dh_w3")


def sample_delta(a, b):
    return max(abs(getattr(a, f) - getattr(b, f)) for f in FIELDS)


def central(f, x, step):
    return (f(x + step) - f(x - step)) / (2.0 * step)


@pytest.mark.parametrize(
    "t,expected",
    [
        (0.0, (0.0, 0.0, 6.0)),
        (1.0, (1.0, 0.0, -6.0)),
        (0.5, (0.5, 1.5, 0.0)),
    ],
)
def test_phi_shape_values(t, expected):
    assert phi_shape(t) == pytest.approx(expected, abs=1e-15)


def test_phi_shape_is_interpolant():
    # endpoint traces pin the cubic: value 0 -> 1 with flat ends
    v0, d0, _ = phi_shape(0.0)
    v1, d1, _ = phi_shape(1.0)
    assert (v0, d0, v1, d1) == (0.0, 0.0, 1.0, 0.0)


def test_smoothstep_c2_ends():
    for u in (0.0, 1.0):
        s, ds, dds = smoothstep(u)
        assert ds == 0.0 and dds == 0.0
    assert smoothstep(0.5)[0] == pytest.approx(0.5)


def test_boundary_traces(geom_half):
    h = 1e-3
    for r in np.linspace(0.0, geom_half.r0, 200):
        top = h + r ** (1 + geom_half.alpha)
        s = eval_cusp_field(GapPoint(r, top), h, geom_half)
        assert abs(s.w_r) <= 1e-12 and abs(s.w_3 - 1.0) <= 1e-12
        s0 = eval_cusp_field(GapPoint(r, 0.0), h, geom_half)
        assert abs(s0.w_r) <= 1e-12 and abs(s0.w_3) <= 1e-12
        assert abs(s0.d3_w3) <= 1e-12  # flat shape cubic at the wall


def test_axis_limits(geom_half):
    h = 1e-3
    s = eval_cusp_field(GapPoint(0.0, 0.5 * h), h, geom_half)
    _, dphi, _ = phi_shape(0.5)
    assert s.w_r == 0.0
    assert s.wr_over_r == pytest.approx(-dphi / (2 * h), rel=1e-14)
    assert s.dh_wr == 0.0 and s.d3_wr == 0.0 and s.dr_w3 == 0.0


def test_divergence_analytic(geom_rough, rng):
    h = 1e-3
    for _ in range(500):
        r = rng.uniform(0.0, geom_rough.r0 * 0.999)
        u = rng.uniform(0.0, 1.0)
        x3 = u * (h + r ** (1 + geom_rough.alpha))
        s = eval_cusp_field(GapPoint(r, x3), h, geom_rough)
        scale = max(abs(s.dr_wr), abs(s.wr_over_r), abs(s.d3_w3), 1.0)
        assert abs(s.divergence) <= 1e-12 * scale


def test_gradient_matches_finite_differences(geom_half, rng):
    h = 1e-3
    alpha = geom_half.alpha
    for _ in range(60):
        r = rng.uniform(0.02, 0.95) * geom_half.r0
        psi = h + r ** (1 + alpha)
        x3 = rng.uniform(0.05, 0.95) * psi
        s = eval_cusp_field(GapPoint(r, x3), h, geom_half)
        dr, d3 = 1e-6 * r, 1e-6 * psi
        fd = {
            "dr_wr": central(lambda v: eval_cusp_field(GapPoint(v, x3), h, geom_half).w_r, r, dr),
            "dr_w3": central(lambda v: eval_cusp_field(GapPoint(v, x3), h, geom_half).w_3, r, dr),
            "d3_wr": central(lambda v: eval_cusp_field(GapPoint(r, v), h, geom_half).w_r, x3, d3),
            "d3_w3": central(lambda v: eval_cusp_field(GapPoint(r, v), h, geom_half).w_3, x3, d3),
        }
        scale = s.gradient_magnitude
        for name, approx in fd.items():
            assert abs(getattr(s, name) - approx) <= 1e-5 * scale


def test_h_derivative_matches_finite_differences(geom_half, rng):
    h = 1e-3
    for _ in range(60):
        r = rng.uniform(0.02, 0.95) * geom_half.r0
        psi = h + r ** (1 + geom_half.alpha)
        x3 = rng.uniform(0.05, 0.99) * psi
        s = eval_cusp_field(GapPoint(r, x3), h, geom_half)
        dh = 1e-6 * h
        fd_r = central(lambda v: eval_cusp_field(GapPoint(r, x3), v, geom_half).w_r, h, dh)
        fd_3 = central(lambda v: eval_cusp_field(GapPoint(r, x3), v, geom_half).w_3, h, dh)
        scale = max(s.h_derivative_magnitude, 1e-12)
        assert abs(s.dh_wr - fd_r) <= 1e-5 * scale
        assert abs(s.dh_w3 - fd_3) <= 1e-5 * scale


def test_eval_rejects_outside_points(geom_half):
    h = 1e-3
    with pytest.raises(ParameterError):
        eval_cusp_field(GapPoint(geom_half.r0 + 1e-6, 0.0), h, geom_half)
    r = 0.5 * geom_half.r0
    top = h + r ** (1 + geom_half.alpha)
    with pytest.raises(ParameterError):
        eval_cusp_field(GapPoint(r, top + 1e-6), h, geom_half)
    with pytest.raises(ParameterError):
        eval_cusp_field(GapPoint(r, 0.5 * top), 1.0, geom_half)  # inadmissible h


def test_coeffs_match_pointwise(geom_rough, rng):
    h = 5e-4
    rs = rng.uniform(1e-6, geom_rough.r0, 40)
    us = rng.uniform(0.0, 1.0, 40)
    attrs = {
        Quantity.FIELD: "field_magnitude",
        Quantity.GRADIENT: "gradient_magnitude",
        Quantity.H_DERIVATIVE: "h_derivative_magnitude",
    }
    for quantity, attr in attrs.items():
        m = squared_magnitude_coeffs(quantity, rs, h, geom_rough)
        for i, (r, u) in enumerate(zip(rs, us)):
            psi = h + r ** (1 + geom_rough.alpha)
            poly = float(np.polyval(m[i, ::-1], u))
            direct = getattr(eval_cusp_field(GapPoint(r, u * psi), h, geom_rough), attr) ** 2
            assert poly == pytest.approx(direct, rel=1e-11, abs=1e-300)


def test_component_count(geom_half):
    r = np.array([0.1, 0.2])
    assert component_coeffs(Quantity.FIELD, r, 1e-3, geom_half).shape == (2, 2, 4)
    assert component_coeffs(Quantity.GRADIENT, r, 1e-3, geom_half).shape == (2, 5, 4)
    assert component_coeffs(Quantity.H_DERIVATIVE, r, 1e-3, geom_half).shape == (2, 2, 4)


def test_pointwise_envelopes_h_independent(geom_half):
    # smallest valid constants for |dh w| <= C (1/psi + r/psi^2) and
    # |grad w| <= C (1/psi + r/psi^2 + psi'/psi) stay O(1) across h
    alpha = geom_half.alpha
    ratios_dh, ratios_grad = [], []
    for h in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1]:
        worst_dh = worst_grad = 0.0
        for r in np.linspace(1e-4, geom_half.r0, 40):
            psi = h + r ** (1 + alpha)
            slope = (1 + alpha) * r**alpha
            for u in np.linspace(0.0, 1.0, 21):
                s = eval_cusp_field(GapPoint(r, u * psi), h, geom_half)
                worst_dh = max(
                    worst_dh, s.h_derivative_magnitude / h_derivative_envelope(r, psi)
                )
                worst_grad = max(
                    worst_grad, s.gradient_magnitude / gradient_envelope(r, psi, slope)
                )
        ratios_dh.append(worst_dh)
        ratios_grad.append(worst_grad)
    assert all(math.isfinite(c) for c in ratios_dh + ratios_grad)
    assert max(ratios_dh) / min(ratios_dh) < 1.5
    assert max(ratios_grad) / min(ratios_grad) < 1.5
    assert max(ratios_dh + ratios_grad) < 10.0


# ---------------------------------------------------------------------------
# global blended field
# ---------------------------------------------------------------------------


@pytest.fixture
def geom_global():
    return CuspGeometry(alpha=0.5, r0=0.2, d0=0.17)


def test_global_reduces_to_cusp(geom_global, rng):
    h = 1e-2
    for _ in range(100):
        r = rng.uniform(0.0, geom_global.r0 * 0.999)
        u = rng.uniform(0.0, 0.999)
        x3 = u * (h + r ** (1 + geom_global.alpha))
        pt = GapPoint(r, x3)
        a = eval_cusp_field(pt, h, geom_global)
        b = eval_global_field(pt, h, geom_global)
        scale = 1.0 + max(abs(getattr(a, f)) for f in FIELDS)
        assert sample_delta(a, b) <= 1e-13 * scale


def test_global_zero_far_away(geom_global):
    h = 1e-2
    for r, x3 in [(0.0, 3.0), (1.5, 0.01), (0.9, 0.9), (2.0, 0.0)]:
        s = eval_global_field(GapPoint(r, x3), h, geom_global)
        assert all(getattr(s, f) == 0.0 for f in FIELDS)


def test_global_rigid_inside_body(geom_global):
    h = 1e-2
    s = eval_global_field(GapPoint(0.0, h + 0.3), h, geom_global)
    assert s.w_3 == 1.0 and s.w_r == 0.0 and s.gradient_magnitude == 0.0


def test_global_divergence_random(geom_global, rng):
    h = 1e-2
    for _ in range(2000):
        r = rng.uniform(0.0, 1.2)
        x3 = rng.uniform(0.0, 1.2)
        s = eval_global_field(GapPoint(r, x3), h, geom_global)
        scale = max(abs(s.dr_wr), abs(s.wr_over_r), abs(s.d3_w3), 1.0)
        assert abs(s.divergence) <= 1e-10 * scale


def test_global_components_match_finite_differences(geom_global):
    h = 1e-2
    pts = [(0.25, 0.05), (0.3, 0.1), (0.26, 0.02), (0.38, 0.05), (0.21, 0.15)]
    for r, x3 in pts:
        s = eval_global_field(GapPoint(r, x3), h, geom_global)
        dr, d3, dh = 1e-6 * max(r, 0.1), 1e-6 * max(x3, 0.1), 1e-6 * h
        fd = {
            "dr_wr": central(lambda v: eval_global_field(GapPoint(v, x3), h, geom_global).w_r, r, dr),
            "dr_w3": central(lambda v: eval_global_field(GapPoint(v, x3), h, geom_global).w_3, r, dr),
            "d3_wr": central(lambda v: eval_global_field(GapPoint(r, v), h, geom_global).w_r, x3, d3),
            "d3_w3": central(lambda v: eval_global_field(GapPoint(r, v), h, geom_global).w_3, x3, d3),
            "dh_wr": central(lambda v: eval_global_field(GapPoint(r, x3), v, geom_global).w_r, h, dh),
            "dh_w3": central(lambda v: eval_global_field(GapPoint(r, x3), v, geom_global).w_3, h, dh),
        }
        scale = max(1e-2, s.gradient_magnitude, s.h_derivative_magnitude)
        for name, approx in fd.items():
            assert abs(getattr(s, name) - approx) <= 1e-5 * scale


def test_capped_body_distance_jet(geom_global):
    body = _CappedBody(geom_global, 1e-2)
    eps = 1e-5
    for r, x3 in [(0.26, 0.02), (0.3, 0.1), (0.1, 1.4), (0.6, 0.6)]:
        assert not body.contains(r, x3)
        d, nr, n3, hrr, hr3, h33 = body.distance_jet(r, x3, need_hessian=True)

        def dist(rr, xx):
            return body.distance_jet(rr, xx, need_hessian=False)[0]

        assert nr == pytest.approx(central(lambda v: dist(v, x3), r, eps), abs=1e-6)
        assert n3 == pytest.approx(central(lambda v: dist(r, v), x3, eps), abs=1e-6)
        assert hrr == pytest.approx(
            (dist(r + eps, x3) - 2 * d + dist(r - eps, x3)) / eps**2, abs=2e-4
        )
        assert h33 == pytest.approx(
            (dist(r, x3 + eps) - 2 * d + dist(r, x3 - eps)) / eps**2, abs=2e-4
        )
        assert math.hypot(nr, n3) == pytest.approx(1.0, abs=1e-12)


def test_exterior_pointwise_bound_uniform_in_h(geom_half):
    # field, gradient and h-derivative stay O(1) outside the gap region,
    # uniformly over admissible heights
    pts = [(0.47, 0.01), (0.5, 0.02), (0.6, 0.05), (1.2, 0.05), (2.2, 0.5), (0.0, 2.8)]
    sup_by_h = []
    for h in [1e-6, 1e-4, 1e-2, 1e-1]:
        body = _CappedBody(geom_half, h)
        worst = 0.0
        for r, x3 in pts:
            assert not body.contains(r, x3)
            s = eval_global_field(GapPoint(r, x3), h, geom_half)
            worst = max(
                worst,
                s.field_magnitude,
                s.gradient_magnitude,
                s.h_derivative_magnitude,
            )
        sup_by_h.append(worst)
    assert all(math.isfinite(v) for v in sup_by_h)
    assert max(sup_by_h) < 50.0
    assert max(sup_by_h) / max(min(sup_by_h), 1e-6) < 5.0
