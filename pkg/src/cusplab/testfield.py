"""Divergence-free gap test field and its derivatives.

The field is the curl of an axisymmetric stream function,

    w = curl(phi e_theta) = -d3(phi) e_r + (1/r) dr(r phi) e_3,

which is divergence free for any phi.  Inside the gap the stream function is

    phi(r, x3) = (r/2) * Phi(x3 / psi(r)),         Phi(t) = t^2 (3 - 2t),

where psi(r) = h + r**(1+alpha) is the body profile.  The cubic Phi is the
unique minimizer of the relaxed thin-gap energy with traces Phi(0)=0,
Phi(1)=1, Phi'(0)=Phi'(1)=0, so the field equals e_3 on the body surface
x3 = psi(r) and vanishes on the wall x3 = 0.

Closed-form components in the gap, with u = x3/psi:

    w_r      = -(r / 2 psi) Phi'(u)
    w_3      = Phi(u) - (r psi' / 2 psi) u Phi'(u)

All gradient and h-derivative entries below were obtained by differentiating
these expressions by hand once and are validated against central finite
differences by the test suite.  The singular combination psi'' is only ever
used through r * psi'' = alpha (1+alpha) r**alpha, which stays finite at the
cusp tip.

Outside the gap the stream function is blended to zero with two C^2 quintic
smoothstep cutoffs: chi(r, x3) shuts the gap formula off across
[r0, 2 r0] in each coordinate, and eta shuts the rigid-motion stream
function (r/2) off across the signed-distance band [d0/2, d0] around a
reference body (the cusp profile for r <= 2 r0 capped by a tangent sphere).
The global field is best effort: every quantitative claim of this package
lives in the gap region, where the blend reduces exactly to the closed
forms above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParameterError
from .geometry import CuspGeometry, GapPoint, require_admissible_height


class Quantity(str, Enum):
    """Field quantity whose magnitude is integrated by the norm sweeps."""

    FIELD = "FIELD"
    GRADIENT = "GRADIENT"
    H_DERIVATIVE = "H_DERIVATIVE"


def phi_shape(t: float) -> tuple[float, float, float]:
    """Shape cubic Phi(t) = t^2 (3 - 2t) with first and second derivatives."""
    return 3.0 * t * t - 2.0 * t**3, 6.0 * t - 6.0 * t * t, 6.0 - 12.0 * t


def smoothstep(u: float) -> tuple[float, float, float]:
    """Quintic smoothstep S(u) = 6u^5 - 15u^4 + 10u^3 on [0, 1], C^2 at both ends."""
    if u <= 0.0:
        return 0.0, 0.0, 0.0
    if u >= 1.0:
        return 1.0, 0.0, 0.0
    s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    ds = 30.0 * u * u * (1.0 + u * (-2.0 + u))
    dds = 60.0 * u * (1.0 + u * (-3.0 + 2.0 * u))
    return s, ds, dds


@dataclass(frozen=True)
class FieldSample:
    """Field components, gradient entries, and h-derivative at one point.

    The gradient of an axisymmetric swirl-free field has five nonzero
    entries: dr_wr, d3_wr, dr_w3, d3_w3 and the azimuthal-curvature entry
    w_r / r (kept separately so the r -> 0 limit stays finite).
    """

    w_r: float
    w_3: float
    dr_wr: float
    d3_wr: float
    dr_w3: float
    d3_w3: float
    wr_over_r: float
    dh_wr: float
    dh_w3: float

    @property
    def divergence(self) -> float:
        return self.dr_wr + self.wr_over_r + self.d3_w3

    @property
    def field_magnitude(self) -> float:
        return math.hypot(self.w_r, self.w_3)

    @property
    def gradient_magnitude(self) -> float:
        return math.sqrt(
            self.dr_wr**2
            + self.d3_wr**2
            + self.dr_w3**2
            + self.d3_w3**2
            + self.wr_over_r**2
        )

    @property
    def h_derivative_magnitude(self) -> float:
        return math.hypot(self.dh_wr, self.dh_w3)


def eval_cusp_field(point: GapPoint, h: float, geom: CuspGeometry) -> FieldSample:
    """Exact field sample inside the (closed) gap region.

    Accepts the closure r <= r0, 0 <= x3 <= psi(r) so boundary traces can be
    probed at r = r0 itself.
    """
    require_admissible_height(h, geom)
    a = geom.alpha
    r, x3 = point.r, point.x3
    if r > geom.r0:
        raise ParameterError(f"point r={r!r} outside the gap (r0={geom.r0!r})")
    psi = h + r ** (1.0 + a)
    if x3 > psi * (1.0 + 1e-15):
        raise ParameterError(f"point x3={x3!r} above the body surface psi={psi!r}")

    pp = (1.0 + a) * r**a            # psi'
    rpp2 = a * (1.0 + a) * r**a      # r * psi'' (finite at r = 0)
    u = min(x3 / psi, 1.0)
    phi, dphi, ddphi = phi_shape(u)

    g = dphi / psi
    B = r * pp / (2.0 * psi)
    D = r * pp / (2.0 * psi * psi)
    T = D * (dphi + u * ddphi)
    B_r = (pp + rpp2) / (2.0 * psi) - r * pp * pp / (2.0 * psi * psi)

    w_r = -(r / (2.0 * psi)) * dphi
    wr_over_r = -0.5 * g
    w_3 = phi - B * u * dphi

    dr_wr = -0.5 * g + T
    d3_wr = -(r / (2.0 * psi * psi)) * ddphi
    dr_w3 = (
        -(pp / psi) * u * dphi
        - B_r * u * dphi
        + B * (dphi + u * ddphi) * u * pp / psi
    )
    d3_w3 = g - T

    dh_wr = (r / (2.0 * psi * psi)) * (dphi + u * ddphi)
    dh_w3 = -(u / psi) * dphi + (u * r * pp / (2.0 * psi * psi)) * (
        2.0 * dphi + u * ddphi
    )

    return FieldSample(w_r, w_3, dr_wr, d3_wr, dr_w3, d3_w3, wr_over_r, dh_wr, dh_w3)


# ----------------------------------------------------------------------------
# Vectorized polynomial form used by the quadrature module.
#
# At fixed r every component is a cubic in u = x3/psi, so the squared
# magnitude is a degree-6 polynomial in u whose coefficients depend on r.
# ----------------------------------------------------------------------------


def component_coeffs(
    quantity: Quantity, r: np.ndarray, h: float, geom: CuspGeometry
) -> np.ndarray:
    """Coefficients (n, ncomp, 4) of each component as a cubic in u = x3/psi."""
    a = geom.alpha
    r = np.asarray(r, dtype=float)
    psi = h + r ** (1.0 + a)
    pp = (1.0 + a) * r**a
    rpp2 = a * (1.0 + a) * r**a
    k1 = 1.0 / (2.0 * psi)
    B = r * pp * k1
    D = r * pp / (2.0 * psi * psi)
    T2 = r / (2.0 * psi * psi)
    B_r = (pp + rpp2) * k1 - r * pp * pp / (2.0 * psi * psi)
    inv = 1.0 / psi
    z = np.zeros_like(r)

    quantity = Quantity(quantity)
    if quantity == Quantity.FIELD:
        # w_r = -(r k1)(6u - 6u^2); w_3 = (3u^2 - 2u^3) - B(6u^2 - 6u^3)
        comps = [
            [z, -6.0 * r * k1, 6.0 * r * k1, z],
            [z, z, 3.0 - 6.0 * B, -2.0 + 6.0 * B],
        ]
    elif quantity == Quantity.GRADIENT:
        c2 = -6.0 * pp * inv - 6.0 * B_r + 12.0 * B * pp * inv
        c3 = 6.0 * pp * inv + 6.0 * B_r - 18.0 * B * pp * inv
        comps = [
            [z, -6.0 * k1 + 12.0 * D, 6.0 * k1 - 18.0 * D, z],      # dr_wr
            [-6.0 * T2, 12.0 * T2, z, z],                            # d3_wr
            [z, -6.0 * k1, 6.0 * k1, z],                             # wr_over_r
            [z, z, c2, c3],                                          # dr_w3
            [z, 6.0 * inv - 12.0 * D, -6.0 * inv + 18.0 * D, z],     # d3_w3
        ]
    elif quantity == Quantity.H_DERIVATIVE:
        comps = [
            [z, 12.0 * T2, -18.0 * T2, z],                           # dh_wr
            [z, z, -6.0 * inv + 18.0 * D, 6.0 * inv - 24.0 * D],     # dh_w3
        ]
    else:  # pragma: no cover
        raise ParameterError(f"unknown quantity {quantity!r}")

    out = np.empty((r.size, len(comps), 4))
    for i, comp in enumerate(comps):
        for k, c in enumerate(comp):
            out[:, i, k] = np.broadcast_to(c, r.shape)
    return out


def squared_magnitude_coeffs(
    quantity: Quantity, r: np.ndarray, h: float, geom: CuspGeometry
) -> np.ndarray:
    """Coefficients (n, 7) of the squared magnitude as a degree-6 polynomial in u."""
    comps = component_coeffs(quantity, r, h, geom)
    out = np.zeros((comps.shape[0], 7))
    for i in range(comps.shape[1]):
        c = comps[:, i, :]
        for j in range(4):
            for k in range(4):
                out[:, j + k] += c[:, j] * c[:, k]
    return out


def gradient_envelope(r, psi_val, slope):
    """Pointwise bound shape for the gradient: 1/psi + r/psi^2 + psi'/psi."""
    return 1.0 / psi_val + r / psi_val**2 + slope / psi_val


def h_derivative_envelope(r, psi_val):
    """Pointwise bound shape for the h-derivative: 1/psi + r/psi^2."""
    return 1.0 / psi_val + r / psi_val**2


# ----------------------------------------------------------------------------
# Global blended field.
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffConfig:
    """Cutoff transition bands; None means the defaults tied to the geometry.

    chi_band defaults to (r0, 2 r0) in both r and x3; eta_band defaults to
    (d0/2, d0) in signed distance from the reference body.
    """

    chi_band: tuple[float, float] | None = None
    eta_band: tuple[float, float] | None = None

    def resolve(self, geom: CuspGeometry) -> tuple[tuple[float, float], tuple[float, float]]:
        chi = self.chi_band if self.chi_band is not None else (geom.r0, 2.0 * geom.r0)
        eta = self.eta_band if self.eta_band is not None else (geom.d0 / 2.0, geom.d0)
        for lo, hi in (chi, eta):
            if not (0.0 < lo < hi):
                raise ParameterError(f"invalid cutoff band ({lo}, {hi})")
        return chi, eta


def _step_down(x: float, lo: float, hi: float) -> tuple[float, float, float]:
    """C^2 transition from 1 (x <= lo) to 0 (x >= hi), with d/dx and d2/dx2."""
    if x <= lo:
        return 1.0, 0.0, 0.0
    if x >= hi:
        return 0.0, 0.0, 0.0
    w = hi - lo
    s, ds, dds = smoothstep((x - lo) / w)
    return 1.0 - s, -ds / w, -dds / (w * w)


class _CappedBody:
    """Reference body: gap profile for r <= 2 r0 capped by a tangent sphere.

    The sphere is centered on the axis and matches the profile's value and
    slope on the ring r = 2 r0, so the signed distance is C^1 across the
    seam.  Distances are computed in the meridian half-plane, which agrees
    with the 3D distance for an axisymmetric body.
    """

    def __init__(self, geom: CuspGeometry, h: float):
        a = geom.alpha
        t = 2.0 * geom.r0
        self.alpha = a
        self.h = h
        self.rmax = t
        slope = (1.0 + a) * t**a
        self.center3 = h + t ** (1.0 + a) + t / slope
        self.radius = t * math.sqrt(1.0 + slope * slope) / slope
        # polar angle of the seam ring measured from the downward axis
        self.ring_angle = math.atan2(t, t / slope)

    def profile(self, s: float) -> float:
        return self.h + s ** (1.0 + self.alpha)

    def profile_slope(self, s: float) -> float:
        return (1.0 + self.alpha) * s**self.alpha

    def top(self, r: float) -> float:
        return self.center3 + math.sqrt(max(self.radius**2 - r * r, 0.0))

    def contains(self, r: float, x3: float) -> bool:
        if r <= self.rmax:
            return self.profile(r) <= x3 <= self.top(r)
        return math.hypot(r, x3 - self.center3) <= self.radius

    def _nearest_on_profile(self, r: float, x3: float) -> tuple[float, float]:
        """Nearest parameter on the profile arc s in [0, 2 r0].

        Golden-section bracketing of the squared distance followed by Newton
        polish of the stationarity equation; golden section alone is only
        sqrt(eps)-accurate, which is not enough for the distance gradient.
        """

        def sq(s):
            return (s - r) ** 2 + (self.profile(s) - x3) ** 2

        lo, hi = 0.0, self.rmax
        inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
        c = hi - inv_phi * (hi - lo)
        d = lo + inv_phi * (hi - lo)
        fc, fd = sq(c), sq(d)
        for _ in range(40):
            if fc < fd:
                hi, d, fd = d, c, fc
                c = hi - inv_phi * (hi - lo)
                fc = sq(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + inv_phi * (hi - lo)
                fd = sq(d)
        s = 0.5 * (lo + hi)
        if 0.0 < s < self.rmax:
            a = self.alpha
            for _ in range(6):
                sl = self.profile_slope(s)
                gap = self.profile(s) - x3
                grad = (s - r) + gap * sl
                curv_term = a * (1.0 + a) * s ** (a - 1.0) if s > 0.0 else 0.0
                hess = 1.0 + sl * sl + gap * curv_term
                if hess <= 0.0:
                    break
                step = grad / hess
                s = min(max(s - step, 0.0), self.rmax)
                if abs(step) < 1e-15 * max(s, 1e-15):
                    break
        return s, math.sqrt(sq(s))

    def distance_jet(self, r: float, x3: float, need_hessian: bool):
        """Distance from an exterior point with gradient and (optionally) Hessian.

        The Hessian of a distance field is curvature/(1 + distance*curvature)
        times the projector onto the level-set tangent; it is evaluated in
        the stable form 1/(1/curvature + distance).
        """
        s, d_prof = self._nearest_on_profile(r, x3)

        vr, v3 = r, x3 - self.center3
        rho = math.hypot(vr, v3)
        ang = math.atan2(vr, -v3)
        d_sph = math.inf
        if ang >= self.ring_angle and rho >= self.radius:
            d_sph = rho - self.radius

        if d_prof <= d_sph:
            delta = d_prof
            px, p3 = s, self.profile(s)
            nr, n3 = (r - px) / delta, (x3 - p3) / delta
            if need_hessian:
                sl = self.profile_slope(s)
                if s > 0.0 and self.alpha < 1.0:
                    curv = self.alpha * (1.0 + self.alpha) * s ** (self.alpha - 1.0)
                    inv_kappa = (1.0 + sl * sl) ** 1.5 / curv
                elif self.alpha == 1.0:
                    inv_kappa = (1.0 + sl * sl) ** 1.5 / 2.0
                else:
                    inv_kappa = 0.0  # curvature blows up at the tip
            else:
                inv_kappa = None
        else:
            delta = d_sph
            nr, n3 = vr / rho, v3 / rho
            inv_kappa = self.radius if need_hessian else None

        if not need_hessian:
            return delta, nr, n3, 0.0, 0.0, 0.0
        coef = 1.0 / (inv_kappa + delta)
        # Hessian = coef * t t^T with the tangent t = (-n3, nr)
        return delta, nr, n3, coef * n3 * n3, -coef * n3 * nr, coef * nr * nr


_RIGID_SAMPLE = FieldSample(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def eval_global_field(
    point: GapPoint,
    h: float,
    geom: CuspGeometry,
    cutoffs: CutoffConfig = CutoffConfig(),
) -> FieldSample:
    """Field sample from the blended stream function, anywhere in x3 >= 0.

    Inside the reference body the rigid sample e_3 is returned.  In the gap
    (where chi = 1) the result reduces exactly to eval_cusp_field; beyond
    the eta band and outside the chi support the sample is identically zero.
    """
    require_admissible_height(h, geom)
    chi_band, eta_band = cutoffs.resolve(geom)
    r, x3 = point.r, point.x3
    a = geom.alpha

    body = _CappedBody(geom, h)
    if body.contains(r, x3):
        return _RIGID_SAMPLE

    X, Xp, Xpp = _step_down(r, *chi_band)
    Z, Zp, Zpp = _step_down(x3, *chi_band)
    chi = X * Z
    chi_r, chi_3 = Xp * Z, X * Zp
    chi_rr, chi_r3, chi_33 = Xpp * Z, Xp * Zp, X * Zpp

    # gap stream-function jet P = Phi(x3/psi), nonzero only where chi > 0
    P = P_r = P_3 = P_h = P_33 = P_r3 = P_3h = rP_rr = rP_rh = 0.0
    if chi != 0.0:
        psi = h + r ** (1.0 + a)
        pp = (1.0 + a) * r**a
        rpp2 = a * (1.0 + a) * r**a
        u = min(x3 / psi, 1.0)
        phi, dphi, ddphi = phi_shape(u)
        u_r = -u * pp / psi
        ru_r = -u * r * pp / psi
        ru_rr = 2.0 * u * (r * pp * pp) / (psi * psi) - u * rpp2 / psi
        P = phi
        P_r = dphi * u_r
        P_3 = dphi / psi
        P_h = -dphi * u / psi
        P_33 = ddphi / (psi * psi)
        P_r3 = -(pp / (psi * psi)) * (u * ddphi + dphi)
        P_3h = -(u * ddphi + dphi) / (psi * psi)
        rP_rr = ddphi * u_r * ru_r + dphi * ru_rr
        rP_rh = (r * pp / (psi * psi)) * (u * u * ddphi + 2.0 * u * dphi)

    # rigid stream-function cutoff eta(distance), moot where chi == 1
    eta = eta_r = eta_3 = eta_h = eta_rr = eta_r3 = eta_33 = eta_3h = eta_rh = 0.0
    if chi != 1.0:
        lo, hi = eta_band
        delta, d_r, d_3, H_rr, H_r3, H_33 = body.distance_jet(
            r, x3, need_hessian=True
        )
        if delta >= hi:
            eta = 0.0
        elif delta <= lo:
            eta = 1.0
        else:
            e, de, dde = _step_down(delta, lo, hi)
            eta = e
            eta_r = de * d_r
            eta_3 = de * d_3
            eta_h = -eta_3
            eta_rr = dde * d_r * d_r + de * H_rr
            eta_r3 = dde * d_r * d_3 + de * H_r3
            eta_33 = dde * d_3 * d_3 + de * H_33
            eta_3h = -eta_33
            eta_rh = -eta_r3

    one_m = 1.0 - chi
    A = one_m * eta + chi * P
    A_r = -chi_r * eta + one_m * eta_r + chi_r * P + chi * P_r
    A_3 = -chi_3 * eta + one_m * eta_3 + chi_3 * P + chi * P_3
    A_h = one_m * eta_h + chi * P_h
    A_33 = -chi_33 * eta - 2.0 * chi_3 * eta_3 + one_m * eta_33 + chi_33 * P
    A_33 += 2.0 * chi_3 * P_3 + chi * P_33
    A_r3 = (
        -chi_r3 * eta
        - chi_r * eta_3
        - chi_3 * eta_r
        + one_m * eta_r3
        + chi_r3 * P
        + chi_r * P_3
        + chi_3 * P_r
        + chi * P_r3
    )
    A_3h = -chi_3 * eta_h + one_m * eta_3h + chi_3 * P_h + chi * P_3h
    rA_rr = r * (-chi_rr * eta - 2.0 * chi_r * eta_r + one_m * eta_rr + chi_rr * P)
    rA_rr += r * 2.0 * chi_r * P_r + chi * rP_rr
    rA_rh = r * (-chi_r * eta_h + one_m * eta_rh + chi_r * P_h) + chi * rP_rh

    return FieldSample(
        w_r=-(r / 2.0) * A_3,
        w_3=A + (r / 2.0) * A_r,
        dr_wr=-A_3 / 2.0 - (r / 2.0) * A_r3,
        d3_wr=-(r / 2.0) * A_33,
        dr_w3=1.5 * A_r + 0.5 * rA_rr,
        d3_w3=A_3 + (r / 2.0) * A_r3,
        wr_over_r=-A_3 / 2.0,
        dh_wr=-(r / 2.0) * A_3h,
        dh_w3=A_h + 0.5 * rA_rh,
    )
