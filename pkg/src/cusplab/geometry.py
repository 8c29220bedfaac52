"""Gap geometry between the rough body and the flat wall.

The body's lower surface sits at height psi(r) = h + r**(1+alpha) above the
wall for radii r below the cusp radius r0.  All lengths are dimensionless
numbers in consistent units; no unit system is attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class CuspGeometry:
    """Cusp parameters: roughness exponent, cusp radius, safety distance.

    A gap height h is admissible only while h + r0**(1+alpha) <= d0 < r0;
    this is what makes the blended test field vanish on the container wall,
    so it is enforced eagerly at every public entry point.
    """

    alpha: float
    r0: float
    d0: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (0.0 < self.r0 < 1.0):
            raise ParameterError(f"r0 must lie in (0, 1), got {self.r0}")
        if not self.d0 > 0.0:
            raise ParameterError(f"d0 must be positive, got {self.d0}")
        if not self.d0 < self.r0:
            raise ParameterError(
                f"d0 must be smaller than r0, got d0={self.d0}, r0={self.r0}"
            )
        if self.d0 <= self.r0 ** (1.0 + self.alpha):
            raise ParameterError(
                "geometry admits no gap height: need d0 > r0**(1+alpha) "
                f"= {self.r0 ** (1.0 + self.alpha)!r}"
            )

    def max_height(self) -> float:
        """Largest admissible gap height."""
        return self.d0 - self.r0 ** (1.0 + self.alpha)


def is_admissible_height(h: float, geom: CuspGeometry) -> bool:
    return h > 0.0 and h + geom.r0 ** (1.0 + geom.alpha) <= geom.d0


def require_admissible_height(h: float, geom: CuspGeometry) -> None:
    if not is_admissible_height(h, geom):
        raise ParameterError(
            f"gap height h={h!r} not admissible: need 0 < h <= {geom.max_height()!r}"
        )


@dataclass(frozen=True)
class GapPoint:
    """A point of the meridian half-plane: radius r >= 0, height x3 >= 0."""

    r: float
    x3: float

    def __post_init__(self):
        if self.r < 0.0:
            raise ParameterError(f"r must be nonnegative, got {self.r}")
        if self.x3 < 0.0:
            raise ParameterError(f"x3 must be nonnegative, got {self.x3}")


@dataclass(frozen=True)
class ProfileJet:
    """Value and first two radial derivatives of the profile.

    For alpha < 1 the second derivative diverges at r = 0; that case is
    reported through `curvature_singular` (with `curvature` set to +inf) so
    the infinity never leaks into arithmetic.  Downstream code only ever uses
    the finite combination r * psi''.
    """

    value: float
    slope: float
    curvature: float
    curvature_singular: bool


def psi(r: float, h: float, geom: CuspGeometry) -> ProfileJet:
    """Profile psi(r) = h + r**(1+alpha) with derivatives.

    Accepts any r >= 0 and h >= 0 (h = 0 is the touching state).
    """
    if r < 0.0:
        raise ParameterError(f"r must be nonnegative, got {r}")
    if h < 0.0:
        raise ParameterError(f"h must be nonnegative, got {h}")
    a = geom.alpha
    value = h + r ** (1.0 + a)
    slope = (1.0 + a) * r**a
    if r == 0.0 and a < 1.0:
        return ProfileJet(value, slope, math.inf, True)
    curvature = a * (1.0 + a) * r ** (a - 1.0)
    return ProfileJet(value, slope, curvature, False)


def in_cusp(point: GapPoint, h: float, geom: CuspGeometry) -> bool:
    """Membership in the gap region: 0 <= r < r0 and 0 <= x3 <= psi(r)."""
    require_admissible_height(h, geom)
    if point.r >= geom.r0:
        return False
    return point.x3 <= h + point.r ** (1.0 + geom.alpha)
