"""Reduced gap dynamics of the settling body with power-law drag.

Two model closures of the thin-gap force balance are integrated:

    FULL_INERTIAL   m dv/dt = -m g - c_d h^(-beta) v,   dh/dt = v
    QUASI_STATIC    dh/dt = -(m g / c_d) h^beta

Both are models, not theorems: the drag force -c_d h^(-beta) v opposes the
motion in either direction so it only ever dissipates.  The quasi-static
closure reproduces the contact dichotomy: h vanishes in finite time exactly
when beta < 1, while for beta >= 1 the gap merely shrinks (exponentially at
beta = 1), so |log h(t)| grows linearly.

The drag exponent is a free parameter; beta_of_alpha provides the thin-gap
preset 3 alpha / (1 + alpha) tied to the profile roughness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import IntegrationError, ParameterError
from .reports import ordered_parallel_map


class FallMode(str, Enum):
    FULL_INERTIAL = "FULL_INERTIAL"
    QUASI_STATIC = "QUASI_STATIC"


class FallVerdict(str, Enum):
    CONTACT = "CONTACT"
    NO_CONTACT_BY_HORIZON = "NO_CONTACT_BY_HORIZON"


def beta_of_alpha(alpha: float) -> float:
    """Thin-gap drag exponent preset 3 alpha / (1 + alpha)."""
    if alpha <= 0.0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    return 3.0 * alpha / (1.0 + alpha)


@dataclass(frozen=True)
class FallConfig:
    m: float
    g: float
    c_d: float
    beta: float
    h0: float
    mode: FallMode
    t_max: float
    v0: float = 0.0
    h_stop: float = 1e-12
    tol: float = 1e-9

    def __post_init__(self):
        if self.m <= 0.0 or self.c_d <= 0.0:
            raise ParameterError("m and c_d must be positive")
        if self.g < 0.0:
            raise ParameterError(f"g must be nonnegative, got {self.g}")
        if self.beta < 0.0:
            raise ParameterError(f"beta must be nonnegative, got {self.beta}")
        if not self.h0 > self.h_stop > 0.0:
            raise ParameterError(
                f"need h0 > h_stop > 0, got h0={self.h0}, h_stop={self.h_stop}"
            )
        if self.t_max <= 0.0:
            raise ParameterError(f"t_max must be positive, got {self.t_max}")
        if not (0.0 < self.tol <= 1e-2):
            raise ParameterError(f"tol must lie in (0, 1e-2], got {self.tol}")
        object.__setattr__(self, "mode", FallMode(self.mode))


@dataclass(frozen=True)
class FallTrajectory:
    """Accepted integration samples (t, h, hdot) with the contact verdict."""

    times: tuple[float, ...]
    heights: tuple[float, ...]
    velocities: tuple[float, ...]
    contact_time: float | None
    verdict: FallVerdict


# Dormand-Prince 5(4) tableau.
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_DP_B5 = _DP_A[6]
_DP_B4 = (
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
)


def _quasi_static_time(h_from: float, h_to: float, beta: float, kappa: float) -> float:
    """Exact travel time of dh/dt = -kappa h^beta from h_from down to h_to >= 0."""
    if beta == 1.0:
        return math.log(h_from / h_to) / kappa
    ex = 1.0 - beta
    return (h_from**ex - h_to**ex) / (ex * kappa)


def simulate_fall(cfg: FallConfig) -> FallTrajectory:
    """Adaptive RK5(4) integration of the chosen closure until contact or t_max.

    Steps are capped at 0.5 h/|hdot| so the gap cannot cross zero within one
    step; contact is declared at h <= h_stop.  In quasi-static mode the
    contact time is refined through the exact local solution (continued all
    the way to h = 0 when beta < 1, where the remaining tail is integrable).
    """
    kappa = cfg.m * cfg.g / cfg.c_d

    if cfg.mode is FallMode.QUASI_STATIC:

        def rhs(y):
            return np.array([-kappa * y[0] ** cfg.beta])

        y = np.array([cfg.h0])
    else:

        def rhs(y):
            h, v = y
            return np.array([v, -cfg.g - (cfg.c_d / cfg.m) * h**-cfg.beta * v])

        y = np.array([cfg.h0, cfg.v0])

    t = 0.0
    f = rhs(y)
    times = [t]
    heights = [float(y[0])]
    velocities = [float(f[0]) if cfg.mode is FallMode.QUASI_STATIC else float(y[1])]
    dt_prop = cfg.t_max * 1e-6
    contact_time = None
    min_dt = 1e-18 * cfg.t_max
    ks = [None] * 7

    while t < cfg.t_max:
        if cfg.t_max - t <= min_dt:
            break
        hdot = f[0]
        cap = math.inf if hdot == 0.0 else 0.5 * y[0] / abs(hdot)
        dt = min(dt_prop, cap, cfg.t_max - t)
        if dt < min_dt:
            raise IntegrationError(
                f"step size underflow at t={t!r} (dt={dt!r} below {min_dt!r})"
            )

        ks[0] = f
        for i in range(1, 7):
            yi = y + dt * sum(a * k for a, k in zip(_DP_A[i], ks[:i]))
            if yi[0] <= 0.0:
                break
            ks[i] = rhs(yi)
        else:
            y5 = y + dt * sum(b * k for b, k in zip(_DP_B5, ks))
            y4 = y + dt * sum(b * k for b, k in zip(_DP_B4, ks))
            # absolute floor tied to h_stop so control stays relative while
            # h decays across many decades
            scale = cfg.tol * cfg.h_stop + cfg.tol * np.maximum(np.abs(y), np.abs(y5))
            err = max(float(np.sqrt(np.mean(((y5 - y4) / scale) ** 2))), 1e-16)
            if err <= 1.0 and y5[0] > 0.0:
                t += dt
                y = y5
                f = rhs(y)
                times.append(t)
                heights.append(float(y[0]))
                velocities.append(
                    float(f[0]) if cfg.mode is FallMode.QUASI_STATIC else float(y[1])
                )
                if len(times) > 2_000_000:
                    raise IntegrationError("sample budget exhausted")
                if y[0] <= cfg.h_stop:
                    break
                dt_prop = dt * min(5.0, max(0.2, 0.9 * err**-0.2))
                continue
            dt_prop = dt * min(1.0, max(0.2, 0.9 * err**-0.25)) if err > 1.0 else dt * 0.5
            continue
        # a stage went nonpositive: retry with a smaller step
        dt_prop = dt * 0.5

    verdict = FallVerdict.NO_CONTACT_BY_HORIZON
    if heights[-1] <= cfg.h_stop:
        verdict = FallVerdict.CONTACT
        t0, h0 = times[-2], heights[-2]
        if cfg.mode is FallMode.QUASI_STATIC:
            if cfg.beta < 1.0:
                contact_time = t0 + _quasi_static_time(h0, 0.0, cfg.beta, kappa)
            else:
                contact_time = t0 + _quasi_static_time(h0, cfg.h_stop, cfg.beta, kappa)
        else:
            contact_time = _hermite_crossing(
                times[-2], heights[-2], velocities[-2],
                times[-1], heights[-1], velocities[-1],
                cfg.h_stop,
            )

    return FallTrajectory(
        tuple(times), tuple(heights), tuple(velocities), contact_time, verdict
    )


def _hermite_crossing(t0, h0, v0, t1, h1, v1, target) -> float:
    """Crossing time of h(t) = target on the cubic Hermite interpolant."""
    dt = t1 - t0

    def h_at(s):
        s2, s3 = s * s, s * s * s
        return (
            (2.0 * s3 - 3.0 * s2 + 1.0) * h0
            + (s3 - 2.0 * s2 + s) * dt * v0
            + (-2.0 * s3 + 3.0 * s2) * h1
            + (s3 - s2) * dt * v1
        )

    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if h_at(mid) > target:
            lo = mid
        else:
            hi = mid
    return t0 + 0.5 * (lo + hi) * dt


@dataclass(frozen=True)
class LogLawFit:
    slope: float
    residual: float


def log_law_check(traj: FallTrajectory, cfg: FallConfig) -> LogLawFit:
    """Least-squares slope of |log h(t)| over the trailing half of a no-contact run.

    For the quasi-static closure at beta = 1 the slope is exactly
    m g / c_d; for beta > 1 the growth is sublinear and only the trailing
    window slope is reported.
    """
    if cfg.beta < 1.0:
        raise ParameterError("log-law check applies to beta >= 1 only")
    if traj.verdict is not FallVerdict.NO_CONTACT_BY_HORIZON:
        raise ParameterError("log-law check needs a no-contact trajectory")
    t = np.asarray(traj.times)
    mask = t >= 0.5 * t[-1]
    if int(mask.sum()) < 10:
        raise ParameterError(
            f"trajectory too short to fit: {int(mask.sum())} trailing samples"
        )
    tt = t[mask]
    yy = np.abs(np.log(np.asarray(traj.heights)[mask]))
    slope, intercept = np.polyfit(tt, yy, 1)
    residual = float(np.sqrt(np.mean((yy - (slope * tt + intercept)) ** 2)))
    return LogLawFit(float(slope), residual)


@dataclass(frozen=True)
class DichotomyRow:
    alpha: float
    beta: float
    verdict: FallVerdict
    expected: FallVerdict
    matches: bool


def contact_dichotomy(
    alpha_grid, cfg_template: FallConfig, workers: int | None = None
) -> tuple[DichotomyRow, ...]:
    """Quasi-static contact verdicts across a roughness grid.

    The grid must avoid the critical band [0.48, 0.52] around alpha = 1/2,
    where beta crosses 1 and no finite horizon can separate the two regimes.
    Expected verdict: CONTACT exactly when beta < 1.
    """
    alphas = [float(a) for a in alpha_grid]
    for a in alphas:
        if not 0.0 < a <= 1.0:
            raise ParameterError(f"alpha must lie in (0, 1], got {a}")
        if 0.48 <= a <= 0.52:
            raise ParameterError(
                f"alpha={a} lies in the critical band [0.48, 0.52]"
            )

    def run(a):
        beta = beta_of_alpha(a)
        cfg = replace(cfg_template, beta=beta, mode=FallMode.QUASI_STATIC)
        traj = simulate_fall(cfg)
        expected = (
            FallVerdict.CONTACT if beta < 1.0 else FallVerdict.NO_CONTACT_BY_HORIZON
        )
        return DichotomyRow(a, beta, traj.verdict, expected, traj.verdict is expected)

    return tuple(ordered_parallel_map(run, alphas, workers))
