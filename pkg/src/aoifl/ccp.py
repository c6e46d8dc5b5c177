"""Convex-concave procedure for the per-transmission power problem.

The energy term ``exp(rho * E(p))`` is replaced by its first-order expansion
at the current reference power; the remaining one-dimensional problem is
solved on each indicator branch separately (see
:func:`aoifl.lyapunov.branch_threshold_power`), and the solution becomes the
next reference point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .aoi import StalenessParams
from .lyapunov import (
    VirtualQueues,
    branch_threshold_power,
    dpp_coefficients,
    per_transmission_objective,
)
from .phy import ChannelParams, transmission_time, transmission_time_derivative

__all__ = [
    "CcpSettings",
    "CcpResult",
    "TxContext",
    "linearization_slope",
    "solve_inner",
    "ccp_solve",
]

logger = logging.getLogger(__name__)

_LN2 = math.log(2.0)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
# lowest power considered, as an SNR; staleness there is astronomically large
_SNR_FLOOR = 1e-6


@dataclass(frozen=True)
class CcpSettings:
    tol_power_w: float = 1e-6
    max_iters: int = 50
    inner_tol: float = 1e-9
    init_policy: str = "random"
    init_power_w: float | None = None
    warm_start: bool = False
    grid_points: int = 40

    def __post_init__(self) -> None:
        if not self.tol_power_w > 0:
            raise ValueError("tol_power_w must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.init_policy not in ("random", "fixed"):
            raise ValueError(f"unknown init_policy {self.init_policy!r}")
        if self.grid_points < 3:
            raise ValueError("grid_points must be >= 3")


@dataclass(frozen=True)
class CcpResult:
    p_star: float
    iters: int
    converged: bool
    objective_at_solution: float
    trace: tuple[tuple[float, float], ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class TxContext:
    """Everything a single power decision depends on besides the power."""

    eta: float
    h: float
    queues: VirtualQueues
    cp: ChannelParams
    sp: StalenessParams
    V: float
    rho: float
    track_extremes: bool = True

    def objective(self, p: float) -> float:
        return per_transmission_objective(
            p, self.eta, self.h, self.queues, self.cp, self.sp, self.V, self.rho, self.track_extremes
        )


def linearization_slope(p_hat: float, h: float, cp: ChannelParams, rho: float) -> float:
    """Derivative of ``exp(rho * E(p))`` at ``p_hat``."""
    t = transmission_time(p_hat, h, cp)
    dt = transmission_time_derivative(p_hat, h, cp)
    return rho * math.exp(rho * p_hat * t) * (t + p_hat * dt)


def _branch_minimize(ctx: TxContext, lin: float, theta1: float, theta2: float, lo: float, hi: float, n: int, tol: float):
    """Minimise ``lin * p + theta1 f(p)^2 + theta2 f(p)`` over ``[lo, hi]``.

    Coarse scan on a log grid, then golden-section search in ``log p`` inside
    the cell pair around the best grid point.
    """
    cp, sp = ctx.cp, ctx.sp
    scale = cp.payload_bits * _LN2 / cp.bandwidth_hz
    gain = ctx.h / cp.noise_power_w
    k = 1.0 - sp.beta
    eta = ctx.eta

    def g(p: float) -> float:
        a = eta + scale / math.log1p(gain * p)
        f = a**k / k
        return lin * p + theta1 * f * f + theta2 * f

    if hi <= lo:
        return lo, g(lo)
    x = np.linspace(math.log(lo), math.log(hi), n)
    ps = np.exp(x)
    ps[-1] = hi
    with np.errstate(over="ignore"):
        a = eta + scale / np.log1p(gain * ps)
        f = a**k / k
        vals = lin * ps + theta1 * f * f + theta2 * f
    i = int(np.argmin(vals))
    best_p, best_v = float(ps[i]), float(vals[i])

    left, right = x[max(i - 1, 0)], x[min(i + 1, n - 1)]
    c = right - _INV_PHI * (right - left)
    d = left + _INV_PHI * (right - left)
    gc, gd = g(math.exp(c)), g(math.exp(d))
    while right - left > tol:
        if gc < gd:
            right, d, gd = d, c, gc
            c = right - _INV_PHI * (right - left)
            gc = g(math.exp(c))
        else:
            left, c, gc = c, d, gd
            d = left + _INV_PHI * (right - left)
            gd = g(math.exp(d))
    for p_try, v_try in ((math.exp(c), gc), (math.exp(d), gd)):
        if v_try < best_v:
            best_p, best_v = p_try, v_try
    return min(best_p, hi), best_v


def solve_inner(p_ref: float, slope: float, ctx: TxContext, inner_tol: float = 1e-9, grid_points: int = 40) -> float:
    """Minimiser of ``V * slope * p + F(p)`` over ``(0, p_max]``.

    ``F`` uses the coefficients of whichever branch ``p`` falls in. ``p_ref``
    only shifts the surrogate by a constant and does not move the minimiser.
    """
    del p_ref
    cp = ctx.cp
    p_max = cp.p_max_w
    p_lo = _SNR_FLOOR * cp.noise_power_w / ctx.h
    p_lo = min(p_lo, p_max * 1e-3)
    p0 = branch_threshold_power(ctx.eta, ctx.h, cp, ctx.sp)
    lin = ctx.V * slope

    candidates = []
    # exceeding branch: p < p0
    # boundaries are pulled inside so rounding in f(p0) cannot flip the branch
    hi1 = min(p0 * (1.0 - 1e-9), p_max)
    if hi1 > p_lo:
        c1 = dpp_coefficients(ctx.queues, True, ctx.sp, ctx.V, ctx.rho, ctx.track_extremes)
        candidates.append(_branch_minimize(ctx, lin, c1.theta1, c1.theta2, p_lo, hi1, grid_points, inner_tol))
    # compliant branch: p0 <= p <= p_max
    if p0 * (1.0 + 1e-9) <= p_max:
        c0 = dpp_coefficients(ctx.queues, False, ctx.sp, ctx.V, ctx.rho, ctx.track_extremes)
        candidates.append(_branch_minimize(ctx, lin, c0.theta1, c0.theta2, max(p0 * (1.0 + 1e-9), p_lo), p_max, grid_points, inner_tol))
    p_best, _ = min(candidates, key=lambda pv: pv[1])
    return p_best


def ccp_solve(
    ctx: TxContext,
    settings: CcpSettings = CcpSettings(),
    rng: np.random.Generator | None = None,
    p_init: float | None = None,
    keep_trace: bool = False,
) -> CcpResult:
    """Iterate linearise-and-solve until the reference power settles.

    The initial reference is ``p_init`` if given, otherwise drawn from
    ``(0, p_max]`` (``init_policy="random"``) or taken from
    ``settings.init_power_w`` / ``p_max`` (``"fixed"``). An iterate that raises
    the true objective is rejected and the procedure stops there.
    """
    p_max = ctx.cp.p_max_w
    if p_init is None:
        if settings.init_policy == "random":
            if rng is None:
                raise ValueError("random initialisation needs an rng")
            p_init = p_max * (1.0 - rng.random())
        else:
            p_init = settings.init_power_w if settings.init_power_w is not None else p_max
    p = min(max(p_init, 1e-300), p_max)
    obj = ctx.objective(p)
    trace = [(p, obj)] if keep_trace else []

    if ctx.V == 0.0:
        # surrogate does not depend on the reference point
        p_new = solve_inner(p, 0.0, ctx, settings.inner_tol, settings.grid_points)
        obj_new = ctx.objective(p_new)
        if keep_trace:
            trace.append((p_new, obj_new))
        if obj_new <= obj:
            p, obj = p_new, obj_new
        return CcpResult(p, 1, True, obj, tuple(trace))

    converged = False
    iters = 0
    for iters in range(1, settings.max_iters + 1):
        slope = linearization_slope(p, ctx.h, ctx.cp, ctx.rho)
        p_new = solve_inner(p, slope, ctx, settings.inner_tol, settings.grid_points)
        obj_new = ctx.objective(p_new)
        if keep_trace:
            trace.append((p_new, obj_new))
        if obj_new > obj + 1e-15 * abs(obj):
            logger.debug("ccp: rejecting ascending iterate %.6g -> %.6g", obj, obj_new)
            converged = abs(p_new - p) < settings.tol_power_w
            break
        step = abs(p_new - p)
        p, obj = p_new, obj_new
        if step < settings.tol_power_w:
            converged = True
            break
    if not converged:
        logger.debug("ccp: stopped after %d iterations without convergence", iters)
    return CcpResult(p, iters, converged, obj, tuple(trace))
