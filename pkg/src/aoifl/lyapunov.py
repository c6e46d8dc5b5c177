"""Virtual queues for the staleness constraints and the drift-plus-penalty cost.

Three queues are kept per sensor:

* ``gamma``   -- time-averaged staleness stays below ``f0``;
* ``upsilon`` -- mean exceedance stays below ``e0``;
* ``lam``     -- threshold-violation probability stays below ``epsilon``.

Each transmission minimises ``V * exp(rho * E(p)) + theta1 * f(p)**2 + theta2 * f(p)``
where the thetas depend on whether the realised staleness exceeds ``f0``.
Since ``f(p)`` is strictly decreasing in ``p`` there is one threshold power
``p0`` splitting ``(0, p_max]`` into an exceeding and a non-exceeding branch;
see :func:`branch_threshold_power`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .aoi import StalenessParams, staleness, staleness_inverse
from .phy import ChannelParams, transmission_time

__all__ = [
    "VirtualQueues",
    "DppCoefficients",
    "update_gamma",
    "update_upsilon",
    "update_lambda",
    "update_all",
    "dpp_coefficients",
    "branch_threshold_power",
    "staleness_at_power",
    "penalty",
    "per_transmission_objective",
]


@dataclass(frozen=True)
class VirtualQueues:
    gamma: float = 0.0
    upsilon: float = 0.0
    lam: float = 0.0

    def __post_init__(self) -> None:
        if self.gamma < 0 or self.upsilon < 0 or self.lam < 0:
            raise ValueError("virtual queues must be non-negative")


@dataclass(frozen=True)
class DppCoefficients:
    theta1: float
    theta2: float
    V: float
    rho: float


def update_gamma(q: VirtualQueues, f: float, sp: StalenessParams) -> VirtualQueues:
    return replace(q, gamma=max(q.gamma + f - sp.f0, 0.0))


def update_upsilon(q: VirtualQueues, exceed: float | None, sp: StalenessParams) -> VirtualQueues:
    if exceed is None:
        return q
    return replace(q, upsilon=max(q.upsilon + exceed - sp.e0, 0.0))


def update_lambda(q: VirtualQueues, f: float, exceeded: bool, sp: StalenessParams) -> VirtualQueues:
    return replace(q, lam=max(q.lam + (float(exceeded) - sp.epsilon) * f, 0.0))


def update_all(
    q: VirtualQueues,
    f: float,
    exceed: float | None,
    sp: StalenessParams,
    track_extremes: bool = True,
) -> VirtualQueues:
    """Post-transmission update of every queue from the realised staleness.

    With ``track_extremes=False`` (the staleness-agnostic baseline) only
    ``gamma`` evolves and the other two stay at zero.
    """
    q = update_gamma(q, f, sp)
    if not track_extremes:
        return q
    q = update_upsilon(q, exceed, sp)
    return update_lambda(q, f, exceed is not None, sp)


def dpp_coefficients(
    q: VirtualQueues,
    exceeded_branch: bool,
    sp: StalenessParams,
    V: float = 0.0,
    rho: float = 1.0,
    track_extremes: bool = True,
) -> DppCoefficients:
    """Quadratic and linear staleness weights of the drift bound.

    ``track_extremes=False`` drops the drift terms of the exceedance and
    violation queues, leaving ``theta1 = 1/2`` and ``theta2 = gamma - f0``.
    """
    if not track_extremes:
        return DppCoefficients(0.5, q.gamma - sp.f0, V, rho)
    eps = sp.epsilon
    ind = 1.0 if exceeded_branch else 0.0
    theta1 = 0.5 * (1.0 + eps * eps) + (1.0 - eps) * ind
    theta2 = q.gamma - sp.f0 - eps * q.lam + (q.lam + q.upsilon - sp.f0 - sp.e0) * ind
    return DppCoefficients(theta1, theta2, V, rho)


def staleness_at_power(p: float, eta: float, h: float, cp: ChannelParams, sp: StalenessParams) -> float:
    return staleness(eta + transmission_time(p, h, cp), sp)


def branch_threshold_power(eta: float, h: float, cp: ChannelParams, sp: StalenessParams) -> float:
    """Power ``p0`` at which the realised staleness equals ``f0`` exactly.

    Returns ``math.inf`` when no power brings staleness down to ``f0``
    (the backlog alone already uses up the AoI budget). The result may
    exceed ``p_max``; callers clip.
    """
    t0 = staleness_inverse(sp.f0, sp) - eta
    if t0 <= 0:
        return math.inf
    exponent = cp.payload_bits * math.log(2.0) / (cp.bandwidth_hz * t0)
    if exponent > 700:
        return math.inf
    return math.expm1(exponent) * cp.noise_power_w / h


def penalty(f: float, c: DppCoefficients) -> float:
    return c.theta1 * f * f + c.theta2 * f


def per_transmission_objective(
    p: float,
    eta: float,
    h: float,
    q: VirtualQueues,
    cp: ChannelParams,
    sp: StalenessParams,
    V: float,
    rho: float,
    track_extremes: bool = True,
) -> float:
    """``V exp(rho E) + theta1 f^2 + theta2 f`` with the branch picked by ``f(p)``.

    The additive constant of the drift bound does not depend on ``p`` and is
    left out.
    """
    if not 0 < p <= cp.p_max_w * (1 + 1e-12):
        raise ValueError(f"power {p!r} outside (0, p_max]")
    t = transmission_time(p, h, cp)
    f = staleness(eta + t, sp)
    c = dpp_coefficients(q, f > sp.f0, sp, V, rho, track_extremes)
    return V * math.exp(rho * p * t) + penalty(f, c)
