"""Generalized Pareto modelling of staleness exceedances.

The likelihood of a single exceedance ``q`` is

    G(sigma, xi | q) = (1/sigma) * (1 + xi q / sigma) ** -(1/xi + 1)

and local models are trained by one step of tilted empirical risk
minimisation (TERM) on the likelihood. A plain maximum-likelihood fitter is
provided for the centralised baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

__all__ = [
    "GpdModel",
    "TermSettings",
    "gpd_pdf",
    "gpd_logpdf",
    "gpd_pdf_grad",
    "gpd_sf",
    "gpd_mean",
    "gpd_sample",
    "term_loss",
    "term_gradient",
    "local_update",
    "project",
    "mle_fit",
]

# below this |xi| the exponential limit / series expansion is used
_XI_SMALL = 1e-6
_SIGMA_FLOOR = 1e-8
_SUPPORT_MARGIN = 1e-12
_XI_MAX = 1.0 - 1e-3
_XI_MAX_STEP = 0.1


@dataclass(frozen=True)
class GpdModel:
    sigma: float
    xi: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError("GPD scale must be positive")

    def in_support(self, q) -> bool:
        return bool(np.all(1.0 + self.xi * np.asarray(q, dtype=float) / self.sigma > 0))


@dataclass(frozen=True)
class TermSettings:
    tilt: float = -0.1
    step_sigma: float = 1e-9
    step_xi: float = 1e-3
    init_model: GpdModel = GpdModel(2e-4, 0.02)
    epochs: int = 1

    def __post_init__(self) -> None:
        if self.tilt == 0:
            raise ValueError("tilt must be non-zero")
        if not (self.step_sigma > 0 and self.step_xi > 0):
            raise ValueError("step sizes must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def _as_samples(q, allow_empty: bool = False) -> np.ndarray:
    arr = np.asarray(q, dtype=float).ravel()
    if arr.size == 0 and not allow_empty:
        raise ValueError("sample set is empty")
    return arr


def _check_support(model: GpdModel, q: np.ndarray) -> None:
    if np.any(q < 0):
        raise ValueError("exceedances must be non-negative")
    if not model.in_support(q):
        raise ValueError(f"samples outside the support of {model}")


def gpd_logpdf(model: GpdModel, q) -> np.ndarray:
    q = _as_samples(q)
    _check_support(model, q)
    s, xi = model.sigma, model.xi
    if abs(xi) < 1e-12:
        return -math.log(s) - q / s
    return -math.log(s) - (1.0 / xi + 1.0) * np.log1p(xi * q / s)


def gpd_pdf(model: GpdModel, q):
    out = np.exp(gpd_logpdf(model, q))
    return float(out[0]) if np.ndim(q) == 0 else out


def gpd_pdf_grad(model: GpdModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of the likelihood w.r.t. ``sigma`` and ``xi``.

    Closed forms:

        dG/dsigma = (q - sigma) / sigma^3 * (1 + xi q/sigma) ** (-2 - 1/xi)
        dG/dxi    = (1 + xi q/sigma) ** (-1 - 1/xi) / (sigma xi)
                    * ( -(xi + 1) q / (sigma + xi q) + ln(1 + xi q/sigma) / xi )

    The second expression cancels catastrophically for tiny ``xi``; there a
    third-order series of ``d ln G / d xi`` is used instead.
    """
    q = _as_samples(q)
    _check_support(model, q)
    s, xi = model.sigma, model.xi
    g = np.exp(gpd_logpdf(model, q))
    z = 1.0 + xi * q / s
    d_sigma = g * (q - s) / (s * (s + xi * q))
    if abs(xi) < _XI_SMALL:
        u = q / s
        dlog_xi = (u * u / 2 - u) - 2 * xi * (u**3 / 3 - u * u / 2) + 3 * xi * xi * (u**4 / 4 - u**3 / 3)
        d_xi = g * dlog_xi
    else:
        d_sigma = (q - s) / s**3 * np.exp((-2.0 - 1.0 / xi) * np.log(z))
        d_xi = np.exp((-1.0 - 1.0 / xi) * np.log(z)) / (s * xi) * (
            -(xi + 1.0) * q / (s + xi * q) + np.log1p(xi * q / s) / xi
        )
    return d_sigma, d_xi


def gpd_sf(model: GpdModel, q) -> np.ndarray:
    """Survival function ``P(Q > q)``."""
    q = np.asarray(q, dtype=float)
    s, xi = model.sigma, model.xi
    if abs(xi) < 1e-12:
        return np.exp(-q / s)
    z = np.maximum(1.0 + xi * q / s, 0.0)
    with np.errstate(divide="ignore"):
        return np.where(z > 0, z ** (-1.0 / xi), 0.0)


def gpd_mean(model: GpdModel) -> float:
    if model.xi >= 1:
        raise ValueError(f"GPD mean undefined for xi={model.xi} >= 1")
    return model.sigma / (1.0 - model.xi)


def gpd_sample(model: GpdModel, size: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling."""
    u = rng.random(size)
    s, xi = model.sigma, model.xi
    if abs(xi) < 1e-12:
        return -s * np.log1p(-u)
    return s / xi * np.expm1(-xi * np.log1p(-u))


def term_loss(model: GpdModel, samples, tilt: float) -> float:
    """``(1/t) ln mean(G^-t)``; for ``t -> 0`` this is the mean negative log-likelihood."""
    lg = gpd_logpdf(model, samples)
    if tilt == 0:
        return float(-lg.mean())
    return float((logsumexp(-tilt * lg) - math.log(lg.size)) / tilt)


def term_gradient(model: GpdModel, samples, tilt: float) -> tuple[float, float]:
    """Gradient of :func:`term_loss` in ``(sigma, xi)``.

    ``-sum(grad G * G^(-t-1)) / sum(G^-t)``, evaluated with the weights
    ``G^-t / sum(G^-t)`` normalised in the log domain.
    """
    q = _as_samples(samples)
    lg = gpd_logpdf(model, q)
    logw = -tilt * lg
    w = np.exp(logw - logsumexp(logw))
    d_sigma, d_xi = gpd_pdf_grad(model, q)
    g = np.exp(lg)
    return float(-np.sum(w * d_sigma / g)), float(-np.sum(w * d_xi / g))


def project(sigma: float, xi: float, samples: np.ndarray, previous: GpdModel | None = None) -> GpdModel:
    """Clamp a stepped ``(sigma, xi)`` back into the usable region.

    ``sigma`` stays above a floor and, when ``previous`` is given, within a
    factor two of it; ``xi`` moves by at most 0.1 per step, stays below one
    (finite mean) and keeps every sample inside the support. The step limits
    only bite when the fixed step size overshoots, which happens once
    ``sigma`` is comparable to ``sqrt(step_sigma)``.
    """
    if previous is not None:
        sigma = min(max(sigma, 0.5 * previous.sigma), 2.0 * previous.sigma)
        xi = min(max(xi, previous.xi - _XI_MAX_STEP), previous.xi + _XI_MAX_STEP)
    sigma = max(sigma, _SIGMA_FLOOR)
    xi = min(xi, _XI_MAX)
    if samples.size and xi < 0:
        q_max = float(samples.max())
        if q_max > 0:
            xi = max(xi, (_SUPPORT_MARGIN - 1.0) * sigma / q_max)
    return GpdModel(sigma, xi)


def local_update(global_model: GpdModel, samples, settings: TermSettings) -> GpdModel:
    """Gradient step(s) from the broadcast model on the local window maxima.

    An empty sample set returns the global model untouched.
    """
    q = _as_samples(samples, allow_empty=True)
    if q.size == 0:
        return global_model
    model = project(global_model.sigma, global_model.xi, q)
    for _ in range(settings.epochs):
        g_sigma, g_xi = term_gradient(model, q, settings.tilt)
        model = project(model.sigma - settings.step_sigma * g_sigma, model.xi - settings.step_xi * g_xi, q, model)
    return model


def _nll(params: np.ndarray, x: np.ndarray) -> float:
    log_s, xi = params
    if xi < -1.0:
        # likelihood unbounded there
        return math.inf
    s = math.exp(log_s)
    z = xi * x / s
    if np.any(z <= -1.0):
        return math.inf
    if abs(xi) < 1e-12:
        return x.size * log_s + float(x.sum()) / s
    return x.size * log_s + (1.0 / xi + 1.0) * float(np.log1p(z).sum())


def mle_fit(
    samples: Sequence[float] | np.ndarray,
    init: GpdModel | None = None,
    n_starts: int = 9,
    rng_seed: int = 0,
) -> GpdModel:
    """Maximum-likelihood GPD fit, multi-start Nelder-Mead on ``(log sigma, xi)``.

    Samples are rescaled by their mean before fitting, so the result is
    scale-equivariant. Start points: the exponential fit, the method-of-moments
    estimate, ``init`` (if given) and random perturbations of the moments
    estimate, ``n_starts`` in total, each nudged into the support.
    """
    x = _as_samples(samples)
    if x.size < 10:
        raise ValueError(f"need at least 10 samples for an MLE fit, got {x.size}")
    if np.any(x <= 0):
        raise ValueError("exceedances must be positive")
    scale = float(x.mean())
    x = x / scale

    var = float(x.var())
    xi_mom = 0.5 * (1.0 - 1.0 / var) if var > 0 else 0.0
    xi_mom = min(max(xi_mom, -0.4), 0.4)
    x_max = float(x.max())

    def feasible(log_s: float, xi: float) -> np.ndarray:
        xi = max(xi, -0.9 * math.exp(log_s) / x_max, -0.9)
        return np.array([log_s, xi])

    starts = [np.array([0.0, 0.0]), feasible(math.log(max(1.0 - xi_mom, 1e-3)), xi_mom)]
    if init is not None:
        starts.append(feasible(math.log(init.sigma / scale), init.xi))
    rng = np.random.default_rng(rng_seed)
    while len(starts) < n_starts:
        p = starts[1] + rng.normal(0.0, [0.3, 0.15])
        starts.append(feasible(p[0], p[1]))
    starts = starts[:max(n_starts, 1)]

    best = None
    for x0 in starts:
        if not math.isfinite(_nll(x0, x)):
            continue
        res = minimize(_nll, x0, args=(x,), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise RuntimeError("no feasible start point for the GPD fit")
    return GpdModel(math.exp(best.x[0]) * scale, float(best.x[1]))
