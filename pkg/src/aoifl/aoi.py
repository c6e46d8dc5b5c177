"""Per-sensor age-of-information bookkeeping and the staleness transform."""

from __future__ import annotations

from dataclasses import dataclass, replace

__all__ = [
    "AoiState",
    "StalenessParams",
    "procrastinated_time",
    "update_aoi",
    "staleness",
    "staleness_inverse",
    "exceedance",
]


@dataclass(frozen=True)
class AoiState:
    """AoI after the most recent completed upload.

    ``data_index`` counts completed uploads; before the first one the state is
    all zeros, which forces the first procrastinated time to zero.
    """

    last_sample_instant: float = 0.0
    last_aoi: float = 0.0
    data_index: int = 0

    def __post_init__(self) -> None:
        if self.last_aoi < 0:
            raise ValueError("AoI cannot be negative")


@dataclass(frozen=True)
class StalenessParams:
    beta: float = -2.0
    f0: float = 5e-4
    e0: float = 1e-4
    epsilon: float = 2e-3

    def __post_init__(self) -> None:
        if self.beta > 0:
            raise ValueError("beta must be <= 0")
        if not (self.f0 > 0 and self.e0 > 0):
            raise ValueError("f0 and e0 must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    @property
    def aoi_threshold(self) -> float:
        """AoI at which staleness equals ``f0``."""
        return staleness_inverse(self.f0, self)


def procrastinated_time(state: AoiState, new_sample_instant: float) -> float:
    """Time the new sample waits in the buffer for the previous upload."""
    if new_sample_instant < state.last_sample_instant:
        raise ValueError(
            f"sample instants must not regress ({new_sample_instant} < {state.last_sample_instant})"
        )
    if state.data_index == 0:
        return 0.0
    return max(state.last_sample_instant + state.last_aoi - new_sample_instant, 0.0)


def update_aoi(state: AoiState, new_sample_instant: float, tx_time: float) -> AoiState:
    if not tx_time > 0:
        raise ValueError("transmission time must be positive")
    eta = procrastinated_time(state, new_sample_instant)
    return replace(
        state,
        last_sample_instant=new_sample_instant,
        last_aoi=eta + tx_time,
        data_index=state.data_index + 1,
    )


def staleness(a: float, sp: StalenessParams) -> float:
    if a < 0:
        raise ValueError("AoI must be non-negative")
    k = 1.0 - sp.beta
    return a**k / k


def staleness_inverse(f: float, sp: StalenessParams) -> float:
    """AoI whose staleness is ``f`` (closed form of the power map)."""
    if f < 0:
        raise ValueError("staleness must be non-negative")
    k = 1.0 - sp.beta
    return (k * f) ** (1.0 / k)


def exceedance(f: float, sp: StalenessParams) -> float | None:
    """``f - f0`` when strictly positive, else ``None``."""
    q = f - sp.f0
    return q if q > 0 else None
