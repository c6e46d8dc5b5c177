import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from aoifl.aoi import AoiState, StalenessParams, procrastinated_time, staleness, staleness_inverse, update_aoi
from aoifl.ccp import TxContext, ccp_solve
from aoifl.config import default_channel
from aoifl.evt import GpdModel, gpd_sf, local_update, TermSettings
from aoifl.federation import LocalReport, aggregate
from aoifl.lyapunov import VirtualQueues, branch_threshold_power, staleness_at_power, update_all
from aoifl.metrics import entropic_objective
from aoifl.phy import transmission_time

CP = default_channel()
SP = StalenessParams()
pos = st.floats(1e-9, 1.0, allow_nan=False)


@given(st.floats(0.0, 0.5), st.floats(1e-4, 10.0))
def test_staleness_roundtrip(a, neg_beta):
    sp = StalenessParams(beta=-neg_beta)
    assert math.isclose(staleness_inverse(staleness(a, sp), sp), a, rel_tol=1e-9, abs_tol=1e-12)


@given(st.lists(st.tuples(st.floats(0, 0.1), st.floats(1e-4, 0.2)), min_size=1, max_size=30))
def test_aoi_never_below_tx_time_and_backlog_non_negative(steps):
    s, tau = AoiState(), 0.0
    for gap, tx in steps:
        tau += gap
        eta = procrastinated_time(s, tau)
        assert eta >= 0
        s = update_aoi(s, tau, tx)
        assert s.last_aoi >= tx


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 2e-3), st.booleans())
def test_queues_stay_non_negative(g, u, l, f, track):
    q = update_all(VirtualQueues(g, u, l), f, f - SP.f0 if f > SP.f0 else None, SP, track)
    assert min(q.gamma, q.upsilon, q.lam) >= 0


@given(st.floats(1e-3, 100.0), st.floats(0.0, 0.11))
def test_threshold_power_separates_branches(fading, eta):
    h = CP.pathloss_gain * fading
    p0 = branch_threshold_power(eta, h, CP, SP)
    if p0 < CP.p_max_w:
        assert staleness_at_power(p0 * 1.001, eta, h, CP, SP) < SP.f0
        assert staleness_at_power(p0 * 0.999, eta, h, CP, SP) > SP.f0


@given(pos, pos)
def test_transmission_time_decreasing(p1, p2):
    h = CP.pathloss_gain
    if p1 < p2:
        assert transmission_time(p1, h, CP) >= transmission_time(p2, h, CP)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 0.12), st.floats(0.05, 5.0), st.floats(0, 2e-3), st.floats(0, 1e-3), st.floats(0, 1.0),
       st.floats(1e-8, 1e-3), st.floats(0.01, 1.0))
def test_ccp_never_worse_than_its_start(eta, fading, g, u, l, v, frac):
    ctx = TxContext(eta, CP.pathloss_gain * fading, VirtualQueues(g, u, l), CP, SP, v, 2.0)
    p_init = CP.p_max_w * frac
    res = ccp_solve(ctx, p_init=p_init)
    assert 0 < res.p_star <= CP.p_max_w
    assert res.objective_at_solution <= ctx.objective(p_init) * (1 + 1e-12)


@given(st.lists(st.floats(0, 1e-2), min_size=1, max_size=50), st.floats(0.01, 1000.0))
def test_entropic_objective_between_mean_and_max(e, rho):
    val = entropic_objective(e, rho)
    assert np.mean(e) * (1 - 1e-9) - 1e-15 <= val <= max(e) * (1 + 1e-9) + 1e-15


@given(st.lists(st.tuples(st.floats(1e-6, 1.0), st.floats(-0.5, 0.9), st.integers(0, 5)), min_size=1, max_size=8))
def test_aggregate_is_convex_combination(parts):
    reports = [LocalReport(GpdModel(s, x), n, 0) for s, x, n in parts]
    g = aggregate(reports).model
    live = [r for r in reports if r.sample_count > 0] or reports[:1]
    assert min(r.model.sigma for r in live) * (1 - 1e-12) <= g.sigma <= max(r.model.sigma for r in live) * (1 + 1e-12)


@given(st.floats(1e-5, 1.0), st.floats(-0.5, 0.9), st.lists(st.floats(0, 10), min_size=2, max_size=20))
def test_survival_function_is_monotone(sigma, xi, q):
    sf = gpd_sf(GpdModel(sigma, xi), np.sort(q))
    assert np.all((sf >= 0) & (sf <= 1)) and np.all(np.diff(sf) <= 1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1e-7, 1e-3), min_size=1, max_size=10), st.floats(5e-5, 5e-4), st.floats(-0.2, 0.5))
def test_local_update_keeps_samples_in_support(q, sigma, xi):
    m = local_update(GpdModel(sigma, xi), q, TermSettings())
    assert m.sigma > 0 and m.xi < 1 and m.in_support(q)
