import math

import numpy as np
import pytest

from aoifl.ccp import CcpSettings, TxContext, ccp_solve, linearization_slope
from aoifl.lyapunov import VirtualQueues
from aoifl.phy import transmission_energy


def grid_oracle(ctx, n=100_000):
    ps = np.geomspace(ctx.cp.p_max_w * 1e-9, ctx.cp.p_max_w, n)
    vals = np.array([ctx.objective(p) for p in ps])
    return float(vals.min())


def test_slope_reference_value(cp):
    assert linearization_slope(0.05, cp.pathloss_gain, cp, 2.0) == pytest.approx(0.01377279940721716, rel=1e-9)


def test_slope_matches_finite_difference(cp):
    h = cp.pathloss_gain * 0.3
    for p in (1e-4, 1e-2, 0.15):
        d = p * 1e-6
        fd = (math.exp(3 * transmission_energy(p + d, h, cp)) - math.exp(3 * transmission_energy(p - d, h, cp))) / (2 * d)
        assert linearization_slope(p, h, cp, 3.0) == pytest.approx(fd, rel=1e-6)


def test_energy_only_problem_prefers_low_power(cp, sp):
    # empty queues and large V: energy dominates, staleness pulls f up to f0 from below
    ctx = TxContext(0.0, cp.pathloss_gain, VirtualQueues(), cp, sp, 1.0, 2.0)
    res = ccp_solve(ctx, p_init=cp.p_max_w)
    assert res.converged
    assert res.p_star < 1e-3 * cp.p_max_w
    assert res.objective_at_solution <= ctx.objective(cp.p_max_w)


def test_large_violation_queue_forces_full_power_when_infeasible(cp, sp):
    # backlog already beyond the AoI threshold: every power exceeds, so minimise staleness
    ctx = TxContext(sp.aoi_threshold + 0.01, cp.pathloss_gain, VirtualQueues(lam=10.0), cp, sp, 1e-5, 2.0)
    res = ccp_solve(ctx, p_init=0.01)
    assert res.p_star == pytest.approx(cp.p_max_w, rel=1e-6)


def test_v_zero_single_solve(cp, sp):
    ctx = TxContext(0.02, cp.pathloss_gain, VirtualQueues(gamma=1e-4), cp, sp, 0.0, 2.0)
    res = ccp_solve(ctx, p_init=0.1)
    assert res.iters == 1 and res.converged


def test_descent_and_trace(cp, sp):
    ctx = TxContext(0.03, cp.pathloss_gain * 0.5, VirtualQueues(0.0, 0.0, 0.2), cp, sp, 1e-4, 2.0)
    res = ccp_solve(ctx, p_init=cp.p_max_w, keep_trace=True)
    objs = [o for _, o in res.trace]
    accepted = objs[: res.iters + 1]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(accepted, accepted[1:]))


def test_matches_grid_oracle_on_sample(cp, sp):
    rng = np.random.default_rng(11)
    for _ in range(15):
        ctx = TxContext(
            float(rng.uniform(0, 0.12)), cp.pathloss_gain * float(rng.exponential()),
            VirtualQueues(*rng.uniform(0, [2e-3, 1e-3, 0.5])), cp, sp, float(10 ** rng.uniform(-7, -3)), 2.0,
        )
        res = ccp_solve(ctx, rng=rng)
        best = grid_oracle(ctx, 20_000)
        assert res.objective_at_solution <= best + 1e-2 * abs(best)


def test_settings_validation():
    with pytest.raises(ValueError):
        CcpSettings(init_policy="zero")
    with pytest.raises(ValueError):
        CcpSettings(max_iters=0)


def test_random_init_requires_rng(cp, sp):
    ctx = TxContext(0.0, cp.pathloss_gain, VirtualQueues(), cp, sp, 1e-5, 2.0)
    with pytest.raises(ValueError):
        ccp_solve(ctx)
    fixed = ccp_solve(ctx, CcpSettings(init_policy="fixed", init_power_w=0.05))
    assert fixed.trace == ()
