import math

import pytest

from aoifl.lyapunov import (
    VirtualQueues,
    branch_threshold_power,
    dpp_coefficients,
    per_transmission_objective,
    staleness_at_power,
    update_all,
)
from aoifl.phy import transmission_energy


def test_queue_updates_hand_example(sp):
    q = VirtualQueues(gamma=1e-4, upsilon=2e-5, lam=0.01)
    f = sp.f0 + 3e-4
    out = update_all(q, f, 3e-4, sp)
    assert out.gamma == pytest.approx(1e-4 + 3e-4)
    assert out.upsilon == pytest.approx(2e-5 + 3e-4 - sp.e0)
    assert out.lam == pytest.approx(0.01 + (1 - sp.epsilon) * f)


def test_queue_updates_clip_at_zero(sp):
    out = update_all(VirtualQueues(), 1e-5, None, sp)
    assert out == VirtualQueues(0.0, 0.0, 0.0)


def test_compliant_sample_drains_lambda(sp):
    out = update_all(VirtualQueues(lam=1.0), 2e-4, None, sp)
    assert out.lam == pytest.approx(1.0 - sp.epsilon * 2e-4)
    assert out.upsilon == 0.0


def test_agnostic_mode_only_tracks_gamma(sp):
    out = update_all(VirtualQueues(), sp.f0 * 3, sp.f0 * 2, sp, track_extremes=False)
    assert out.gamma == pytest.approx(2 * sp.f0)
    assert out.upsilon == 0.0 and out.lam == 0.0


def test_coefficients(sp):
    q = VirtualQueues(gamma=1e-3, upsilon=2e-3, lam=0.5)
    eps = sp.epsilon
    c0 = dpp_coefficients(q, False, sp)
    assert c0.theta1 == pytest.approx(0.5 * (1 + eps**2))
    assert c0.theta2 == pytest.approx(1e-3 - sp.f0 - eps * 0.5)
    c1 = dpp_coefficients(q, True, sp)
    assert c1.theta1 == pytest.approx(0.5 * (1 + eps**2) + 1 - eps)
    assert c1.theta2 == pytest.approx(1e-3 - sp.f0 - eps * 0.5 + 0.5 + 2e-3 - sp.f0 - sp.e0)
    ca = dpp_coefficients(q, True, sp, track_extremes=False)
    assert (ca.theta1, ca.theta2) == (0.5, pytest.approx(1e-3 - sp.f0))


def test_threshold_power_reference_value(cp, sp):
    h = cp.pathloss_gain
    p0 = branch_threshold_power(0.05, h, cp, sp)
    assert p0 == pytest.approx(6.965293136592240e-07, rel=1e-9)
    assert staleness_at_power(p0, 0.05, h, cp, sp) == pytest.approx(sp.f0, rel=1e-9)


def test_threshold_power_infinite_when_backlog_uses_budget(cp, sp):
    assert branch_threshold_power(sp.aoi_threshold + 1e-3, cp.pathloss_gain, cp, sp) == math.inf


def test_objective_branches(cp, sp):
    h = cp.pathloss_gain
    q = VirtualQueues(gamma=0.0, upsilon=0.0, lam=1.0)
    p0 = branch_threshold_power(0.05, h, cp, sp)
    for p, exceeded in ((p0 * 0.5, True), (p0 * 2, False)):
        f = staleness_at_power(p, 0.05, h, cp, sp)
        c = dpp_coefficients(q, exceeded, sp)
        expected = 1e-5 * math.exp(2 * transmission_energy(p, h, cp)) + c.theta1 * f * f + c.theta2 * f
        assert per_transmission_objective(p, 0.05, h, q, cp, sp, 1e-5, 2.0) == pytest.approx(expected, rel=1e-12)


def test_objective_rejects_power_outside_range(cp, sp):
    with pytest.raises(ValueError):
        per_transmission_objective(cp.p_max_w * 1.01, 0.0, cp.pathloss_gain, VirtualQueues(), cp, sp, 1e-5, 2.0)


def test_negative_queue_rejected():
    with pytest.raises(ValueError):
        VirtualQueues(gamma=-1.0)
