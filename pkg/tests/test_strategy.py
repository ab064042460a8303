import math

import numpy as np
import pytest

from medalcast.errors import DomainError
from medalcast.strategy import (
    AllocationProblem,
    EventWeightInputs,
    applicability,
    event_weight,
    gdp_peak,
    host_impact_sim,
    optimize_allocation,
)


# ---------------------------------------------------------------------------
# event_weight

def test_all_zero_inputs():
    assert event_weight(EventWeightInputs(0, 0, 0)) == 0.0


def test_pure_history_coefficient():
    w = event_weight(EventWeightInputs(3.5, 9.9, -2.0, coefficients=(1, 0, 0)))
    assert w == 3.5


def test_random_inputs_exact(rng):
    for _ in range(50):
        h, i, c = rng.normal(size=3)
        a, b, g = rng.uniform(0, 1, size=3)
        w = event_weight(EventWeightInputs(h, i, c, coefficients=(a, b, g)))
        assert w == pytest.approx(a * h + b * i + g * c, rel=1e-12)


def test_event_weight_rejects_nonfinite():
    with pytest.raises(DomainError):
        EventWeightInputs(float("nan"), 0, 0)


# ---------------------------------------------------------------------------
# host_impact_sim

BASELINE = {"USA": 110.0, "BRA": 20.0, "CHN": 90.0, "KEN": 10.0}


def test_no_changes_no_deltas():
    res = host_impact_sim(BASELINE, [], {}, {})
    assert all(d == 0.0 for d in res.deltas.values())
    assert res.total_pct_gain == 0.0


def test_single_eligible_country_takes_full_pool():
    affin = {("USA", "Breaking"): 1.0}
    res = host_impact_sim(
        BASELINE, [("Breaking", "added")], affin, {"Breaking": 6.0}
    )
    assert res.deltas["USA"] == pytest.approx(6.0)
    assert res.deltas["BRA"] == 0.0
    assert res.pool_change == pytest.approx(6.0)


def test_conservation_of_pool(rng):
    events = ["E1", "E2", "E3"]
    affin = {
        (c, e): float(rng.random()) for c in BASELINE for e in events
    }
    pools = {e: float(rng.uniform(2, 10)) for e in events}
    changes = [("E1", "added"), ("E2", "added"), ("E3", "removed")]
    res = host_impact_sim(BASELINE, changes, affin, pools)
    assert sum(res.deltas.values()) == pytest.approx(res.pool_change, abs=1e-9)
    assert res.pool_change == pytest.approx(pools["E1"] + pools["E2"] - pools["E3"])


def test_retained_new_events_band_for_usa():
    # Retained breaking/surfing scenario: the USA lands 2-3 extra medals.
    affin = {
        ("USA", "Breaking"): 0.8, ("BRA", "Breaking"): 0.5,
        ("CHN", "Breaking"): 0.4, ("KEN", "Breaking"): 0.0,
        ("USA", "Surfing"): 0.7, ("BRA", "Surfing"): 0.9,
        ("CHN", "Surfing"): 0.1, ("KEN", "Surfing"): 0.0,
    }
    pools = {"Breaking": 3.0, "Surfing": 3.0}
    res = host_impact_sim(
        BASELINE, [("Breaking", "added"), ("Surfing", "added")], affin, pools
    )
    assert 2.0 <= res.deltas["USA"] <= 3.0
    assert res.deltas["KEN"] == 0.0
    assert 0 < res.total_pct_gain < 10


def test_removing_unknown_event_rejected():
    with pytest.raises(DomainError):
        host_impact_sim(BASELINE, [("Karate", "removed")], {}, {})


def test_affinity_bounds_checked():
    with pytest.raises(DomainError):
        host_impact_sim(
            BASELINE, [("E", "added")], {("USA", "E"): 1.5}, {"E": 2.0}
        )


# ---------------------------------------------------------------------------
# applicability

def test_boundary_not_applicable():
    # Solve for gdp giving exactly f = 0.53; strict inequality rules it out.
    gdp = 0.53 / 0.71
    f, ok = applicability(gdp, 0.0, 0.0)
    assert f == pytest.approx(0.53, abs=1e-12)
    assert not ok


def test_unit_gdp_applicable():
    f, ok = applicability(1.0, 0.0, 0.0)
    assert f == pytest.approx(0.71)
    assert ok


def test_instability_strictly_decreases_f(rng):
    for _ in range(30):
        g, o, i = rng.normal(size=3)
        f1, _ = applicability(g, o, i)
        f2, _ = applicability(g, o, i + 0.5)
        assert f2 < f1


def test_monotone_flags():
    # Applicable stays applicable when gdp or openness rise or instability falls.
    f, ok = applicability(1.0, 1.0, 0.0)
    assert ok
    assert applicability(2.0, 1.0, 0.0)[1]
    assert applicability(1.0, 2.0, 0.0)[1]
    assert applicability(1.0, 1.0, -1.0)[1]


def test_applicability_rejects_nan():
    with pytest.raises(DomainError):
        applicability(float("nan"), 0.0, 0.0)


# ---------------------------------------------------------------------------
# optimize_allocation

def test_symmetric_single_sport_splits_evenly():
    problem = AllocationProblem(
        weights=(1.0,), alphas=(2.0,), betas=(2.0,), budget=10.0, rho=0.5
    )
    res = optimize_allocation(problem)
    assert res.x[0] == pytest.approx(5.0, abs=1e-5)
    assert res.y[0] == pytest.approx(5.0, abs=1e-5)
    assert res.kkt_residual <= 1e-6


def test_budget_exhausted_exactly():
    problem = AllocationProblem(
        weights=(1.0, 0.5), alphas=(1.0, 2.0), betas=(1.5, 0.7),
        budget=7.5, rho=0.68,
    )
    res = optimize_allocation(problem)
    assert res.x.sum() + res.y.sum() == pytest.approx(7.5, abs=1e-9)


def test_beats_random_feasible_points(rng):
    problem = AllocationProblem(
        weights=(1.0, 0.8, 0.3), alphas=(1.2, 0.6, 2.0), betas=(0.9, 1.1, 0.4),
        budget=12.0, rho=0.68,
    )
    res = optimize_allocation(problem)

    def objective(z):
        x, y = z[:3], z[3:]
        return float(
            np.sum(
                np.array(problem.weights)
                * (np.array(problem.alphas) * x**0.68
                   + np.array(problem.betas) * y**0.32)
            )
        )

    best_random = -np.inf
    for _ in range(10_000):
        z = rng.dirichlet(np.ones(6)) * 12.0
        best_random = max(best_random, objective(z))
    assert res.objective >= best_random - 1e-9


def test_calibrated_scenario_reproduces_32_to_1_ratio():
    # Coefficients solving the first-order conditions at x:y = 3.2 under
    # rho = 0.68: alpha/beta = (1-rho)/(rho * 3.2^(rho-1)).
    rho = 0.68
    ratio = 3.2
    alpha_over_beta = (1 - rho) / (rho * ratio ** (rho - 1.0))
    problem = AllocationProblem(
        weights=(1.0,),
        alphas=(alpha_over_beta,),
        betas=(1.0,),
        budget=4.2,
        rho=rho,
    )
    res = optimize_allocation(problem)
    assert res.ratio == pytest.approx(3.2, abs=0.01)


def test_allocation_validation():
    with pytest.raises(DomainError):
        AllocationProblem(weights=(), alphas=(), betas=(), budget=1.0)
    with pytest.raises(DomainError):
        AllocationProblem(weights=(1.0,), alphas=(1.0,), betas=(1.0,), budget=0.0)
    with pytest.raises(DomainError):
        AllocationProblem(
            weights=(1.0,), alphas=(1.0,), betas=(1.0,), budget=1.0, rho=1.0
        )
    with pytest.raises(DomainError):
        AllocationProblem(
            weights=(1.0,), alphas=(-1.0,), betas=(1.0,), budget=1.0
        )


# ---------------------------------------------------------------------------
# gdp_peak

def test_peak_calibration_direction():
    theta2 = 3.25e-14
    theta1 = 2.4e13 * theta2
    assert gdp_peak(theta1, theta2) == pytest.approx(1.2e13)


def test_zero_theta1_zero_peak():
    assert gdp_peak(0.0, 5.0) == 0.0


def test_scale_invariance(rng):
    for _ in range(20):
        t1 = float(rng.normal())
        t2 = float(rng.uniform(0.1, 5))
        c = float(rng.uniform(0.1, 10))
        assert gdp_peak(c * t1, c * t2) == pytest.approx(gdp_peak(t1, t2), rel=1e-12)


def test_nonpositive_theta2_rejected():
    with pytest.raises(DomainError):
        gdp_peak(1.0, 0.0)
    with pytest.raises(DomainError):
        gdp_peak(1.0, -2.0)
