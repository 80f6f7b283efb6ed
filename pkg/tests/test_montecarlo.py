import math

import numpy as np
import pytest

from swiptsee import (McEstimate, OutageScenario, mc_outage, mc_outage_known_bob, mc_outage_worst_case,
                      outage_closed_form, outage_known_bob)


def unit_scenario(N=1, alpha=1.0, beta=1.0, z=0.0, M=1):
    return OutageScenario(n_ports=N, port_power=1.0, circuit_power=0.0, ps_bob=1.0, ps_eve=1.0,
                          noise_bob=alpha, noise_eve=beta, threshold=z / N, n_eves=M)


def within(est: McEstimate, ref: float, k=4.0):
    # 4 sigma: about 20 independent comparisons here, so 3 sigma would flake
    return abs(est.value - ref) <= max(k * est.stderr, 1e-12)


def test_n1_analytic_case():
    est = mc_outage(unit_scenario(1, 1.0, 1.0, 1.0), 10**6, seed=3)
    assert within(est, 1 - math.exp(-1) / 3)
    assert est.stderr == pytest.approx(math.sqrt(est.value * (1 - est.value) / 10**6))


def test_symmetric_half():
    assert within(mc_outage(unit_scenario(3, 0.4, 0.4, 0.0), 200_000, seed=1), 0.5)
    assert within(mc_outage_worst_case(unit_scenario(3, 0.4, 0.4, 0.0), 200_000, seed=1), 0.5)


def test_single_trial_is_binary():
    for seed in range(5):
        est = mc_outage(unit_scenario(2, 1.0, 1.0, 0.5), 1, seed=seed)
        assert est.value in (0.0, 1.0) and est.stderr == 0.0 and est.trials == 1


def test_rejects_bad_trials():
    with pytest.raises(ValueError):
        mc_outage(unit_scenario(), 0)


def test_deterministic_and_worker_independent():
    s = unit_scenario(4, 0.7, 1.2, 0.3)
    a = mc_outage(s, 300_000, seed=9)
    b = mc_outage(s, 300_000, seed=9, workers=4)
    assert a == b
    assert mc_outage(s, 300_000, seed=10) != a


def test_known_bob_certain_outage():
    s = unit_scenario(3, 1.0, 1.0, 2.0)
    assert mc_outage_known_bob(s, 0.0, 10_000, seed=1).value == 1.0


@pytest.mark.parametrize("x", [0.3, 1.0, 2.5, 6.0])
def test_known_bob_matches_closed_form(x):
    s = unit_scenario(3, 0.8, 1.5, 0.7)
    assert within(mc_outage_known_bob(s, x, 400_000, seed=int(10 * x)), outage_known_bob(s, x))


def test_known_bob_large_sum_vanishes():
    s = unit_scenario(2, 1.0, 1.0, 0.5)
    assert mc_outage_known_bob(s, 1e6, 100_000, seed=2).value == 0.0


def test_worst_case_single_eve_is_plain_outage():
    s = unit_scenario(2, 0.6, 0.9, 0.4)
    a, b = mc_outage(s, 300_000, seed=4), mc_outage_worst_case(s, 300_000, seed=4)
    # identical streams make the two estimators count the same event
    assert a.value == b.value


def test_worst_case_grows_with_eves():
    for z in (0.0, 0.5, 1.5):
        vals = [mc_outage_worst_case(unit_scenario(2, 0.8, 0.8, z, M), 100_000, seed=5).value for M in (1, 2, 3)]
        # common random numbers: adding Eves can only add outage events
        assert vals[0] <= vals[1] <= vals[2]


def test_nested_thresholds_monotone():
    base = unit_scenario(4, 0.5, 0.9, 0.0)
    zs = np.linspace(0, 3, 7)
    ests = [mc_outage(base.replace(threshold=z / 4), 100_000, seed=6) for z in zs]
    for e1, e2 in zip(ests, ests[1:]):
        assert e1.value <= e2.value + 4 * e2.stderr
    # same draws, nested events: exact monotonicity
    assert all(e1.value <= e2.value for e1, e2 in zip(ests, ests[1:]))


@pytest.mark.parametrize("N, p, eta", [(1, 0.3, 0.4), (3, 1.0, 0.2), (6, 0.1, 0.5)])
def test_matches_closed_form(N, p, eta):
    s = OutageScenario(n_ports=N, port_power=p, circuit_power=0.1, threshold=eta, noise_bob=1e-2, noise_eve=2e-2)
    assert within(mc_outage(s, 400_000, seed=N), outage_closed_form(s))
