import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swiptsee import (ChannelRealization, DimensionError, PowerAllocation, SystemConfig,
                      UndefinedRatioError, harvested_energy_bob, harvested_energy_eve, secrecy_rate, see)
from swiptsee.model import rate_without_secrecy, secrecy_rate_clamped, total_rate


def two_port():
    cfg = SystemConfig(n_ports=2, ps_bob=0.5, ps_eve=0.5, conv_eff_bob=0.75, conv_eff_eve=0.75,
                       circuit_power=1.0)
    ch = ChannelRealization([[4.0], [2.0]], [[1.0], [0.5]])
    return cfg, ch, PowerAllocation([[1.0], [1.0]])


def test_secrecy_rate_identical_snr_cancels():
    cfg = SystemConfig(n_ports=1)
    ch = ChannelRealization([[1.0]], [[1.0]])
    assert secrecy_rate(cfg, ch, PowerAllocation([[2.0]]), 0) == 0.0


def test_secrecy_rate_two_port_value():
    cfg, ch, p = two_port()
    ref = math.log2(1 + 0.5 * 6.0) - math.log2(1 + 0.5 * 1.5)
    assert secrecy_rate(cfg, ch, p, 0) == pytest.approx(ref, rel=1e-14)
    assert ref == pytest.approx(1.1926, abs=1e-4)


def test_zero_allocation_gives_zero_everything():
    cfg, ch, _ = two_port()
    z = PowerAllocation.zeros(cfg)
    assert secrecy_rate(cfg, ch, z, 0) == 0.0
    assert rate_without_secrecy(cfg, ch, z, 0) == 0.0
    assert harvested_energy_bob(cfg, ch, z, 0) == 0.0
    assert harvested_energy_eve(cfg, ch, z, 0) == 0.0
    assert see(cfg, ch, z) == 0.0


def test_secrecy_rate_is_unclamped():
    cfg = SystemConfig(n_ports=1)
    ch = ChannelRealization([[1.0]], [[3.0]])
    p = PowerAllocation([[1.0]])
    assert secrecy_rate(cfg, ch, p, 0) < 0
    assert secrecy_rate_clamped(cfg, ch, p, 0) == 0.0


def test_rate_split_across_users():
    cfg = SystemConfig(n_ports=1, n_users=2)
    ch = ChannelRealization([[2.0, 6.0]], [[1.0]])
    p = PowerAllocation([[1.0, 1.0]])
    ref = (math.log2(1 + 0.5 * 6.0) - math.log2(1 + 0.5)) / 2
    assert secrecy_rate(cfg, ch, p, 1) == pytest.approx(ref, rel=1e-14)


def test_see_direct_ratio():
    cfg, ch, p = two_port()
    assert see(cfg, ch, p) == pytest.approx(1.19264507794 / 3.0, rel=1e-10)


def test_see_undefined_without_power():
    cfg = SystemConfig(n_ports=1, circuit_power=0.0)
    ch = ChannelRealization([[1.0]], [[1.0]])
    with pytest.raises(UndefinedRatioError):
        see(cfg, ch, PowerAllocation([[0.0]]))


def test_rate_without_secrecy_value():
    cfg, ch, p = two_port()
    assert rate_without_secrecy(cfg, ch, p, 0) == pytest.approx(2.0, rel=1e-14)


def test_harvest_values():
    cfg, ch, p = two_port()
    assert harvested_energy_bob(cfg, ch, p, 0) == pytest.approx(2.25, rel=1e-14)
    assert harvested_energy_eve(cfg, ch, p, 0) == pytest.approx(0.75 * 0.5 * 1.5, rel=1e-14)


def test_harvest_uses_all_users_power():
    cfg = SystemConfig(n_ports=2, n_users=2)
    ch = ChannelRealization([[4.0, 1.0], [2.0, 3.0]], [[1.0], [0.5]])
    p = PowerAllocation([[0.3, 0.7], [0.6, 0.4]])
    assert harvested_energy_bob(cfg, ch, p, 0) == pytest.approx(0.375 * (4.0 * 1.0 + 2.0 * 1.0))


def test_no_harvest_when_all_power_to_decoding():
    cfg = SystemConfig(n_ports=1, ps_bob=1.0, ps_eve=1.0)
    ch = ChannelRealization([[5.0]], [[5.0]])
    p = PowerAllocation([[1.0]])
    assert harvested_energy_bob(cfg, ch, p, 0) == 0.0
    assert harvested_energy_eve(cfg, ch, p, 0) == 0.0


@pytest.mark.parametrize("kw", [dict(ps_bob=0.0), dict(ps_eve=1.5), dict(conv_eff_bob=-0.1),
                                dict(noise_bob=0.0), dict(max_port_power=0.0), dict(circuit_power=-1),
                                dict(n_ports=0), dict(max_port_power=[1.0, 2.0])])
def test_invalid_config_rejected(kw):
    params = dict(n_ports=1)
    params.update(kw)
    with pytest.raises(ValueError):
        SystemConfig(**params)


def test_dimension_mismatch():
    cfg = SystemConfig(n_ports=2)
    ch = ChannelRealization([[1.0], [1.0]], [[1.0], [1.0]])
    with pytest.raises(DimensionError):
        secrecy_rate(cfg, ch, PowerAllocation([[1.0]]), 0)
    with pytest.raises(DimensionError):
        see(SystemConfig(n_ports=3), ch, PowerAllocation(np.ones((3, 1))))
    with pytest.raises(ValueError):
        PowerAllocation([[-1.0]])


# -- properties -----------------------------------------------------------------

pos = st.floats(0.0, 10.0, allow_nan=False)


@st.composite
def instances(draw):
    N = draw(st.integers(1, 4))
    K = draw(st.integers(1, 3))
    M = draw(st.integers(1, 2))
    arr = lambda shape: np.array(draw(st.lists(pos, min_size=shape[0] * shape[1],  # noqa: E731
                                               max_size=shape[0] * shape[1]))).reshape(shape)
    cfg = SystemConfig(n_ports=N, n_users=K, n_eves=M, circuit_power=draw(st.floats(0.01, 2.0)),
                       ps_bob=draw(st.floats(0.05, 1.0)), ps_eve=draw(st.floats(0.05, 1.0)))
    return cfg, ChannelRealization(arr((N, K)), arr((N, M))), PowerAllocation(arr((N, K)))


@settings(max_examples=200, deadline=None)
@given(instances())
def test_rate_ordering(inst):
    cfg, ch, p = inst
    for k in range(cfg.n_users):
        wos = rate_without_secrecy(cfg, ch, p, k)
        for m in range(cfg.n_eves):
            assert secrecy_rate_clamped(cfg, ch, p, k, m) >= 0.0
            assert secrecy_rate(cfg, ch, p, k, m) <= wos + 1e-12
    assert total_rate(cfg, ch, p, secure=True) <= total_rate(cfg, ch, p, secure=False) + 1e-12


@settings(max_examples=200, deadline=None)
@given(instances(), st.integers(0, 100), st.floats(0.0, 5.0))
def test_rate_monotone_in_gains(inst, which, bump):
    cfg, ch, p = inst
    gb, ge = ch.gains_bob.copy(), ch.gains_eve.copy()
    gb.flat[which % gb.size] += bump
    ge.flat[which % ge.size] += bump
    more_bob = ChannelRealization(gb, ch.gains_eve)
    more_eve = ChannelRealization(ch.gains_bob, ge)
    for k in range(cfg.n_users):
        base = secrecy_rate(cfg, ch, p, k)
        assert secrecy_rate(cfg, more_bob, p, k) >= base - 1e-12
        assert secrecy_rate(cfg, more_eve, p, k) <= base + 1e-12


@settings(max_examples=200, deadline=None)
@given(instances(), st.floats(0.0, 20.0))
def test_harvest_linear(inst, a):
    cfg, ch, p = inst
    scaled = PowerAllocation(a * p.p)
    for k in range(cfg.n_users):
        assert harvested_energy_bob(cfg, ch, scaled, k) == pytest.approx(
            a * harvested_energy_bob(cfg, ch, p, k), rel=1e-12, abs=1e-300)
    for m in range(cfg.n_eves):
        assert harvested_energy_eve(cfg, ch, scaled, m) == pytest.approx(
            a * harvested_energy_eve(cfg, ch, p, m), rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(instances())
def test_see_vanishes_with_power(inst):
    cfg, ch, p = inst
    # log2(1 + x) <= x / ln 2 bounds every rate term linearly in the scale
    B = np.einsum("jk,jk->k", ch.gains_bob, p.p)
    E = (ch.gains_eve.T @ p.p).max(axis=0)
    slope = float(np.sum(cfg.ps_bob * B + cfg.ps_eve * E)) / (cfg.n_users * math.log(2) * cfg.circuit_power)
    for a in (1e-3, 1e-6, 1e-9):
        assert abs(see(cfg, ch, PowerAllocation(a * p.p))) <= a * slope * (1 + 1e-12) + 1e-300
