"""System description and the pure metric functions built on it.

Gains stored in :class:`ChannelRealization` are gain-to-noise ratios per watt
of transmit power, so ``gains_bob[j, k] * p`` is the SNR that port ``j``
produces at Bob ``k`` before power splitting.  Harvested "energy" is computed
from the same ratios and is therefore noise-normalised; it is compared
directly against the harvest thresholds held in :class:`SystemConfig`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionError, UndefinedRatioError

LN2 = math.log(2.0)

ArrayLike = Union[float, int, list, tuple, np.ndarray]


def _vector(value: ArrayLike, length: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(length, float(arr))
    if arr.shape != (length,):
        raise DimensionError(f"{name} must have length {length}, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _unit_interval(arr, name: str) -> None:
    a = np.asarray(arr, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a <= 0.0) or np.any(a > 1.0):
        raise ValueError(f"{name} must lie in (0, 1], got {a}")


@dataclass(frozen=True)
class SystemConfig:
    """Static description of the SWIPT distributed-antenna network.

    Scalars are broadcast for the per-port and per-user vectors.  An
    ``eve_harvest_cap`` of ``math.inf`` (or ``None``) leaves the eavesdropper
    charge constraint unbounded.
    """

    n_ports: int
    n_users: int = 1
    n_eves: int = 1
    circuit_power: float = 0.0
    max_port_power: ArrayLike = 1.0
    ps_bob: ArrayLike = 0.5
    ps_eve: float = 0.5
    conv_eff_bob: ArrayLike = 0.75
    conv_eff_eve: float = 0.75
    min_harvest_bob: ArrayLike = 0.0
    eve_harvest_cap: Optional[float] = math.inf
    noise_bob: float = 1e-5
    noise_eve: float = 1e-4

    def __post_init__(self):
        for name in ("n_ports", "n_users", "n_eves"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))
        N, K = self.n_ports, self.n_users
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("max_port_power", _vector(self.max_port_power, N, "max_port_power"))
        set_("ps_bob", _vector(self.ps_bob, K, "ps_bob"))
        set_("conv_eff_bob", _vector(self.conv_eff_bob, K, "conv_eff_bob"))
        set_("min_harvest_bob", _vector(self.min_harvest_bob, K, "min_harvest_bob"))
        cap = math.inf if self.eve_harvest_cap is None else float(self.eve_harvest_cap)
        set_("eve_harvest_cap", cap)
        for name in ("circuit_power", "ps_eve", "conv_eff_eve", "noise_bob", "noise_eve"):
            set_(name, float(getattr(self, name)))

        _unit_interval(self.ps_bob, "ps_bob")
        _unit_interval(self.ps_eve, "ps_eve")
        _unit_interval(self.conv_eff_bob, "conv_eff_bob")
        _unit_interval(self.conv_eff_eve, "conv_eff_eve")
        if np.any(self.max_port_power <= 0.0):
            raise ValueError("max_port_power must be strictly positive")
        if self.circuit_power < 0.0 or np.any(self.min_harvest_bob < 0.0) or cap < 0.0:
            raise ValueError("powers and harvest thresholds must be nonnegative")
        if not (self.noise_bob > 0.0 and self.noise_eve > 0.0):
            raise ValueError("noise powers must be strictly positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_ports, self.n_users)

    def replace(self, **changes) -> "SystemConfig":
        fields = {f: getattr(self, f) for f in self.__dataclass_fields__}
        fields.update(changes)
        return SystemConfig(**fields)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of every channel in the network.

    ``gains_bob`` is N x K_b and ``gains_eve`` is N x M.  The raw complex
    coefficients are kept when the realization came from a sampler.
    """

    gains_bob: np.ndarray
    gains_eve: np.ndarray
    raw_bob: Optional[np.ndarray] = field(default=None, repr=False)
    raw_eve: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        gb = np.array(self.gains_bob, dtype=float, ndmin=2)
        ge = np.array(self.gains_eve, dtype=float, ndmin=2)
        if np.any(gb < 0) or np.any(ge < 0) or not (np.all(np.isfinite(gb)) and np.all(np.isfinite(ge))):
            raise ValueError("channel gains must be finite and nonnegative")
        if gb.shape[0] != ge.shape[0]:
            raise DimensionError(f"port count differs: bob {gb.shape}, eve {ge.shape}")
        gb.setflags(write=False)
        ge.setflags(write=False)
        object.__setattr__(self, "gains_bob", gb)
        object.__setattr__(self, "gains_eve", ge)

    def check(self, cfg: SystemConfig) -> None:
        if self.gains_bob.shape != (cfg.n_ports, cfg.n_users):
            raise DimensionError(f"gains_bob shape {self.gains_bob.shape} != {(cfg.n_ports, cfg.n_users)}")
        if self.gains_eve.shape != (cfg.n_ports, cfg.n_eves):
            raise DimensionError(f"gains_eve shape {self.gains_eve.shape} != {(cfg.n_ports, cfg.n_eves)}")


@dataclass(frozen=True)
class PowerAllocation:
    """N x K_b transmit powers in watts, port-major."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float, ndmin=2)
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("transmit powers must be finite and nonnegative")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def total(self) -> float:
        return float(self.p.sum())

    @classmethod
    def zeros(cls, cfg: SystemConfig) -> "PowerAllocation":
        return cls(np.zeros(cfg.shape))


def _matrix(alloc, cfg: SystemConfig) -> np.ndarray:
    p = alloc.p if isinstance(alloc, PowerAllocation) else np.asarray(alloc, dtype=float)
    if p.shape != cfg.shape:
        raise DimensionError(f"allocation shape {p.shape} != {cfg.shape}")
    return p


def _index(i: int, n: int, what: str) -> int:
    if not 0 <= i < n:
        raise DimensionError(f"{what} index {i} out of range [0, {n})")
    return i


def bob_snr(ch: ChannelRealization, p: np.ndarray) -> np.ndarray:
    """Per-user B_k = sum_j gains_bob[j, k] p[j, k]."""
    return np.einsum("jk,jk->k", ch.gains_bob, p)


def eve_snr(ch: ChannelRealization, p: np.ndarray) -> np.ndarray:
    """M x K_b matrix of E = sum_j gains_eve[j, m] p[j, k]."""
    return ch.gains_eve.T @ p


def secrecy_rate(cfg, ch, alloc, user: int, eve: int = 0) -> float:
    """Unclamped secrecy rate of one user against one eavesdropper.

    May be negative when the eavesdropper's effective SNR dominates.
    """
    ch.check(cfg)
    p = _matrix(alloc, cfg)
    k = _index(user, cfg.n_users, "user")
    m = _index(eve, cfg.n_eves, "eve")
    B = float(ch.gains_bob[:, k] @ p[:, k])
    E = float(ch.gains_eve[:, m] @ p[:, k])
    return (math.log1p(cfg.ps_bob[k] * B) - math.log1p(cfg.ps_eve * E)) / (LN2 * cfg.n_users)


def secrecy_rate_clamped(cfg, ch, alloc, user: int, eve: int = 0) -> float:
    return max(0.0, secrecy_rate(cfg, ch, alloc, user, eve))


def worst_case_secrecy_rate(cfg, ch, alloc, user: int) -> float:
    return min(secrecy_rate(cfg, ch, alloc, user, m) for m in range(cfg.n_eves))


def rate_without_secrecy(cfg, ch, alloc, user: int) -> float:
    ch.check(cfg)
    p = _matrix(alloc, cfg)
    k = _index(user, cfg.n_users, "user")
    B = float(ch.gains_bob[:, k] @ p[:, k])
    return math.log1p(cfg.ps_bob[k] * B) / (LN2 * cfg.n_users)


def total_rate(cfg, ch, alloc, secure: bool = True) -> float:
    """Sum over users of the (worst-case-Eve) secrecy rate, or the plain rate."""
    ch.check(cfg)
    p = _matrix(alloc, cfg)
    bob = np.log1p(cfg.ps_bob * bob_snr(ch, p))
    if secure:
        worst_eve = eve_snr(ch, p).max(axis=0)
        bob = bob - np.log1p(cfg.ps_eve * worst_eve)
    return float(bob.sum()) / (LN2 * cfg.n_users)


def consumed_power(cfg, alloc) -> float:
    return float(_matrix(alloc, cfg).sum()) + cfg.circuit_power


def see(cfg, ch, alloc, secure: bool = True) -> float:
    """Secure energy efficiency in bits/Hz per joule.

    With several eavesdroppers each user is charged its worst-case Eve.
    ``secure=False`` gives the energy efficiency of the same allocation
    without secrecy coding.
    """
    denom = consumed_power(cfg, alloc)
    if denom <= 0.0:
        raise UndefinedRatioError("zero consumed power: circuit_power is 0 and allocation is all zeros")
    return total_rate(cfg, ch, alloc, secure=secure) / denom


def harvested_energy_bob(cfg, ch, alloc, user: int) -> float:
    ch.check(cfg)
    p = _matrix(alloc, cfg)
    k = _index(user, cfg.n_users, "user")
    port_totals = p.sum(axis=1)
    return float(cfg.conv_eff_bob[k] * (1.0 - cfg.ps_bob[k]) * (ch.gains_bob[:, k] @ port_totals))


def harvested_energy_eve(cfg, ch, alloc, eve: int = 0) -> float:
    ch.check(cfg)
    p = _matrix(alloc, cfg)
    m = _index(eve, cfg.n_eves, "eve")
    port_totals = p.sum(axis=1)
    return float(cfg.conv_eff_eve * (1.0 - cfg.ps_eve) * (ch.gains_eve[:, m] @ port_totals))


def harvest_coefficients(cfg, ch) -> tuple[np.ndarray, np.ndarray]:
    """Linear maps from per-port total power to harvested energy.

    Returns ``(bob, eve)`` with shapes K_b x N and M x N such that
    ``bob @ p.sum(axis=1)`` are the Bob harvests.
    """
    ch.check(cfg)
    bob = (cfg.conv_eff_bob * (1.0 - cfg.ps_bob))[:, None] * ch.gains_bob.T
    eve = cfg.conv_eff_eve * (1.0 - cfg.ps_eve) * ch.gains_eve.T
    return bob, eve
