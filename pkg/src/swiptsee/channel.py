"""Seeded Rayleigh-fading channel generation.

Every random quantity is drawn from a substream keyed by ``(seed, *key)``
through :class:`numpy.random.SeedSequence` spawn keys feeding a Philox
counter-based generator.  Nothing depends on sequential generator state, so
draws can be produced in any order or in parallel and still match.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import ChannelRealization, SystemConfig

GENERATOR_ID = "numpy.Philox(SeedSequence(seed, spawn_key))"

# Substream tags; keep stable, they are part of the reproducibility contract.
TAG_CHANNEL = 0
TAG_EXP_SUM = 1

BLOCK = 1 << 16


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def dbm_to_watts(x):
    if np.ndim(x):
        return 10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0)
    return 10.0 ** ((float(x) - 30.0) / 10.0)


def watts_to_dbm(x):
    return 10.0 * np.log10(x) + 30.0


def cscg(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly symmetric complex Gaussian samples."""
    uv = rng.standard_normal(tuple(shape) + (2,))
    return (uv[..., 0] + 1j * uv[..., 1]) / np.sqrt(2.0)


@dataclass(frozen=True)
class ChannelSampler:
    seed: int = 0
    large_scale_bob: Optional[np.ndarray] = field(default=None, repr=False)
    large_scale_eve: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", int(self.seed))

    def _large_scale(self, value, shape):
        if value is None:
            return np.ones(shape)
        arr = np.broadcast_to(np.asarray(value, dtype=float), shape)
        if np.any(arr < 0):
            raise ValueError("large-scale gains must be nonnegative")
        return arr


def sample(sampler: ChannelSampler, cfg: SystemConfig, draw_index: int = 0) -> ChannelRealization:
    """Draw the channel realization number ``draw_index`` for ``cfg``."""
    N, K, M = cfg.n_ports, cfg.n_users, cfg.n_eves
    rng = substream(sampler.seed, TAG_CHANNEL, draw_index)
    h = cscg(rng, (N, K))
    g = cscg(rng, (N, M))
    lb = sampler._large_scale(sampler.large_scale_bob, (N, K))
    le = sampler._large_scale(sampler.large_scale_eve, (N, M))
    return ChannelRealization(
        gains_bob=lb * np.abs(h) ** 2 / cfg.noise_bob,
        gains_eve=le * np.abs(g) ** 2 / cfg.noise_eve,
        raw_bob=h,
        raw_eve=g,
    )


def _exp_sum_block(seed: int, stream: int, n: int, block: int, size: int) -> np.ndarray:
    rng = substream(seed, TAG_EXP_SUM, stream, n, block)
    uv = rng.standard_normal((size, 2 * n))
    return 0.5 * np.einsum("ij,ij->i", uv, uv)


def exp_sum_sample(sampler: ChannelSampler, n: int, count: int, stream: int = 0,
                   workers: int = 1) -> np.ndarray:
    """Draws of sum_{i<n} |h_i|^2 for iid unit CSCG h_i (Erlang(n, 1)).

    ``stream`` separates independent families of draws under one seed, e.g.
    Bob's channel sum and each eavesdropper's.  Output is split into fixed
    blocks of ``BLOCK`` draws with their own substreams, so the result does
    not depend on ``workers``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    count = int(count)
    if count <= 0:
        return np.empty(0)
    sizes = [min(BLOCK, count - b * BLOCK) for b in range(-(-count // BLOCK))]
    args = [(sampler.seed, stream, n, b, s) for b, s in enumerate(sizes)]
    if workers > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda a: _exp_sum_block(*a), args))
    else:
        parts = [_exp_sum_block(*a) for a in args]
    return np.concatenate(parts)
