"""Monte Carlo estimates of SEE outage straight from the event definitions.

Bob's channel sum uses substream 0 and eavesdropper ``m`` uses substream
``1 + m``, all keyed only by the seed and the port count.  Scenarios that
differ in power, threshold or splitting ratios therefore see the same channel
draws (common random numbers), which keeps grid comparisons sharp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSampler, exp_sum_sample
from .outage import OutageScenario

STREAM_BOB = 0
STREAM_EVE = 1
DEFAULT_TRIALS = 1_000_000


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    trials: int
    seed: int

    @classmethod
    def from_count(cls, hits: int, trials: int, seed: int) -> "McEstimate":
        v = hits / trials
        return cls(v, math.sqrt(v * (1.0 - v) / trials), trials, seed)


def _check_trials(trials: int) -> int:
    if int(trials) != trials or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials}")
    return int(trials)


def _pow2(z: float) -> float:
    with np.errstate(over="ignore"):
        return float(np.exp2(z))


def mc_outage(s: OutageScenario, trials: int = DEFAULT_TRIALS, seed: int = 0, workers: int = 1) -> McEstimate:
    """Fraction of trials with ``w_b X'' < (1 + w_e Y'') 2^z - 1``."""
    trials = _check_trials(trials)
    sampler = ChannelSampler(seed)
    x = exp_sum_sample(sampler, s.n_ports, trials, STREAM_BOB, workers)
    y = exp_sum_sample(sampler, s.n_ports, trials, STREAM_EVE, workers)
    with np.errstate(over="ignore", invalid="ignore"):
        hits = int(np.count_nonzero(s.w_bob * x < (1.0 + s.w_eve * y) * _pow2(s.z) - 1.0))
    return McEstimate.from_count(hits, trials, seed)


def mc_outage_known_bob(s: OutageScenario, bob_channel_sum: float, trials: int = DEFAULT_TRIALS,
                        seed: int = 0, workers: int = 1) -> McEstimate:
    """Outage with Bob's channel sum held fixed; only Eve's channel is drawn."""
    trials = _check_trials(trials)
    y = exp_sum_sample(ChannelSampler(seed), s.n_ports, trials, STREAM_EVE, workers)
    q = (1.0 + s.w_bob * bob_channel_sum) / _pow2(s.z) - 1.0
    hits = int(np.count_nonzero(s.w_eve * y > q))
    return McEstimate.from_count(hits, trials, seed)


def mc_outage_worst_case(s: OutageScenario, trials: int = DEFAULT_TRIALS, seed: int = 0,
                         workers: int = 1) -> McEstimate:
    """Outage against the strongest of ``s.n_eves`` independent eavesdroppers."""
    trials = _check_trials(trials)
    sampler = ChannelSampler(seed)
    x = s.w_bob * exp_sum_sample(sampler, s.n_ports, trials, STREAM_BOB, workers)
    y_max = np.full(trials, -np.inf)
    for m in range(s.n_eves):
        y = s.w_eve * exp_sum_sample(sampler, s.n_ports, trials, STREAM_EVE + m, workers)
        np.maximum(y_max, y, out=y_max)
    hits = int(np.count_nonzero(y_max > (1.0 + x) / _pow2(s.z) - 1.0))
    return McEstimate.from_count(hits, trials, seed)
