"""Pulse-by-pulse sampling of the honest link, used to check the count-rate formulas.

Each pulse: draw the photon number from p_A, let every photon survive line
and detector with probability t*eta, and register a right outcome with
probability (1 + V)/2 if anything arrived. Otherwise each of the two
detectors may fire a dark count with probability p_d (double dark clicks are
neglected, as in the closed form). The sifting factor 1/2 is applied to the
final rates rather than sampled.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import ChannelParams, DetectorParams, SourceModel

BATCH = 1_000_000


@dataclass(frozen=True)
class SimConfig:
    n_pulses: int
    seed: int
    source: SourceModel
    channel: ChannelParams
    detector: DetectorParams
    batch_size: int = BATCH

    def __post_init__(self):
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise ValueError(f"n_pulses must be a positive integer, got {self.n_pulses}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.detector.p_d > 0.5:
            raise ValueError("p_d above 1/2 cannot be split between two detectors")


@dataclass(frozen=True)
class SimResult:
    n_pulses: int
    c_right_hat: float
    c_wrong_hat: float
    q_hat: float
    arrival_hat: float
    c_right_err: float
    c_wrong_err: float
    q_err: float
    arrival_err: float


def _batch(args) -> tuple[int, int, int]:
    seed_seq, n, cdf, t_eta, V, p_d = args
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    photons = np.searchsorted(cdf, rng.random(n), side="right")
    photons = np.minimum(photons, cdf.size - 1)
    arrived = rng.binomial(photons, t_eta) > 0
    u = rng.random(n)
    right = np.where(arrived, u < (1.0 + V) / 2.0, u < p_d)
    wrong = np.where(arrived, ~right, (u >= p_d) & (u < 2.0 * p_d))
    return int(np.count_nonzero(right)), int(np.count_nonzero(wrong)), int(np.count_nonzero(arrived))


def simulate_link(config: SimConfig, workers: int = 1) -> SimResult:
    """Empirical sifted rates with binomial standard errors.

    Batches use independent streams spawned from ``config.seed``, so the
    result does not depend on ``workers``.
    """
    cdf = np.cumsum(config.source.p)
    cdf[-1] = 1.0
    n_total = int(config.n_pulses)
    sizes = [config.batch_size] * (n_total // config.batch_size)
    if n_total % config.batch_size:
        sizes.append(n_total % config.batch_size)
    seeds = np.random.SeedSequence(config.seed).spawn(len(sizes))
    t_eta = config.channel.t * config.detector.eta
    jobs = [(s, n, cdf, t_eta, config.channel.V, config.detector.p_d) for s, n in zip(seeds, sizes)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(_batch, jobs))
    else:
        counts = [_batch(job) for job in jobs]
    n_right = sum(c[0] for c in counts)
    n_wrong = sum(c[1] for c in counts)
    n_arrived = sum(c[2] for c in counts)

    def rate(k):
        f = k / n_total
        return f, math.sqrt(f * (1.0 - f) / n_total)

    fr, er = rate(n_right)
    fw, ew = rate(n_wrong)
    fa, ea = rate(n_arrived)
    clicks = n_right + n_wrong
    q = n_wrong / clicks if clicks else math.nan
    q_err = math.sqrt(q * (1.0 - q) / clicks) if clicks else math.nan
    return SimResult(
        n_pulses=n_total,
        c_right_hat=0.5 * fr, c_wrong_hat=0.5 * fw, q_hat=q, arrival_hat=fa,
        c_right_err=0.5 * er, c_wrong_err=0.5 * ew, q_err=q_err, arrival_err=ea,
    )
