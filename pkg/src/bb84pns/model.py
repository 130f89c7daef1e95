"""Honest Alice-Bob link: source statistics, line transmission and Bob's counts.

All quantities are per pulse sent by Alice and already include the factor 1/2
lost in sifting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateLinkError

DEFAULT_N_MAX = 20
TAIL_TOL = 1e-12
NORM_TOL = 1e-9


def _entropy(x):
    """Binary entropy without range checks; vectorized, H(0) = H(1) = 0."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xs = np.where(inside, x, 0.5)
    h = -xs * np.log2(xs) - (1.0 - xs) * np.log2(1.0 - xs)
    h = np.where(inside, h, 0.0)
    return h if h.ndim else float(h)


def binary_entropy(x):
    """Shannon entropy of a binary variable, in bits.

    Accepts scalars or arrays. The endpoints use the continuous extension
    H(0) = H(1) = 0.

    Raises:
        ValueError: if any ``x`` lies outside [0, 1].
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise ValueError(f"binary_entropy argument outside [0, 1]: {x!r}")
    return _entropy(arr)


@dataclass(frozen=True)
class SourceModel:
    """Photon-number distribution p_A(n), n = 0..n_max, of Alice's pulses.

    Build instances with :meth:`poissonian` or :meth:`custom`.
    """

    probs: tuple[float, ...]
    kind: str = "custom"
    mu: float | None = None
    g2: float = 1.0

    @classmethod
    def poissonian(cls, mu: float, n_max: int = DEFAULT_N_MAX) -> "SourceModel":
        """Attenuated laser: p_A(n) = exp(-mu) mu^n / n!, truncated at ``n_max``."""
        if not (mu >= 0.0 and math.isfinite(mu)):
            raise ValueError(f"mu must be finite and >= 0, got {mu}")
        if int(n_max) != n_max or n_max < 3:
            raise ValueError(f"n_max must be an integer >= 3, got {n_max}")
        n = np.arange(n_max + 1)
        if mu == 0.0:
            p = np.zeros(n_max + 1)
            p[0] = 1.0
        else:
            p = np.exp(-mu + n * math.log(mu) - gammaln(n + 1))
        tail = 1.0 - p.sum()
        if tail > TAIL_TOL:
            raise ValueError(
                f"Poisson tail beyond n_max={n_max} is {tail:.2e} for mu={mu}; raise n_max"
            )
        return cls(probs=tuple(float(v) for v in p), kind="poissonian", mu=float(mu), g2=1.0)

    @classmethod
    def custom(cls, probs) -> "SourceModel":
        """Arbitrary distribution given as a sequence or a ``{n: p}`` mapping.

        The probabilities must sum to one within 1e-9; they are renormalized.
        ``g2`` is taken as 2 p_A(2) / p_A(1)^2.
        """
        if isinstance(probs, dict):
            if any(int(k) != k or k < 0 for k in probs):
                raise ValueError("photon numbers must be non-negative integers")
            p = np.zeros(int(max(probs)) + 1)
            for k, v in probs.items():
                p[int(k)] = v
        else:
            p = np.array(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty 1-d sequence")
        if np.any(~np.isfinite(p)) or np.any(p < 0.0):
            raise ValueError("probabilities must be finite and non-negative")
        total = p.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        p = p / total
        p1 = p[1] if p.size > 1 else 0.0
        p2 = p[2] if p.size > 2 else 0.0
        if p1 > 0.0:
            g2 = 2.0 * p2 / p1**2
        else:
            g2 = 0.0 if p2 == 0.0 else math.inf
        mean = float(np.dot(np.arange(p.size), p))
        return cls(probs=tuple(float(v) for v in p), kind="custom", mu=mean, g2=float(g2))

    @cached_property
    def p(self) -> np.ndarray:
        """Probabilities as a read-only array."""
        arr = np.array(self.probs)
        arr.setflags(write=False)
        return arr

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    def prob(self, n: int) -> float:
        """p_A(n), zero beyond the truncation order."""
        return self.probs[n] if 0 <= n <= self.n_max else 0.0


@dataclass(frozen=True)
class ChannelParams:
    """Fiber with attenuation ``alpha`` (dB/km), length ``d`` (km), visibility ``V``."""

    alpha: float
    d: float
    V: float

    def __post_init__(self):
        if not self.alpha >= 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.d >= 0.0:
            raise ValueError(f"d must be >= 0, got {self.d}")
        if not 0.0 <= self.V <= 1.0:
            raise ValueError(f"V must lie in [0, 1], got {self.V}")

    @property
    def t(self) -> float:
        return transmission(self.alpha, self.d)


@dataclass(frozen=True)
class DetectorParams:
    """Bob's detector: quantum efficiency ``eta`` and dark-count probability ``p_d`` per gate."""

    eta: float = 0.1
    p_d: float = 1e-5

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0.0 <= self.p_d < 1.0:
            raise ValueError(f"p_d must lie in [0, 1), got {self.p_d}")


@dataclass(frozen=True)
class LinkRates:
    """Sifted per-pulse rates of the honest link."""

    p_b0: float
    c_right: float
    c_wrong: float
    q: float
    i_ab: float


def transmission(alpha: float, d: float) -> float:
    """Line transmission t = 10^(-alpha d / 10)."""
    if alpha < 0 or d < 0:
        raise ValueError(f"alpha and d must be >= 0, got alpha={alpha}, d={d}")
    return 10.0 ** (-alpha * d / 10.0)


def p_empty(source: SourceModel, t: float, eta: float) -> float:
    """Probability that none of the pulse's photons reaches and fires Bob's detector."""
    if not 0.0 <= t * eta <= 1.0:
        raise ValueError(f"t*eta must lie in [0, 1], got {t * eta}")
    if source.kind == "poissonian":
        return math.exp(-source.mu * t * eta)
    survive = 1.0 - t * eta
    return float(np.dot(source.p, survive ** np.arange(source.n_max + 1)))


def p_arrive(source: SourceModel, t: float, eta: float) -> float:
    """1 - p_empty, computed without cancellation for weak pulses."""
    if not 0.0 <= t * eta <= 1.0:
        raise ValueError(f"t*eta must lie in [0, 1], got {t * eta}")
    if source.kind == "poissonian":
        return -math.expm1(-source.mu * t * eta)
    if t * eta == 1.0:
        return 1.0 - source.probs[0]
    n = np.arange(source.n_max + 1)
    return float(np.dot(source.p, -np.expm1(n * math.log1p(-t * eta))))


def link_rates(source: SourceModel, channel: ChannelParams, detector: DetectorParams) -> LinkRates:
    """Bob's sifted count rates, QBER and I(A:B) in the absence of Eve.

    Raises:
        DegenerateLinkError: if Bob never clicks (empty source and no dark counts).
    """
    p0 = p_empty(source, channel.t, detector.eta)
    arrived = p_arrive(source, channel.t, detector.eta)
    dark = p0 * detector.p_d
    c_right = 0.5 * (arrived * (1.0 + channel.V) / 2.0 + dark)
    c_wrong = 0.5 * (arrived * (1.0 - channel.V) / 2.0 + dark)
    total = c_right + c_wrong
    if total <= 0.0:
        raise DegenerateLinkError("Bob has no counts: empty source and p_d = 0")
    q = c_wrong / total
    i_ab = total * (1.0 - _entropy(q))
    return LinkRates(p_b0=p0, c_right=c_right, c_wrong=c_wrong, q=q, i_ab=i_ab)
