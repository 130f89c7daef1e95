"""Eve's incoherent attacks conditioned on the photon number of each pulse.

One-photon pulses are cloned with the optimal phase-covariant 1->2 cloner
(probability ``p_c1``), blocked (``p_b1``) or let through (``p_l1``).
Two-photon pulses are stored (``p_s2``), fed into a 2->3 cloner (``p_c2``) or
blocked (``p_b2``). Pulses with three or more photons are always split: Eve
keeps one photon and forwards the rest.

Eve must leave Bob's photon-detection rate and his optical error rate unchanged;
these are the two equality constraints checked by :func:`constraint_residuals`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InfeasibleAttackError
from .model import (
    ChannelParams,
    DetectorParams,
    SourceModel,
    link_rates,
    p_arrive,
)

D2_CLONER_C = 0.5 * (1.0 - 1.0 / math.sqrt(2.0))
D2_CLONER_A_FULL = 1.0 / 6.0
FEASIBILITY_TOL = 1e-9
_SUM_TOL = 1e-9


class ClonerKind(enum.Enum):
    """Which 2->3 cloning attack Eve has at her disposal."""

    NONE = "none"
    A = "A"
    C = "C"

    @classmethod
    def parse(cls, value) -> "ClonerKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        for member in cls:
            if key.lower() in (member.value.lower(), member.name.lower()):
                return member
        raise ValueError(f"unknown cloner {value!r}; expected one of none, A, C")


def _h(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def _i1(d1: float) -> float:
    return 1.0 - _h(0.5 + math.sqrt(max(d1 * (1.0 - d1), 0.0)))


def _i2a(d2: float) -> float:
    root = math.sqrt(max(8.0 * d2 * (1.0 - 4.0 * d2), 0.0)) / (1.0 - 2.0 * d2)
    p2 = min(0.5 * (1.0 + root), 1.0)
    return 2.0 * d2 + (1.0 - 2.0 * d2) * (1.0 - _h(p2))


def i1(d1: float) -> float:
    """Eve's information on a single photon attacked with disturbance ``d1``.

    Optimal incoherent attack on one BB84 photon: I = 1 - H(1/2 + sqrt(d1 (1 - d1))).
    """
    if not 0.0 <= d1 <= 0.5:
        raise ValueError(f"d1 must lie in [0, 1/2], got {d1}")
    return _i1(d1)


def i2_cloner_a(d2: float) -> float:
    """Information from the universal asymmetric 2->3 cloner at disturbance ``d2``.

    Reaches one bit at ``d2 = 1/6``.
    """
    if not 0.0 <= d2 <= 0.25:
        raise ValueError(f"d2 must lie in [0, 1/4], got {d2}")
    return _i2a(d2)


def i2(cloner: ClonerKind, d2: float) -> float:
    """Information per accepted two-photon item for the chosen 2->3 cloner."""
    if cloner is ClonerKind.A:
        return i2_cloner_a(d2)
    if cloner is ClonerKind.C:
        return 1.0
    return 0.0


@dataclass(frozen=True)
class AttackStrategy:
    """Eve's probabilities and disturbances for n = 1 and n = 2 pulses."""

    p_c1: float
    p_b1: float
    p_l1: float
    d1: float
    p_s2: float
    p_c2: float
    p_b2: float
    d2: float
    cloner: ClonerKind = ClonerKind.C

    def __post_init__(self):
        cloner = ClonerKind.parse(self.cloner)
        object.__setattr__(self, "cloner", cloner)
        for name in ("p_c1", "p_b1", "p_l1", "p_s2", "p_c2", "p_b2"):
            v = getattr(self, name)
            if not -_SUM_TOL <= v <= 1.0 + _SUM_TOL:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if abs(self.p_c1 + self.p_b1 + self.p_l1 - 1.0) > _SUM_TOL:
            raise ValueError("p_c1 + p_b1 + p_l1 must equal 1")
        if abs(self.p_s2 + self.p_c2 + self.p_b2 - 1.0) > _SUM_TOL:
            raise ValueError("p_s2 + p_c2 + p_b2 must equal 1")
        if not 0.0 <= self.d1 <= 0.5:
            raise ValueError(f"d1 must lie in [0, 1/2], got {self.d1}")
        if not 0.0 <= self.d2 <= 0.25:
            raise ValueError(f"d2 must lie in [0, 1/4], got {self.d2}")
        if cloner is ClonerKind.C and abs(self.d2 - D2_CLONER_C) > 1e-12:
            raise ValueError(f"cloner C works at d2 = {D2_CLONER_C}, got {self.d2}")
        if cloner is ClonerKind.NONE and self.p_c2 > _SUM_TOL:
            raise ValueError("p_c2 must be 0 when no 2->3 cloner is available")

    @classmethod
    def storage_only(cls, p_c1: float = 1.0, cloner: ClonerKind = ClonerKind.NONE) -> "AttackStrategy":
        """Undisturbed one-photon forwarding plus plain photon-number splitting."""
        cloner = ClonerKind.parse(cloner)
        d2 = D2_CLONER_C if cloner is ClonerKind.C else 0.0
        return cls(p_c1=p_c1, p_b1=1.0 - p_c1, p_l1=0.0, d1=0.0,
                   p_s2=1.0, p_c2=0.0, p_b2=0.0, d2=d2, cloner=cloner)


@dataclass(frozen=True)
class EveRates:
    """Contributions of each attack branch to Bob's detection rate, and I(A:E)."""

    r1: float
    r_l1: float
    r2s: float
    r2c: float
    r3: float
    i_ae: float
    i1: float
    i2: float

    @property
    def total(self) -> float:
        return self.r1 + self.r_l1 + self.r2s + self.r2c + self.r3

    def information_terms(self) -> tuple[float, float, float, float]:
        """(R1 I1, R2s, R2c I2, R3): the four pieces that sum to I(A:E)."""
        return (self.r1 * self.i1, self.r2s, self.r2c * self.i2, self.r3)


def multiphoton_rate(source: SourceModel, eta: float) -> float:
    """R3: Bob's rate from n >= 3 pulses after Eve removed one photon from each."""
    n = range(3, source.n_max + 1)
    return 0.5 * math.fsum((1.0 - (1.0 - eta) ** (k - 1)) * source.probs[k] for k in n)


def eve_rates(source: SourceModel, detector: DetectorParams, attack: AttackStrategy) -> EveRates:
    """Per-pulse detection rates produced by each attack branch and Eve's information."""
    eta = detector.eta
    p1, p2 = source.prob(1), source.prob(2)
    r1 = 0.5 * eta * p1 * attack.p_c1
    r_l1 = 0.5 * eta * p1 * attack.p_l1
    r2s = 0.5 * eta * p2 * attack.p_s2
    r2c = 0.5 * (1.0 - (1.0 - eta) ** 2) * p2 * attack.p_c2
    r3 = multiphoton_rate(source, eta)
    info1 = _i1(attack.d1)
    info2 = i2(attack.cloner, attack.d2)
    i_ae = r1 * info1 + r2s + r2c * info2 + r3
    return EveRates(r1=r1, r_l1=r_l1, r2s=r2s, r2c=r2c, r3=r3, i_ae=i_ae, i1=info1, i2=info2)


def expected_rates(source: SourceModel, channel: ChannelParams, detector: DetectorParams) -> tuple[float, float]:
    """(photon rate, optical error rate) Bob expects from the honest line.

    These are the right-hand sides of the two constraints: 1/2 (1 - p_B(0))
    and 1/2 (1 - p_B(0)) (1 - V) / 2.
    """
    c_ph = 0.5 * p_arrive(source, channel.t, detector.eta)
    return c_ph, c_ph * (1.0 - channel.V) / 2.0


def constraint_residuals(source: SourceModel, channel: ChannelParams, detector: DetectorParams,
                         attack: AttackStrategy) -> tuple[float, float]:
    """Residuals of the detection-rate and error-rate constraints; zero if feasible."""
    rates = eve_rates(source, detector, attack)
    c_ph, c_err = expected_rates(source, channel, detector)
    res_t = rates.total - c_ph
    res_v = rates.r1 * attack.d1 + rates.r2c * attack.d2 - c_err
    return res_t, res_v


def secret_key_rate(source: SourceModel, channel: ChannelParams, detector: DetectorParams,
                    attack: AttackStrategy, tol: float = FEASIBILITY_TOL) -> float:
    """S = I(A:B) - I(A:E) in bits per pulse; negative values are returned as is.

    Raises:
        InfeasibleAttackError: if either constraint residual exceeds ``tol``.
    """
    res_t, res_v = constraint_residuals(source, channel, detector, attack)
    if abs(res_t) > tol or abs(res_v) > tol:
        raise InfeasibleAttackError(res_t, res_v, tol)
    i_ab = link_rates(source, channel, detector).i_ab
    return i_ab - eve_rates(source, detector, attack).i_ae


def reverse_reconciliation_factor(n: int, detector: DetectorParams) -> float:
    """1 - H(eps_n): shrinkage of Eve's information on Bob's bit for n forwarded photons.

    ``eps_n`` is the probability that Bob's click came from a dark count.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    miss = (1.0 - detector.eta) ** n
    r_ph = 1.0 - miss
    r_dark = detector.p_d * miss
    eps = r_dark / (r_ph + r_dark)
    return 1.0 - _h(eps)


def information_on_bob(source: SourceModel, detector: DetectorParams, attack: AttackStrategy) -> float:
    """I(A:E) with each branch weighted by the dark-count factor for its forwarded photons.

    Only the dark-count effect is included; the reduction specific to the
    2->3 cloners is not modelled.
    """
    rates = eve_rates(source, detector, attack)
    f1 = reverse_reconciliation_factor(1, detector)
    f2 = reverse_reconciliation_factor(2, detector)
    eta = detector.eta
    r3 = 0.5 * math.fsum(
        (1.0 - (1.0 - eta) ** (k - 1)) * source.probs[k] * reverse_reconciliation_factor(k - 1, detector)
        for k in range(3, source.n_max + 1)
    )
    return (rates.r1 * rates.i1 + rates.r2s) * f1 + rates.r2c * rates.i2 * f2 + r3


def cl_reference_mu(eta: float) -> float:
    """Poissonian mean photon number implied by a one-photon fraction p = 1 / (2 - eta).

    This is the single working point at which the earlier comparison of
    storage against pure 2->3 cloning holds; it is large (>= 2).
    """
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    return 2.0 / (1.0 - eta)


__all__ = [
    "D2_CLONER_A_FULL",
    "D2_CLONER_C",
    "AttackStrategy",
    "ClonerKind",
    "EveRates",
    "cl_reference_mu",
    "constraint_residuals",
    "expected_rates",
    "eve_rates",
    "i1",
    "i2",
    "i2_cloner_a",
    "information_on_bob",
    "multiphoton_rate",
    "reverse_reconciliation_factor",
    "secret_key_rate",
]
