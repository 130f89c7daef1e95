"""Closed-form estimates of the key rate for weak sources.

Multi-photon pulses with n >= 3 are dropped, p_A(1) = mu and
p_A(2) = g2 mu^2 / 2, and Eve only uses storage on two-photon pulses. The two
constraints then fix her attack completely, so S depends on mu alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from .attacks import _i1
from .errors import ApproximationDomainError, UnboundedDistanceError
from .model import DetectorParams, _entropy, transmission

V_VALIDITY = 0.8


@dataclass(frozen=True)
class ApproxParams:
    t: float
    V: float
    eta: float = 0.1
    p_d: float = 1e-5
    g2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.t <= 1.0:
            raise ValueError(f"t must lie in (0, 1], got {self.t}")
        if not 0.0 <= self.V <= 1.0:
            raise ValueError(f"V must lie in [0, 1], got {self.V}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0.0 <= self.p_d < 1.0:
            raise ValueError(f"p_d must lie in [0, 1), got {self.p_d}")
        if not 0.0 < self.g2 <= 1.0:
            raise ValueError(f"g2 must lie in (0, 1], got {self.g2}")

    @classmethod
    def at_distance(cls, d: float, V: float, alpha: float = 0.25,
                    detector: DetectorParams = DetectorParams(), g2: float = 1.0) -> "ApproxParams":
        return cls(t=transmission(alpha, d), V=V, eta=detector.eta, p_d=detector.p_d, g2=g2)


def _attack(mu: float, p: ApproxParams) -> tuple[float, float]:
    p_c1 = p.t - p.g2 * mu / 2.0
    if not 0.0 <= p_c1 <= 1.0:
        raise ApproximationDomainError(f"p_c1 = t - g2 mu / 2 = {p_c1:.4g} outside [0, 1] at mu={mu}")
    denom = 2.0 - p.g2 * mu / p.t
    if denom <= 0.0:
        raise ApproximationDomainError(f"no single photons left to forward at mu={mu} (mu >= 2t/g2)")
    d1 = (1.0 - p.V) / denom
    if not 0.0 <= d1 <= 0.5:
        raise ApproximationDomainError(f"D1 = {d1:.4g} outside [0, 1/2] at mu={mu}")
    return p_c1, d1


def qber(mu: float, p: ApproxParams) -> float:
    return 0.5 - p.V / (2.0 * (1.0 + 2.0 * p.p_d / (mu * p.t * p.eta)))


def s_of_mu(mu: float, params: ApproxParams) -> float:
    """S(mu) = I(A:B) - I(A:E) with Eve's attack fixed by the two constraints.

    Raises:
        ApproximationDomainError: if the implied p_c1 or D1 is not a valid probability.
    """
    if not mu > 0.0:
        raise ValueError(f"mu must be > 0, got {mu}")
    p = params
    p_c1, d1 = _attack(mu, p)
    i_ab = 0.5 * (mu * p.t * p.eta + 2.0 * p.p_d) * (1.0 - _entropy(qber(mu, p)))
    i_ae = 0.5 * mu * p.eta * (p_c1 * _i1(d1) + p.g2 * mu / 2.0)
    return i_ab - i_ae


def optimize_s_of_mu(params: ApproxParams, mu_min: float = 1e-6) -> tuple[float, float]:
    """Numerical maximum (mu, S) of :func:`s_of_mu` over its valid range of mu."""
    p = params
    mu_max = 2.0 * p.t * p.V / p.g2
    if p.t < 1.0:
        mu_max = min(mu_max, 2.0 * p.t / p.g2)
    lo, hi = math.log(mu_min), math.log(mu_max * (1.0 - 1e-12))
    n = 81
    grid = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    vals = [s_of_mu(math.exp(x), p) for x in grid]
    k = max(range(n), key=vals.__getitem__)
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, n - 1)]
    res = minimize_scalar(lambda x: -s_of_mu(math.exp(x), p), bounds=(a, b),
                          method="bounded", options={"xatol": 1e-9})
    x = float(res.x) if -res.fun > vals[k] else grid[k]
    return math.exp(x), s_of_mu(math.exp(x), p)


def _check_validity(V: float) -> None:
    if V < V_VALIDITY:
        raise ApproximationDomainError(
            f"explicit formulas need V >= {V_VALIDITY} (optical QBER below P), got V={V}"
        )


def _qopt_and_p(V: float) -> tuple[float, float]:
    return (1.0 - V) / 2.0, 0.5 - math.sqrt(V * (1.0 - V))


def mu_star_approx(params: ApproxParams) -> float:
    """Explicit optimal mean photon number (t/g2)(1 - H(Q_opt)/H(P))."""
    _check_validity(params.V)
    q_opt, big_p = _qopt_and_p(params.V)
    ratio = _entropy(q_opt) / _entropy(big_p)
    return params.t / params.g2 * max(1.0 - ratio, 0.0)


def s_approx(params: ApproxParams) -> float:
    """Explicit key rate 1/4 eta (t^2/g2) H(P) (1 - H(Q_opt)/H(P))^2."""
    _check_validity(params.V)
    q_opt, big_p = _qopt_and_p(params.V)
    h_p = _entropy(big_p)
    factor = max(1.0 - _entropy(q_opt) / h_p, 0.0)
    return 0.25 * params.eta * params.t**2 / params.g2 * h_p * factor**2


def s_near_perfect_v(epsilon: float, params: ApproxParams) -> float:
    """Key rate for V = 1 - epsilon: sifted rate times (1/2 - H(epsilon/2))."""
    if not 0.0 <= epsilon <= 0.2:
        raise ValueError(f"epsilon must lie in [0, 0.2], got {epsilon}")
    p = params
    return 0.5 * p.eta * p.t * (p.t / p.g2) * (0.5 - _entropy(epsilon / 2.0))


def t_limit(detector: DetectorParams, g2: float = 1.0, alpha: float = 0.25) -> tuple[float, float]:
    """Transmission and distance at which S vanishes for V = 1.

    Returns ``(t_lim, d_lim)`` with t_lim = sqrt(2 ln2 g2 p_d / eta).

    Raises:
        UnboundedDistanceError: if ``p_d == 0``.
    """
    if detector.p_d == 0.0:
        raise UnboundedDistanceError("p_d = 0: no dark-count-limited distance")
    if not 0.0 <= g2 <= 1.0:
        raise ValueError(f"g2 must lie in [0, 1], got {g2}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    t_lim = math.sqrt(2.0 * math.log(2.0) * g2 * detector.p_d / detector.eta)
    d_lim = math.inf if t_lim == 0.0 else -10.0 * math.log10(t_lim) / alpha
    return t_lim, d_lim
