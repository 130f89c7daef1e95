"""Eve's optimal attack and Alice's optimal mean photon number.

Inner problem: maximize I(A:E) over the attack parameters subject to the
detection-rate and error-rate equality constraints. Both constraints are
linear in the branch rates, so for a fixed two-photon cloning probability
``p_c2`` (and cloner disturbance ``d2``) they leave only the choice of the
one-photon forwarding rate R1; the disturbance D1 follows from the error
budget. Eve's information decreases with R1 (I1 is concave, so its
perspective R1 * I1(E1 / R1) grows more slowly than R1), hence R1 sits at its
smallest feasible value. What remains is a concave function of ``p_c2`` on an
interval cut out by linear inequalities, which a bounded scalar search
solves exactly. Cloner A adds a one-dimensional outer search over ``d2``.

:func:`grid_oracle` solves the same problem by brute force in a different
parametrization (keeping the pass-through and two-photon blocking branches
free) and is used to cross-check the optimizer.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .attacks import (
    D2_CLONER_C,
    AttackStrategy,
    ClonerKind,
    EveRates,
    _i1,
    _i2a,
    eve_rates,
    expected_rates,
    multiphoton_rate,
)
from .errors import InfeasibleChannelError
from .model import ChannelParams, DetectorParams, SourceModel, _entropy, link_rates

MU_BOUNDS = (1e-4, 1.0)
D_MIN, D_MAX = 10.0, 150.0
V_MIN, V_MAX = 0.7, 1.0
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class _Problem:
    """Rate coefficients of one attack instance (all per pulse, sifted)."""

    c_ph: float  # Bob's expected photon rate
    c_err: float  # Bob's expected optical error rate
    a1: float  # R1 at p_c1 = 1
    v: float  # R2s at p_s2 = 1
    u: float  # R2c at p_c2 = 1
    r3: float
    cloner: ClonerKind

    @classmethod
    def build(cls, source, channel, detector, cloner) -> "_Problem":
        eta = detector.eta
        c_ph, c_err = expected_rates(source, channel, detector)
        p1, p2 = source.prob(1), source.prob(2)
        return cls(
            c_ph=c_ph,
            c_err=c_err,
            a1=0.5 * eta * p1,
            v=0.5 * eta * p2,
            u=0.5 * (1.0 - (1.0 - eta) ** 2) * p2,
            r3=multiphoton_rate(source, eta),
            cloner=ClonerKind.parse(cloner),
        )

    @property
    def clones(self) -> bool:
        return self.cloner is not ClonerKind.NONE and self.u > 0.0

    def info2(self, d2: float) -> float:
        if self.cloner is ClonerKind.A:
            return _i2a(d2)
        return 1.0 if self.cloner is ClonerKind.C else 0.0

    def interval(self, d2: float) -> tuple[float, float] | None:
        """Feasible range of p_c2 at disturbance ``d2``, or None if empty."""
        hi = 1.0 if self.clones else 0.0
        lo = 0.0
        rest = self.c_ph - self.r3
        e = self.c_err
        u = self.u
        # each row (a, b) encodes a + b * p_c2 >= 0
        rows = (
            (e, -u * d2),  # error left for one-photon pulses
            (rest, -u),  # rate left for one- and stored two-photon pulses
            (rest - 2 * e, -u + 2 * u * d2),  # room for D1 <= 1/2
            (self.a1 - 2 * e, 2 * u * d2),  # enough one-photon pulses for D1 <= 1/2
            (self.a1 - rest + self.v, u - self.v),  # enough one-photon pulses for the rate
        )
        slack = 1e-13 * max(self.c_ph, 1e-300)
        for a, b in rows:
            a = a + slack
            if b > 0.0:
                lo = max(lo, -a / b)
            elif b < 0.0:
                hi = min(hi, -a / b)
            elif a < 0.0:
                return None
        if lo > hi:
            return None
        return lo, hi

    def evaluate(self, p_c2: float, d2: float) -> tuple[float, float, float]:
        """(I(A:E), R1, D1) at the smallest feasible one-photon rate."""
        r2c = self.u * p_c2
        rest = self.c_ph - self.r3 - r2c
        e1 = max(self.c_err - r2c * d2, 0.0)
        r1 = max(2.0 * e1, rest - self.v * (1.0 - p_c2), 0.0)
        r1 = min(r1, max(rest, 0.0))
        d1 = min(e1 / r1, 0.5) if r1 > 0.0 else 0.0
        info = r1 * _i1(d1) + (rest - r1) + r2c * self.info2(d2) + self.r3
        return info, r1, d1

    def strategy(self, p_c2: float, d2: float) -> AttackStrategy:
        _, r1, d1 = self.evaluate(p_c2, d2)
        rest = self.c_ph - self.r3 - self.u * p_c2
        p_c1 = min(r1 / self.a1, 1.0) if self.a1 > 0.0 else 0.0
        if self.v > 0.0:
            p_s2 = min(max((rest - r1) / self.v, 0.0), 1.0 - p_c2)
        else:
            p_c2, p_s2 = 0.0, 1.0
        if self.cloner is ClonerKind.C:
            d2 = D2_CLONER_C
        elif self.cloner is ClonerKind.NONE or p_c2 == 0.0:
            d2 = 0.0
        return AttackStrategy(
            p_c1=p_c1, p_b1=1.0 - p_c1, p_l1=0.0, d1=d1,
            p_s2=p_s2, p_c2=p_c2, p_b2=max(1.0 - p_c2 - p_s2, 0.0), d2=d2,
            cloner=self.cloner,
        )


def _better(cand, best) -> bool:
    """Order (info, p_c2, d1) candidates: more information, then smaller p_c2, then smaller d1."""
    if best is None:
        return True
    tol = min(_TIE_TOL, 1e-9 * abs(best[0]))
    if cand[0] > best[0] + tol:
        return True
    if cand[0] < best[0] - tol:
        return False
    return (cand[1], cand[2]) < (best[1], best[2])


def _best_p_c2(prob: _Problem, d2: float):
    """Maximize over p_c2 at fixed d2: returns (info, p_c2, d1) or None if infeasible."""
    span = prob.interval(d2)
    if span is None:
        return None
    lo, hi = span
    best = None
    xs = [lo, hi]
    if hi - lo > 1e-15:
        res = minimize_scalar(
            lambda x: -prob.evaluate(x, d2)[0], bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12 * max(hi - lo, 1e-3)},
        )
        x = float(res.x)
        # concave objective: a search that converged onto an edge means the edge itself
        if min(x - lo, hi - x) > 1e-6 * (hi - lo):
            xs.append(x)
    for x in xs:
        info, _, d1 = prob.evaluate(x, d2)
        cand = (info, x, d1)
        if _better(cand, best):
            best = cand
    return best


def _solve(prob: _Problem, n_d2: int = 51):
    """Return (info, p_c2, d2) of Eve's best attack."""
    if prob.cloner is ClonerKind.A and prob.clones:
        grid = np.linspace(0.0, 0.25, n_d2)
        results = [_best_p_c2(prob, float(d2)) for d2 in grid]
        feasible = [i for i, r in enumerate(results) if r is not None]
        if not feasible:
            raise InfeasibleChannelError(_infeasible_reason(prob))
        k = max(feasible, key=lambda i: (results[i][0], -i))
        best = (results[k][0], results[k][1], results[k][2], float(grid[k]))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n_d2 - 1)]

        def neg(d2):
            r = _best_p_c2(prob, d2)
            return 1.0 if r is None else -r[0]

        res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        r = _best_p_c2(prob, float(res.x))
        if r is not None and _better(r, best[:3]):
            best = (r[0], r[1], r[2], float(res.x))
        return best[0], best[1], best[3]
    d2 = D2_CLONER_C if prob.cloner is ClonerKind.C else 0.0
    r = _best_p_c2(prob, d2)
    if r is None:
        raise InfeasibleChannelError(_infeasible_reason(prob))
    return r[0], r[1], d2


def _infeasible_reason(prob: _Problem) -> str:
    most = prob.a1 + max(prob.u, prob.v) + prob.r3
    if most < prob.c_ph:
        return (f"Bob expects a photon rate {prob.c_ph:.3e} but Eve can deliver at most "
                f"{most:.3e} even forwarding everything")
    if prob.r3 > prob.c_ph:
        return (f"multi-photon storage alone gives rate {prob.r3:.3e} above Bob's expected "
                f"{prob.c_ph:.3e}")
    return "no attack reproduces both Bob's photon rate and his optical error rate"


def optimize_attack(source: SourceModel, channel: ChannelParams, detector: DetectorParams,
                    cloner: ClonerKind = ClonerKind.C) -> AttackStrategy:
    """Eve's attack maximizing I(A:E) under both equality constraints.

    Raises:
        InfeasibleChannelError: if no attack reproduces Bob's expected statistics.
    """
    prob = _Problem.build(source, channel, detector, cloner)
    _, p_c2, d2 = _solve(prob)
    return prob.strategy(p_c2, d2)


def grid_oracle(source: SourceModel, channel: ChannelParams, detector: DetectorParams,
                cloner: ClonerKind = ClonerKind.C, resolution: int = 50,
                refine_levels: int = 14) -> AttackStrategy:
    """Brute-force maximization of I(A:E), used to validate :func:`optimize_attack`.

    Free coordinates are p_c2, the blocked fraction of the non-cloned
    two-photon pulses, the pass-through share of the forwarded one-photon
    pulses and (cloner A only) d2. The detection-rate constraint fixes the
    forwarded one-photon rate, the error constraint fixes D1. A uniform grid
    is followed by a shrinking local grid around the incumbent.
    """
    if resolution < 50:
        raise ValueError(f"resolution must be >= 50, got {resolution}")
    cloner = ClonerKind.parse(cloner)
    eta = detector.eta
    c_ph, c_err = expected_rates(source, channel, detector)
    p1, p2 = source.prob(1), source.prob(2)
    a1 = 0.5 * eta * p1
    v = 0.5 * eta * p2
    u = 0.5 * (1.0 - (1.0 - eta) ** 2) * p2
    r3 = multiphoton_rate(source, eta)
    slack = 1e-12 * c_ph

    if cloner is ClonerKind.A:
        def info2(d2):
            d2 = np.asarray(d2, dtype=float)
            root = np.sqrt(np.clip(8 * d2 * (1 - 4 * d2), 0, None)) / (1 - 2 * d2)
            return 2 * d2 + (1 - 2 * d2) * (1 - _entropy(np.minimum(0.5 * (1 + root), 1.0)))
    else:
        def info2(d2):
            return np.full(np.shape(d2), 1.0 if cloner is ClonerKind.C else 0.0)

    def score(x, beta, lam, d2):
        r2c = u * x
        p_s2 = (1 - x) * (1 - beta)
        r2s = v * p_s2
        fwd = c_ph - r3 - r2c - r2s
        r1 = (1 - lam) * fwd
        e1 = c_err - r2c * d2
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = np.where(r1 > 0, e1 / np.where(r1 > 0, r1, 1.0), 0.0)
        ok = (fwd >= -slack) & (fwd <= a1 + slack) & (e1 >= -slack) & (d1 <= 0.5)
        ok &= (r1 > 0) | (np.abs(e1) <= slack)
        d1c = np.clip(d1, 0.0, 0.5)
        i1v = 1 - _entropy(0.5 + np.sqrt(d1c * (1 - d1c)))
        info = r1 * i1v + r2s + r2c * info2(d2) + r3
        return np.where(ok, info, -np.inf), d1c

    free_x = cloner is not ClonerKind.NONE and u > 0
    free_d2 = cloner is ClonerKind.A and free_x
    fixed_d2 = D2_CLONER_C if cloner is ClonerKind.C else 0.0
    lows = np.array([0.0, 0.0, 0.0, 0.0 if free_d2 else fixed_d2])
    highs = np.array([1.0 if free_x else 0.0, 1.0, 1.0, 0.25 if free_d2 else fixed_d2])

    def search(lo, hi, n):
        axes = [np.linspace(l, h, n) if h > l else np.array([l]) for l, h in zip(lo, hi)]
        best = (-np.inf, None)
        for d2 in axes[3]:
            X, B, L = np.meshgrid(axes[0], axes[1], axes[2], indexing="ij")
            vals, _ = score(X, B, L, np.full(X.shape, d2))
            k = np.argmax(vals)
            if vals.flat[k] > best[0]:
                best = (vals.flat[k], np.array([X.flat[k], B.flat[k], L.flat[k], d2]))
        return best

    best_val, best_x = search(lows, highs, resolution)
    if best_x is None:
        prob = _Problem.build(source, channel, detector, cloner)
        raise InfeasibleChannelError(_infeasible_reason(prob))
    width = (highs - lows) / (resolution - 1)
    for _ in range(refine_levels):
        lo = np.clip(best_x - 2 * width, lows, highs)
        hi = np.clip(best_x + 2 * width, lows, highs)
        val, x = search(lo, hi, 9)
        if x is not None and val >= best_val:
            best_val, best_x = val, x
        width = width / 4

    x, beta, lam, d2 = (float(c) for c in best_x)
    if not free_x:
        x = 0.0
    p_s2 = (1 - x) * (1 - beta)
    fwd = max(c_ph - r3 - u * x - v * p_s2, 0.0)
    share = fwd / a1 if a1 > 0 else 0.0
    share = min(share, 1.0)
    _, d1 = score(np.array(x), np.array(beta), np.array(lam), np.array(d2))
    d1 = float(d1)
    if fwd * (1 - lam) <= 0:
        d1 = 0.0
    if v == 0.0:
        p_s2, x = 1.0, 0.0
    if cloner is ClonerKind.A and x == 0.0:
        d2 = 0.0
    return AttackStrategy(
        p_c1=share * (1 - lam), p_b1=1.0 - share, p_l1=share * lam, d1=d1,
        p_s2=p_s2, p_c2=x, p_b2=max(1.0 - x - p_s2, 0.0), d2=d2, cloner=cloner,
    )


@dataclass(frozen=True)
class SecurityPoint:
    """One solved instance: Alice's mean photon number, Eve's attack and the key rate.

    ``s`` is I(A:B) - I(A:E) as computed and may be negative; ``key_rate``
    clamps it to zero and is zero whenever the point is flagged insecure.
    """

    d: float
    V: float
    mu: float
    attack: AttackStrategy
    q: float
    i_ab: float
    i_ae: float
    s: float
    rates: EveRates = field(repr=False)
    insecure: bool = False

    @property
    def key_rate(self) -> float:
        return 0.0 if self.insecure else max(self.s, 0.0)

    def information_terms(self) -> tuple[float, float, float, float]:
        """The four contributions to I(A:E), each divided by I(A:B)."""
        if self.i_ab <= 0.0:
            return (math.nan,) * 4
        return tuple(term / self.i_ab for term in self.rates.information_terms())


def solve_point(mu: float, channel: ChannelParams, detector: DetectorParams,
                cloner: ClonerKind = ClonerKind.C, source: SourceModel | None = None) -> SecurityPoint:
    """Optimal attack and key rate at a given source; Poissonian with mean ``mu`` by default."""
    if source is None:
        source = SourceModel.poissonian(mu)
    attack = optimize_attack(source, channel, detector, cloner)
    return make_point(source, channel, detector, attack, mu=mu)


def make_point(source: SourceModel, channel: ChannelParams, detector: DetectorParams,
               attack: AttackStrategy, mu: float | None = None, insecure: bool | None = None) -> SecurityPoint:
    link = link_rates(source, channel, detector)
    rates = eve_rates(source, detector, attack)
    s = link.i_ab - rates.i_ae
    return SecurityPoint(
        d=channel.d, V=channel.V, mu=source.mu if mu is None else mu, attack=attack,
        q=link.q, i_ab=link.i_ab, i_ae=rates.i_ae, s=s, rates=rates,
        insecure=(s <= 0.0) if insecure is None else insecure,
    )


def optimize_mu(d: float, alpha: float, detector: DetectorParams, V: float,
                cloner: ClonerKind = ClonerKind.C, mu_bounds: tuple[float, float] = MU_BOUNDS,
                n_grid: int = 41, rtol: float = 1e-5) -> tuple[float, SecurityPoint]:
    """Poissonian mean photon number that maximizes S once Eve attacks optimally.

    A logarithmic grid over ``mu_bounds`` locates the best bracket, then a
    bounded scalar search refines log(mu). If no mu yields S > 0 the best
    point is returned with ``insecure=True`` (its ``key_rate`` is 0).
    """
    if d < D_MIN:
        raise ValueError(f"d must be >= {D_MIN} km so that storage on n >= 3 is possible, got {d}")
    channel = ChannelParams(alpha=alpha, d=d, V=V)
    cloner = ClonerKind.parse(cloner)
    cache: dict[float, float] = {}

    def s_of(log_mu: float) -> float:
        if log_mu not in cache:
            mu = math.exp(log_mu)
            source = SourceModel.poissonian(mu)
            try:
                prob = _Problem.build(source, channel, detector, cloner)
                info = _solve(prob)[0]
            except InfeasibleChannelError:
                cache[log_mu] = -math.inf
            else:
                cache[log_mu] = link_rates(source, channel, detector).i_ab - info
        return cache[log_mu]

    lo, hi = math.log(mu_bounds[0]), math.log(mu_bounds[1])
    grid = np.linspace(lo, hi, n_grid)
    vals = [s_of(float(x)) for x in grid]
    k = int(np.argmax(vals))
    if not math.isfinite(vals[k]):
        raise InfeasibleChannelError(f"no feasible attack model for any mu in {mu_bounds} at d={d}")
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, n_grid - 1)]
    res = minimize_scalar(lambda x: -s_of(x) if math.isfinite(s_of(x)) else 1.0,
                          bounds=(a, b), method="bounded", options={"xatol": rtol})
    log_best = float(grid[k])
    if s_of(float(res.x)) > vals[k]:
        log_best = float(res.x)
    mu_star = math.exp(log_best)
    point = solve_point(mu_star, channel, detector, cloner)
    return mu_star, point


@dataclass(frozen=True)
class ScanResult:
    """Optimized points ordered along the swept coordinate ``swept`` ('d' or 'V')."""

    points: tuple[SecurityPoint, ...]
    cloner: ClonerKind
    swept: str
    params: dict

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])


def _steps(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


def _distance_task(args):
    d, alpha, detector, V, cloner, mu_from = args
    if mu_from is None or mu_from is cloner:
        return optimize_mu(d, alpha, detector, V, cloner)[1]
    mu, _ = optimize_mu(d, alpha, detector, V, mu_from)
    return solve_point(mu, ChannelParams(alpha, d, V), detector, cloner)


def _visibility_task(args):
    V, d, alpha, detector, cloner = args
    return optimize_mu(d, alpha, detector, V, cloner)[1]


def _run(task, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return tuple(pool.map(task, jobs))
    return tuple(task(job) for job in jobs)


def scan_distance(d_range: tuple[float, float], step: float, alpha: float, detector: DetectorParams,
                  V: float, cloner: ClonerKind = ClonerKind.C, mu_from: ClonerKind | None = None,
                  workers: int = 1) -> ScanResult:
    """Optimized key rate along the fiber length.

    With ``mu_from`` set, mu is optimized against that cloner and the attack
    for ``cloner`` is then re-optimized at the same mu.
    """
    lo, hi = d_range
    if lo < D_MIN or hi > D_MAX:
        raise ValueError(f"distance range must lie within [{D_MIN}, {D_MAX}] km, got {d_range}")
    cloner = ClonerKind.parse(cloner)
    mu_from = None if mu_from is None else ClonerKind.parse(mu_from)
    jobs = [(d, alpha, detector, V, cloner, mu_from) for d in _steps(lo, hi, step)]
    points = _run(_distance_task, jobs, workers)
    params = {"source": "poissonian", "alpha": alpha, "eta": detector.eta, "p_d": detector.p_d,
              "V": V, "mu_from": None if mu_from is None else mu_from.value}
    return ScanResult(points=points, cloner=cloner, swept="d", params=params)


def scan_visibility(d: float, v_range: tuple[float, float], step: float, alpha: float,
                    detector: DetectorParams, cloner: ClonerKind = ClonerKind.C,
                    workers: int = 1) -> ScanResult:
    """Optimal attack and key rate as the visibility varies at fixed distance."""
    lo, hi = v_range
    if lo < V_MIN or hi > V_MAX:
        raise ValueError(f"visibility range must lie within [{V_MIN}, {V_MAX}], got {v_range}")
    cloner = ClonerKind.parse(cloner)
    jobs = [(min(v, 1.0), d, alpha, detector, cloner) for v in _steps(lo, hi, step)]
    points = _run(_visibility_task, jobs, workers)
    params = {"source": "poissonian", "alpha": alpha, "eta": detector.eta, "p_d": detector.p_d, "d": d}
    return ScanResult(points=points, cloner=cloner, swept="V", params=params)


def compare_cloners(d: float, alpha: float, detector: DetectorParams, V: float) -> dict[ClonerKind, SecurityPoint]:
    """Key rate against each cloner at the mean photon number optimal against cloner C."""
    mu, best = optimize_mu(d, alpha, detector, V, ClonerKind.C)
    channel = ChannelParams(alpha=alpha, d=d, V=V)
    out = {ClonerKind.C: best}
    for kind in (ClonerKind.NONE, ClonerKind.A):
        out[kind] = solve_point(mu, channel, detector, kind)
    return {k: out[k] for k in (ClonerKind.NONE, ClonerKind.A, ClonerKind.C)}


def limit_distance(alpha: float, detector: DetectorParams, V: float, cloner: ClonerKind = ClonerKind.C,
                   d_bounds: tuple[float, float] = (D_MIN, D_MAX), tol: float = 0.01) -> float:
    """Distance beyond which the optimized key rate vanishes, by bisection.

    Raises:
        InfeasibleChannelError: if the link is already insecure at ``d_bounds[0]``.
    """
    lo, hi = d_bounds

    def secure(d):
        return not optimize_mu(d, alpha, detector, V, cloner)[1].insecure

    if not secure(lo):
        raise InfeasibleChannelError(f"no secret key even at d={lo} km for V={V}")
    if secure(hi):
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if secure(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
