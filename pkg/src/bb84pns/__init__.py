"""Security of practical BB84 against photon-number-splitting and 2->3 cloning attacks.

The package computes Eve's optimal incoherent attack on a weak-pulse BB84
link, the resulting secret-key rate S = I(A:B) - I(A:E), and the source
intensity that maximizes it.
"""

__version__ = "0.1.0"

from .approx import (
    ApproxParams,
    mu_star_approx,
    optimize_s_of_mu,
    s_approx,
    s_near_perfect_v,
    s_of_mu,
    t_limit,
)
from .attacks import (
    D2_CLONER_A_FULL,
    D2_CLONER_C,
    AttackStrategy,
    ClonerKind,
    EveRates,
    cl_reference_mu,
    constraint_residuals,
    eve_rates,
    expected_rates,
    i1,
    i2,
    i2_cloner_a,
    information_on_bob,
    reverse_reconciliation_factor,
    secret_key_rate,
)
from .errors import (
    ApproximationDomainError,
    DegenerateLinkError,
    InfeasibleAttackError,
    InfeasibleChannelError,
    InfeasibleError,
    UnboundedDistanceError,
)
from .model import (
    ChannelParams,
    DetectorParams,
    LinkRates,
    SourceModel,
    binary_entropy,
    link_rates,
    p_arrive,
    p_empty,
    transmission,
)
from .montecarlo import SimConfig, SimResult, simulate_link
from .optimize import (
    ScanResult,
    SecurityPoint,
    compare_cloners,
    grid_oracle,
    limit_distance,
    optimize_attack,
    optimize_mu,
    scan_distance,
    scan_visibility,
    solve_point,
)

__all__ = [
    "ApproxParams",
    "ApproximationDomainError",
    "AttackStrategy",
    "ChannelParams",
    "ClonerKind",
    "D2_CLONER_A_FULL",
    "D2_CLONER_C",
    "DegenerateLinkError",
    "DetectorParams",
    "EveRates",
    "InfeasibleAttackError",
    "InfeasibleChannelError",
    "InfeasibleError",
    "LinkRates",
    "ScanResult",
    "SecurityPoint",
    "SimConfig",
    "SimResult",
    "SourceModel",
    "UnboundedDistanceError",
    "binary_entropy",
    "cl_reference_mu",
    "compare_cloners",
    "constraint_residuals",
    "eve_rates",
    "expected_rates",
    "grid_oracle",
    "i1",
    "i2",
    "i2_cloner_a",
    "information_on_bob",
    "limit_distance",
    "link_rates",
    "mu_star_approx",
    "optimize_attack",
    "optimize_mu",
    "optimize_s_of_mu",
    "p_arrive",
    "p_empty",
    "reverse_reconciliation_factor",
    "s_approx",
    "s_near_perfect_v",
    "s_of_mu",
    "scan_distance",
    "scan_visibility",
    "secret_key_rate",
    "simulate_link",
    "solve_point",
    "t_limit",
    "transmission",
]
