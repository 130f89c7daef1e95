"""Exception types raised by the library.

``InfeasibleError`` marks a physically impossible request (the CLI maps it to
exit status 3); everything else that is merely a bad argument is a plain
``ValueError``.
"""


class InfeasibleError(ValueError):
    """Base class for requests that are well formed but physically infeasible."""


class DegenerateLinkError(InfeasibleError):
    """Bob registers no counts at all, so the QBER is undefined."""


class InfeasibleChannelError(InfeasibleError):
    """No attack strategy can reproduce Bob's expected detection rate."""


class InfeasibleAttackError(InfeasibleError):
    """An attack strategy violates the rate or visibility constraint."""

    def __init__(self, res_t: float, res_v: float, tol: float):
        self.res_t = res_t
        self.res_v = res_v
        self.tol = tol
        super().__init__(
            f"attack is infeasible: res_t={res_t:.3e}, res_v={res_v:.3e} (tol={tol:g})"
        )


class ApproximationDomainError(ValueError):
    """The analytical approximation is evaluated outside its validity region."""


class UnboundedDistanceError(InfeasibleError):
    """Without dark counts there is no dark-count-limited distance."""
