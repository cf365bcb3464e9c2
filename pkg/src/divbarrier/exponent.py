"""Risk model assembly and its Laplace exponent.

The surplus process is premium drift plus optional Brownian noise minus a
compound Poisson stream of bulk claims.  Its Laplace exponent is

    psi(s) = c s + sigma^2 s^2 / 2 + lam * (g(L(s)) - 1),

where g is the bulk-count pgf and L the claim-size Laplace transform;
the composition g(L(s)) is the transform of the per-arrival aggregate
claim, which keeps evaluation exact for analytic claim kinds.  psi is
convex with psi(0) = 0, so psi(s) = q has a unique positive root rho(q)
for every q > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import ClaimDistribution, CountingCompounder
from .errors import ParameterError

_ROOT_TOL = 1e-12
_BISECT_WIDTH = 1e-8
_NEWTON_STEPS = 5


@dataclass(frozen=True)
class RiskModel:
    """Premium rate, diffusion volatility, bulk intensity, and jump laws."""

    c: float
    sigma: float
    lam: float
    compounder: CountingCompounder
    claim: ClaimDistribution
    net_drift: float = field(init=False)

    def __post_init__(self):
        if not self.c > 0:
            raise ParameterError("c", "premium rate must be positive")
        if not self.sigma >= 0:
            raise ParameterError("sigma", "volatility must be nonnegative")
        if not self.lam > 0:
            raise ParameterError("lam", "bulk intensity must be positive")
        drift = self.c - self.lam * self.compounder.mean() * self.claim.mean()
        object.__setattr__(self, "net_drift", float(drift))

    @property
    def bounded_variation(self):
        """True when there is no diffusion component (sigma = 0)."""
        return self.sigma == 0.0


class ExponentEvaluator:
    """Evaluates psi and its derivative for a fixed model.

    Real evaluation is restricted to s >= 0, which lies inside the
    convergence strip for every supported compounder (|L(s)| <= 1 there).
    Complex evaluation is provided for transform inversion and requires
    Re(s) > 0.
    """

    def __init__(self, model: RiskModel):
        self.model = model

    def psi(self, s):
        m = self.model
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ParameterError("s", "must be nonnegative")
        out = np.where(
            s == 0.0,
            0.0,
            m.c * s
            + 0.5 * m.sigma**2 * s**2
            + m.lam * (m.compounder.pgf(m.claim.laplace(s)) - 1.0),
        )
        return float(out) if out.ndim == 0 else out

    def psi_prime(self, s):
        m = self.model
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ParameterError("s", "must be nonnegative")
        u = m.claim.laplace(s)
        out = m.c + m.sigma**2 * s + m.lam * m.compounder.pgf_deriv(u) * m.claim.laplace_deriv(s)
        return float(out) if np.ndim(out) == 0 else out

    def psi_complex(self, s):
        """psi on complex arguments with positive real part (no validation)."""
        m = self.model
        return (
            m.c * s
            + 0.5 * m.sigma**2 * s * s
            + m.lam * (m.compounder.pgf(m.claim.laplace(s)) - 1.0)
        )


def psi(model, s):
    """Laplace exponent of the surplus process at s >= 0."""
    return ExponentEvaluator(model).psi(s)


def rho_root(model, q):
    """Unique positive root of psi(s) = q for q > 0.

    Brackets by doubling (psi is convex, vanishes at 0, and grows without
    bound), bisects to width 1e-8, then polishes with Newton steps using
    the analytic derivative.  The residual satisfies
    |psi(root) - q| <= 1e-12 * max(1, q).
    """
    if not q > 0:
        raise ParameterError("q", "must be positive")
    ev = ExponentEvaluator(model)
    hi = 1.0
    while ev.psi(hi) < q:
        hi *= 2.0
        if hi > 1e12:
            raise ParameterError("q", "root bracketing diverged")
    lo = 0.0
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if ev.psi(mid) < q:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    for _ in range(_NEWTON_STEPS):
        resid = ev.psi(root) - q
        if abs(resid) <= _ROOT_TOL * max(1.0, q):
            break
        root = max(root - resid / ev.psi_prime(root), 1e-300)
    return float(root)
