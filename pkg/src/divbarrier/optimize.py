"""Barrier dividend values, the optimal barrier, and optimality certificates.

The value of the barrier strategy at level b is

    V_b(x) = W(x) / W'(b)            for 0 <= x <= b,
    V_b(x) = x - b + W(b) / W'(b)    for x > b,

and the candidate optimal barrier b* is the global minimizer of W'.
Whether the barrier strategy is optimal over all admissible dividend
strategies depends on distributional shape conditions; the certificate
engine matches the model against a fixed catalog of sufficient
conditions, reporting the sharpest rule whose hypotheses are verified.
Rules backed only by conjectured results are labeled as such and never
upgraded.  With no match, b* is still returned: it is then optimal among
barrier strategies on the computed grid, a strictly weaker statement.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    CompoundClaimDistribution,
    Exponential,
    Geometric,
    Logarithmic,
)
from .errors import DegenerateBarrierError, GridTooShortError, ParameterError
from .shapes import (
    Holds,
    check_density_cm,
    check_dfr,
    check_discrete_cm,
    check_discrete_dfr,
    check_discrete_log_convex,
    check_log_convex_density,
)

_W1_FLOOR = 1e-12
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

# Certificate rule identifiers (stable output tokens).  Theorem-backed
# rules certify optimality over all admissible strategies; conjectural
# rules only record that the conjectured sufficient condition holds.
RULE_CM_BOTH = "Thm4.1"          # CM claim density + discrete CM bulk pmf
RULE_CM_DFR = "Thm4.2"           # discrete CM bulk pmf + DFR claims
RULE_GEOM_LOG_DFR = "Cor4.1"     # geometric/logarithmic bulks + DFR claims
RULE_LOGCONVEX_EXP = "Thm4.3"    # log-convex bulk pmf + exponential claims
RULE_COMPOUND_DIRECT = "Lemma5.2-direct"  # compound density verified log-convex
RULE_CONJ_LOGCONVEX = "Conjecture1"
RULE_CONJ_DFR = "Conjecture2"
RULE_NONE = "None"

CONJECTURAL_RULES = frozenset({RULE_CONJ_LOGCONVEX, RULE_CONJ_DFR})


@dataclass
class BarrierPolicy:
    """A fixed-barrier dividend policy bound to a scale grid."""

    b: float
    grid: object

    def value(self, x):
        return barrier_value(self.grid, self.b, x)


@dataclass
class OptimalityCertificate:
    """Why (or whether) the barrier at b_star is known to be optimal."""

    b_star: float
    w1_min: float
    rule: str
    conjectural: bool
    shape_evidence: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    numeric_confirmation: bool = False

    @property
    def certified(self):
        return self.rule != RULE_NONE and not self.conjectural

    def to_dict(self):
        return {
            "b_star": float(self.b_star),
            "w1_min": float(self.w1_min),
            "rule": self.rule,
            "conjectural": bool(self.conjectural),
            "numeric_confirmation": bool(self.numeric_confirmation),
            "shape_evidence": [v.to_dict() for v in self.shape_evidence],
            "skipped": [{"rule": r, "reason": why} for r, why in self.skipped],
        }


def barrier_value(grid, b, x):
    """Expected discounted dividends of the barrier-b strategy from x."""
    if b < 0 or b > grid.x_max * (1 + 1e-12):
        raise ParameterError("b", f"must lie in [0, {grid.x_max:g}]")
    if x < 0:
        raise ParameterError("x", "must be nonnegative")
    w1b = float(grid.w1_at(b))
    if w1b <= _W1_FLOOR:
        raise DegenerateBarrierError(f"W'(b) = {w1b:g} at b = {b:g}; value function undefined")
    if x <= b:
        if x > grid.x_max * (1 + 1e-12):
            raise ParameterError("x", f"must lie in [0, {grid.x_max:g}]")
        return float(grid.w_at(x)) / w1b
    return (x - b) + float(grid.w_at(b)) / w1b


def find_b_star(grid, refine_width_factor=1e-8):
    """Global minimizer of W' over [0, x_max] with its minimum value.

    Coarse scan over the tabulated derivative, then golden-section
    refinement of the bracketing cell.  A minimum attained at x_max
    raises GridTooShortError; ties resolve to the smallest b.
    """
    w1 = grid.w1
    i = int(np.argmin(w1))
    if i == w1.size - 1:
        raise GridTooShortError(grid.x_max, 2.0 * grid.x_max)
    if i == 0:
        return 0.0, float(w1[0])
    lo, hi = grid.x[i - 1], grid.x[i + 1]
    tol = refine_width_factor * grid.x_max
    f = lambda t: float(grid.w1_at(t))
    a, b = lo, hi
    c_pt = b - _GOLDEN * (b - a)
    d_pt = a + _GOLDEN * (b - a)
    fc, fd = f(c_pt), f(d_pt)
    while b - a > tol:
        if fc < fd:
            b, d_pt, fd = d_pt, c_pt, fc
            c_pt = b - _GOLDEN * (b - a)
            fc = f(c_pt)
        else:
            a, c_pt, fc = c_pt, d_pt, fd
            d_pt = a + _GOLDEN * (b - a)
            fd = f(d_pt)
    b_star = 0.5 * (a + b)
    w1_min = f(b_star)
    # definitional post-check against the scan, within evaluator noise
    if w1_min > float(w1[i]) + max(1e-9, float(grid.err[i])):
        b_star, w1_min = float(grid.x[i]), float(w1[i])
    return float(b_star), float(w1_min)


def value_function(grid, b_star, x):
    """Value of the candidate optimal strategy; equals the true optimum
    only when a theorem-backed certificate applies."""
    return barrier_value(grid, b_star, x)


def _compound_for(model, eps_f=1e-8):
    return CompoundClaimDistribution(model.compounder, model.claim, eps_f=eps_f)


def certify_optimality(model, grid):
    """Match the model against the certificate catalog.

    Rules are tried in a fixed priority with family-aware guards so each
    is cited for the models it addresses most sharply:

    1. fully completely monotone inputs with exponential claims;
    2. discrete CM bulk pmf with DFR claims (non-geometric bulks);
    3. geometric or logarithmic bulks with DFR claims;
    4. log-convex bulk pmf with exponential claims;
    5. directly verified log-convex compound density;
    6. conjectural: log-convex pmf + log-convex claim density;
    7. conjectural: discrete DFR pmf + DFR claims.

    A rule whose precondition comes back Inconclusive is skipped and the
    skip is recorded.  Every reported rule carries the verdicts that
    fired it.
    """
    b_star, w1_min = find_b_star(grid)
    numeric_ok = w1_min <= float(grid.w1.min()) + max(1e-9, float(grid.err.max()))

    pmf_cm = check_discrete_cm(model.compounder)
    density_cm = check_density_cm(model.claim)
    claim_dfr = check_dfr(model.claim)
    pmf_logconvex = check_discrete_log_convex(model.compounder)
    base_evidence = [pmf_cm, density_cm, claim_dfr, pmf_logconvex]

    skipped = []

    def decide(rule, verdicts, guard=True):
        if not guard:
            return None
        inconclusive = [v for v in verdicts if v.holds == Holds.INCONCLUSIVE]
        if inconclusive:
            skipped.append((rule, f"inconclusive: {', '.join(v.property for v in inconclusive)}"))
            return None
        if all(v.holds == Holds.YES for v in verdicts):
            return verdicts
        return None

    claim_exp = isinstance(model.claim, Exponential)
    comp_geo = isinstance(model.compounder, Geometric)
    comp_log = isinstance(model.compounder, Logarithmic)

    fired = decide(RULE_CM_BOTH, [density_cm, pmf_cm], guard=claim_exp)
    if fired:
        return _certificate(RULE_CM_BOTH, b_star, w1_min, fired, skipped, numeric_ok)

    fired = decide(RULE_CM_DFR, [pmf_cm, claim_dfr], guard=not comp_geo)
    if fired:
        return _certificate(RULE_CM_DFR, b_star, w1_min, fired, skipped, numeric_ok)

    fired = decide(RULE_GEOM_LOG_DFR, [claim_dfr], guard=comp_geo or comp_log)
    if fired:
        return _certificate(RULE_GEOM_LOG_DFR, b_star, w1_min, fired, skipped, numeric_ok)

    fired = decide(RULE_LOGCONVEX_EXP, [pmf_logconvex], guard=claim_exp)
    if fired:
        return _certificate(RULE_LOGCONVEX_EXP, b_star, w1_min, fired, skipped, numeric_ok)

    compound = _compound_for(model)
    compound_logconvex = check_log_convex_density(compound)
    fired = decide(RULE_COMPOUND_DIRECT, [compound_logconvex])
    if fired:
        return _certificate(RULE_COMPOUND_DIRECT, b_star, w1_min, fired, skipped, numeric_ok)

    claim_logconvex = check_log_convex_density(model.claim)
    fired = decide(RULE_CONJ_LOGCONVEX, [pmf_logconvex, claim_logconvex])
    if fired:
        return _certificate(RULE_CONJ_LOGCONVEX, b_star, w1_min, fired, skipped, numeric_ok)

    pmf_dfr = check_discrete_dfr(model.compounder)
    fired = decide(RULE_CONJ_DFR, [pmf_dfr, claim_dfr])
    if fired:
        return _certificate(RULE_CONJ_DFR, b_star, w1_min, fired, skipped, numeric_ok)

    return OptimalityCertificate(
        b_star=b_star, w1_min=w1_min, rule=RULE_NONE, conjectural=False,
        shape_evidence=base_evidence, skipped=skipped, numeric_confirmation=numeric_ok,
    )


def _certificate(rule, b_star, w1_min, evidence, skipped, numeric_ok):
    return OptimalityCertificate(
        b_star=b_star,
        w1_min=w1_min,
        rule=rule,
        conjectural=rule in CONJECTURAL_RULES,
        shape_evidence=list(evidence),
        skipped=list(skipped),
        numeric_confirmation=numeric_ok,
    )
