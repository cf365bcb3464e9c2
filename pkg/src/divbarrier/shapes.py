"""Distributional shape classes: log-convexity, complete monotonicity, DFR.

Verdicts are three-valued.  Log-convexity and DFR are finite grid
conditions, so the numeric path may answer Yes or No.  Complete
monotonicity is an infinite-order condition: the numeric path only ever
answers No (a witnessed violation) or Inconclusive (no violation up to
the tested depth); Yes requires an analytic family rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .distributions import (
    ClaimDistribution,
    CompoundClaimDistribution,
    CountingCompounder,
    EmpiricalDensity,
    Erlang,
    Exponential,
    GeneralizedLogarithmic,
    Geometric,
    HyperExponential,
    Logarithmic,
    MixtureOfErlangs,
)
from .errors import InsufficientDataError, ParameterError

REL_SLACK_EXACT = 1e-12   # identity slack for exact-family inequalities
DD_SLACK = 1e-9           # divided-difference slack for grid convexity tests
CM_SLACK = 1e-10          # forward-difference slack, relative to r_0
CM_MAX_ORDER = 8
GRID_POINTS = 200


class Holds(str, Enum):
    YES = "yes"
    NO = "no"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Evidence:
    """One observation backing a verdict: where, what was tested, margin."""

    location: str
    quantity: float
    margin: float

    def to_dict(self):
        return {"location": self.location, "quantity": float(self.quantity), "margin": float(self.margin)}


@dataclass
class ShapeVerdict:
    """Outcome of one shape-class membership test."""

    property: str
    holds: Holds
    method: str  # "analytic" or "numeric"
    evidence: list = field(default_factory=list)
    detail: str = ""

    def to_dict(self):
        return {
            "property": self.property,
            "holds": self.holds.value,
            "method": self.method,
            "evidence": [e.to_dict() for e in self.evidence],
            "detail": self.detail,
        }


def _pmf_terms(pmf, default_k=30):
    """Extract p_1..p_K terms from a compounder or a raw sequence."""
    if isinstance(pmf, CountingCompounder):
        return np.asarray(pmf.pmf_array(default_k), dtype=float), pmf
    arr = np.asarray(pmf, dtype=float)
    if arr.ndim != 1:
        raise ParameterError("pmf", "must be a 1-d sequence")
    return arr, None


def check_discrete_log_convex(pmf, strict=False):
    """Test p_n^2 <= p_{n+1} p_{n-1} (strict: <) over interior indices.

    Accepts a compounder (known families short-circuit analytically) or a
    raw sequence of at least three terms.
    """
    terms, comp = _pmf_terms(pmf)
    prop = "StrictLogConvex" if strict else "LogConvex"
    if comp is not None and isinstance(comp, (Geometric, Logarithmic, GeneralizedLogarithmic)):
        if isinstance(comp, Geometric):
            detail = "geometric family: p_n^2 = p_{n+1} p_{n-1} exactly"
            holds = Holds.NO if strict else Holds.YES
            if strict:
                detail = "geometric family: the inequality is an equality, never strict"
                ev = [Evidence("n=2", float(terms[1] ** 2 - terms[2] * terms[0]), 0.0)]
                return ShapeVerdict(prop, holds, "analytic", ev, detail)
        elif isinstance(comp, Logarithmic):
            detail = "logarithmic family: p_{n+1} p_{n-1} / p_n^2 = n^2/(n^2-1) > 1"
        else:
            detail = "generalized logarithmic family is strictly log-convex"
        ev = [Evidence("family-rule", 1.0, 0.0)]
        return ShapeVerdict(prop, Holds.YES, "analytic", ev, detail)
    if terms.size < 3:
        raise InsufficientDataError("need at least 3 pmf terms")
    if np.any(terms < 0):
        raise ParameterError("pmf", "terms must be nonnegative")
    evidence = []
    scale = np.max(terms) ** 2
    for n in range(1, terms.size - 1):
        lhs = terms[n] ** 2
        rhs = terms[n + 1] * terms[n - 1]
        margin = rhs - lhs
        ok = margin >= -REL_SLACK_EXACT * scale if not strict else margin > REL_SLACK_EXACT * scale
        if not ok:
            evidence.append(Evidence(f"n={n + 1}", lhs, margin))
            return ShapeVerdict(
                prop, Holds.NO, "numeric", evidence,
                f"violation at n={n + 1}: p_n^2={lhs:.6g} vs p_(n+1)p_(n-1)={rhs:.6g}",
            )
    worst = np.inf
    worst_n = 1
    for n in range(1, terms.size - 1):
        margin = terms[n + 1] * terms[n - 1] - terms[n] ** 2
        if margin < worst:
            worst, worst_n = margin, n + 1
    evidence.append(Evidence(f"n={worst_n}", float(terms[worst_n - 1] ** 2), float(worst)))
    return ShapeVerdict(prop, Holds.YES, "numeric", evidence, f"holds on all interior n up to {terms.size - 1}")


def check_discrete_cm(pmf, max_order=CM_MAX_ORDER):
    """Test discrete complete monotonicity of a counting sequence r_0, r_1, ...

    Compounder pmfs are shifted to start at 0 (r_n = p_{n+1}).  Geometric
    and Logarithmic families hold analytically.  The numeric path checks
    alternating forward differences up to ``max_order`` and can only
    refute or remain inconclusive, since the full condition involves all
    orders.
    """
    if isinstance(pmf, CountingCompounder):
        comp = pmf
        if isinstance(comp, Geometric):
            return ShapeVerdict(
                "DiscreteCompletelyMonotone", Holds.YES, "analytic",
                [Evidence("family-rule", 1.0, 0.0)],
                "geometric sequence: single-point mixture of geometrics",
            )
        if isinstance(comp, Logarithmic):
            return ShapeVerdict(
                "DiscreteCompletelyMonotone", Holds.YES, "analytic",
                [Evidence("family-rule", 1.0, 0.0)],
                "logarithmic sequence shifted to start at 0 is a geometric mixture",
            )
        terms = np.asarray(comp.pmf_array(40), dtype=float)
    else:
        terms = np.asarray(pmf, dtype=float)
        if terms.ndim != 1:
            raise ParameterError("pmf", "must be a 1-d sequence")
    if terms.size < 3:
        raise InsufficientDataError("need at least 3 sequence terms")
    r0 = terms[0] if terms[0] > 0 else max(terms.max(), 1e-300)
    slack = CM_SLACK * r0
    diff = terms.copy()
    depth = min(max_order, terms.size - 1)
    for j in range(1, depth + 1):
        diff = np.diff(diff)
        signed = diff * (-1.0) ** j
        bad = np.where(signed < -slack)[0]
        if bad.size:
            n = int(bad[0])
            return ShapeVerdict(
                "DiscreteCompletelyMonotone", Holds.NO, "numeric",
                [Evidence(f"order={j}, n={n}", float(signed[n]), float(signed[n]))],
                f"sign violation in order-{j} forward difference at n={n}",
            )
    worst = float(np.min(diff * (-1.0) ** depth))
    return ShapeVerdict(
        "DiscreteCompletelyMonotone", Holds.INCONCLUSIVE, "numeric",
        [Evidence(f"orders<= {depth}", worst, worst)],
        f"no violation up to order {depth}; depth-capped test cannot certify membership",
    )


def _shape_grid(dist, points=GRID_POINTS):
    """Log-spaced evaluation grid between the 0.001 and 0.999 quantiles."""
    lo = dist.quantile(0.001)
    hi = dist.quantile(0.999)
    lo = max(lo, hi * 1e-9)
    return np.geomspace(lo, hi, points)


def check_density_cm(claim):
    """Test complete monotonicity of a claim density on (0, inf).

    Exponential and hyperexponential kinds (and all-shape-1 Erlang
    mixtures) hold analytically; Erlang shapes >= 2 fail analytically.
    The sampled-density fallback sign-checks finite differences of orders
    1..4 and cannot answer Yes.
    """
    if isinstance(claim, Exponential):
        return ShapeVerdict(
            "CompletelyMonotone", Holds.YES, "analytic",
            [Evidence("family-rule", claim.rate, 0.0)], "exponential density: derivatives alternate exactly",
        )
    if isinstance(claim, HyperExponential):
        return ShapeVerdict(
            "CompletelyMonotone", Holds.YES, "analytic",
            [Evidence("family-rule", min(claim.rates), 0.0)],
            "finite mixture of exponentials with positive weights",
        )
    if isinstance(claim, Erlang):
        if claim.shape == 1:
            return check_density_cm(Exponential(claim.rate))
        return ShapeVerdict(
            "CompletelyMonotone", Holds.NO, "analytic",
            [Evidence("z->0+", 0.0, -1.0)],
            f"Erlang shape {claim.shape} density vanishes then increases near 0",
        )
    if isinstance(claim, MixtureOfErlangs):
        if all(m == 1 for m in claim.shapes):
            return ShapeVerdict(
                "CompletelyMonotone", Holds.YES, "analytic",
                [Evidence("family-rule", min(claim.rates), 0.0)],
                "all components exponential: mixture of exponentials",
            )
        return ShapeVerdict(
            "CompletelyMonotone", Holds.NO, "analytic",
            [Evidence("component", float(max(claim.shapes)), -1.0)],
            "a shape >= 2 component dominates high-order derivatives with the wrong sign",
        )
    if not isinstance(claim, EmpiricalDensity):
        raise ParameterError("claim", "density not evaluable for this kind")
    z = _shape_grid(claim)
    f = claim.pdf(z)
    if np.any(f <= 0):
        idx = int(np.argmax(f <= 0))
        return ShapeVerdict(
            "CompletelyMonotone", Holds.NO, "numeric",
            [Evidence(f"z={z[idx]:.6g}", float(f[idx]), float(f[idx]))],
            "density not strictly positive on the evaluation grid",
        )
    inconclusive = False
    vals = f
    for order in range(1, 5):
        vals = np.gradient(vals, z)
        signed = vals * (-1.0) ** order
        noise = 1e-6 * np.interp(z, z, f)
        bad = signed < -noise
        if np.any(bad):
            idx = int(np.argmax(bad))
            return ShapeVerdict(
                "CompletelyMonotone", Holds.NO, "numeric",
                [Evidence(f"order={order}, z={z[idx]:.6g}", float(signed[idx]), float(signed[idx]))],
                f"order-{order} derivative estimate has the wrong sign",
            )
        if np.any(np.abs(signed) < noise):
            inconclusive = True
    _ = inconclusive
    return ShapeVerdict(
        "CompletelyMonotone", Holds.INCONCLUSIVE, "numeric",
        [Evidence("orders<=4", float(np.min(vals * (-1.0) ** 4)), 0.0)],
        "no violation up to order 4; sampled densities cannot certify membership",
    )


def _second_divided_differences(x, y):
    """f[x0,x1,x2] over consecutive triples; positive means convex."""
    first = np.diff(y) / np.diff(x)
    return np.diff(first) / (x[2:] - x[:-2])


_LOG_EVAL_NOISE = 1e-12


def _dd_slack(x):
    """Pointwise tolerance for second divided differences of a sampled log.

    Evaluation noise of size eps in the log values amplifies to roughly
    4 eps / (h H) in the divided difference, with h the smaller adjacent
    spacing and H the outer span; below that floor convexity cannot be
    resolved, so the fixed slack is widened accordingly.
    """
    h = np.minimum(np.diff(x)[:-1], np.diff(x)[1:])
    H = x[2:] - x[:-2]
    return DD_SLACK + 4.0 * _LOG_EVAL_NOISE / (h * H)


def _tail_grid(dist, points=GRID_POINTS):
    z = _shape_grid(dist, points)
    sf = np.asarray(dist.sf(z), dtype=float)
    keep = sf > 1e-300
    truncated = not np.all(keep)
    return z[keep], sf[keep], truncated


def check_dfr(dist):
    """Decreasing failure rate: is log of the survival function convex?

    Accepts a claim law or a compound claim distribution.  Exponential
    claims and exponential-type mixtures hold analytically, as does a
    geometric compound of exponential claims (its tail is exponential).
    """
    if isinstance(dist, Exponential) or (isinstance(dist, Erlang) and dist.shape == 1):
        return ShapeVerdict(
            "DFR", Holds.YES, "analytic",
            [Evidence("family-rule", getattr(dist, "rate"), 0.0)],
            "constant failure rate: log-tail is linear (boundary DFR)",
        )
    if isinstance(dist, HyperExponential) or (
        isinstance(dist, MixtureOfErlangs) and all(m == 1 for m in dist.shapes)
    ):
        return ShapeVerdict(
            "DFR", Holds.YES, "analytic",
            [Evidence("family-rule", 1.0, 0.0)],
            "mixture of exponentials: completely monotone tail is log-convex",
        )
    if isinstance(dist, CompoundClaimDistribution) and isinstance(dist.compounder, Geometric) and isinstance(
        dist.claim, Exponential
    ):
        eff = dist.claim.rate * (1.0 - dist.compounder.rho)
        return ShapeVerdict(
            "DFR", Holds.YES, "analytic",
            [Evidence("family-rule", eff, 0.0)],
            "geometric compound of exponentials has an exponential tail",
        )
    z, sf, truncated = _tail_grid(dist)
    if z.size < 3:
        raise ParameterError("dist", "tail not evaluable on enough grid points")
    log_sf = np.log(sf)
    dd = _second_divided_differences(z, log_sf)
    slack = _dd_slack(z)
    detail_extra = "; grid truncated where the tail underflowed" if truncated else ""
    bad = np.where(dd < -slack)[0]
    if bad.size:
        i = int(bad[np.argmin(dd[bad])])
        return ShapeVerdict(
            "DFR", Holds.NO, "numeric",
            [Evidence(f"z={z[i + 1]:.6g}", float(dd[i]), float(dd[i]))],
            f"log-tail concave near z={z[i + 1]:.6g}" + detail_extra,
        )
    i = int(np.argmin(dd))
    return ShapeVerdict(
        "DFR", Holds.YES, "numeric",
        [Evidence(f"z={z[i + 1]:.6g}", float(dd[i]), float(dd[i]))],
        "log-tail convex on the evaluation grid" + detail_extra,
    )


def check_log_convex_density(dist):
    """Is the log of the density convex on (0, inf)?

    Exponential and hyperexponential kinds hold analytically (complete
    monotonicity implies log-convexity); Erlang shapes >= 2 fail.  Other
    inputs, including compound claim distributions, are tested on the
    quantile grid with divided differences.
    """
    if isinstance(dist, Exponential) or (isinstance(dist, Erlang) and dist.shape == 1):
        return ShapeVerdict(
            "LogConvexDensity", Holds.YES, "analytic",
            [Evidence("family-rule", getattr(dist, "rate"), 0.0)], "log-density is linear",
        )
    if isinstance(dist, HyperExponential) or (
        isinstance(dist, MixtureOfErlangs) and all(m == 1 for m in dist.shapes)
    ):
        return ShapeVerdict(
            "LogConvexDensity", Holds.YES, "analytic",
            [Evidence("family-rule", 1.0, 0.0)],
            "completely monotone density, hence log-convex",
        )
    if isinstance(dist, Erlang):
        z0 = dist.shape / dist.rate
        dd = -(dist.shape - 1) / z0 ** 2
        return ShapeVerdict(
            "LogConvexDensity", Holds.NO, "analytic",
            [Evidence(f"z={z0:.6g}", dd, dd)],
            "log-density curvature -(shape-1)/z^2 < 0",
        )
    z, _, _ = _tail_grid(dist)
    f = np.asarray(dist.pdf(z), dtype=float)
    if np.any(f <= 0):
        idx = int(np.argmax(f <= 0))
        return ShapeVerdict(
            "LogConvexDensity", Holds.NO, "numeric",
            [Evidence(f"z={z[idx]:.6g}", float(f[idx]), float(f[idx]))],
            "density not strictly positive on the evaluation grid",
        )
    dd = _second_divided_differences(z, np.log(f))
    slack = _dd_slack(z)
    bad = np.where(dd < -slack)[0]
    if bad.size:
        i = int(bad[np.argmin(dd[bad])])
        return ShapeVerdict(
            "LogConvexDensity", Holds.NO, "numeric",
            [Evidence(f"z={z[i + 1]:.6g}", float(dd[i]), float(dd[i]))],
            f"log-density concave near z={z[i + 1]:.6g}",
        )
    i = int(np.argmin(dd))
    return ShapeVerdict(
        "LogConvexDensity", Holds.YES, "numeric",
        [Evidence(f"z={z[i + 1]:.6g}", float(dd[i]), float(dd[i]))],
        "log-density convex on the evaluation grid",
    )


def check_discrete_dfr(pmf):
    """Discrete DFR of a bulk-count law: log-convexity of the survival
    sequence T_n = P(X > n), n >= 0."""
    if isinstance(pmf, CountingCompounder):
        tails = np.array([pmf.tail(n) for n in range(0, 32)])
    else:
        terms = np.asarray(pmf, dtype=float)
        tails = np.concatenate([[terms.sum()], terms.sum() - np.cumsum(terms)])
    tails = tails[tails > 1e-300]
    if tails.size < 3:
        raise InsufficientDataError("need at least 3 positive tail terms")
    verdict = check_discrete_log_convex(tails)
    verdict.property = "DiscreteDFR"
    verdict.detail = "survival-sequence log-convexity: " + verdict.detail
    return verdict
