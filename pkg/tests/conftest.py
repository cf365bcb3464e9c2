"""Shared fixtures: the two reference models and independent oracles."""

import numpy as np
import pytest

from divbarrier import (
    Degenerate,
    Exponential,
    Geometric,
    RiskModel,
)

# Reference model 1: no diffusion, unit exponential claims, single-claim
# bulks.  The scale transform is rational with denominator 2s^2+0.9s-0.1,
# so everything has a closed form.
MODEL_A = dict(c=2.0, sigma=0.0, lam=1.0, q=0.1)

# Reference model 2: diffusion present, geometric bulks of exponential
# claims; still rational, with an interior optimal barrier near 0.62.
MODEL_B = dict(c=1.5, sigma=0.75, lam=1.0, rho=0.5, q=0.5)


@pytest.fixture(scope="session")
def model_a():
    return RiskModel(c=MODEL_A["c"], sigma=MODEL_A["sigma"], lam=MODEL_A["lam"],
                     compounder=Degenerate(), claim=Exponential(1.0))


@pytest.fixture(scope="session")
def model_b():
    return RiskModel(c=MODEL_B["c"], sigma=MODEL_B["sigma"], lam=MODEL_B["lam"],
                     compounder=Geometric(MODEL_B["rho"]), claim=Exponential(1.0))


def scale_oracle_a():
    """Independent partial-fraction oracle for model A.

    Roots of 2 s^2 + 0.9 s - 0.1 over denominator (1+s); residues of
    1/(psi - q) at a simple root equal D(root)/N'(root) with
    N' = 4 s + 0.9 and D = 1 + s.
    """
    roots = np.roots([2.0, 0.9, -0.1])
    coef = (1.0 + roots) / (4.0 * roots + 0.9)

    def w(x, order=0):
        x = np.asarray(x, dtype=float)
        return np.sum(coef * roots**order * np.exp(np.multiply.outer(x, roots)), axis=-1)

    return roots, coef, w


def brute_counting_pmf(pmf_terms, lam, t, n, tail=1e-14):
    """Convolution-series oracle for P(N_t = n), written with explicit loops.

    pmf_terms[k-1] = p_k.  The k-bulk term uses the k-fold convolution of
    the bulk-size pmf evaluated at n, built by direct summation.
    """
    mu = lam * t
    if n == 0:
        return float(np.exp(-mu))
    p = [0.0] * (n + 1)
    for k in range(1, min(len(pmf_terms), n) + 1):
        p[k] = float(pmf_terms[k - 1])
    conv = [1.0] + [0.0] * n  # zero-fold convolution: unit mass at 0
    pois = np.exp(-mu)
    cum = pois
    total = 0.0
    for k in range(1, n + 1):
        pois *= mu / k
        cum += pois
        new = [0.0] * (n + 1)
        for i in range(n + 1):
            if conv[i] == 0.0:
                continue
            for j in range(1, n + 1 - i):
                new[i + j] += conv[i] * p[j]
        conv = new
        total += pois * conv[n]
        if 1.0 - cum < tail and k >= mu:
            break
    return float(total)
