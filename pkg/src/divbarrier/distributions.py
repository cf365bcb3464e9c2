"""Claim-size laws, bulk-count laws, and their compounds.

Claim sizes are positive continuous random variables; bulk counts are
integer-valued with support {1, 2, ...}.  The aggregate loss of one bulk
arrival is a random sum of claims, so the per-arrival jump law is the
compound distribution

    F(z) = sum_{k>=1} p_k P^{*k}(z),

with {p_k} the bulk-count pmf and P^{*k} the k-fold convolution of the
claim law.  All analytic claim kinds are represented internally as
mixtures of Erlang densities with a single common rate, which makes the
convolution powers exact coefficient arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gammainc, gammaincc, gammaln, logsumexp

from .errors import ExtrapolationError, ParameterError

_POISSON_TAIL = 1e-12
_PMF_NORM_TOL = 1e-10
_DENSITY_NORM_TOL = 1e-8


# --------------------------------------------------------------------------
# claim-size distributions
# --------------------------------------------------------------------------

class ClaimDistribution:
    """Base class for positive claim-size laws.

    Subclasses provide the density, distribution function, survival
    function, Laplace transform (valid for complex arguments with
    nonnegative real part), and sampling.  Instances are immutable after
    construction and safe to share across threads.
    """

    def pdf(self, z):
        raise NotImplementedError

    def cdf(self, z):
        raise NotImplementedError

    def sf(self, z):
        return 1.0 - self.cdf(z)

    def laplace(self, s):
        raise NotImplementedError

    def laplace_deriv(self, s):
        raise NotImplementedError

    def mean(self):
        raise NotImplementedError

    def quantile(self, p):
        """Inverse cdf by bisection; subclasses may override with closed forms."""
        p = float(p)
        if not 0.0 < p < 1.0:
            raise ParameterError("p", "quantile level must lie in (0,1)")
        hi = max(self.mean(), 1e-6)
        while self.cdf(hi) < p:
            hi *= 2.0
            if hi > 1e12:
                raise ParameterError("p", "quantile search diverged")
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < p:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def erlang_mixture(self, tol):
        """Represent the law as ``(rate B, coeffs a)`` with ``a[j-1]`` the
        weight of an Erlang(j, B) component, truncated to total mass loss
        at most ``tol``.  Returns None when no such representation exists.
        """
        return None

    def sample(self, rng, size):
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(ClaimDistribution):
    """Exponential claims with the given rate (mean 1/rate)."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError("rate", "must be positive")

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z > 0, self.rate * np.exp(-self.rate * np.maximum(z, 0.0)), 0.0)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z > 0, -np.expm1(-self.rate * np.maximum(z, 0.0)), 0.0)

    def sf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z > 0, np.exp(-self.rate * np.maximum(z, 0.0)), 1.0)

    def laplace(self, s):
        return self.rate / (self.rate + s)

    def laplace_deriv(self, s):
        return -self.rate / (self.rate + s) ** 2

    def mean(self):
        return 1.0 / self.rate

    def quantile(self, p):
        return -np.log1p(-p) / self.rate

    def erlang_mixture(self, tol):
        return self.rate, np.array([1.0])

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size=size)


@dataclass(frozen=True)
class HyperExponential(ClaimDistribution):
    """Finite mixture of exponentials with positive weights summing to 1."""

    weights: tuple
    rates: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if w.ndim != 1 or w.shape != r.shape or w.size == 0:
            raise ParameterError("weights", "weights and rates must be equal-length 1-d sequences")
        if np.any(w <= 0):
            raise ParameterError("weights", "must be strictly positive")
        if abs(w.sum() - 1.0) > _PMF_NORM_TOL:
            raise ParameterError("weights", f"must sum to 1, got {w.sum()!r}")
        if np.any(r <= 0):
            raise ParameterError("rates", "must be strictly positive")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "rates", tuple(float(x) for x in r))

    def _wr(self):
        return np.asarray(self.weights), np.asarray(self.rates)

    def pdf(self, z):
        w, r = self._wr()
        z = np.asarray(z, dtype=float)[..., None]
        out = np.sum(w * r * np.exp(-r * np.maximum(z, 0.0)), axis=-1)
        return np.where(np.squeeze(z, -1) > 0, out, 0.0)

    def cdf(self, z):
        w, r = self._wr()
        z = np.asarray(z, dtype=float)[..., None]
        out = np.sum(-w * np.expm1(-r * np.maximum(z, 0.0)), axis=-1)
        return np.where(np.squeeze(z, -1) > 0, out, 0.0)

    def sf(self, z):
        w, r = self._wr()
        z = np.asarray(z, dtype=float)[..., None]
        out = np.sum(w * np.exp(-r * np.maximum(z, 0.0)), axis=-1)
        return np.where(np.squeeze(z, -1) > 0, out, 1.0)

    def laplace(self, s):
        w, r = self._wr()
        s = np.asarray(s)[..., None]
        return np.sum(w * r / (r + s), axis=-1)

    def laplace_deriv(self, s):
        w, r = self._wr()
        s = np.asarray(s)[..., None]
        return np.sum(-w * r / (r + s) ** 2, axis=-1)

    def mean(self):
        w, r = self._wr()
        return float(np.sum(w / r))

    def erlang_mixture(self, tol):
        w, r = self._wr()
        B = float(r.max())
        per_comp = tol / len(w)
        coeffs = np.zeros(1)
        for wi, ri in zip(w, r):
            frac = ri / B
            if frac == 1.0:
                comp = np.array([wi])
            else:
                # exponential(ri) as a geometric mixture of Erlang(j, B)
                jmax = int(np.ceil(np.log(per_comp / wi) / np.log1p(-frac))) + 1
                j = np.arange(jmax)
                comp = wi * frac * (1.0 - frac) ** j
            if comp.size > coeffs.size:
                coeffs = np.pad(coeffs, (0, comp.size - coeffs.size))
            coeffs[: comp.size] += comp
        return B, coeffs

    def sample(self, rng, size):
        w, r = self._wr()
        comp = rng.choice(len(w), size=size, p=w)
        return rng.exponential(1.0, size=size) / r[comp]


@dataclass(frozen=True)
class Erlang(ClaimDistribution):
    """Erlang law: sum of ``shape`` independent exponentials of the given rate."""

    shape: int
    rate: float

    def __post_init__(self):
        if not (isinstance(self.shape, (int, np.integer)) and self.shape >= 1):
            raise ParameterError("shape", "must be a positive integer")
        if not self.rate > 0:
            raise ParameterError("rate", "must be positive")

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        zpos = np.maximum(z, 0.0)
        with np.errstate(divide="ignore"):
            logpdf = (
                self.shape * np.log(self.rate)
                + (self.shape - 1) * np.log(np.where(zpos > 0, zpos, 1.0))
                - self.rate * zpos
                - gammaln(self.shape)
            )
        out = np.exp(logpdf)
        if self.shape == 1:
            return np.where(z > 0, out, 0.0)
        return np.where(z > 0, out, 0.0)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z > 0, gammainc(self.shape, self.rate * np.maximum(z, 0.0)), 0.0)

    def sf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z > 0, gammaincc(self.shape, self.rate * np.maximum(z, 0.0)), 1.0)

    def laplace(self, s):
        return (self.rate / (self.rate + s)) ** self.shape

    def laplace_deriv(self, s):
        return -(self.shape / self.rate) * (self.rate / (self.rate + s)) ** (self.shape + 1)

    def mean(self):
        return self.shape / self.rate

    def erlang_mixture(self, tol):
        coeffs = np.zeros(self.shape)
        coeffs[-1] = 1.0
        return self.rate, coeffs

    def sample(self, rng, size):
        return rng.standard_gamma(self.shape, size=size) / self.rate


@dataclass(frozen=True)
class MixtureOfErlangs(ClaimDistribution):
    """Finite mixture of Erlang components (weights, shapes, rates)."""

    weights: tuple
    shapes: tuple
    rates: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        m = np.asarray(self.shapes)
        r = np.asarray(self.rates, dtype=float)
        if not (w.shape == m.shape == r.shape) or w.ndim != 1 or w.size == 0:
            raise ParameterError("weights", "weights, shapes, rates must be equal-length 1-d sequences")
        if np.any(w <= 0):
            raise ParameterError("weights", "must be strictly positive")
        if abs(w.sum() - 1.0) > _PMF_NORM_TOL:
            raise ParameterError("weights", f"must sum to 1, got {w.sum()!r}")
        if np.any(m < 1) or not np.issubdtype(m.dtype, np.integer):
            raise ParameterError("shapes", "must be positive integers")
        if np.any(r <= 0):
            raise ParameterError("rates", "must be strictly positive")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "shapes", tuple(int(x) for x in m))
        object.__setattr__(self, "rates", tuple(float(x) for x in r))

    def _components(self):
        return [Erlang(m, r) for m, r in zip(self.shapes, self.rates)]

    def pdf(self, z):
        return sum(w * comp.pdf(z) for w, comp in zip(self.weights, self._components()))

    def cdf(self, z):
        return sum(w * comp.cdf(z) for w, comp in zip(self.weights, self._components()))

    def sf(self, z):
        return sum(w * comp.sf(z) for w, comp in zip(self.weights, self._components()))

    def laplace(self, s):
        return sum(w * comp.laplace(s) for w, comp in zip(self.weights, self._components()))

    def laplace_deriv(self, s):
        return sum(w * comp.laplace_deriv(s) for w, comp in zip(self.weights, self._components()))

    def mean(self):
        return float(sum(w * m / r for w, m, r in zip(self.weights, self.shapes, self.rates)))

    def erlang_mixture(self, tol):
        B = float(max(self.rates))
        per_comp = tol / len(self.weights)
        coeffs = np.zeros(1)
        for wi, mi, ri in zip(self.weights, self.shapes, self.rates):
            frac = ri / B
            if frac == 1.0:
                comp = np.zeros(mi)
                comp[-1] = wi
            else:
                # Erlang(m, ri) as a negative-binomial mixture of Erlang(j, B), j >= m
                jmax = mi
                # extend until the NB tail beyond jmax drops under per_comp
                probs = []
                j = mi
                logp = mi * np.log(frac)  # log weight at j = m
                acc = 0.0
                while True:
                    p = np.exp(logp)
                    probs.append(p)
                    acc += p
                    if 1.0 - acc < per_comp / max(wi, 1e-300) and j >= mi:
                        break
                    j += 1
                    logp += np.log1p(-frac) + np.log((j - 1) / (j - mi))
                    if j > mi + 100000:
                        break
                comp = np.zeros(mi - 1 + len(probs))
                comp[mi - 1 :] = wi * np.asarray(probs)
            if comp.size > coeffs.size:
                coeffs = np.pad(coeffs, (0, comp.size - coeffs.size))
            coeffs[: comp.size] += comp
        return B, coeffs

    def sample(self, rng, size):
        w = np.asarray(self.weights)
        comp = rng.choice(len(w), size=size, p=w)
        shapes = np.asarray(self.shapes, dtype=float)[comp]
        rates = np.asarray(self.rates, dtype=float)[comp]
        return rng.standard_gamma(shapes) / rates


class EmpiricalDensity(ClaimDistribution):
    """Claim law given by density samples on a nonnegative grid.

    The density must integrate to 1 within 1e-8 (trapezoid rule on the
    supplied grid).  Evaluation interpolates linearly; queries beyond the
    grid return 0 density.
    """

    def __init__(self, z, f):
        z = np.asarray(z, dtype=float)
        f = np.asarray(f, dtype=float)
        if z.ndim != 1 or z.shape != f.shape or z.size < 8:
            raise ParameterError("z", "need matching 1-d grids with at least 8 points")
        if np.any(np.diff(z) <= 0) or z[0] < 0:
            raise ParameterError("z", "grid must be strictly increasing and nonnegative")
        if np.any(f < 0):
            raise ParameterError("f", "density must be nonnegative")
        total = trapezoid(f, z)
        if abs(total - 1.0) > _DENSITY_NORM_TOL:
            raise ParameterError("f", f"density must integrate to 1 within 1e-8, got {total!r}")
        self.z = z
        self.f = f
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(z))])
        self._cdf = np.minimum(cdf / cdf[-1], 1.0) * total  # keep raw normalization
        self._total = total

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where((z >= self.z[0]) & (z <= self.z[-1]), np.interp(z, self.z, self.f), 0.0)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        out = np.interp(z, self.z, self._cdf, left=0.0, right=self._cdf[-1])
        return np.where(z <= 0, 0.0, out)

    def laplace(self, s):
        s = np.asarray(s)
        ez = np.exp(-np.multiply.outer(s, self.z))
        return trapezoid(ez * self.f, self.z, axis=-1)

    def laplace_deriv(self, s):
        s = np.asarray(s)
        ez = np.exp(-np.multiply.outer(s, self.z))
        return -trapezoid(ez * self.f * self.z, self.z, axis=-1)

    def mean(self):
        return float(trapezoid(self.z * self.f, self.z))

    def sample(self, rng, size):
        u = rng.random(size) * self._cdf[-1]
        return np.interp(u, self._cdf, self.z)


# --------------------------------------------------------------------------
# bulk-count distributions (support {1, 2, ...})
# --------------------------------------------------------------------------

class CountingCompounder:
    """Base class for the number of claims per bulk arrival."""

    def pmf(self, k):
        raise NotImplementedError

    def pgf(self, u):
        """Probability generating function; accepts complex u with |u| <= 1."""
        raise NotImplementedError

    def pgf_deriv(self, u):
        raise NotImplementedError

    def mean(self):
        raise NotImplementedError

    def tail(self, k):
        """P(X > k); exact where a closed form exists."""
        raise NotImplementedError

    def pmf_array(self, kmax):
        return np.array([self.pmf(k) for k in range(1, kmax + 1)])

    def truncation_k(self, eps):
        """Smallest K with tail mass P(X > K) <= eps."""
        k = 1
        while self.tail(k) > eps:
            k += 1
            if k > 10_000_000:
                raise ParameterError("eps", "tail truncation did not converge")
        return k

    def sample(self, rng, size):
        raise NotImplementedError


@dataclass(frozen=True)
class Degenerate(CountingCompounder):
    """Every bulk contains exactly one claim."""

    def pmf(self, k):
        return 1.0 if k == 1 else 0.0

    def pgf(self, u):
        return u

    def pgf_deriv(self, u):
        return np.ones_like(np.asarray(u))

    def mean(self):
        return 1.0

    def tail(self, k):
        return 1.0 if k < 1 else 0.0

    def sample(self, rng, size):
        return np.ones(size, dtype=np.int64)


@dataclass(frozen=True)
class Geometric(CountingCompounder):
    """p_k = (1 - rho) rho^(k-1) for k >= 1; rho in [0, 1)."""

    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ParameterError("rho", "must lie in [0, 1)")

    def pmf(self, k):
        if k < 1:
            return 0.0
        return (1.0 - self.rho) * self.rho ** (k - 1)

    def pgf(self, u):
        return (1.0 - self.rho) * u / (1.0 - self.rho * u)

    def pgf_deriv(self, u):
        return (1.0 - self.rho) / (1.0 - self.rho * u) ** 2

    def mean(self):
        return 1.0 / (1.0 - self.rho)

    def tail(self, k):
        if k < 1:
            return 1.0
        return self.rho ** k

    def sample(self, rng, size):
        if self.rho == 0.0:
            return np.ones(size, dtype=np.int64)
        return rng.geometric(1.0 - self.rho, size=size)


@dataclass(frozen=True)
class Logarithmic(CountingCompounder):
    """p_k = theta^k / (-k log(1 - theta)) for k >= 1; theta in (0, 1)."""

    theta: float

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ParameterError("theta", "must lie in (0, 1)")

    @property
    def _norm(self):
        return -np.log1p(-self.theta)

    def pmf(self, k):
        if k < 1:
            return 0.0
        return self.theta ** k / (k * self._norm)

    def pgf(self, u):
        u = np.asarray(u)
        return np.log(1.0 - self.theta * u) / np.log1p(-self.theta)

    def pgf_deriv(self, u):
        return self.theta / ((1.0 - self.theta * np.asarray(u)) * self._norm)

    def mean(self):
        return self.theta / ((1.0 - self.theta) * self._norm)

    def tail(self, k):
        if k < 1:
            return 1.0
        # sum_{i>k} theta^i / i <= theta^{k+1} / ((k+1)(1-theta)); evaluate exactly
        i = np.arange(k + 1, k + 2 + int(np.ceil(np.log(1e-18) / np.log(self.theta))))
        return float(np.sum(self.theta ** i / i) / self._norm)

    def sample(self, rng, size):
        return rng.logseries(self.theta, size=size)


class GeneralizedLogarithmic(CountingCompounder):
    """Two-parameter logarithmic-type family.

    p_n is proportional to Gamma(beta n) / (Gamma(n+1) Gamma(beta n - n + 1))
    * theta^n (1-theta)^(beta n - n), n >= 1, normalized by -log(1-theta).
    Requires beta >= 1 and 0 < theta < 1/beta; reduces to Logarithmic at
    beta = 1.  The pmf is tabulated at construction to a relative tail
    below 1e-14.
    """

    def __init__(self, beta, theta):
        if not beta >= 1.0:
            raise ParameterError("beta", "must be >= 1")
        if not 0.0 < theta < 1.0 / beta:
            raise ParameterError("theta", "must lie in (0, 1/beta)")
        self.beta = float(beta)
        self.theta = float(theta)
        self._probs = self._tabulate()
        total = self._probs.sum()
        if abs(total - 1.0) > _PMF_NORM_TOL:
            raise ParameterError("theta", f"pmf normalizes to {total!r}; too close to the boundary theta=1/beta")
        self._probs = self._probs / total  # pgf(1) = 1 to machine precision

    def _tabulate(self):
        beta, theta = self.beta, self.theta
        block, nmax = 4096, 0
        chunks = []
        remaining_ratio = 1.0
        while True:
            n = np.arange(nmax + 1, nmax + block + 1, dtype=float)
            logr = (
                gammaln(beta * n)
                - gammaln(n + 1.0)
                - gammaln(beta * n - n + 1.0)
                + n * np.log(theta)
                + (beta * n - n) * np.log1p(-theta)
            )
            chunk = np.exp(logr) / (-np.log1p(-theta))
            chunks.append(chunk)
            nmax += block
            # geometric-style tail bound from the last term ratio
            ratio = chunk[-1] / chunk[-2] if chunk[-2] > 0 else 0.0
            if ratio < 1.0 and chunk[-1] * ratio / (1.0 - ratio) < 1e-16:
                break
            remaining_ratio = ratio
            if nmax > 2_000_000:
                raise ParameterError("theta", "pmf tabulation did not converge; theta too close to 1/beta")
        _ = remaining_ratio
        return np.concatenate(chunks)

    def pmf(self, k):
        if k < 1 or k > self._probs.size:
            return 0.0
        return float(self._probs[k - 1])

    def pmf_array(self, kmax):
        out = np.zeros(kmax)
        m = min(kmax, self._probs.size)
        out[:m] = self._probs[:m]
        return out

    def pgf(self, u):
        u = np.asarray(u)
        # Horner evaluation of sum p_k u^k = u * polyval(u) over stored terms
        coeffs = self._probs
        acc = np.zeros_like(u, dtype=complex if np.iscomplexobj(u) else float)
        for c in coeffs[::-1]:
            acc = acc * u + c
        return acc * u

    def pgf_deriv(self, u):
        u = np.asarray(u)
        coeffs = self._probs * np.arange(1, self._probs.size + 1)
        acc = np.zeros_like(u, dtype=complex if np.iscomplexobj(u) else float)
        for c in coeffs[::-1]:
            acc = acc * u + c
        return acc

    def mean(self):
        return float(np.sum(self._probs * np.arange(1, self._probs.size + 1)))

    def tail(self, k):
        if k < 1:
            return 1.0
        if k >= self._probs.size:
            return 0.0
        return float(self._probs[k:].sum())

    def sample(self, rng, size):
        cdf = np.cumsum(self._probs)
        u = rng.random(size) * cdf[-1]
        return np.searchsorted(cdf, u) + 1

    def __repr__(self):
        return f"GeneralizedLogarithmic(beta={self.beta}, theta={self.theta})"


class ExplicitPmf(CountingCompounder):
    """Finite bulk-count pmf p_1..p_K with a declared truncation bound.

    ``tail_bound`` is the caller-asserted mass beyond K; the stored terms
    must sum to 1 within tail_bound + 1e-10.
    """

    def __init__(self, probs, tail_bound=0.0):
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ParameterError("probs", "must be a nonempty 1-d sequence")
        if np.any(probs < 0):
            raise ParameterError("probs", "must be nonnegative")
        if tail_bound < 0:
            raise ParameterError("tail_bound", "must be nonnegative")
        if abs(probs.sum() - 1.0) > tail_bound + _PMF_NORM_TOL:
            raise ParameterError(
                "probs", f"sum {probs.sum()!r} differs from 1 beyond the declared tail bound"
            )
        self.probs = probs
        self.tail_bound = float(tail_bound)

    def pmf(self, k):
        if 1 <= k <= self.probs.size:
            return float(self.probs[k - 1])
        return 0.0

    def pmf_array(self, kmax):
        out = np.zeros(kmax)
        m = min(kmax, self.probs.size)
        out[:m] = self.probs[:m]
        return out

    def pgf(self, u):
        u = np.asarray(u)
        acc = np.zeros_like(u, dtype=complex if np.iscomplexobj(u) else float)
        for c in self.probs[::-1]:
            acc = acc * u + c
        return acc * u

    def pgf_deriv(self, u):
        u = np.asarray(u)
        coeffs = self.probs * np.arange(1, self.probs.size + 1)
        acc = np.zeros_like(u, dtype=complex if np.iscomplexobj(u) else float)
        for c in coeffs[::-1]:
            acc = acc * u + c
        return acc

    def mean(self):
        return float(np.sum(self.probs * np.arange(1, self.probs.size + 1)))

    def tail(self, k):
        if k < 1:
            return 1.0
        if k >= self.probs.size:
            return self.tail_bound
        return float(self.probs[k:].sum()) + self.tail_bound

    def sample(self, rng, size):
        cdf = np.cumsum(self.probs)
        u = rng.random(size) * cdf[-1]
        return np.searchsorted(cdf, u) + 1

    def __repr__(self):
        return f"ExplicitPmf({list(self.probs)}, tail_bound={self.tail_bound})"


# --------------------------------------------------------------------------
# counting-process pmfs
# --------------------------------------------------------------------------

def _validate_rate_time(lam, t):
    if not lam > 0:
        raise ParameterError("lam", "must be positive")
    if not t > 0:
        raise ParameterError("t", "must be positive")


def counting_pmf(compounder, lam, t, n):
    """P(N_t = n) for the bulk-arrival counting process.

    N_t sums the bulk sizes of a Poisson(lam) stream observed up to time
    t.  Geometric and Logarithmic compounders dispatch to their closed
    forms; other kinds run the convolution series over the number of
    bulks, truncated once the Poisson tail falls below 1e-12.
    """
    _validate_rate_time(lam, t)
    if not (isinstance(n, (int, np.integer)) and n >= 0):
        raise ParameterError("n", "must be a nonnegative integer")
    if isinstance(compounder, Geometric):
        return polya_aeppli_pmf(compounder.rho, lam, t, n)
    if isinstance(compounder, Logarithmic):
        r = lam / (-np.log1p(-compounder.theta))
        return negative_binomial_pmf(r, compounder.theta, t, n)
    return _counting_pmf_series(compounder, lam, t, n)


def _counting_pmf_series(compounder, lam, t, n, tail=_POISSON_TAIL):
    """Direct evaluation: sum over bulk counts k of Pois(lam t; k) * p^{*k}(n).

    The zero-fold convolution is the unit mass at 0, so only k <= n bulks
    can contribute for n >= 1.
    """
    mu = lam * t
    if n == 0:
        return float(np.exp(-mu))
    p = np.zeros(n + 1)
    p[1:] = compounder.pmf_array(n)
    conv = np.zeros(n + 1)
    conv[0] = 1.0
    pois = np.exp(-mu)
    cum = pois
    total = 0.0
    for k in range(1, n + 1):
        pois *= mu / k
        cum += pois
        conv = np.convolve(conv, p)[: n + 1]
        total += pois * conv[n]
        if 1.0 - cum < tail and k >= mu:
            break
    return float(total)


def polya_aeppli_pmf(rho, lam, t, n):
    """Counting pmf under geometric bulk sizes (Polya-Aeppli process).

    Reduces to the Poisson pmf at rho = 0.
    """
    if not 0.0 <= rho < 1.0:
        raise ParameterError("rho", "must lie in [0, 1)")
    _validate_rate_time(lam, t)
    if n == 0:
        return float(np.exp(-lam * t))
    mu = lam * (1.0 - rho) * t
    i = np.arange(1, n + 1, dtype=float)
    log_terms = (
        gammaln(n) - gammaln(i) - gammaln(n - i + 1.0)
        + i * np.log(mu) - gammaln(i + 1.0)
    )
    if rho > 0.0:
        log_terms = log_terms + (n - i) * np.log(rho)
    else:
        log_terms = np.where(i == n, log_terms, -np.inf)
    return float(np.exp(-lam * t + logsumexp(log_terms)))


def negative_binomial_pmf(r, theta, t, n):
    """Negative binomial NB(r t, theta) pmf via log-gamma evaluation.

    Coincides with ``counting_pmf`` under a Logarithmic(theta) compounder
    run at intensity lam = -r log(1 - theta).
    """
    if not r > 0:
        raise ParameterError("r", "must be positive")
    if not 0.0 < theta < 1.0:
        raise ParameterError("theta", "must lie in (0, 1)")
    if not t > 0:
        raise ParameterError("t", "must be positive")
    if not (isinstance(n, (int, np.integer)) and n >= 0):
        raise ParameterError("n", "must be a nonnegative integer")
    rt = r * t
    logp = gammaln(n + rt) - gammaln(rt) - gammaln(n + 1.0) + rt * np.log1p(-theta) + n * np.log(theta)
    if not np.isfinite(logp):
        from .errors import EvaluationError

        raise EvaluationError(f"log-gamma evaluation overflowed for r*t={rt}, n={n}")
    return float(np.exp(logp))


# --------------------------------------------------------------------------
# compound claim distribution
# --------------------------------------------------------------------------

@dataclass
class CompoundClaimDistribution:
    """Per-arrival aggregate claim law F = sum_k p_k P^{*k}.

    Analytic claim kinds use the common-rate Erlang-mixture backend: the
    claim law is re-expressed as sum_j a_j Erlang(j, B), so P^{*k} and the
    compound both stay in the same family with exactly convolved
    coefficients.  EmpiricalDensity claims fall back to trapezoid
    convolution on a uniform grid.

    ``eps_f`` is the declared absolute error budget for cdf values;
    ``k_eff`` the retained number of convolution terms; the cached grid
    spans [0, z_max] where z_max covers all but 1e-9 of the mass unless
    the caller fixes it.
    """

    compounder: CountingCompounder
    claim: ClaimDistribution
    eps_f: float = 1e-10
    z_max: float | None = None
    grid_n: int = 4096
    k_eff: int = field(init=False)
    tail_beyond_k: float = field(init=False)

    def __post_init__(self):
        if not self.eps_f > 0:
            raise ParameterError("eps_f", "must be positive")
        # truncation targets carry a safety factor below the declared
        # budget: the neglected mass concentrates in the far tail, where
        # it would otherwise dominate the *relative* error of F-bar
        safety = 1e-4 * self.eps_f
        self.k_eff = self.compounder.truncation_k(safety / 2.0)
        self.tail_beyond_k = self.compounder.tail(self.k_eff)
        mix = self.claim.erlang_mixture(safety / (4.0 * self.k_eff))
        if mix is not None:
            self._init_mixture(mix, trim=safety / (8.0 * self.k_eff))
        else:
            self._init_grid()
        if self.z_max is None:
            self.z_max = self._solve_z_max()
        self._cache_grid()

    # -- mixture backend ----------------------------------------------------
    def _init_mixture(self, mix, trim):
        B, a = mix
        probs = self.compounder.pmf_array(self.k_eff)
        coeffs = np.zeros(1)
        conv = np.array([1.0])  # a^{*0} shifted: handled by explicit loop
        for k in range(1, self.k_eff + 1):
            conv = np.convolve(conv, a)
            # drop negligible trailing mass to keep arrays short
            tail_mass = np.cumsum(conv[::-1])[::-1]
            keep = np.searchsorted(-tail_mass, -trim)
            if keep < conv.size:
                conv = conv[: max(keep, 1)]
            if probs[k - 1] > 0:
                need = conv.size + k - 1
                if need > coeffs.size:
                    coeffs = np.pad(coeffs, (0, need - coeffs.size))
                coeffs[k - 1 : k - 1 + conv.size] += probs[k - 1] * conv
        self._backend = "mixture"
        self._B = B
        self._coeffs = coeffs  # coeffs[j-1] weights Erlang(j, B)
        self._j = np.arange(1, coeffs.size + 1, dtype=float)

    def _mixture_eval(self, z, kind):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.zeros_like(z)
        pos = z > 0
        if np.any(pos):
            zp = z[pos]
            vals = np.empty_like(zp)
            for start in range(0, zp.size, 256):
                blk = zp[start : start + 256]
                bz = self._B * blk[:, None]
                if kind == "cdf":
                    m = gammainc(self._j[None, :], bz)
                elif kind == "sf":
                    m = gammaincc(self._j[None, :], bz)
                else:  # pdf of Erlang(j, B)
                    with np.errstate(divide="ignore"):
                        logm = (
                            self._j[None, :] * np.log(self._B)
                            + (self._j[None, :] - 1.0) * np.log(blk[:, None])
                            - bz
                            - gammaln(self._j[None, :])
                        )
                    m = np.exp(logm)
                vals[start : start + 256] = m @ self._coeffs
            out[pos] = vals
        if kind == "sf":
            out[~pos] = 1.0
        return out

    # -- grid backend (empirical claims) -------------------------------------
    def _init_grid(self):
        self._backend = "grid"

    def _grid_build(self, z_hi):
        n = self.grid_n
        z = np.linspace(0.0, z_hi, n)
        dz = z[1] - z[0]
        base = self.claim.pdf(z)
        probs = self.compounder.pmf_array(self.k_eff)
        f = np.zeros(n)
        conv = None
        from scipy.signal import fftconvolve

        for k in range(1, self.k_eff + 1):
            if k == 1:
                conv = base.copy()
            else:
                conv = fftconvolve(conv, base)[:n] * dz
            if probs[k - 1] > 0:
                f += probs[k - 1] * conv
        F = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * dz)])
        return z, np.maximum(f, 0.0), np.minimum(F, 1.0)

    # -- shared ---------------------------------------------------------------
    def _solve_z_max(self):
        target = 1e-9
        hi = max(self.claim.mean() * max(self.k_eff, 4), 1.0)
        for _ in range(60):
            if self.sf_direct(hi) <= target:
                break
            hi *= 2.0
        return float(hi)

    def sf_direct(self, z):
        if self._backend == "mixture":
            return float(self._mixture_eval(z, "sf")[0])
        z_arr, f, F = self._grid_build(max(float(z) * 1.25, 1.0))
        return float(1.0 - np.interp(z, z_arr, F))

    def _cache_grid(self):
        if self._backend == "mixture":
            z = np.linspace(0.0, self.z_max, self.grid_n + 1)
            F = self._mixture_eval(z, "cdf")
            Fb = self._mixture_eval(z, "sf")
            f = self._mixture_eval(z, "pdf")
        else:
            z, f, F = self._grid_build(self.z_max)
            Fb = 1.0 - F
            # honest budget: trapezoid convolution limits attainable accuracy
            dz = z[1] - z[0]
            self.eps_f = max(self.eps_f, dz * dz)
        self.grid_z = z
        self.grid_cdf = F
        self.grid_sf = Fb
        self.grid_pdf = f

    def _check_range(self, z):
        if np.any(np.asarray(z) > self.z_max * (1.0 + 1e-12)):
            raise ExtrapolationError(
                f"z beyond cached z_max={self.z_max:g}; rebuild the compound with a larger z_max"
            )

    def _eval(self, z, kind):
        scalar = np.ndim(z) == 0
        self._check_range(z)
        if self._backend == "mixture":
            out = self._mixture_eval(z, kind)
        else:
            table = {"cdf": self.grid_cdf, "sf": self.grid_sf, "pdf": self.grid_pdf}[kind]
            out = np.atleast_1d(np.interp(z, self.grid_z, table))
        return float(out[0]) if scalar else out

    def cdf(self, z):
        return self._eval(z, "cdf")

    def sf(self, z):
        return self._eval(z, "sf")

    def pdf(self, z):
        return self._eval(z, "pdf")

    def quantile(self, p):
        p = float(p)
        if not 0.0 < p < 1.0:
            raise ParameterError("p", "quantile level must lie in (0,1)")
        lo, hi = 0.0, self.z_max
        if self.cdf(hi) < p:
            raise ExtrapolationError(f"quantile {p} beyond cached z_max={self.z_max:g}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.cdf(mid) < p:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def laplace_stieltjes(self, s):
        """Transform of F computed through the pgf composition."""
        return self.compounder.pgf(self.claim.laplace(s))


def compound_cdf(cc, z):
    """F(z) for a compound claim distribution, within its declared budget."""
    if np.any(np.asarray(z) < 0):
        raise ParameterError("z", "must be nonnegative")
    return cc.cdf(z)


def exp_claims_tail(compounder, rate, z, tol=_POISSON_TAIL):
    """Survival function of the compound when claims are Exponential(rate).

    Uses the interchanged double series: F-bar(z) = e^(-rate z)
    sum_j T_j (rate z)^j / j!, with T_j the bulk-count tail mass beyond j.
    Terms are added until the remaining Poisson-weighted tail drops below
    ``tol``.
    """
    if not rate > 0:
        raise ParameterError("rate", "must be positive")
    if z < 0:
        raise ParameterError("z", "must be nonnegative")
    if z == 0.0:
        return 1.0
    bz = rate * z
    log_term = -bz  # log of e^{-bz} (bz)^j / j! at j = 0
    acc = 0.0
    j = 0
    while True:
        tj = compounder.tail(j)
        if tj > 0:
            acc += tj * np.exp(log_term)
        j += 1
        log_term += np.log(bz) - np.log(j)
        if j > bz:
            # remaining Poisson mass bound via geometric ratio
            ratio = bz / (j + 1.0)
            bound = np.exp(log_term) / max(1.0 - ratio, 1e-6)
            if bound < tol or tj == 0.0:
                break
        if j > 1_000_000:
            break
    return float(min(acc, 1.0))
