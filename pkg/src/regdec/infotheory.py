"""Scalar information-theoretic kernel.

Entropies, Kullback-Leibler divergences, rate functions and Rissanen's
universal integer code length.  Everything is measured in nats; divide by
``LN2`` (or call :func:`to_bits`) to get bits.

The functions accept Python scalars; the entropy and divergence functions
also broadcast over numpy arrays, which the code-length module relies on.
"""
from __future__ import annotations

import math
from decimal import Decimal, localcontext

import numpy as np
from scipy.special import gammaln, xlogy

LN2 = math.log(2.0)


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


def to_bits(nats):
    return np.asarray(nats, dtype=float) / LN2 if np.ndim(nats) else float(nats) / LN2


def _as_float(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


def _check_prob(name, arr):
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")


def binary_entropy(p):
    """H(p) = -p ln p - (1-p) ln(1-p), with 0 ln 0 = 0."""
    arr, scalar = _as_float(p)
    _check_prob("p", arr)
    h = -xlogy(arr, arr) - xlogy(1.0 - arr, 1.0 - arr)
    return _out(np.maximum(h, 0.0), scalar)


def partition_entropy(block_sizes) -> float:
    """Shannon entropy of the block-size distribution of a partition."""
    sizes = np.asarray(block_sizes, dtype=float).ravel()
    if sizes.size == 0:
        raise DomainError("partition_entropy needs at least one block")
    if np.any(sizes < 1):
        raise DomainError("block sizes must be positive")
    frac = sizes / sizes.sum()
    return float(max(-np.sum(xlogy(frac, frac)), 0.0))


def _bd0(x, m):
    """x ln(x/m) + m - x >= 0 without cancellation when x is close to m.

    Near x = m the series in v = (x-m)/(x+m) is summed instead (Loader's
    deviance term), so the result keeps full relative precision.
    """
    x, m = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(m, dtype=float))
    out = np.empty(x.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        far = xlogy(x, x) - xlogy(x, m) + m - x
        d = x - m
        near = np.abs(d) < 0.1 * (x + m)
        v = np.where(near, d / np.where(near, x + m, 1.0), 0.0)
        series = d * v
        term = 2.0 * x * v
        v2 = v * v
        for j in range(1, 13):
            term = term * v2
            series = series + term / (2 * j + 1)
    out[...] = np.where(near, series, far)
    out[(x == 0.0)] = m[(x == 0.0)]
    return out


def _bd0_scalar(x: float, m: float) -> float:
    if x == 0.0:
        return m
    if m == 0.0:
        return math.inf
    d = x - m
    if abs(d) >= 0.1 * (x + m):
        return x * math.log(x / m) + m - x
    v = d / (x + m)
    series, term, v2 = d * v, 2.0 * x * v, v * v
    for j in range(1, 13):
        term *= v2
        series += term / (2 * j + 1)
    return series


def bernoulli_kl(q, p):
    """I(q:p), the divergence of Bernoulli(q) from Bernoulli(p).

    Written as bd0(q, p) + bd0(1-q, 1-p), a sum of two non-negative terms,
    so it stays accurate relative to its size even for q very close to p.
    Returns ``inf`` when q puts mass where p has none.
    """
    if isinstance(q, (int, float)) and isinstance(p, (int, float)):
        if not (0.0 <= q <= 1.0 and 0.0 <= p <= 1.0):
            raise DomainError("q and p must lie in [0, 1]")
        return max(_bd0_scalar(q, p) + _bd0_scalar(1.0 - q, 1.0 - p), 0.0)
    q_arr, q_scalar = _as_float(q)
    p_arr, p_scalar = _as_float(p)
    _check_prob("q", q_arr)
    _check_prob("p", p_arr)
    val = _bd0(q_arr, p_arr) + _bd0(1.0 - q_arr, 1.0 - p_arr)
    val = np.maximum(val, 0.0)
    return _out(val, q_scalar and p_scalar)


def _poisson_entropy_scalar(a: float) -> float:
    if a == 0.0:
        return 0.0
    la = math.log(a)
    spread = math.sqrt(a + 1.0)
    k_stop = a + 10.0 * spread
    # terms below a - 40 sqrt(a+1) underflow to exactly zero; skip them
    k = max(0, int(math.floor(a - 40.0 * spread)))
    chunk = int(k_stop - k) + 64
    partial = 0.0
    while True:
        ks = np.arange(k, k + chunk, dtype=float)
        # -ln pmf(k) = a - k ln a + ln k!; summing pmf * (-ln pmf) term by term
        # avoids the cancellation in a - a ln a + sum pmf ln k! for large a
        nlp = a - ks * la + gammaln(ks + 1.0)
        terms = np.exp(-nlp) * nlp
        sums = partial + np.cumsum(terms)
        done = (terms < 1e-15 * (sums + 1.0)) & (ks > k_stop)
        hit = np.flatnonzero(done)
        if hit.size:
            partial = float(sums[hit[0]])
            break
        partial = float(sums[-1])
        k += chunk
    return max(partial, 0.0)


def poisson_entropy(a):
    """Entropy H_P(a) of the Poisson(a) distribution.

    Equals a - a ln a + e^{-a} sum_k a^k/k! ln k!.  The series is summed in
    the regrouped form sum_k pmf(k) (a - k ln a + ln k!) until the added term
    drops below 1e-15 * (partial sum + 1) beyond a + 10 sqrt(a+1).
    """
    arr, scalar = _as_float(a)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0):
        raise DomainError("Poisson rate must be a finite non-negative number")
    if scalar:
        return _poisson_entropy_scalar(float(arr))
    uniq, inv = np.unique(arr, return_inverse=True)
    vals = np.array([_poisson_entropy_scalar(float(u)) for u in uniq])
    return vals[inv].reshape(arr.shape)


def poisson_kl(b, a):
    """I_P(b:a) = a - b + b ln b - b ln a (divergence of Poisson(b) from Poisson(a))."""
    b_arr, b_scalar = _as_float(b)
    a_arr, a_scalar = _as_float(a)
    if np.any(b_arr < 0.0) or np.any(a_arr < 0.0):
        raise DomainError("Poisson rates must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore"):
        val = a_arr - b_arr + xlogy(b_arr, b_arr) - xlogy(b_arr, a_arr)
    val = np.maximum(val, 0.0)
    return _out(val, b_scalar and a_scalar)


def log_star(m, log_domain: bool = False) -> float:
    """Rissanen's universal code length l*(m) in nats.

    Sums the positive iterates ln m, ln ln m, ... .  With ``log_domain=True``
    the argument is y = ln m itself, which is how code lengths of integers
    with thousands of digits are evaluated.
    """
    if log_domain:
        t = float(m)
        if not math.isfinite(t) or t < 0.0:
            raise DomainError("log-domain argument must be a finite ln m >= 0")
    else:
        if isinstance(m, (int, np.integer)):
            if m < 1:
                raise DomainError("l* is defined for integers m >= 1")
            t = math.log(int(m))
        else:
            m = float(m)
            if not math.isfinite(m) or m < 1.0:
                raise DomainError("l* is defined for m >= 1")
            t = math.log(m)
    total = 0.0
    while t > 0.0:
        total += t
        t = math.log(t)
    return total


def hypergeometric_rate(n: int, m: int, z: int, x: float) -> float:
    """Rate function of Hypergeometric(n, m, z) evaluated at x."""
    if not 0 < m < n:
        raise DomainError("need 0 < m < n")
    if not 0 <= z <= n:
        raise DomainError("need 0 <= z <= n")
    if x < 0 or x > min(m, z) or z - x > n - m:
        raise DomainError("x is outside the support of the hypergeometric law")
    p = z / n
    return (m * bernoulli_kl(x / m, p)
            + (n - m) * bernoulli_kl((z - x) / (n - m), p))


def _weighted_kl(weight, q, p):
    # weight * I(q:p) with the convention 0 * anything = 0
    if weight == 0:
        return 0.0
    return weight * bernoulli_kl(q, p)


def _n_kl_decimal(count: int, size: int, p: Decimal) -> Decimal:
    # size * I(count/size : p), exactly rational inside the logarithms
    out = Decimal(0)
    if count:
        out += count * (Decimal(count) / (size * p)).ln()
    if size - count:
        out += (size - count) * (Decimal(size - count) / (size * (1 - p))).ln()
    return out


def _pooled_split(n1, n2, x1, x2, p) -> float:
    # The pooled form subtracts terms of order n from each other to leave a
    # result that can be 1e-10 of them, so it is evaluated in 36-digit decimal.
    with localcontext() as ctx:
        ctx.prec = 36
        P = Decimal(p)
        val = (_n_kl_decimal(x1, n1, P) + _n_kl_decimal(x2, n2, P)
               - _n_kl_decimal(x1 + x2, n1 + n2, P))
        # below the rounding floor of the 36-digit sums the value is zero
        floor = Decimal(10) ** -28 * (n1 + n2)
        return 0.0 if abs(val) < floor else float(val)


def binomial_information_split(n1: int, n2: int, x1: int, x2: int, p: float):
    """Three equal forms of the information lost when pooling two binomial samples.

    Returns ``(pooled, conditional_on_total, hypergeometric_form)``:

    * ``n1 I(x1/n1 : p) + n2 I(x2/n2 : p) - n I(x/n : p)``
    * ``x I(x1/x : n1/n) + (n-x) I((n1-x1)/(n-x) : n1/n)``
    * ``n1 I(x1/n1 : x/n) + n2 I((x-x1)/n2 : x/n)``

    with n = n1 + n2 and x = x1 + x2.  Only the first depends on p; it is
    a difference of large terms and is computed in extended precision.
    """
    if n1 < 1 or n2 < 1:
        raise DomainError("sample sizes must be positive")
    if not (0 <= x1 <= n1 and 0 <= x2 <= n2):
        raise DomainError("counts must lie in [0, n_i]")
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    n = n1 + n2
    x = x1 + x2
    pooled = _pooled_split(n1, n2, x1, x2, p)
    share = n1 / n
    conditional = (_weighted_kl(x, x1 / x if x else 0.0, share)
                   + _weighted_kl(n - x, (n1 - x1) / (n - x) if n - x else 0.0, share))
    pbar = x / n
    hyper = n1 * bernoulli_kl(x1 / n1, pbar) + n2 * bernoulli_kl((x - x1) / n2, pbar)
    # all three are sums of divergences; clip rounding below zero
    return max(float(pooled), 0.0), max(float(conditional), 0.0), max(float(hyper), 0.0)


def entropy_gap(q: float, p: float) -> float:
    """(H(p) + H'(p)(q - p)) - H(q): how far H sits below its tangent at p.

    By concavity this is non-negative, and it equals I(q:p).
    """
    if not 0.0 < p < 1.0:
        raise DomainError("the tangent point p must lie in (0, 1)")
    if not 0.0 <= q <= 1.0:
        raise DomainError("q must lie in [0, 1]")
    slope = math.log((1.0 - p) / p)
    gap = binary_entropy(p) + slope * (q - p) - binary_entropy(q)
    return max(gap, 0.0)
