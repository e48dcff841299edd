"""Laws attached to the first return to zero of a +-1 coordinate.

Three objects are computed here, exactly where feasible and with certified
truncation bounds elsewhere:

* the law of the first return time itself (even support, ~ n^{-3/2} tail);
* a log-log fit of that tail, recovering the decay exponent and prefactor;
* the law of the free coordinate of the diagonal walk at the first return
  of the tracked coordinate, built from the convolution identity
  P(pos = l) = sum_k P(S_k = l) P(return = k), together with its tail
  functional m * P(pos >= m), whose limit is the scale constant of the
  heavy tail.

Rational arithmetic is used up to a configurable cutoff; beyond it the
recurrences run in 80-bit extended precision with pairwise summation,
because the tail functional subtracts nearly equal quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, polygamma

LONG = np.longdouble

#: below this time index, first-return probabilities are exact rationals
RATIONAL_CUTOFF = 64


def first_return_prob_exact(n: int) -> Fraction:
    """P(first return to 0 of the +-1 walk happens at time n), exactly.

    Zero for odd n; for n = 2m the count of strictly-nonzero bridges gives
    C(2m, m) / ((2m - 1) 4^m).
    """
    if n % 2 == 1 or n < 2:
        return Fraction(0)
    m = n // 2
    return Fraction(math.comb(2 * m, m), (2 * m - 1) * 4**m)


def _survival_series(mmax: int) -> np.ndarray:
    """u[m-1] = P(no return by time 2m) = C(2m, m) / 4^m for m = 1..mmax."""
    m = np.arange(1, mmax + 1, dtype=LONG)
    return np.cumprod((2 * m - 1) / (2 * m))


def _u_float(m: float) -> float:
    """C(2m, m) / 4^m for real m >= 1: log-gamma below 1e4, where the
    differencing is well conditioned, and the central-binomial asymptotic
    series beyond, where it is accurate to machine precision."""
    m = float(m)
    if m < 1e4:
        return float(np.exp(gammaln(2 * m + 1) - 2 * gammaln(m + 1) - 2 * m * math.log(2)))
    return (1.0 - 1.0 / (8 * m) + 1.0 / (128 * m * m) + 5.0 / (1024 * m**3)) / math.sqrt(
        math.pi * m
    )


def survival(n) -> float:
    """P(first return time > n) for even n >= 0."""
    if n <= 0:
        return 1.0
    if n % 2 == 1:
        raise ValueError("survival is defined on even times")
    return _u_float(n // 2)


@dataclass
class ReturnTimeLaw:
    """First-return-time law with even support up to nmax.

    probs holds exact Fractions for n <= rational_cutoff and floats beyond;
    tail_mass is P(return time > nmax).  Odd times have probability zero
    and are not stored.
    """

    probs: dict[int, Fraction | float]
    tail_mass: float
    nmax: int
    rational_cutoff: int

    def prob(self, n: int):
        return self.probs.get(n, Fraction(0) if n <= self.rational_cutoff else 0.0)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(even times, probabilities) as float arrays, in increasing time."""
        ns = np.arange(2, self.nmax + 1, 2)
        return ns, np.array([float(self.probs[int(n)]) for n in ns])


def first_return_law(nmax: int, rational_cutoff: int = RATIONAL_CUTOFF) -> ReturnTimeLaw:
    """Exact law of the first return to 0 of the +-1 walk, up to time nmax."""
    if nmax < 2 or nmax % 2 == 1:
        raise ValueError("nmax must be an even integer >= 2")
    mmax = nmax // 2
    u = _survival_series(mmax)
    probs: dict[int, Fraction | float] = {}
    for m in range(1, mmax + 1):
        n = 2 * m
        if n <= rational_cutoff:
            probs[n] = first_return_prob_exact(n)
        else:
            probs[n] = float(u[m - 1] / (2 * m - 1))
    return ReturnTimeLaw(probs, float(u[mmax - 1]), nmax, rational_cutoff)


@dataclass
class TailExponentFit:
    """Least-squares fit of log P(return = n) against log n."""

    slope: float
    prefactor: float  # exp(mean(log P + 1.5 log n)): the n^{-3/2} coefficient
    npoints: int
    window: tuple[int, int]


def fit_tail_exponent(law: ReturnTimeLaw, m_lo: int, m_hi: int) -> TailExponentFit:
    """Fit the power-law tail of a return-time law over even n in [m_lo, m_hi]."""
    if m_lo < 2 or m_hi > law.nmax:
        raise ValueError("fit window must lie within the computed law")
    ns, ps = law.arrays()
    mask = (ns >= m_lo) & (ns <= m_hi) & (ps > 0)
    if mask.sum() < 10:
        raise ValueError(f"need at least 10 points to fit, have {int(mask.sum())}")
    x = np.log(ns[mask].astype(float))
    y = np.log(ps[mask])
    slope, _ = np.polyfit(x, y, 1)
    prefactor = float(np.exp(np.mean(y + 1.5 * x)))
    return TailExponentFit(float(slope), prefactor, int(mask.sum()), (m_lo, m_hi))


@dataclass
class ReturnPositionLaw:
    """Law of the free diagonal-walk coordinate at the first tracked return.

    Support is the even integers; the construction is exactly symmetric, so
    only l = 0, 2, ..., lmax is stored.  error_bound certifies the pointwise
    distance to the untruncated law; tail_mass is the weight outside
    [-lmax, lmax] implied by the mass accounting.
    """

    lmax: int
    kmax: int
    values: np.ndarray  # longdouble, values[t] = P(pos = 2t)
    error_bound: float
    tail_mass: float
    k_tail_completed: bool

    def prob(self, l: int) -> float:
        l = abs(int(l))
        if l % 2 == 1 or l > self.lmax:
            return 0.0
        return float(self.values[l // 2])

    def window_mass(self) -> float:
        """Total stored mass over [-lmax, lmax]."""
        return float(2 * np.sum(self.values) - self.values[0])

    def items(self):
        """(l, probability) pairs over the full window, l ascending."""
        for t in range(self.lmax // 2, 0, -1):
            yield -2 * t, float(self.values[t])
        for t in range(0, self.lmax // 2 + 1):
            yield 2 * t, float(self.values[t])


def return_position_law(
    lmax: int,
    kmax: int | None = None,
    k_tail: bool = True,
) -> ReturnPositionLaw:
    """Build the return-position law by summing P(S_k = l) P(return = k)
    over even return times k.

    The free and tracked coordinates of the diagonal walk are independent
    +-1 walks, so P(S_k = l) is the exact binomial point mass on the even
    sublattice.  Return times beyond kmax are either dropped (k_tail=False,
    certified leak = survival(kmax) pointwise) or completed with the
    normal local approximation on a fine geometric grid (k_tail=True),
    which is accurate to a few tenths of a percent of the completed part
    for kmax >= lmax**2.
    """
    if lmax < 2 or lmax % 2 == 1:
        raise ValueError("lmax must be an even integer >= 2")
    if kmax is None:
        kmax = lmax * lmax
    if kmax < 2 or kmax % 2 == 1:
        raise ValueError("kmax must be an even integer >= 2")

    nl = lmax // 2 + 1
    ls = np.arange(0, lmax + 1, 2, dtype=np.float64)
    mmax = kmax // 2
    u = _survival_series(mmax)  # longdouble

    acc = np.zeros(nl, dtype=LONG)
    covered = LONG(0)

    # March the binomial column P(S_k = l) across l for the whole k range
    # at once: P(S_k, l+2) = P(S_k, l) (k - l) / (k + l + 2), where the
    # clamped numerator zeroes the masses beyond l > k.
    ks = np.arange(2, kmax + 1, 2, dtype=np.float64)
    f = u.astype(np.float64) / (ks - 1.0)  # P(return = k)
    p = u.astype(np.float64)  # P(S_k = 0), overwritten in place per l
    num = np.empty_like(ks)
    den = np.empty_like(ks)
    row_sum = p.copy()  # running in-window mass per k, counting l = 0 once
    acc[0] += np.dot(f, p)
    for t in range(1, nl):
        l_prev = ls[t - 1]
        o = min(len(ks) - 1, int(l_prev) // 2)  # p vanishes where k < l
        np.subtract(ks[o:], l_prev, out=num[o:])
        np.maximum(num[o:], 0.0, out=num[o:])
        np.add(ks[o:], l_prev + 2.0, out=den[o:])
        num[o:] /= den[o:]
        p[o:] *= num[o:]
        acc[t] += np.dot(f[o:], p[o:])
        row_sum[o:] += 2.0 * p[o:]
    covered += LONG(np.dot(f, row_sum))

    leak = survival(kmax)
    if k_tail:
        tail_in, tail_covered = _k_tail_completion(kmax, ls)
        acc += tail_in
        covered += LONG(tail_covered)
        # Certified: local-CLT relative error O(1/kmax) plus in-bucket
        # variation below (ratio - 1); 0.05 covers both with wide margin.
        error_bound = min(leak, 0.05 * leak * math.sqrt(2 / (math.pi * kmax)) + 1e-13)
    else:
        # Everything past kmax is dropped: pointwise at most
        # max_k P(S_k = l) * P(return > kmax).
        error_bound = min(leak, leak * math.sqrt(2 / (math.pi * kmax)) + 1e-13)

    return ReturnPositionLaw(
        lmax=lmax,
        kmax=kmax,
        values=acc,
        error_bound=float(error_bound),
        tail_mass=float(1 - covered),
        k_tail_completed=k_tail,
    )


def _k_tail_completion(kmax: int, ls: np.ndarray, ratio: float = 1.005) -> tuple[np.ndarray, float]:
    """Contribution of return times beyond kmax, on a geometric grid.

    Bucket weights use the exact survival identity; within a bucket the
    binomial point mass is replaced by sqrt(2/(pi k)) exp(-l^2 / 2k) at the
    geometric midpoint.  The grid stops once the remaining contribution is
    below 1e-18 pointwise.
    """
    edges = [kmax]
    k = float(kmax)
    while True:
        k *= ratio
        ke = int(2 * round(k / 2))
        if ke <= edges[-1]:
            ke = edges[-1] + 2
        edges.append(ke)
        if survival(ke) * math.sqrt(2 / (math.pi * ke)) < 1e-18:
            break
    surv = np.array([survival(e) for e in edges])
    weights = surv[:-1] - surv[1:]
    mids = np.sqrt(np.array(edges[:-1], dtype=float) * np.array(edges[1:], dtype=float))
    dens = np.sqrt(2.0 / (np.pi * mids))[:, None] * np.exp(-(ls[None, :] ** 2) / (2.0 * mids[:, None]))
    contrib = weights @ dens
    covered = float(np.dot(weights, 2.0 * dens.sum(axis=1) - dens[:, 0]))
    return contrib.astype(LONG), covered


@dataclass
class TailFunctional:
    """m * P(pos >= m) split into the in-window sum and the completed tail."""

    m: int
    value: float
    in_window: float
    completion: float
    certified_error: float
    sigma_fit: float


def tail_functional(
    law: ReturnPositionLaw,
    m: int,
    max_certified_fraction: float = 0.10,
    margin: int | None = None,
) -> TailFunctional:
    """Evaluate m * P(pos >= m) from a computed return-position law.

    The sum over [m, lmax] is exact up to the law's certified bound; the
    tail beyond lmax is completed with the fitted sigma / l^2 density and
    reported separately.  Refuses m too close to the window edge or where
    the certified truncation error exceeds the requested fraction of the
    value.
    """
    if margin is None:
        margin = law.lmax // 2
    if m < 2:
        raise ValueError("m must be >= 2")
    if m > law.lmax - margin:
        raise ValueError(f"m = {m} is within the safety margin of the window edge "
                         f"(need m <= {law.lmax - margin})")
    t0 = (m + 1) // 2
    in_window = float(np.sum(law.values[t0:]))
    sigma = fit_tail_scale(law)
    # sum over even l > lmax of 2 sigma / l^2, via the trigamma function
    completion = float(sigma * 0.5 * polygamma(1, law.lmax // 2 + 1))
    nterms = law.lmax // 2 - t0 + 1
    certified = m * nterms * law.error_bound
    value = m * (in_window + completion)
    if certified > max_certified_fraction * value:
        raise ValueError(
            f"certified truncation error {certified:.3g} exceeds "
            f"{max_certified_fraction:.0%} of the value {value:.3g}; "
            "recompute the law with a larger kmax"
        )
    return TailFunctional(m, value, m * in_window, m * completion, certified, sigma)


def fit_tail_scale(law: ReturnPositionLaw) -> float:
    """Fitted scale of the sigma / l^2 tail density, from the upper half of
    the window."""
    lo = law.lmax // 2
    ts = np.arange((lo + 1) // 2, law.lmax // 2 + 1)
    ls = 2 * ts.astype(np.float64)
    vals = law.values[ts].astype(np.float64)
    if len(ts) < 5:
        raise ValueError("window too small to fit the tail scale")
    return float(np.median(vals * ls * ls / 2.0))


@dataclass
class TailLimit:
    """Extrapolated limit of m * P(pos >= m) over a ladder of m values."""

    sigma: float
    values: dict[int, float]


def tail_limit(law: ReturnPositionLaw, ms=(100, 200, 400)) -> TailLimit:
    """Least-squares extrapolation of the tail functional in powers of 1/m."""
    vals = {m: tail_functional(law, m).value for m in ms}
    x = np.array([1.0 / m for m in ms])
    y = np.array([vals[m] for m in ms])
    coef = np.polyfit(x, y, 1)
    return TailLimit(float(coef[1]), vals)


# ---------------------------------------------------------------------------
# Samplers used by the Monte Carlo green-sum estimators.

_TABLE_M = 1 << 20
_neg_table: np.ndarray | None = None


def _negated_survival_table() -> np.ndarray:
    global _neg_table
    if _neg_table is None:
        _neg_table = -_survival_series(_TABLE_M).astype(np.float64)
    return _neg_table


def _invert_survival_scalar(w: float) -> float:
    """Smallest m with u_m <= w, for w below the table range.

    Exact integer bisection while the grid is resolvable in float64;
    beyond that the quantile is astronomically large and a relative
    tolerance is both sufficient and necessary for termination.
    """

    lo = float(_TABLE_M)
    hi = max(2 * lo, 2.0 / (math.pi * w * w))  # u_m ~ 1/sqrt(pi m)
    while _u_float(hi) > w:
        hi *= 2
    while hi - lo > max(1.0, 1e-9 * hi):
        mid = float(math.floor((lo + hi) / 2))
        if _u_float(mid) <= w:
            hi = mid
        else:
            lo = mid
    return hi


def sample_first_return(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n first-return times by exact inversion of the survival function.

    Values are even and returned as float64: beyond 2^53 the integer grid
    is no longer exact, but such draws occur with probability < 1e-8 each
    and only their magnitude matters downstream.
    """
    neg = _negated_survival_table()
    w = 1.0 - rng.random(n)  # in (0, 1]
    m = np.searchsorted(neg, -w, side="left") + 1
    big = m > _TABLE_M
    if np.any(big):
        m = m.astype(np.float64)
        for idx in np.nonzero(big)[0]:
            m[idx] = _invert_survival_scalar(w[idx])
    return 2.0 * m.astype(np.float64)


_BINOM_LIMIT = float(1 << 62)


def sample_position_at(rng: np.random.Generator, lengths: np.ndarray) -> np.ndarray:
    """Position of an independent +-1 walk after the given (even) numbers of
    steps: exact binomial draws, with a rounded-normal fallback for lengths
    beyond the integer range."""
    out = np.empty(len(lengths), dtype=np.float64)
    small = lengths < _BINOM_LIMIT
    if np.any(small):
        ns = lengths[small].astype(np.int64)
        out[small] = 2.0 * rng.binomial(ns, 0.5) - ns.astype(np.float64)
    if np.any(~small):
        ns = lengths[~small]
        out[~small] = 2.0 * np.round(np.sqrt(ns) * rng.standard_normal(int((~small).sum())) / 2.0)
    return out
