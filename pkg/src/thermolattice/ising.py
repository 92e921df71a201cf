"""Exact combinatorics for non-interacting spins in a sharp energy window.

For on-site energy levels E_0 = 0 < E_1 < ... the microcanonical subspace of
n sites at energy density in [u - delta, u] is spanned by product states
grouped into occupation classes (count vectors over the levels). Everything
here works at the level of those classes, with exact big-integer or Fraction
arithmetic where it is cheap and log-space floats where it is not.

The qubit case (levels (0, 1)) admits closed-form marginals Q_k indexed by the
number of excited sites among m observed ones, and the module implements the
finite-size comparisons of that marginal against the matching i.i.d. product:
de Finetti distance, relative entropy with its explicit bound, and a fully
explicit trace-distance bound with checkable preconditions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

from .ensembles import EmptyWindowError

FUZZ = 1e-9
EXACT_N_MAX = 256          # switch Q_k to log-space floats above this
CLASS_CAP = 10 ** 7        # refuse blind enumerations beyond this many classes


@dataclass(frozen=True)
class LevelSpec:
    """Strictly increasing on-site energies, shifted so the lowest is 0."""

    energies: tuple[float, ...]

    def __post_init__(self):
        e = tuple(float(x) for x in self.energies)
        if len(e) < 2:
            raise ValueError("need at least two levels")
        if any(b <= a for a, b in zip(e, e[1:])):
            raise ValueError("energies must be strictly increasing")
        object.__setattr__(self, "energies", tuple(x - e[0] for x in e))

    @property
    def d(self) -> int:
        return len(self.energies)

    @property
    def is_integer(self) -> bool:
        return all(abs(x - round(x)) <= FUZZ for x in self.energies)


# -- occupation classes -------------------------------------------------------

def iter_count_vectors(n: int, levels: LevelSpec, u: float, delta: float,
                       cap: int = CLASS_CAP):
    """Yield count vectors k (len d, sum n) with energy density in [u-delta, u]."""
    E = levels.energies
    d = levels.d
    lo = n * (u - delta) - FUZZ * max(1.0, abs(n * u))
    hi = n * u + FUZZ * max(1.0, abs(n * u))
    yielded = 0

    def rec(prefix, remaining, acc):
        nonlocal yielded
        i = len(prefix)
        if i == d - 1:
            total = acc + remaining * E[-1]
            if lo <= total <= hi:
                yielded += 1
                if yielded > cap:
                    raise RuntimeError(f"more than {cap} occupation classes")
                yield prefix + (remaining,)
            return
        for k in range(remaining + 1):
            rest = remaining - k
            acc2 = acc + k * E[i]
            if acc2 + rest * E[-1] < lo:
                break      # even the priciest completion falls short of the window
            if acc2 + rest * E[i + 1] > hi:
                continue   # cheapest completion too hot; more sites at level i cool it
            yield from rec(prefix + (k,), rest, acc2)

    yield from rec((), n, 0.0)


def _multinomial(n: int, counts) -> int:
    out, rem = 1, n
    for c in counts:
        out *= math.comb(rem, c)
        rem -= c
    return out


def microcanonical_dim(n: int, levels: LevelSpec, u: float, delta: float) -> int:
    """Exact dimension of the energy-density window subspace."""
    if levels.d == 2 and abs(levels.energies[1] - 1.0) <= FUZZ:
        lmin, lmax = _ell_range(n, u, delta)
        return sum(math.comb(n, l) for l in range(lmin, lmax + 1))
    total = 0
    for k in iter_count_vectors(n, levels, u, delta):
        total += _multinomial(n, k)
    if total == 0:
        raise EmptyWindowError(f"window [{u - delta}, {u}] is empty at n={n}")
    return total


# -- qubit weight-class machinery ---------------------------------------------

def _ell_range(n: int, u: float, delta: float) -> tuple[int, int]:
    if delta < 0 or not 0 < u:
        raise ValueError("need delta >= 0 and u > 0")
    lmin = max(0, math.ceil(n * (u - delta) - FUZZ))
    lmax = min(n, math.floor(n * u + FUZZ))
    if lmin > lmax:
        raise EmptyWindowError(f"no excitation count in [{n * (u - delta)}, {n * u}]")
    return lmin, lmax


def qubit_weight_marginal(n: int, m: int, u: float, delta: float):
    """Probabilities Q_k that m fixed sites show exactly k excitations, k=0..m.

    These are probabilities of one *specific* string with k ones; the count of
    such strings, binom(m, k), is not included. Exact Fractions up to
    EXACT_N_MAX sites, log-space floats beyond.
    """
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    lmin, lmax = _ell_range(n, u, delta)
    if n <= EXACT_N_MAX:
        dim = sum(math.comb(n, l) for l in range(lmin, lmax + 1))
        return [
            Fraction(sum(math.comb(n - m, l - k)
                         for l in range(max(lmin, k), lmax + 1)), dim)
            for k in range(m + 1)
        ]
    ls = np.arange(lmin, lmax + 1, dtype=float)
    logdim = logsumexp(gammaln(n + 1) - gammaln(ls + 1) - gammaln(n - ls + 1))
    out = []
    for k in range(m + 1):
        valid = ls[(ls >= k) & (n - m - ls + k >= 0)]
        if valid.size == 0:
            out.append(0.0)
            continue
        lw = gammaln(n - m + 1) - gammaln(valid - k + 1) - gammaln(n - m - valid + k + 1)
        out.append(float(np.exp(logsumexp(lw) - logdim)))
    return out


def definetti_check(n: int, m: int, u) -> tuple[float, float]:
    """Exact distance of the m-site window marginal from the matching product.

    Needs an exactly representable excitation count n*u; the product uses the
    snapped density. Returns (trace distance, explicit bound 4m/n).
    """
    ell = round(n * float(u))
    if abs(n * float(u) - ell) > FUZZ:
        raise ValueError(f"n*u = {n * float(u)} is not an integer excitation count")
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    ue = Fraction(ell, n)
    qs = qubit_weight_marginal(n, m, float(ue), 0.0)
    dist = Fraction(0)
    for k in range(m + 1):
        pk = ue ** k * (1 - ue) ** (m - k)
        dist += math.comb(m, k) * abs(pk - qs[k])
    return float(dist), 4.0 * m / n


def relent_check(n: int, m: int, u: float, delta: float) -> tuple[float, float]:
    """Relative entropy of the product state from the window marginal, with bound.

    Preconditions 0 <= delta < u <= 1/2 and m <= n(u - delta) are enforced;
    the bound is (1-d)u/(u-d) * m/(n-m) + mud/(u-d) * (1 + m/(n-m)).
    """
    if not (0 <= delta < u <= 0.5):
        raise ValueError("need 0 <= delta < u <= 1/2")
    if not 1 <= m <= n * (u - delta) + FUZZ:
        raise ValueError(f"subsystem {m} exceeds n(u - delta) = {n * (u - delta)}")
    qs = [float(q) for q in qubit_weight_marginal(n, m, u, delta)]
    rel = 0.0
    for k in range(m + 1):
        pk = u ** k * (1.0 - u) ** (m - k)
        if pk == 0.0:
            continue
        if qs[k] <= 0.0:
            return math.inf, _relent_bound(n, m, u, delta)
        rel += math.comb(m, k) * pk * (math.log(pk) - math.log(qs[k]))
    return rel, _relent_bound(n, m, u, delta)


def _relent_bound(n: int, m: int, u: float, delta: float) -> float:
    ratio = m / (n - m)
    return (1.0 - delta) * u / (u - delta) * ratio \
        + m * u * delta / (u - delta) * (1.0 + ratio)


def pinsker_distance_bound(n: int, m: int) -> float:
    """Trace-distance bound sqrt(m / (2(n-m))) for the sharp window."""
    return math.sqrt(0.5 * m / (n - m))


@dataclass(frozen=True)
class FiniteSizeResult:
    distance: float
    bound: float
    preconditions_met: bool


def finitesize_check(n: int, m: int, u: float, delta: float) -> FiniteSizeResult:
    """Distance of the m-site marginal from the product, with the explicit bound.

    The bound 2 delta/(n sqrt(u)) + sqrt(m/(n-m) (1 + 4 log n / log((1-u)/u)))
    is valid when 5 <= m <= n(u-delta), 0 <= delta < u < 1/2 and
    (20/m) log(m/u) <= log((1-u)/u); both quantities are always computed and
    the flag records whether the preconditions hold.
    """
    if not (0 <= delta < u < 1):
        raise ValueError("need 0 <= delta < u < 1")
    qs = [float(q) for q in qubit_weight_marginal(n, m, u, delta)]
    dist = 0.0
    for k in range(m + 1):
        pk = u ** k * (1.0 - u) ** (m - k)
        dist += math.comb(m, k) * abs(pk - qs[k])
    log_odds = math.log((1.0 - u) / u) if u < 0.5 else math.nan
    met = (
        u < 0.5
        and 5 <= m <= n * (u - delta) + FUZZ
        and (20.0 / m) * math.log(m / u) <= log_odds + FUZZ
    )
    bound = math.nan
    if u < 0.5:
        bound = 2.0 * delta / (n * math.sqrt(u)) \
            + math.sqrt(m / (n - m) * (1.0 + 4.0 * math.log(n) / log_odds))
    return FiniteSizeResult(dist, bound, bool(met))


# -- general levels: Gibbs occupations and marginal distances -----------------

def gibbs_occupations(levels: LevelSpec, u: float) -> tuple[float, np.ndarray]:
    """(beta, single-site Gibbs weights) with mean energy u; bisected to machine
    precision on the strictly decreasing beta -> mean-energy curve."""
    E = np.array(levels.energies)
    mean0 = float(E.mean())

    def mean_at(beta: float) -> float:
        w = np.exp(-beta * E)
        return float((E * w).sum() / w.sum())

    if u <= 0.0:
        raise ValueError("target density must exceed the ground level 0")
    if u > mean0 + FUZZ:
        raise ValueError(f"density {u} above the infinite-temperature value {mean0}")
    if abs(u - mean0) <= 1e-15:
        w = np.ones_like(E)
        return 0.0, w / w.sum()
    lo, hi = 0.0, 64.0
    while mean_at(hi) > u:
        hi *= 2.0
        if hi > 2.0 ** 16:
            raise ValueError(f"density {u} not reachable at finite temperature")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean_at(mid) > u:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    beta = 0.5 * (lo + hi)
    w = np.exp(-beta * E)
    return beta, w / w.sum()


def _sharp_classes_integer(n: int, levels: LevelSpec, u: float) -> np.ndarray | None:
    """Count vectors at exact total energy n*u for integer levels; None if n*u
    is not an integer. Vectorized for three levels, recursive otherwise."""
    E = [round(x) for x in levels.energies]
    t = n * u
    target = round(t)
    if abs(t - target) > FUZZ * max(1.0, abs(t)):
        return np.empty((0, levels.d), dtype=np.int64)
    if levels.d == 2:
        if target % E[1] == 0 and 0 <= target // E[1] <= n:
            k1 = target // E[1]
            return np.array([[n - k1, k1]], dtype=np.int64)
        return np.empty((0, 2), dtype=np.int64)
    if levels.d == 3:
        k2 = np.arange(0, min(n, target // E[2]) + 1, dtype=np.int64)
        rem = target - E[2] * k2
        ok = rem % E[1] == 0
        k1 = np.where(ok, rem // E[1], -1)
        ok &= (k1 >= 0) & (k1 + k2 <= n)
        k1, k2 = k1[ok], k2[ok]
        return np.stack([n - k1 - k2, k1, k2], axis=1)
    rows = [list(k) for k in iter_count_vectors(n, levels, u, 0.0)]
    return np.array(rows, dtype=np.int64).reshape(len(rows), levels.d)


def marginal_distance_to_product(n: int, m: int, levels: LevelSpec,
                                 u: float) -> float:
    """Trace distance between the m-site marginal of the sharp-window mixture
    and the matching single-site Gibbs product, in log-space floats."""
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    if not levels.is_integer:
        raise ValueError("fast marginal path requires integer levels")
    classes = _sharp_classes_integer(n, levels, u)
    if classes.shape[0] == 0:
        raise EmptyWindowError(f"no occupation class at density {u} for n={n}")
    _, g = gibbs_occupations(levels, u)
    logg = np.log(g)
    kf = classes.astype(float)
    log_mult_n = gammaln(n + 1) - gammaln(kf + 1).sum(axis=1)
    logdim = float(logsumexp(log_mult_n))
    dist = 0.0
    for j in itertools.product(*(range(m + 1) for _ in range(levels.d))):
        if sum(j) != m:
            continue
        ja = np.array(j, dtype=float)
        diff = kf - ja
        valid = (diff >= -0.5).all(axis=1)
        if valid.any():
            lw = gammaln(n - m + 1) - gammaln(diff[valid] + 1).sum(axis=1)
            logq = float(logsumexp(lw)) - logdim
            q = math.exp(logq)
        else:
            q = 0.0
        p = math.exp(float(ja @ logg))
        mult = math.exp(float(gammaln(m + 1) - gammaln(ja + 1).sum()))
        dist += mult * abs(q - p)
    return dist


def exact_marginal(n: int, m: int, levels: LevelSpec, u: float,
                   delta: float) -> np.ndarray:
    """Exact window-marginal probabilities over all d^m product strings."""
    if levels.d ** m > 2 ** 12:
        raise ValueError("string space too large for exact enumeration")
    dim = 0
    classes = []
    for k in iter_count_vectors(n, levels, u, delta):
        classes.append(k)
        dim += _multinomial(n, k)
    if dim == 0:
        raise EmptyWindowError(f"window [{u - delta}, {u}] is empty at n={n}")
    probs = np.zeros(levels.d ** m)
    for idx, s in enumerate(itertools.product(range(levels.d), repeat=m)):
        j = [s.count(i) for i in range(levels.d)]
        num = 0
        for k in classes:
            rem = [ki - ji for ki, ji in zip(k, j)]
            if all(r >= 0 for r in rem):
                num += _multinomial(n - m, rem)
        probs[idx] = float(Fraction(num, dim))
    return probs


def min_bath_size(m: int, levels: LevelSpec, u: float, eps: float,
                  n_cap: int = 10 ** 5) -> tuple[int, float]:
    """Smallest n whose sharp-window m-site marginal is eps-close to the product.

    Scans feasible n (those admitting the exact density) by geometric doubling
    and bisection, relying on the empirically monotone decay of the distance;
    minimality is verified against the previous feasible n, with a linear
    fallback scan if that verification fails.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m < 0:
        raise ValueError("block size must be nonnegative")
    memo: dict[int, float] = {}

    def feasible(n: int) -> bool:
        return n > m and _sharp_classes_integer(n, levels, u).shape[0] > 0

    if m == 0:
        # empty block: every marginal is the trivial state, distance 0
        n = 1
        while not feasible(n):
            n += 1
            if n > n_cap:
                raise RuntimeError(f"no feasible size below cap {n_cap}")
        return n, 0.0

    def next_feasible(n: int) -> int:
        while not feasible(n):
            n += 1
            if n > n_cap:
                raise RuntimeError(f"no feasible size below cap {n_cap}")
        return n

    def dist(n: int) -> float:
        if n not in memo:
            memo[n] = marginal_distance_to_product(n, m, levels, u)
        return memo[n]

    lo = next_feasible(m + 1)
    if dist(lo) <= eps:
        return lo, dist(lo)
    hi = lo
    while dist(hi) > eps:
        if hi >= n_cap:
            raise RuntimeError(f"distance stays above {eps} up to the cap {n_cap}")
        hi = next_feasible(min(2 * hi, n_cap))
    while True:
        mid = next_feasible((lo + hi) // 2)
        if mid >= hi or mid <= lo:
            break
        if dist(mid) <= eps:
            hi = mid
        else:
            lo = mid
    prev = _previous_feasible(hi, m, levels, u)
    if prev is not None and prev != lo and dist(prev) <= eps:
        # monotone-decay shortcut failed; fall back to the full scan
        n = next_feasible(m + 1)
        while dist(n) > eps:
            n = next_feasible(n + 1)
        return n, dist(n)
    return hi, dist(hi)


def _previous_feasible(n: int, m: int, levels: LevelSpec, u: float):
    for cand in range(n - 1, m, -1):
        if _sharp_classes_integer(cand, levels, u).shape[0] > 0:
            return cand
    return None


# -- rational independence of energy levels -----------------------------------

def rational_dependence(levels: LevelSpec, max_coeff: int = 1000,
                        tol: float | None = None):
    """Search for a nonzero integer relation among the nonzero levels.

    Returns None when no relation with coefficients bounded by max_coeff is
    found (the levels look rationally independent at this resolution), else
    the coefficient vector. Pairs are handled by direct search, larger sets
    via integer-relation detection, always verified against the tolerance.
    """
    vals = list(levels.energies[1:])
    if tol is None:
        tol = 1e-9 * max(abs(v) for v in vals)
    if any(abs(v) <= tol for v in vals):
        lam = [0] * len(vals)
        lam[min(range(len(vals)), key=lambda i: abs(vals[i]))] = 1
        return lam
    if len(vals) == 1:
        return None
    if len(vals) == 2:
        a, b = vals
        for l1 in range(1, max_coeff + 1):
            l2 = round(-l1 * a / b)
            if abs(l2) <= max_coeff and abs(l1 * a + l2 * b) <= tol and l2 != 0:
                return [l1, l2]
        return None
    import mpmath
    rel = mpmath.pslq([mpmath.mpf(v) for v in vals], maxcoeff=max_coeff)
    if rel is None:
        return None
    lam = [int(x) for x in rel]
    if any(lam) and abs(sum(l * v for l, v in zip(lam, vals))) <= tol \
            and max(abs(l) for l in lam) <= max_coeff:
        return lam
    return None
