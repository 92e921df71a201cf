"""Unitary dynamics diagnostics: gap structure, effective dimension, equilibration.

The central quantity is the gap degeneracy: the largest number of ordered
eigenvalue pairs (i, j), i != j, sharing the same difference E_i - E_j up to a
clustering tolerance. Together with the effective dimension of the initial
state it bounds the time-averaged distance of a subsystem from its dephased
equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensembles import dephase
from .lattice import Region
from .linalg import SpectralDecomposition, hermitize, partial_trace, trace_norm_distance
from .sampling import SeededSampler

LOG10_BIN_WIDTH = 0.25


def _log10_histogram(values: np.ndarray) -> list[tuple[float, int]]:
    """Histogram of log10(values) in fixed 0.25-wide bins; zeros are excluded."""
    vals = values[values > 0]
    if vals.size == 0:
        return []
    logs = np.log10(vals)
    bins = np.floor(logs / LOG10_BIN_WIDTH).astype(int)
    out = []
    for b in range(bins.min(), bins.max() + 1):
        count = int(np.sum(bins == b))
        if count:
            out.append((b * LOG10_BIN_WIDTH, count))
    return out


@dataclass(frozen=True)
class GapStatistics:
    """Spectral gap structure of one Hamiltonian."""

    min_gap: float                       # smallest consecutive eigenvalue spacing
    eigenvalue_degeneracy: int           # largest eigenvalue cluster (1 = simple spectrum)
    gap_degeneracy: int                  # D_G over ordered pairs (1 = all gaps distinct)
    gap_histogram: list                  # (log10 bin low edge, count) of spacings
    gap_gap_histogram: list              # same for spacings between sorted pair gaps


def gap_structure(eigenvalues: np.ndarray, tol: float | None = None) -> GapStatistics:
    """Cluster eigenvalues and all pairwise differences at a relative tolerance.

    tol defaults to 1e-10 times the spectral span. Quadratic in the dimension;
    meant for spectra of a few thousand levels.
    """
    e = np.sort(np.asarray(eigenvalues, dtype=float))
    if e.size < 2:
        raise ValueError("need at least two eigenvalues")
    span = float(e[-1] - e[0])
    if tol is None:
        tol = 1e-10 * max(span, 1.0)
    spacings = np.diff(e)
    eig_deg = _max_cluster(e, tol)
    diffs = (e[None, :] - e[:, None])[np.triu_indices(e.size, k=1)]
    zeros = int(np.sum(diffs <= tol))
    pos = np.sort(diffs[diffs > tol])
    gap_deg = max(_max_cluster(pos, tol), 2 * zeros) if pos.size else max(1, 2 * zeros)
    return GapStatistics(
        min_gap=float(spacings.min()),
        eigenvalue_degeneracy=eig_deg,
        gap_degeneracy=gap_deg,
        gap_histogram=_log10_histogram(spacings),
        gap_gap_histogram=_log10_histogram(np.diff(pos) if pos.size > 1 else np.array([])),
    )


def _max_cluster(sorted_vals: np.ndarray, tol: float) -> int:
    if sorted_vals.size == 0:
        return 0
    best = cur = 1
    for i in range(1, sorted_vals.size):
        if sorted_vals[i] - sorted_vals[i - 1] <= tol:
            cur += 1
            best = max(best, cur)
        else:
            cur = 1
    return best


def effective_dimension(populations) -> float:
    """1 / sum(lambda^2): how many eigenspaces the state effectively occupies."""
    lam = np.asarray(populations, dtype=float)
    if lam.min(initial=0.0) < -1e-9 or abs(lam.sum() - 1.0) > 1e-8:
        raise ValueError("populations must form a probability vector")
    lam = np.clip(lam, 0.0, None)
    lam = lam / lam.sum()
    return float(1.0 / np.sum(lam ** 2))


def equilibration_bound(subsystem_dim: int, gap_degeneracy: int,
                        effective_dim: float) -> float:
    """Bound on the time-averaged trace distance of a subsystem from equilibrium."""
    if subsystem_dim < 1 or gap_degeneracy < 1 or effective_dim <= 0:
        raise ValueError("arguments out of range")
    return subsystem_dim * math.sqrt(gap_degeneracy / effective_dim)


def renyi2_floor(entropy: float, max_entropy: float, eps: float) -> float:
    """Lower bound 2*eps*(S - eps/(1+eps) * S0) on the collision entropy S_2."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if entropy < -1e-12 or max_entropy < entropy - 1e-12:
        raise ValueError("need 0 <= S <= S0")
    return 2.0 * eps * (entropy - eps / (1.0 + eps) * max_entropy)


def time_evolve(rho0: np.ndarray, spec: SpectralDecomposition, t: float) -> np.ndarray:
    """exp(-iHt) rho0 exp(iHt) via entrywise phases in the eigenbasis."""
    v = spec.eigenvectors
    inside = v.conj().T @ rho0 @ v
    phase = np.exp(-1j * np.subtract.outer(spec.eigenvalues, spec.eigenvalues) * t)
    return hermitize(v @ (inside * phase) @ v.conj().T)


def mc_time_average_distance(rho0: np.ndarray, spec: SpectralDecomposition,
                             region: Region, keep, horizon: float,
                             samples: int, sampler: SeededSampler):
    """Monte Carlo estimate of the time-averaged subsystem distance from equilibrium.

    Draws uniform times in [0, horizon], evolves rho0, and measures the trace
    distance of the reduction onto `keep` from the reduction of the dephased
    state. Returns (mean, standard error); the error is 0 for a single sample.
    """
    if samples < 1 or horizon <= 0:
        raise ValueError("need positive horizon and at least one sample")
    target = partial_trace(dephase(rho0, spec), region, keep)
    rng = sampler.rng()
    times = rng.uniform(0.0, horizon, size=samples)
    dists = np.array([
        trace_norm_distance(partial_trace(time_evolve(rho0, spec, t), region, keep), target)
        for t in times
    ])
    mean = float(dists.mean())
    stderr = float(dists.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return mean, stderr
