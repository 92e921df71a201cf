"""Equilibrium ensembles on a finite region: Gibbs, microcanonical, dephased.

Inverse temperatures are solved against energy density (energy per site), and
microcanonical windows select energy densities in the closed interval
[u - delta, u]. The block pseudonorms at the bottom quantify how well two
operators agree on all translated m-site blocks at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import Region, periodic_translations
from .linalg import SpectralDecomposition, hermitize, partial_trace, trace_norm

BETA_MAX = 2.0 ** 16
WINDOW_TOL = 1e-12


class EmptyWindowError(ValueError):
    """No eigenvalue falls inside the requested energy-density window."""


@dataclass(frozen=True)
class EnergyWindow:
    """Closed energy-density window [u - delta, u]."""

    u: float
    delta: float

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("window width must be nonnegative")

    def contains(self, energy: float, n_sites: int) -> bool:
        dens = energy / n_sites
        return self.u - self.delta - WINDOW_TOL <= dens <= self.u + WINDOW_TOL


@dataclass(frozen=True)
class MicrocanonicalSubspace:
    """Orthonormal eigenbasis (columns) of the energy eigenspaces in a window."""

    basis: np.ndarray
    window: EnergyWindow

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def gibbs_state(spec: SpectralDecomposition, beta: float) -> np.ndarray:
    """exp(-beta H)/Z computed spectrally; the spectrum is shifted so the
    largest Boltzmann weight is exactly 1 before normalizing."""
    if not 0.0 <= beta <= 1e3:
        raise ValueError(f"inverse temperature {beta} outside supported range")
    w = np.exp(-beta * (spec.eigenvalues - spec.eigenvalues.min()))
    z = w.sum()
    if not np.isfinite(z) or z <= 0:
        raise FloatingPointError("Boltzmann weights degenerate despite shift")
    p = w / z
    return hermitize((spec.eigenvectors * p) @ spec.eigenvectors.conj().T)


def _density_curve(spec: SpectralDecomposition, diag_energy: np.ndarray, n_sites: int):
    e0 = spec.eigenvalues.min()

    def dens(beta: float) -> float:
        w = np.exp(-beta * (spec.eigenvalues - e0))
        return float(np.sum(w * diag_energy) / (w.sum() * n_sites))

    return dens


def solve_beta(spec: SpectralDecomposition, region: Region, u: float,
               energy_op: np.ndarray | None = None,
               residual_tol: float = 1e-10) -> float:
    """Inverse temperature with per-site expectation of energy_op equal to u.

    energy_op defaults to the decomposed Hamiltonian itself. The map
    beta -> density must be decreasing (true whenever energy_op generates the
    Gibbs family); the bracket [0, 64] grows geometrically up to 2^16.
    """
    if energy_op is None:
        diag = spec.eigenvalues.astype(float)
    else:
        diag = np.real(np.einsum(
            "ij,jk,ki->i", spec.eigenvectors.conj().T, energy_op, spec.eigenvectors))
    dens = _density_curve(spec, diag, region.size)
    lo, hi = 0.0, 64.0
    d_lo = dens(lo)
    if abs(d_lo - u) <= residual_tol:
        return lo
    if d_lo < u:
        raise ValueError(f"target density {u} above the beta=0 value {d_lo}")
    while dens(hi) > u:
        hi *= 2.0
        if hi > BETA_MAX:
            raise ValueError(f"target density {u} not reachable below beta={BETA_MAX}")
    if dens(lo) < dens(hi) - residual_tol:
        raise ValueError("energy density is not decreasing in beta; wrong generator?")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = dens(mid)
        if val > u:
            lo = mid
        else:
            hi = mid
        if abs(val - u) <= residual_tol and (hi - lo) <= 1e-13 * max(1.0, hi):
            return mid
    mid = 0.5 * (lo + hi)
    if abs(dens(mid) - u) > residual_tol:
        raise RuntimeError("bisection stalled before reaching the density tolerance")
    return mid


def microcanonical(spec: SpectralDecomposition, region: Region,
                   window: EnergyWindow):
    """(subspace, maximally mixed state on it) for the given window."""
    mask = np.array([window.contains(e, region.size) for e in spec.eigenvalues])
    if not mask.any():
        raise EmptyWindowError(
            f"no eigenvalues with density in [{window.u - window.delta}, {window.u}]")
    basis = spec.eigenvectors[:, mask]
    sub = MicrocanonicalSubspace(basis, window)
    tau = sub.projector() / sub.dim
    return sub, hermitize(tau)


def weighted_microcanonical(spec: SpectralDecomposition, region: Region,
                            f, u: float) -> np.ndarray:
    """Generalized microcanonical state with eigenvalue weights f(energy density).

    f must be nonnegative and vanish above u; both are checked on a sampled
    grid covering the spectrum as well as on the eigenvalues themselves.
    """
    dens_vals = spec.eigenvalues / region.size
    grid = np.concatenate([
        np.linspace(dens_vals.min(), dens_vals.max() + 0.1 * (1 + abs(u)), 101),
        dens_vals,
    ])
    fx = np.array([float(f(x)) for x in grid])
    if (fx < -WINDOW_TOL).any():
        raise ValueError("weight function takes negative values")
    above = grid > u + WINDOW_TOL
    if (np.abs(fx[above]) > WINDOW_TOL).any():
        raise ValueError(f"weight function does not vanish above density {u}")
    w = np.clip(np.array([float(f(x)) for x in dens_vals]), 0.0, None)
    norm = w.sum()
    if norm <= 0:
        raise EmptyWindowError("weight function vanishes on the whole spectrum")
    return hermitize((spec.eigenvectors * (w / norm)) @ spec.eigenvectors.conj().T)


def _degeneracy_clusters(eigenvalues: np.ndarray, tol: float | None):
    if tol is None:
        scale = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
        tol = 1e-10 * max(scale, 1.0)
    bounds = [0]
    for i in range(1, len(eigenvalues)):
        if eigenvalues[i] - eigenvalues[i - 1] > tol:
            bounds.append(i)
    bounds.append(len(eigenvalues))
    return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def dephase(rho: np.ndarray, spec: SpectralDecomposition,
            degeneracy_tol: float | None = None) -> np.ndarray:
    """Project onto the commutant of H: keep eigenspace-diagonal blocks of rho.

    Eigenvalues closer than the tolerance (default 1e-10 * |H|) count as one
    eigenspace. This equals the infinite-time average of rho under the flow.
    """
    v = spec.eigenvectors
    inside = v.conj().T @ rho @ v
    out = np.zeros_like(inside)
    for a, b in _degeneracy_clusters(spec.eigenvalues, degeneracy_tol):
        out[a:b, a:b] = inside[a:b, a:b]
    return hermitize(v @ out @ v.conj().T)


def eigenspace_populations(rho: np.ndarray, spec: SpectralDecomposition,
                           degeneracy_tol: float | None = None) -> np.ndarray:
    """Probability carried by each (tolerance-clustered) eigenspace."""
    v = spec.eigenvectors
    diag = np.real(np.einsum("ij,jk,ki->i", v.conj().T, rho, v))
    pops = [float(diag[a:b].sum()) for a, b in
            _degeneracy_clusters(spec.eigenvalues, degeneracy_tol)]
    return np.clip(np.array(pops), 0.0, None)


def population_entropy(rho: np.ndarray, spec: SpectralDecomposition,
                       degeneracy_tol: float | None = None) -> float:
    """Shannon entropy of the eigenspace populations (conserved under the flow)."""
    lam = eigenspace_populations(rho, spec, degeneracy_tol)
    lam = lam / lam.sum()
    pos = lam[lam > 0]
    return float(-np.sum(pos * np.log(pos)))


def entropy_density_proxy(spec: SpectralDecomposition, region: Region,
                          u: float) -> float:
    """log(# eigenvalues with density <= u) per site; saturates at log(d)."""
    count = int(np.sum(spec.eigenvalues / region.size <= u + WINDOW_TOL))
    if count == 0:
        raise ValueError(f"density {u} lies below the whole spectrum")
    return math.log(count) / region.size


def _block_keep_sites(region: Region, m: int, shift) -> list[int]:
    """Site indices of the cube [0,m-1]^nu translated by shift, block order."""
    import itertools
    keep = []
    for rel in itertools.product(range(m), repeat=region.nu):
        coords = tuple(region.intervals[ax][0] + rel[ax] + shift[ax]
                       for ax in range(region.nu))
        keep.append(region.site_index(region.wrap(coords)))
    return keep


def block_pseudonorm(M: np.ndarray, region: Region, m: int,
                     mode: str = "periodic") -> float:
    """Trace norm of the translation-averaged m-block reduction of M.

    mode 'periodic' averages the reduction onto the cube [0,m-1]^nu over all
    torus translations; 'interior' only over translations keeping the cube
    inside the box (no wrap). Requires tr M = 0, so the result is a genuine
    seminorm measuring locally visible structure.
    """
    if abs(complex(np.trace(M))) > 1e-10:
        raise ValueError("pseudonorm is defined for traceless operators")
    if m < 1 or m > min(region.side_lengths):
        raise ValueError(f"block side {m} does not fit the region")
    import itertools
    if mode == "periodic":
        shifts = [t.vector for t in periodic_translations(region)]
    elif mode == "interior":
        ranges = [range(s - m + 1) for s in region.side_lengths]
        shifts = list(itertools.product(*ranges))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    d = region.local_dim
    acc = np.zeros((d ** (m ** region.nu), d ** (m ** region.nu)), dtype=complex)
    for shift in shifts:
        acc += partial_trace(M, region, _block_keep_sites(region, m, shift))
    acc /= len(shifts)
    return trace_norm(acc)


def pseudonorm_equivalence_bound(region: Region, m: int) -> float:
    """Factor bounding the interior pseudonorm by the periodic one plus spillage."""
    from .lattice import boundary_sites
    block = m ** region.nu
    return 8.0 * block * len(boundary_sites(region)) / region.size
