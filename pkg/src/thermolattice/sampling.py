"""Reproducible random states: Haar vectors and a shallow two-level circuit.

Streams are keyed by (master seed, stream index tuple) through SeedSequence
spawn keys, so each sample's randomness is independent of execution order and
worker count: rerunning any subset of samples reproduces them bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SeededSampler:
    """Counter-based RNG stream factory."""

    master_seed: int
    stream: tuple[int, ...] = ()

    def child(self, *indices: int) -> "SeededSampler":
        return SeededSampler(self.master_seed, self.stream + tuple(int(i) for i in indices))

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.master_seed, spawn_key=self.stream))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    # fix the phase ambiguity so the distribution is exactly Haar
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def _subspace_basis(basis) -> np.ndarray:
    b = np.asarray(getattr(basis, "basis", basis))
    if b.ndim != 2 or b.shape[1] < 1:
        raise ValueError("subspace basis must be a nonempty matrix of columns")
    return b


def haar_state_in_subspace(basis, sampler: SeededSampler) -> np.ndarray:
    """Uniformly random unit vector in the span of the basis columns."""
    b = _subspace_basis(basis)
    rng = sampler.rng()
    k = b.shape[1]
    c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    c /= np.linalg.norm(c)
    return b @ c


def design_state_in_subspace(basis, depth: int, sampler: SeededSampler) -> np.ndarray:
    """State from a brickwork circuit of Haar 2x2 rotations on subspace coordinates.

    Starts from the first basis vector and applies `depth` alternating layers
    of independent two-coordinate rotations. Cheap stand-in for an approximate
    state design when full Haar sampling is too structured to be interesting;
    depth 0 returns the first basis column.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    b = _subspace_basis(basis)
    k = b.shape[1]
    rng = sampler.rng()
    c = np.zeros(k, dtype=complex)
    c[0] = 1.0
    for layer in range(depth):
        start = layer % 2
        for i in range(start, k - 1, 2):
            u = haar_unitary(2, rng)
            c[[i, i + 1]] = u @ c[[i, i + 1]]
    return b @ c


def haar_concentration_tail(subspace_dim: int, eps: float) -> float:
    """Upper tail probability for an eps-deviation of a Haar-typical observable."""
    if eps <= 0 or subspace_dim < 1:
        raise ValueError("need positive eps and a nonempty subspace")
    return 2.0 * float(np.exp(-subspace_dim * eps ** 2 / (18.0 * np.pi ** 3)))
