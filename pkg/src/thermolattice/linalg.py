"""Dense Hermitian linear algebra: spectra, partial traces, distances, entropies.

Everything here treats matrices as plain complex ndarrays; shapes are the only
contract. Reduction maps are linear, so they accept any operator, not just
density matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import Region

#: eigenvalues below cutoff * max-eigenvalue are treated as zero rank
RANK_CUTOFF = 1e-10


def hermitize(a: np.ndarray) -> np.ndarray:
    """Average away the anti-Hermitian part (use after accumulating roundoff)."""
    return (a + a.conj().T) / 2


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def function_of(self, f) -> np.ndarray:
        """f applied spectrally: V f(Lambda) V^dagger."""
        w = f(self.eigenvalues)
        return (self.eigenvectors * w) @ self.eigenvectors.conj().T


def eigh(a: np.ndarray, residual_tol: float = 1e-9) -> SpectralDecomposition:
    """Full Hermitian eigendecomposition with a reconstruction-residual guard.

    The input is hermitized first; the guard compares the Frobenius norm of
    A - V diag(w) V^dagger against residual_tol * (1 + |A|_F), which upper
    bounds the spectral-norm residual.
    """
    h = hermitize(np.asarray(a, dtype=complex))
    w, v = np.linalg.eigh(h)
    resid = np.linalg.norm(h - (v * w) @ v.conj().T)
    if resid > residual_tol * (1.0 + np.linalg.norm(h)):
        raise np.linalg.LinAlgError(
            f"eigendecomposition residual {resid:.3e} exceeds tolerance"
        )
    return SpectralDecomposition(w, v)


def operator_norm(a: np.ndarray) -> float:
    """Spectral norm; uses the Hermitian fast path when applicable."""
    a = np.asarray(a)
    if np.allclose(a, a.conj().T, atol=1e-13 * max(1.0, np.abs(a).max(initial=0.0))):
        return float(np.max(np.abs(np.linalg.eigvalsh(a)))) if a.size else 0.0
    return float(np.linalg.norm(a, 2))


def _axis_split(op: np.ndarray, region: Region):
    n, d = region.size, region.local_dim
    if op.shape != (region.dim, region.dim):
        raise ValueError(f"operator shape {op.shape} does not match region dim {region.dim}")
    return op.reshape((d,) * (2 * n)), n, d


def partial_trace(op: np.ndarray, region: Region, keep) -> np.ndarray:
    """Trace out all sites except `keep`; output factor order follows `keep`.

    Linear in op, so it applies to observables as well as states.
    """
    keep = list(keep)
    if len(set(keep)) != len(keep):
        raise ValueError("keep sites must be distinct")
    t, n, d = _axis_split(op, region)
    drop = [s for s in range(n) if s not in set(keep)]
    perm = keep + drop
    axes = perm + [n + p for p in perm]
    t = t.transpose(axes)
    dk, dr = d ** len(keep), d ** len(drop)
    t = t.reshape(dk, dr, dk, dr)
    return np.trace(t, axis1=1, axis2=3)


def reduced_from_vector(psi: np.ndarray, region: Region, keep) -> np.ndarray:
    """Reduced density matrix of a pure state without forming |psi><psi|."""
    keep = list(keep)
    n, d = region.size, region.local_dim
    if psi.shape != (region.dim,):
        raise ValueError("state vector length does not match region")
    drop = [s for s in range(n) if s not in set(keep)]
    m = psi.reshape((d,) * n).transpose(keep + drop).reshape(d ** len(keep), d ** len(drop))
    return m @ m.conj().T


def trace_norm(a: np.ndarray) -> float:
    """Trace norm of a Hermitian matrix (sum of absolute eigenvalues)."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(a)))))


def trace_norm_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    if rho.shape != sigma.shape:
        raise ValueError("operands must share a shape")
    return trace_norm(rho - sigma)


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def _clean_probs(lam, renorm_tol: float = 1e-8):
    lam = np.asarray(lam, dtype=float)
    if lam.min(initial=0.0) < -renorm_tol or abs(lam.sum() - 1.0) > renorm_tol:
        raise ValueError("input is not a probability vector")
    lam = np.clip(lam, 0.0, None)
    return lam / lam.sum()


def entropy(lam, alpha: float = 1.0) -> float:
    """Renyi entropy of order alpha (natural log); alpha=1 is von Neumann.

    alpha=0 counts the support above RANK_CUTOFF relative to the largest weight.
    """
    lam = _clean_probs(lam)
    if alpha < 0:
        raise ValueError("order must be nonnegative")
    if alpha == 0:
        return float(math.log(int(np.sum(lam > RANK_CUTOFF * lam.max()))))
    if alpha == 1:
        pos = lam[lam > 0]
        return float(-np.sum(pos * np.log(pos)))
    return float(math.log(np.sum(lam ** alpha)) / (1.0 - alpha))


def von_neumann_entropy(rho: np.ndarray) -> float:
    return entropy(np.linalg.eigvalsh(hermitize(rho)))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray,
                     support_tol: float = 1e-10) -> float:
    """S(rho || sigma) in nats; +inf when rho leaks outside sigma's support."""
    if rho.shape != sigma.shape:
        raise ValueError("operands must share a shape")
    wr, vr = np.linalg.eigh(hermitize(rho))
    ws, vs = np.linalg.eigh(hermitize(sigma))
    wr = np.clip(wr, 0.0, None)
    scale = max(ws.max(initial=0.0), 0.0)
    on = ws > RANK_CUTOFF * max(scale, 1e-300)
    # weight of rho on sigma's null space
    null = vs[:, ~on]
    if null.shape[1]:
        leak = float(np.real(np.trace(null.conj().T @ hermitize(rho) @ null)))
        if leak > support_tol:
            return math.inf
    pos = wr > 0
    s_rho = float(np.sum(wr[pos] * np.log(wr[pos])))
    # tr(rho log sigma) restricted to the support
    proj = vs[:, on]
    diag = np.real(np.einsum("ij,jk,ki->i", proj.conj().T, hermitize(rho), proj))
    diag = np.clip(diag, 0.0, None)
    s_cross = float(np.sum(diag * np.log(ws[on])))
    return s_rho - s_cross


def is_density_matrix(rho: np.ndarray, tol: float = 1e-9) -> bool:
    if rho.shape[0] != rho.shape[1]:
        return False
    if np.abs(rho - rho.conj().T).max() > tol:
        return False
    if abs(np.trace(rho).real - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(hermitize(rho)).min() > -tol)
