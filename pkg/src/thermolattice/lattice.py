"""Integer-box lattice geometry: regions, torus translations, boundaries, embeddings.

Sites of a box region are enumerated row-major with the first axis slowest,
so site index arithmetic is shared verbatim by every module that reshapes
state vectors into per-site tensor factors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

# Dense matrices above this dimension are not worth attempting on a desk machine.
FEASIBILITY_CAP = 2 ** 14


class FeasibilityError(ValueError):
    """Requested tensor space is too large for dense diagonalization."""


@dataclass(frozen=True)
class Region:
    """A nu-dimensional integer box [lo_1,hi_1] x ... x [lo_nu,hi_nu] of quantum sites.

    local_dim is the Hilbert dimension per site. Construction fails when the
    full tensor space d^|region| exceeds FEASIBILITY_CAP, so infeasible models
    error out before any matrix is allocated.
    """

    nu: int
    intervals: tuple[tuple[int, int], ...]
    local_dim: int

    def __post_init__(self):
        if self.nu < 1 or len(self.intervals) != self.nu:
            raise ValueError(f"need one interval per axis, got {self.intervals} for nu={self.nu}")
        for lo, hi in self.intervals:
            if hi < lo:
                raise ValueError(f"empty interval [{lo},{hi}]")
        if self.local_dim < 2:
            raise ValueError("local dimension must be at least 2")
        if self.local_dim ** self.size > FEASIBILITY_CAP:
            raise FeasibilityError(
                f"tensor space {self.local_dim}^{self.size} exceeds cap {FEASIBILITY_CAP}"
            )

    @property
    def side_lengths(self) -> tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in self.intervals)

    @property
    def size(self) -> int:
        n = 1
        for s in self.side_lengths:
            n *= s
        return n

    @property
    def dim(self) -> int:
        """Dimension of the full tensor-product Hilbert space."""
        return self.local_dim ** self.size

    def site_coords(self, index: int) -> tuple[int, ...]:
        """Inverse of site_index; row-major, first axis slowest."""
        if not 0 <= index < self.size:
            raise ValueError(f"site index {index} out of range")
        coords = []
        rem = index
        lengths = self.side_lengths
        for ax in range(self.nu):
            stride = 1
            for later in lengths[ax + 1:]:
                stride *= later
            q, rem = divmod(rem, stride)
            coords.append(self.intervals[ax][0] + q)
        return tuple(coords)

    def site_index(self, coords) -> int:
        idx = 0
        for ax, c in enumerate(coords):
            lo, hi = self.intervals[ax]
            if not lo <= c <= hi:
                raise ValueError(f"coordinate {coords} outside region")
            idx = idx * self.side_lengths[ax] + (c - lo)
        return idx

    def sites(self):
        """All site indices, 0..|region|-1."""
        return range(self.size)

    def wrap(self, coords) -> tuple[int, ...]:
        """Map arbitrary integer coordinates onto the torus."""
        out = []
        for ax, c in enumerate(coords):
            lo, _ = self.intervals[ax]
            out.append(lo + (c - lo) % self.side_lengths[ax])
        return tuple(out)

    def contains(self, coords) -> bool:
        return all(lo <= c <= hi for (lo, hi), c in zip(self.intervals, coords))


def make_region(nu: int, side_lengths, local_dim: int) -> Region:
    """Box region [0, L_i - 1] per axis with the given per-site dimension."""
    if len(side_lengths) != nu:
        raise ValueError("one side length per axis required")
    if any(s < 1 for s in side_lengths):
        raise ValueError("side lengths must be positive")
    return Region(nu, tuple((0, s - 1) for s in side_lengths), local_dim)


@dataclass(frozen=True)
class Translation:
    """One element of the torus translation group of a region."""

    vector: tuple[int, ...]
    region: Region

    def apply_site(self, index: int) -> int:
        coords = self.region.site_coords(index)
        shifted = tuple(c + a for c, a in zip(coords, self.vector))
        return self.region.site_index(self.region.wrap(shifted))

    def site_map(self) -> list[int]:
        return [self.apply_site(k) for k in self.region.sites()]

    def inverse(self) -> "Translation":
        return Translation(tuple(-a for a in self.vector), self.region)

    def basis_permutation(self) -> np.ndarray:
        """Permutation p of product-basis indices with T|b> = |p[b]>.

        The translated state carries the symbol of site i to site sigma(i),
        where sigma is the site map.
        """
        n, d = self.region.size, self.region.local_dim
        sigma = self.site_map()
        dim = self.region.dim
        idx = np.arange(dim)
        digits = np.empty((n, dim), dtype=np.int64)
        rem = idx
        for ax in range(n - 1, -1, -1):
            digits[ax] = rem % d
            rem = rem // d
        out = np.zeros(dim, dtype=np.int64)
        for i in range(n):
            # symbol at site i moves to site sigma(i); first site is slowest
            out += digits[i] * d ** (n - 1 - sigma[i])
        return out

    def matrix(self) -> np.ndarray:
        perm = self.basis_permutation()
        dim = self.region.dim
        T = np.zeros((dim, dim))
        T[perm, np.arange(dim)] = 1.0
        return T


def periodic_translations(region: Region) -> list[Translation]:
    """The full torus translation group, |region| elements, identity first."""
    ranges = [range(s) for s in region.side_lengths]
    return [Translation(vec, region) for vec in itertools.product(*ranges)]


def boundary_sites(region: Region) -> list[int]:
    """Sites adjacent (sup-distance 1) to the outside of the box, ascending order."""
    out = []
    for k in region.sites():
        coords = region.site_coords(k)
        if any(c == lo or c == hi for (lo, hi), c in zip(region.intervals, coords)):
            out.append(k)
    return out


def embed_matrix(op: np.ndarray, positions, n_factors: int, d: int) -> np.ndarray:
    """Embed op (acting on the listed tensor factors, in that order) into d^n_factors.

    Identity on every other factor. positions must be distinct.
    """
    positions = list(positions)
    k = len(positions)
    if len(set(positions)) != k:
        raise ValueError("embedding positions must be distinct")
    if op.shape != (d ** k, d ** k):
        raise ValueError(f"operator shape {op.shape} does not match {k} factors of dim {d}")
    rest = [p for p in range(n_factors) if p not in set(positions)]
    perm = positions + rest
    big = np.kron(np.asarray(op, dtype=complex), np.eye(d ** len(rest)))
    t = big.reshape((d,) * (2 * n_factors))
    inv = [0] * n_factors
    for pos, s in enumerate(perm):
        inv[s] = pos
    axes = inv + [n_factors + i for i in inv]
    dim = d ** n_factors
    return t.transpose(axes).reshape(dim, dim)


def embed_operator(op: np.ndarray, pattern, region: Region, offset=None,
                   periodic: bool = False) -> np.ndarray:
    """Place an operator with the given support pattern into the region's full space.

    Parameters
    ----------
    op : matrix on d^len(pattern); factor order follows the pattern order
    pattern : sequence of nu-integer offsets (the support, anchored anywhere)
    offset : translation applied to the pattern; defaults to zero
    periodic : wrap out-of-bounds coordinates around the torus instead of failing
    """
    if offset is None:
        offset = (0,) * region.nu
    sites = []
    for p in pattern:
        coords = tuple(pc + oc for pc, oc in zip(p, offset))
        if periodic:
            coords = region.wrap(coords)
        elif not region.contains(coords):
            raise ValueError(f"pattern site {coords} outside region and periodic=False")
        sites.append(region.site_index(coords))
    return embed_matrix(op, sites, region.size, region.local_dim)


def pattern_diameter(pattern) -> int:
    """Sup-distance diameter of a support pattern."""
    pts = list(pattern)
    if len(pts) <= 1:
        return 0
    return max(
        max(abs(a - b) for a, b in zip(p, q)) for p in pts for q in pts
    )
