"""Finite-range translation-invariant interactions and their lattice Hamiltonians.

An interaction is a finite list of (support pattern, Hermitian matrix) terms;
the Hamiltonian on a region sums every translate of every term that the
boundary condition admits. Open boundaries keep only translates that fit
inside the box, periodic boundaries wrap them around the torus.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .lattice import Region, Translation, embed_matrix, embed_operator, \
    make_region, pattern_diameter, periodic_translations
from .linalg import hermitize

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class Interaction:
    """Translation-invariant interaction of finite range.

    terms: tuple of (pattern, matrix) with pattern a tuple of nu-integer
    offsets and matrix Hermitian on local_dim^len(pattern), factor order
    following the pattern. range_r bounds the sup-distance diameter of every
    pattern. norm_factor records a global rescaling applied at construction
    (None when the couplings are used as given).
    """

    nu: int
    local_dim: int
    range_r: int
    terms: tuple = ()
    norm_factor: float | None = None

    def __post_init__(self):
        fixed = []
        for pattern, mat in self.terms:
            pattern = tuple(tuple(int(c) for c in p) for p in pattern)
            if len(set(pattern)) != len(pattern):
                raise ValueError(f"pattern {pattern} repeats a site")
            if any(len(p) != self.nu for p in pattern):
                raise ValueError(f"pattern {pattern} does not match nu={self.nu}")
            if pattern_diameter(pattern) > self.range_r:
                raise ValueError(f"pattern {pattern} exceeds range {self.range_r}")
            mat = np.asarray(mat, dtype=complex)
            want = self.local_dim ** len(pattern)
            if mat.shape != (want, want):
                raise ValueError(f"term matrix shape {mat.shape}, expected {(want, want)}")
            mat = hermitize(mat)
            mat.setflags(write=False)
            fixed.append((pattern, mat))
        object.__setattr__(self, "terms", tuple(fixed))

    @property
    def coupling_bound(self) -> float:
        """Largest operator norm over the term matrices."""
        if not self.terms:
            return 0.0
        return max(float(np.max(np.abs(np.linalg.eigvalsh(m)))) for _, m in self.terms)

    def rescaled(self, factor: float) -> "Interaction":
        """Divide every term matrix by factor, recording it."""
        terms = tuple((p, m / factor) for p, m in self.terms)
        return Interaction(self.nu, self.local_dim, self.range_r, terms, factor)


@dataclass(frozen=True)
class BoundaryCondition:
    """'open', 'periodic', or 'custom' (open bulk plus explicit extra matrices)."""

    kind: str
    extra_terms: tuple = ()

    def __post_init__(self):
        if self.kind not in ("open", "periodic", "custom"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")


OPEN = BoundaryCondition("open")
PERIODIC = BoundaryCondition("periodic")


def enumerate_placements(phi: Interaction, region: Region, periodic: bool):
    """All admissible translates of every term as (site-index tuple, matrix) pairs.

    On the torus a translate whose wrapped site tuple coincides with an
    already-placed one (same term) is the same operator and appears once.
    """
    out = []
    for pattern, mat in phi.terms:
        mins = [min(p[ax] for p in pattern) for ax in range(region.nu)]
        maxs = [max(p[ax] for p in pattern) for ax in range(region.nu)]
        seen = set()
        if periodic:
            if phi.range_r >= min(region.side_lengths) and phi.range_r > 0:
                raise ValueError("interaction range must be below every side length on the torus")
            offsets = [tuple(t.vector) for t in periodic_translations(region)]
            for off in offsets:
                sites = tuple(
                    region.site_index(region.wrap(tuple(p[ax] + off[ax] for ax in range(region.nu))))
                    for p in pattern
                )
                if sites in seen:
                    continue
                seen.add(sites)
                out.append((sites, mat))
        else:
            ranges = []
            for ax, (lo, hi) in enumerate(region.intervals):
                ranges.append(range(lo - mins[ax], hi - maxs[ax] + 1))
            count = 0
            for off in itertools.product(*ranges):
                sites = tuple(
                    region.site_index(tuple(p[ax] + off[ax] for ax in range(region.nu)))
                    for p in pattern
                )
                out.append((sites, mat))
                count += 1
            if count == 0:
                raise ValueError(f"pattern {pattern} does not fit inside the region")
    return out


def build_hamiltonian(phi: Interaction, region: Region,
                      bc: BoundaryCondition = OPEN) -> np.ndarray:
    """Sum of all admitted translates, embedded into the region's full space."""
    if phi.nu != region.nu or phi.local_dim != region.local_dim:
        raise ValueError("interaction and region disagree on nu or local dimension")
    H = np.zeros((region.dim, region.dim), dtype=complex)
    for sites, mat in enumerate_placements(phi, region, bc.kind == "periodic"):
        H += embed_matrix(mat, list(sites), region.size, region.local_dim)
    if bc.kind == "custom":
        for extra in bc.extra_terms:
            extra = np.asarray(extra, dtype=complex)
            if extra.shape != H.shape:
                raise ValueError("custom boundary term has wrong dimension")
            H += extra
    return hermitize(H)


def build_hamiltonian_on_sites(phi: Interaction, region: Region, sites) -> np.ndarray:
    """Open-boundary Hamiltonian of the sub-collection `sites` of a region.

    Keeps exactly the translates supported inside `sites`; the result acts on
    local_dim^len(sites) with factor order = sorted(sites).
    """
    sites_sorted = sorted(sites)
    pos = {s: i for i, s in enumerate(sites_sorted)}
    inside = set(sites_sorted)
    d = region.local_dim
    dim = d ** len(sites_sorted)
    H = np.zeros((dim, dim), dtype=complex)
    placed = False
    for placement, mat in enumerate_placements(phi, region, periodic=False):
        if all(s in inside for s in placement):
            H += embed_matrix(mat, [pos[s] for s in placement], len(sites_sorted), d)
            placed = True
    if not placed:
        raise ValueError("no interaction term fits inside the given sites")
    return hermitize(H)


def translation_invariance_check(H: np.ndarray, region: Region) -> float:
    """Max over axis generators of the sup-norm of T H T^dagger - H."""
    worst = 0.0
    for ax in range(region.nu):
        vec = tuple(1 if a == ax else 0 for a in range(region.nu))
        perm = Translation(vec, region).basis_permutation()
        moved = H[np.ix_(perm, perm)]
        # difference of Hermitian conjugations is Hermitian
        worst = max(worst, float(np.max(np.abs(np.linalg.eigvalsh(hermitize(moved - H))))))
    return worst


def energy_density_extremes(H: np.ndarray, region: Region) -> tuple[float, float]:
    """(ground-state energy density, infinite-temperature energy density)."""
    w = np.linalg.eigvalsh(hermitize(H))
    return float(w[0] / region.size), float(np.mean(w) / region.size)


def sample_random_2local(n: int, seed: int) -> Interaction:
    """Random 1d chain interaction: one on-site and one nearest-neighbour term.

    Coefficients of the three on-site Paulis and the nine Pauli products are
    independent standard normals; the whole interaction is rescaled so the
    periodic chain Hamiltonian on n sites has unit sup-norm.
    """
    if n < 2:
        raise ValueError("need at least two sites")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    a = rng.standard_normal(3)
    b = rng.standard_normal((3, 3))
    letters = "xyz"
    onsite = sum(a[i] * PAULI[letters[i]] for i in range(3))
    pair = sum(
        b[j, k] * np.kron(PAULI[letters[j]], PAULI[letters[k]])
        for j in range(3) for k in range(3)
    )
    raw = Interaction(1, 2, 1, ((((0,),), onsite), (((0,), (1,)), pair)))
    region = make_region(1, [n], 2)
    H = build_hamiltonian(raw, region, PERIODIC)
    scale = float(np.max(np.abs(np.linalg.eigvalsh(H))))
    if scale == 0.0:
        raise ValueError("degenerate draw: zero Hamiltonian")
    return raw.rescaled(scale)


# -- JSON serialization (bit-exact float round trip via repr) ----------------

def interaction_to_json(phi: Interaction) -> str:
    terms = []
    for pattern, mat in phi.terms:
        flat = [[float(z.real), float(z.imag)] for z in np.asarray(mat).ravel(order="C")]
        terms.append({"offsets": [list(p) for p in pattern], "matrix": flat})
    doc = {"nu": phi.nu, "r": phi.range_r, "d": phi.local_dim, "terms": terms}
    return json.dumps(doc, indent=1)


def interaction_from_json(text: str) -> Interaction:
    doc = json.loads(text)
    try:
        nu, r, d = int(doc["nu"]), int(doc["r"]), int(doc["d"])
        raw_terms = doc["terms"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed interaction document: {exc}") from exc
    terms = []
    for entry in raw_terms:
        pattern = tuple(tuple(int(c) for c in p) for p in entry["offsets"])
        k = len(pattern)
        flat = entry["matrix"]
        if len(flat) != (d ** k) ** 2:
            raise ValueError("matrix length does not match offsets and local dimension")
        mat = np.array([complex(re, im) for re, im in flat]).reshape(d ** k, d ** k)
        terms.append((pattern, mat))
    return Interaction(nu, d, r, tuple(terms))
