"""Hard-core Fock sectors and the sparse lattice Hamiltonian.

Occupations are stored as integer bitmasks (bit i set <=> site i occupied).
Because at most one boson sits on a site, a hop onto an occupied site simply
produces no matrix element, and no sign strings appear: hard-core bosons on
different sites commute.

H = -J * sum_<i,j> (b_i^dag b_j + b_j^dag b_i) + U * sum_<i,j> n_i n_j
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .lattice import LatticeGraph


@dataclass(frozen=True)
class FockBasis:
    """All bitmasks with ``n_particles`` set bits among ``n_sites``, ascending."""

    n_sites: int
    n_particles: int
    states: np.ndarray = field(repr=False)  # int64, strictly ascending

    @property
    def dim(self) -> int:
        return len(self.states)

    def index_of(self, mask: int) -> int:
        idx = int(np.searchsorted(self.states, mask))
        if idx >= self.dim or self.states[idx] != mask:
            raise ValidationError(f"bitmask {mask:b} not in the ({self.n_sites}, "
                                  f"{self.n_particles}) sector")
        return idx

    def index_of_many(self, masks: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.states, masks)
        if np.any(idx >= self.dim) or np.any(self.states[idx] != masks):
            raise ValidationError("bitmask outside the sector")
        return idx

    def occupations(self) -> np.ndarray:
        """(dim, n_sites) 0/1 array; column k = occupation of site k."""
        shifts = np.arange(self.n_sites, dtype=np.int64)
        return ((self.states[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def enumerate_basis(n: int, N: int) -> FockBasis:
    """Enumerate the fixed-N hard-core sector (binomial(n, N) states)."""
    if not 0 <= N <= n:
        raise ValidationError(f"invalid sector: N={N} not in 0..{n}")
    masks = []
    for occ in combinations(range(n), N):
        m = 0
        for i in occ:
            m |= 1 << i
        masks.append(m)
    states = np.array(sorted(masks), dtype=np.int64)
    return FockBasis(n, N, states)


@dataclass(frozen=True)
class SparseHamiltonian:
    """Real symmetric sparse Hamiltonian over a fixed-N Fock sector."""

    basis: FockBasis
    graph: LatticeGraph
    J: float
    U: float
    matrix: sp.csr_matrix = field(repr=False)  # full symmetric completion

    @property
    def dim(self) -> int:
        return self.basis.dim

    def apply(self, v: np.ndarray) -> np.ndarray:
        if v.shape != (self.dim,):
            raise ValidationError(f"vector length {v.shape} != dim {self.dim}")
        return self.matrix.dot(v)

    def upper_entries(self):
        """(rows, cols, vals) of the stored upper triangle plus diagonal,
        ascending in (row, col)."""
        coo = self.matrix.tocoo()
        keep = coo.row <= coo.col
        r, c, v = coo.row[keep], coo.col[keep], coo.data[keep]
        order = np.lexsort((c, r))
        return r[order], c[order], v[order]

    def dump(self) -> str:
        """Coordinate-format text: `row col value` per line, ascending."""
        r, c, v = self.upper_entries()
        return "".join(f"{ri} {ci} {float(vi)!r}\n" for ri, ci, vi in zip(r, c, v))


def build_hamiltonian(graph: LatticeGraph, basis: FockBasis,
                      J: float = 1.0, U: float = 0.0) -> SparseHamiltonian:
    """Assemble the hard-core Hamiltonian over the sector.

    For every basis state and edge (i, j): occupations (1, 0) or (0, 1) hop
    with amplitude -J to the swapped state; (1, 1) adds U to the diagonal.
    Particle number is conserved by construction.
    """
    if graph.n_sites != basis.n_sites:
        raise ValidationError(f"graph has {graph.n_sites} sites but basis has "
                              f"{basis.n_sites}")
    states = basis.states
    dim = basis.dim
    diag = np.zeros(dim)
    rows, cols = [], []
    for i, j in graph.edges:
        occ_i = (states >> i) & 1
        occ_j = (states >> j) & 1
        diag += np.where((occ_i & occ_j) == 1, U, 0.0)
        hop = np.nonzero(occ_i ^ occ_j)[0]
        if hop.size:
            targets = states[hop] ^ ((1 << i) | (1 << j))
            rows.append(hop)
            cols.append(basis.index_of_many(targets))
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        data = np.full(r.size, -J, dtype=np.float64)
    else:
        r = c = np.empty(0, dtype=np.int64)
        data = np.empty(0, dtype=np.float64)
    mat = sp.coo_matrix((data, (r, c)), shape=(dim, dim)).tocsr()
    mat = mat + sp.diags(diag, format="csr")
    mat.sum_duplicates()
    return SparseHamiltonian(basis, graph, float(J), float(U), mat)


def apply_hamiltonian(H: SparseHamiltonian, v: np.ndarray) -> np.ndarray:
    """H @ v with a dimension check (kernel for Krylov propagation)."""
    return H.apply(v)


def particle_hole_map(basis_from: FockBasis, basis_to: FockBasis,
                      amplitudes: np.ndarray) -> np.ndarray:
    """Map amplitudes between complementary sectors (N <-> n - N).

    The amplitude of bitmask s lands on the bitwise complement of s. At
    U = 0 this transformation commutes with the dynamics.
    """
    if basis_from.n_sites != basis_to.n_sites:
        raise ValidationError("sectors live on different lattices")
    n = basis_from.n_sites
    if basis_from.n_particles + basis_to.n_particles != n:
        raise ValidationError(
            f"sectors N={basis_from.n_particles} and N={basis_to.n_particles} "
            f"are not complementary on {n} sites")
    if amplitudes.shape != (basis_from.dim,):
        raise ValidationError("amplitude vector does not match the source sector")
    full = (1 << n) - 1
    complements = full ^ basis_from.states
    out = np.zeros(basis_to.dim, dtype=amplitudes.dtype)
    out[basis_to.index_of_many(complements)] = amplitudes
    return out
