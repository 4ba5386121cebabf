"""Sparse many-body operators compiled from hopping/diagonal term lists.

A Hamiltonian is described by
  * hopping terms ``(i, j, amp)`` meaning ``amp c_i^dag c_j + h.c.``
    (bosonic enhancement factors or Jordan-Wigner strings applied
    according to the basis particle kind), where ``i``/``j`` are site
    indices, or mode indices ``2*site + spin`` for spinful fermions, and
  * a diagonal vector over the basis (interactions, potentials, fields).

The same term list compiles against a full ``FockBasis`` or against a
``ReducedBasis`` (symmetry block), so spectra can be compared across the
two routes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import FockBasis, ReducedBasis


@dataclass(frozen=True)
class Hop:
    """``amp * c_i^dag c_j + h.c.`` between sites (or fermionic modes)."""

    i: int
    j: int
    amp: complex


def _popcount(x: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(x)
    v = np.ascontiguousarray(x.astype(np.int64)).view(np.uint8)
    return np.unpackbits(v).reshape(len(x), 64).sum(axis=1)


def _apply_hop(basis: FockBasis, codes: np.ndarray, i: int, j: int, amp: complex):
    """Vectorized action of ``amp c_i^dag c_j`` on an array of codes.

    Returns ``(new_codes, col_mask_indices, amplitudes)`` where only the
    surviving entries are kept.
    """
    kind = basis.lattice.particle_kind
    if kind in ("spinful_fermion", "spinless_fermion"):
        bi, bj = np.int64(1) << i, np.int64(1) << j
        ok = ((codes & bj) != 0) & ((codes & bi) == 0)
        src = codes[ok]
        new = (src ^ bj) | bi
        lo, hi = (i, j) if i < j else (j, i)
        between = ((np.int64(1) << hi) - 1) ^ ((np.int64(1) << (lo + 1)) - 1)
        signs = 1 - 2 * (_popcount(src & between).astype(np.int64) % 2)
        return new, np.nonzero(ok)[0], amp * signs.astype(float)
    base = basis.lattice.local_dim
    pi = base**i
    pj = base**j
    ni = (codes // pi) % base
    nj = (codes // pj) % base
    ok = (nj >= 1) & (ni <= base - 2)
    src = codes[ok]
    enh = np.sqrt((ni[ok] + 1.0) * nj[ok])
    new = src + pi - pj
    return new, np.nonzero(ok)[0], amp * enh


@dataclass
class SparseOperator:
    """Hermitian operator in a fixed basis.

    ``hops`` retains the hopping term list (used by the Floquet averaging
    machinery); ``symmetry_tags`` names the lattice symmetries the
    operator commutes with, and ``conserved`` the diagonal conserved
    quantities.
    """

    basis: FockBasis | ReducedBasis
    matrix: sp.csr_matrix
    hops: list[Hop] = field(default_factory=list)
    diagonal: np.ndarray | None = None
    symmetry_tags: frozenset = frozenset()
    conserved: tuple = ()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def expectation(self, vec: np.ndarray) -> float:
        return float(np.real(np.vdot(vec, self.matrix @ vec)))

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def spectral_bound(self) -> float:
        """Cheap upper bound on |eigenvalues| (Gershgorin row sums)."""
        m = self.matrix
        return float(np.max(np.abs(m).sum(axis=1)))


def compile_operator(
    basis: FockBasis,
    hops: list[Hop],
    diagonal: np.ndarray | None = None,
    symmetry_tags=frozenset(),
    conserved=(),
    dtype=None,
) -> SparseOperator:
    """Assemble a sparse matrix in the full sector basis."""
    dim = basis.dim
    rows, cols, vals = [], [], []
    for h in hops:
        for (i, j, amp) in ((h.i, h.j, h.amp), (h.j, h.i, np.conj(h.amp))):
            new, colidx, amps = _apply_hop(basis, basis.codes, i, j, amp)
            pos = basis.index_of_codes(new)
            if np.any(pos < 0):
                raise ValueError("hopping leaves the enumerated sector")
            rows.append(pos)
            cols.append(colidx)
            vals.append(amps)
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
        vals = np.empty(0)
    if dtype is None:
        dtype = complex if np.iscomplexobj(vals) and np.abs(vals.imag).max(initial=0) > 0 else float
    mat = sp.csr_matrix((vals.astype(dtype), (rows, cols)), shape=(dim, dim))
    if diagonal is not None:
        mat = mat + sp.diags(diagonal.astype(dtype), format="csr")
    mat.sum_duplicates()
    return SparseOperator(basis=basis, matrix=mat, hops=list(hops),
                          diagonal=diagonal, symmetry_tags=frozenset(symmetry_tags),
                          conserved=tuple(conserved))


def compile_oneway(basis: FockBasis, hops: list[Hop], diagonal: np.ndarray | None = None) -> sp.csr_matrix:
    """Assemble ``sum amp c_i^dag c_j`` terms without Hermitian conjugates.

    Used for non-Hermitian ladder operators (tower raising/lowering maps).
    """
    dim = basis.dim
    rows, cols, vals = [], [], []
    for h in hops:
        new, colidx, amps = _apply_hop(basis, basis.codes, h.i, h.j, h.amp)
        pos = basis.index_of_codes(new)
        if np.any(pos < 0):
            raise ValueError("hopping leaves the enumerated sector")
        rows.append(pos)
        cols.append(colidx)
        vals.append(amps)
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals).astype(complex)
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
        vals = np.empty(0, dtype=complex)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    if diagonal is not None:
        mat = mat + sp.diags(diagonal.astype(complex), format="csr")
    mat.sum_duplicates()
    return mat


def compile_reduced_operator(
    red: ReducedBasis,
    hops: list[Hop],
    diagonal: np.ndarray | None = None,
    symmetry_tags=frozenset(),
    conserved=(),
) -> SparseOperator:
    """Project a term list onto a symmetry block.

    Matrix elements follow the orbit-representative formula
    ``H[r(x), c] += h_x phi_x / sqrt(w_c w_r(x))`` with ``h_x`` the raw
    elements of ``H
    applied to the representative column ``c``.  The diagonal must be
    group invariant.
    """
    parent = red.parent
    rep_codes = parent.codes[red.rep_index]
    wsqrt = np.sqrt(red.weights)
    rows, cols, vals = [], [], []
    for h in hops:
        for (i, j, amp) in ((h.i, h.j, h.amp), (h.j, h.i, np.conj(h.amp))):
            new, colidx, amps = _apply_hop(parent, rep_codes, i, j, amp)
            pos = parent.index_of_codes(new)
            if np.any(pos < 0):
                raise ValueError("hopping leaves the enumerated sector")
            slot = red.conf_rep[pos]
            keep = slot >= 0
            phi = red.conf_phi[pos[keep]]
            r = slot[keep]
            c = colidx[keep]
            rows.append(r)
            cols.append(c)
            vals.append(amps[keep] * phi / (wsqrt[c] * wsqrt[r]))
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
    else:
        rows = np.empty(0, dtype=np.int64)
        cols = np.empty(0, dtype=np.int64)
        vals = np.empty(0, dtype=complex)
    dtype = float if (red.real_characters and np.abs(np.asarray(vals).imag).max(initial=0) < 1e-14) else complex
    if dtype is float:
        vals = np.real(vals)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(red.dim, red.dim))
    dvec = None
    if diagonal is not None:
        dvec = red.reduce_diagonal(diagonal)
        mat = mat + sp.diags(dvec.astype(dtype), format="csr")
    mat.sum_duplicates()
    return SparseOperator(basis=red, matrix=mat, hops=list(hops), diagonal=dvec,
                          symmetry_tags=frozenset(symmetry_tags), conserved=tuple(conserved))


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

NORM_TOL = 1e-10


class QuantumState:
    """Normalized complex amplitude vector over a basis."""

    def __init__(self, basis, vector: np.ndarray, normalize: bool = False):
        vec = np.asarray(vector, dtype=complex)
        nrm = np.linalg.norm(vec)
        if normalize:
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / nrm
        elif abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {nrm} deviates from 1 beyond {NORM_TOL}")
        self.basis = basis
        self.vector = vec

    @property
    def dim(self) -> int:
        return len(self.vector)

    @classmethod
    def from_config(cls, basis: FockBasis, config) -> "QuantumState":
        vec = np.zeros(basis.dim, dtype=complex)
        vec[basis.index(config)] = 1.0
        return cls(basis, vec)

    def overlap(self, other: "QuantumState") -> complex:
        return complex(np.vdot(self.vector, other.vector))

    def fidelity(self, other: "QuantumState") -> float:
        return float(abs(self.overlap(other)) ** 2)
