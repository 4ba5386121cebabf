"""Many-body configuration bases and symmetry-sector reduction.

Configurations are stored as integers in a mixed-radix encoding (site 0 is
the least significant digit of the code) and kept in ascending code order,
which defines the canonical configuration order used everywhere.  Lookup
is a binary search on the sorted code array.

Symmetry reduction works with orbit representatives: for an abelian group
``G`` of signed site permutations with characters ``chi_g``, the reduced
basis vector attached to a representative ``c`` is

    |c~> = (|G| w_c)^(-1/2) Sum_g chi_g^* U_g |c>,
    w_c  = Sum_{g in Stab(c)} chi_g^* sigma_g(c),

and representatives with vanishing weight ``w_c`` drop out of the sector.
The per-configuration sums ``phi_x = Sum_{g: g(x)=rep(x)} chi_g^*
sigma_g(x)`` are precomputed once and drive both operator projection and
state projection.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .lattices import LatticeSpec, ladder_site


class EmptySectorError(ValueError):
    """Raised when a constraint admits no configurations."""


class ConfigurationNotFoundError(KeyError):
    """Raised when a configuration lies outside the enumerated sector."""


class IncompatibleSymmetryError(ValueError):
    """Raised when a requested symmetry does not commute with the model."""


@dataclass(frozen=True)
class SectorConstraint:
    """Conserved-quantity constraints selecting a Hilbert-space sector.

    ``total_particles`` fixes the particle number; ``total_sz`` (in units
    of hbar, so half-integers for odd site numbers) fixes the collective
    spin projection for spin-1/2 or spinful-fermion lattices.
    """

    total_particles: int | None = None
    total_sz: float | None = None


def _spin_up_count(constraint: SectorConstraint, n_sites: int) -> int | None:
    """Number of up spins implied by a total_sz constraint on spins."""
    if constraint.total_sz is None:
        return None
    n_up = constraint.total_sz + n_sites / 2.0
    if abs(n_up - round(n_up)) > 1e-9 or not (0 <= round(n_up) <= n_sites):
        raise EmptySectorError(f"total_sz={constraint.total_sz} unreachable on {n_sites} sites")
    return int(round(n_up))


@dataclass
class FockBasis:
    """Ordered configuration basis of one conservation sector.

    ``codes`` is the sorted integer encoding of every configuration;
    ``index`` / ``config`` convert between configurations and their
    canonical positions.
    """

    lattice: LatticeSpec
    constraint: SectorConstraint
    codes: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.codes)

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    # -- encoding ----------------------------------------------------------
    @property
    def _base(self) -> int:
        return self.lattice.local_dim

    def encode(self, config) -> int:
        """Integer code of an occupation word.

        Spinful fermions take per-site ``(n_up, n_dn)`` pairs; all other
        kinds take one occupation per site.
        """
        kind = self.lattice.particle_kind
        code = 0
        if kind == "spinful_fermion":
            if len(config) != self.n_sites:
                raise ValueError("configuration has wrong site count")
            for i, (nu, nd) in enumerate(config):
                code |= (int(nu) & 1) << (2 * i)
                code |= (int(nd) & 1) << (2 * i + 1)
            return code
        if len(config) != self.n_sites:
            raise ValueError("configuration has wrong site count")
        base = self._base
        for i, n in enumerate(config):
            if not 0 <= int(n) < base:
                raise ValueError(f"occupation {n} out of range at site {i}")
            code += int(n) * base**i
        return code

    def decode(self, code: int):
        kind = self.lattice.particle_kind
        if kind == "spinful_fermion":
            return tuple(((code >> (2 * i)) & 1, (code >> (2 * i + 1)) & 1) for i in range(self.n_sites))
        base = self._base
        return tuple((code // base**i) % base for i in range(self.n_sites))

    def occupations(self) -> np.ndarray:
        """(dim, n_sites) occupation matrix; fermions give total n per site."""
        base = self._base
        if self.lattice.particle_kind == "spinful_fermion":
            out = np.empty((self.dim, self.n_sites), dtype=np.int8)
            for i in range(self.n_sites):
                out[:, i] = ((self.codes >> (2 * i)) & 1) + ((self.codes >> (2 * i + 1)) & 1)
            return out
        out = np.empty((self.dim, self.n_sites), dtype=np.int8)
        for i in range(self.n_sites):
            out[:, i] = (self.codes // base**i) % base
        return out

    # -- lookup ------------------------------------------------------------
    def index_of_codes(self, codes: np.ndarray) -> np.ndarray:
        """Positions of integer codes in the basis; -1 when absent."""
        pos = np.searchsorted(self.codes, codes)
        pos = np.clip(pos, 0, self.dim - 1)
        ok = self.codes[pos] == codes
        return np.where(ok, pos, -1)

    def index(self, config) -> int:
        """Canonical index of a configuration (round-trips with ``config``)."""
        code = self.encode(config)
        pos = int(np.searchsorted(self.codes, code))
        if pos >= self.dim or self.codes[pos] != code:
            raise ConfigurationNotFoundError(f"configuration {config} not in sector")
        return pos

    def config(self, i: int):
        return self.decode(int(self.codes[i]))


def enumerate_basis(lattice: LatticeSpec, constraint: SectorConstraint = SectorConstraint()) -> FockBasis:
    """Enumerate the complete, canonically ordered basis of a sector.

    Raises ``EmptySectorError`` when the constraint is unsatisfiable.
    """
    n = lattice.n_sites
    kind = lattice.particle_kind
    codes: list[int] = []

    if kind in ("hardcore_boson", "spin_half", "spinless_fermion"):
        n_part = constraint.total_particles
        if kind == "spin_half":
            n_up = _spin_up_count(constraint, n)
            if n_up is not None:
                if n_part is not None and n_part != n_up:
                    raise EmptySectorError("total_particles conflicts with total_sz")
                n_part = n_up
        if n_part is None:
            codes = list(range(2**n))
        else:
            if not 0 <= n_part <= n:
                raise EmptySectorError(f"{n_part} hardcore particles on {n} sites")
            codes = [sum(1 << i for i in occ) for occ in itertools.combinations(range(n), n_part)]
    elif kind == "softcore_boson":
        n_part = constraint.total_particles
        cap = lattice.n_max
        if n_part is None:
            raise ValueError("softcore enumeration requires total_particles")
        if n_part > n * cap:
            raise EmptySectorError(f"{n_part} bosons exceed capacity {n * cap}")
        base = cap + 1
        place = [base**i for i in range(n)]

        def fill(site, left, code):
            if site == n:
                if left == 0:
                    codes.append(code)
                return
            if left > (n - site) * cap:
                return
            for k in range(min(cap, left) + 1):
                fill(site + 1, left - k, code + k * place[site])

        fill(0, n_part, 0)
    elif kind == "spinful_fermion":
        n_part = constraint.total_particles
        if n_part is None:
            raise ValueError("fermion enumeration requires total_particles")
        n_up_fixed = None
        if constraint.total_sz is not None:
            sz2 = 2 * constraint.total_sz
            if abs(sz2 - round(sz2)) > 1e-9:
                raise EmptySectorError("total_sz must be a half-integer")
            n_up_fixed = (n_part + int(round(sz2))) // 2
            if (n_part + int(round(sz2))) % 2 != 0 or not 0 <= n_up_fixed <= n_part:
                raise EmptySectorError("total_sz incompatible with particle number")
        n_modes = 2 * n
        if n_part > n_modes:
            raise EmptySectorError(f"{n_part} fermions exceed {n_modes} modes")
        for occ in itertools.combinations(range(n_modes), n_part):
            if n_up_fixed is not None:
                n_up = sum(1 for m in occ if m % 2 == 0)
                if n_up != n_up_fixed:
                    continue
            codes.append(sum(1 << m for m in occ))
    else:  # pragma: no cover
        raise ValueError(kind)

    if not codes:
        raise EmptySectorError("constraint admits no configurations")
    arr = np.array(sorted(codes), dtype=np.int64)
    return FockBasis(lattice=lattice, constraint=constraint, codes=arr)


def configuration_index(basis: FockBasis, config) -> int:
    """Index of ``config`` in the canonical order (see ``FockBasis.index``)."""
    return basis.index(config)


# ---------------------------------------------------------------------------
# symmetry operations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetrySector:
    """Requested symmetry quantum numbers.

    ``momentum_kx`` is an integer sector index ``K`` (phase convention
    ``exp(-2 pi i K / L)`` per unit translation); parity-type labels take
    ``+1``/``-1``.  A label left ``None`` is not resolved.  Combining
    momentum with a parity requires ``K in {0, L/2}`` where the little
    group is real.
    """

    momentum_kx: int | None = None
    reversal_py: int | None = None
    legswap_pxp: int | None = None
    spinflip_f: int | None = None

    def requested(self) -> list[str]:
        names = []
        if self.momentum_kx is not None:
            names.append("translation")
        if self.reversal_py is not None:
            names.append("reversal")
        if self.legswap_pxp is not None:
            names.append("legswap_gauge")
        if self.spinflip_f is not None:
            names.append("spin_flip")
        return names


def _site_permutation_codes(basis: FockBasis, perm: np.ndarray) -> np.ndarray:
    """Apply a site permutation to every code (bosons/spins only)."""
    base = basis.lattice.local_dim
    codes = basis.codes
    out = np.zeros_like(codes)
    if base == 2:
        for i in range(basis.n_sites):
            out |= ((codes >> i) & 1) << int(perm[i])
    else:
        place = np.array([base**i for i in range(basis.n_sites)], dtype=np.int64)
        for i in range(basis.n_sites):
            out += ((codes // place[i]) % base) * place[int(perm[i])]
    return out


def _rung_parity_sign(basis: FockBasis, codes: np.ndarray) -> np.ndarray:
    """(-1)^(total occupation of odd rungs), the leg-swap gauge factor."""
    L = basis.lattice.L
    total = np.zeros(len(codes), dtype=np.int64)
    base = basis.lattice.local_dim
    for m in range(1, L, 2):
        for leg in ("top", "bottom"):
            i = ladder_site(m, leg, L)
            total += (codes // base**i) % base
    return np.where(total % 2 == 0, 1.0, -1.0)


class _GroupElement:
    """One signed permutation with its character."""

    def __init__(self, codes: np.ndarray, signs: np.ndarray, char: complex):
        self.codes = codes
        self.signs = signs
        self.char = char


def _build_group(basis: FockBasis, sector: SymmetrySector) -> list[_GroupElement]:
    lat = basis.lattice
    n = basis.n_sites
    if lat.particle_kind in ("spinful_fermion", "spinless_fermion"):
        raise IncompatibleSymmetryError("symmetry reduction of fermionic bases is not supported")

    generators: list[tuple[list[np.ndarray], list[np.ndarray], list[complex]]] = []

    def perm_codes(perm):
        return _site_permutation_codes(basis, perm)

    if sector.momentum_kx is not None:
        if not lat.periodic:
            raise IncompatibleSymmetryError("momentum requires periodic boundary")
        L = lat.L
        K = sector.momentum_kx % L
        point_group = any(v is not None for v in (sector.reversal_py, sector.legswap_pxp))
        if point_group and K not in (0, L // 2 if L % 2 == 0 else 0):
            raise IncompatibleSymmetryError(
                "momentum combined with a parity needs K in {0, L/2}")
        if lat.geometry == "ladder":
            perm = np.empty(n, dtype=np.int64)
            for m in range(L):
                for leg in ("top", "bottom"):
                    perm[ladder_site(m, leg, L)] = ladder_site((m + 1) % L, leg, L)
        else:
            perm = np.array([(i + 1) % L for i in range(L)], dtype=np.int64)
        powers_c, powers_s, powers_chi = [], [], []
        codes_k = basis.codes.copy()
        for k in range(L):
            powers_c.append(codes_k.copy())
            powers_s.append(np.ones(basis.dim))
            powers_chi.append(np.exp(-2j * np.pi * K * k / L))
            codes_k = _site_permutation_codes(
                FockBasis(lat, basis.constraint, codes_k), perm)
        generators.append((powers_c, powers_s, powers_chi))

    def add_z2(codes2, signs2, char_value):
        generators.append((
            [basis.codes.copy(), codes2],
            [np.ones(basis.dim), signs2],
            [1.0, complex(char_value)],
        ))

    if sector.reversal_py is not None:
        if sector.reversal_py not in (1, -1):
            raise ValueError("reversal_py must be +1 or -1")
        if lat.geometry == "ladder":
            L = lat.L
            perm = np.empty(n, dtype=np.int64)
            for m in range(L):
                for leg in ("top", "bottom"):
                    perm[ladder_site(m, leg, L)] = ladder_site(L - 1 - m, leg, L)
        elif lat.geometry == "chain":
            perm = np.array([lat.L - 1 - i for i in range(lat.L)], dtype=np.int64)
        else:
            raise IncompatibleSymmetryError("reversal is defined for ladders and chains")
        add_z2(perm_codes(perm), np.ones(basis.dim), sector.reversal_py)

    if sector.legswap_pxp is not None:
        if sector.legswap_pxp not in (1, -1):
            raise ValueError("legswap_pxp must be +1 or -1")
        if lat.geometry != "ladder":
            raise IncompatibleSymmetryError("leg swap is defined for ladders")
        L = lat.L
        perm = np.empty(n, dtype=np.int64)
        for m in range(L):
            perm[ladder_site(m, "top", L)] = ladder_site(m, "bottom", L)
            perm[ladder_site(m, "bottom", L)] = ladder_site(m, "top", L)
        swapped = perm_codes(perm)
        # gauge factor depends only on rung totals, hence commutes with the swap
        add_z2(swapped, _rung_parity_sign(basis, basis.codes), sector.legswap_pxp)

    if sector.spinflip_f is not None:
        if sector.spinflip_f not in (1, -1):
            raise ValueError("spinflip_f must be +1 or -1")
        base = lat.local_dim
        maxcode = 0
        for i in range(n):
            maxcode += (base - 1) * base**i
        add_z2(maxcode - basis.codes, np.ones(basis.dim), sector.spinflip_f)

    # cartesian product of the generator cyclic groups
    elements = [_GroupElement(basis.codes.copy(), np.ones(basis.dim), 1.0)]
    for codes_list, signs_list, chi_list in generators:
        new_elements = []
        for el in elements:
            # el maps c -> (el.codes[c], el.signs[c]); compose with generator powers
            order = np.argsort(basis.codes)  # identity; codes already sorted
            for gc, gs, gchi in zip(codes_list, signs_list, chi_list):
                if gchi == 1.0 and gc is codes_list[0] and el.char == 1.0 and el is elements[0]:
                    pass
                # locate el output codes in the sector, then apply g
                pos = np.searchsorted(basis.codes, el.codes)
                if np.any(basis.codes[np.clip(pos, 0, basis.dim - 1)] != el.codes):
                    raise IncompatibleSymmetryError("symmetry leaves the sector")
                comp_codes = gc[pos]
                comp_signs = el.signs * gs[pos]
                new_elements.append(_GroupElement(comp_codes, comp_signs, el.char * gchi))
        elements = new_elements
    return elements


@dataclass
class ReducedBasis:
    """Symmetry-adapted basis of orbit representatives.

    ``rep_index`` points into the parent basis; ``weights`` are the
    stabilizer sums ``w_c``; ``conf_rep`` / ``conf_phi`` map every parent
    configuration to its representative slot and projection phase.
    """

    parent: FockBasis
    sector: SymmetrySector
    rep_index: np.ndarray
    weights: np.ndarray
    conf_rep: np.ndarray
    conf_phi: np.ndarray
    group_order: int
    real_characters: bool

    @property
    def dim(self) -> int:
        return len(self.rep_index)

    @property
    def rep_codes(self) -> np.ndarray:
        return self.parent.codes[self.rep_index]

    def project_state(self, psi: np.ndarray) -> np.ndarray:
        """Components of a full-sector vector on this symmetry block."""
        contrib = psi * self.conf_phi
        out = np.zeros(self.dim, dtype=complex)
        valid = self.conf_rep >= 0
        np.add.at(out, self.conf_rep[valid], contrib[valid])
        return out / np.sqrt(self.group_order * self.weights)

    def embed_state(self, red: np.ndarray) -> np.ndarray:
        """Full-sector vector of a symmetry-block vector (adjoint of project)."""
        psi = np.zeros(self.parent.dim, dtype=complex)
        valid = self.conf_rep >= 0
        idx = self.conf_rep[valid]
        psi[valid] = np.conj(self.conf_phi[valid]) * red[idx] / np.sqrt(
            self.group_order * self.weights[idx])
        return psi

    def reduce_diagonal(self, diag: np.ndarray) -> np.ndarray:
        """Project a group-invariant diagonal operator onto the block."""
        vals = diag[self.rep_index]
        return vals


def symmetry_reduce(
    basis: FockBasis,
    sector: SymmetrySector,
    hamiltonian_symmetry_tags: set[str] | frozenset[str],
) -> ReducedBasis:
    """Build the orbit-representative basis of one symmetry sector.

    ``hamiltonian_symmetry_tags`` names the symmetries the target
    Hamiltonian family commutes with (attached by the model builders);
    requesting anything outside that set raises
    ``IncompatibleSymmetryError`` naming the offender.
    """
    tags = set(hamiltonian_symmetry_tags)
    for name in sector.requested():
        if name not in tags:
            raise IncompatibleSymmetryError(
                f"symmetry {name!r} does not commute with this Hamiltonian family")

    elements = _build_group(basis, sector)
    n_conf = basis.dim
    complex_chars = any(abs(el.char.imag) > 1e-14 for el in elements)

    rep_code = basis.codes.copy()
    for el in elements:
        rep_code = np.minimum(rep_code, el.codes)

    phi = np.zeros(n_conf, dtype=complex)
    for el in elements:
        hit = el.codes == rep_code
        phi[hit] += np.conj(el.char) * el.signs[hit]

    is_rep = basis.codes == rep_code
    # stabilizer weight of each representative: terms with g(c) = c
    w = np.zeros(n_conf, dtype=complex)
    for el in elements:
        fixed = el.codes == basis.codes
        w[fixed] += np.conj(el.char) * el.signs[fixed]
    if np.max(np.abs(w.imag)) > 1e-10:
        raise RuntimeError("stabilizer weights acquired imaginary parts")
    w = w.real

    keep = is_rep & (w > 1e-12)
    rep_index = np.nonzero(keep)[0]
    weights = w[rep_index]

    # map configurations to kept representative slots
    rep_pos_all = basis.index_of_codes(rep_code)
    slot_of_conf = -np.ones(n_conf, dtype=np.int64)
    slot_lookup = -np.ones(n_conf, dtype=np.int64)
    slot_lookup[rep_index] = np.arange(len(rep_index))
    slot_of_conf = slot_lookup[rep_pos_all]

    return ReducedBasis(
        parent=basis,
        sector=sector,
        rep_index=rep_index,
        weights=weights,
        conf_rep=slot_of_conf,
        conf_phi=phi,
        group_order=len(elements),
        real_characters=not complex_chars,
    )
