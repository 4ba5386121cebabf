"""Lattice geometries and canonical site indexing.

Every module in the package addresses sites through the conventions fixed
here.  Ladders use a snake (boustrophedon) site order so that nearest
snake neighbours alternate between rung and leg bonds; under a
Jordan-Wigner string along this order the rung and leg hoppings carry no
string, which makes the boson/fermion comparison a pure sign bookkeeping
exercise.  Chains and rectangles are indexed in the obvious linear /
row-major way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

GEOMETRIES = ("ladder", "chain", "rectangle")
PARTICLE_KINDS = (
    "hardcore_boson",
    "softcore_boson",
    "spin_half",
    "spinless_fermion",
    "spinful_fermion",
)
BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry, boundary and local degree of freedom of a lattice.

    Parameters
    ----------
    geometry : str
        One of ``"ladder"`` (two legs, ``L`` rungs), ``"chain"`` (``L``
        sites) or ``"rectangle"`` (``lx * ly`` sites, row-major).
    L : int
        Number of rungs (ladder) or sites (chain).  Ignored for
        rectangles, where ``lx``/``ly`` are used instead.
    boundary : str
        ``"open"`` or ``"periodic"``.
    particle_kind : str
        ``"hardcore_boson"``, ``"softcore_boson"`` (per-site cap
        ``n_max``), ``"spin_half"`` or ``"spinful_fermion"``.
    n_max : int
        Per-site occupation cap for softcore bosons (>= 1).
    """

    geometry: str = "ladder"
    L: int = 1
    boundary: str = "open"
    particle_kind: str = "hardcore_boson"
    n_max: int = 1
    lx: int = 0
    ly: int = 0

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.particle_kind not in PARTICLE_KINDS:
            raise ValueError(f"unknown particle kind {self.particle_kind!r}")
        if self.geometry == "rectangle":
            if self.lx < 1 or self.ly < 1:
                raise ValueError("rectangle needs lx, ly >= 1")
        elif self.L < 1:
            raise ValueError("L must be >= 1")
        if self.particle_kind == "softcore_boson" and self.n_max < 1:
            raise ValueError("n_max must be >= 1 for softcore bosons")

    @property
    def n_sites(self) -> int:
        if self.geometry == "ladder":
            return 2 * self.L
        if self.geometry == "rectangle":
            return self.lx * self.ly
        return self.L

    @property
    def local_dim(self) -> int:
        """Number of occupation values per site (per-site digit base)."""
        if self.particle_kind == "softcore_boson":
            return self.n_max + 1
        if self.particle_kind == "spinful_fermion":
            return 4  # (n_up, n_dn) in {0,1}^2
        return 2

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"


def ladder_site(m: int, leg: str, L: int) -> int:
    """Snake index of the site on rung ``m`` (0-based) and leg ``top``/``bottom``.

    Even rungs place the top site first, odd rungs the bottom site, so the
    index sequence walks the ladder like (0 3 4 / 1 2 5) for L = 3.
    """
    if leg not in ("top", "bottom"):
        raise ValueError("leg must be 'top' or 'bottom'")
    first_is_top = m % 2 == 0
    if (leg == "top") == first_is_top:
        return 2 * m
    return 2 * m + 1


def ladder_rungs(L: int) -> list[tuple[int, int]]:
    """(top, bottom) snake-index pair for every rung."""
    return [(ladder_site(m, "top", L), ladder_site(m, "bottom", L)) for m in range(L)]


def ladder_leg_bonds(L: int, distance: int, periodic: bool) -> list[tuple[int, int, str]]:
    """Same-leg bonds ``(i, j, leg)`` between rungs m and m+distance."""
    bonds = []
    last = L if periodic else L - distance
    for m in range(last):
        mp = (m + distance) % L
        for leg in ("top", "bottom"):
            bonds.append((ladder_site(m, leg, L), ladder_site(mp, leg, L), leg))
    return bonds


def chain_bonds(L: int, periodic: bool, distance: int = 1) -> list[tuple[int, int]]:
    last = L if periodic else L - distance
    return [(m, (m + distance) % L) for m in range(last)]


def rectangle_bonds(lx: int, ly: int, periodic: bool) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds of an lx x ly rectangle, row-major indexing."""
    bonds = []
    for y in range(ly):
        for x in range(lx):
            i = y * lx + x
            if x + 1 < lx:
                bonds.append((i, y * lx + x + 1))
            elif periodic and lx > 2:
                bonds.append((i, y * lx))
            if y + 1 < ly:
                bonds.append((i, (y + 1) * lx + x))
            elif periodic and ly > 2:
                bonds.append((i, x))
    # lx or ly == 2 with PBC would double-count the single bond; 3x3 and
    # larger are the cases used in practice
    return bonds


def nearest_neighbor_bonds(spec: LatticeSpec) -> list[tuple[int, int]]:
    """Nearest-neighbour pairs for chain or rectangle geometries."""
    if spec.geometry == "chain":
        return chain_bonds(spec.L, spec.periodic)
    if spec.geometry == "rectangle":
        return rectangle_bonds(spec.lx, spec.ly, spec.periodic)
    raise ValueError("nearest_neighbor_bonds supports chain and rectangle")
