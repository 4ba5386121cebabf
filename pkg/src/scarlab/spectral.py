"""Diagonalization, level statistics, scar towers and energy-width diagnostics.

The tower machinery builds the ``L+1`` equally spaced eigenstates
generated by the rung raising operator from the all-antisymmetric rung
product state, verifies the restricted spectrum-generating algebra on any
candidate Hamiltonian, and decomposes states over exact eigenbases to
extract the fractional-energy width that predicts scar lifetimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .basis import FockBasis, ReducedBasis
from .lattices import ladder_site
from .operators import Hop, SparseOperator, compile_oneway

DENSE_CAP_DEFAULT = 16000


class DimensionCapError(ValueError):
    """Dense diagonalization refused; reduce to a symmetry sector first."""


@dataclass
class EigenDecomposition:
    """Sorted eigensystem with a residual check on sampled columns."""

    basis: object
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    max_residual: float


def full_diagonalize(H: SparseOperator, dense_cap: int = DENSE_CAP_DEFAULT,
                     residual_samples: int = 8) -> EigenDecomposition:
    """Complete sorted spectrum and eigenvectors of a Hermitian operator.

    Refuses dimensions above ``dense_cap`` (default 16000): use
    ``symmetry_reduce`` and diagonalize the blocks instead.
    """
    if H.dim > dense_cap:
        raise DimensionCapError(
            f"dimension {H.dim} exceeds the dense cap {dense_cap}; "
            "diagonalize symmetry sectors instead")
    w, v = np.linalg.eigh(H.to_dense())
    rng = np.random.default_rng(0)
    cols = rng.choice(H.dim, size=min(residual_samples, H.dim), replace=False)
    res = 0.0
    for k in cols:
        res = max(res, float(np.linalg.norm(H.matrix @ v[:, k] - w[k] * v[:, k])))
    return EigenDecomposition(basis=H.basis, eigenvalues=w, eigenvectors=v, max_residual=res)


# ---------------------------------------------------------------------------
# level-spacing statistics
# ---------------------------------------------------------------------------

@dataclass
class LevelStatistics:
    r_mean: float
    r_values: np.ndarray
    spacings: np.ndarray
    window: float
    n_levels: int
    n_degenerate_merged: int
    r_hist: tuple
    spacing_hist: tuple


def level_spacing_stats(eigenvalues, window: float = 0.5,
                        degeneracy_tol: float | None = None,
                        bins: int = 50) -> LevelStatistics:
    """Consecutive-gap ratio statistics in the central part of a spectrum.

    ``window`` keeps that central fraction of the sorted levels (by
    count).  Spacings below ``degeneracy_tol`` (default ``1e-10`` of the
    spectral span) are merged and counted.  The returned histograms are
    ``(counts, edges)`` pairs, with spacings normalized by their mean, so
    they can be compared against Wigner-Dyson or Poisson shapes.
    """
    e = np.sort(np.asarray(eigenvalues, dtype=float))
    n = len(e)
    lo = int(round(n * (0.5 - window / 2)))
    hi = int(round(n * (0.5 + window / 2)))
    e = e[lo:hi]
    if len(e) < 100:
        raise ValueError("need at least 100 levels in the window")
    span = e[-1] - e[0]
    tol = degeneracy_tol if degeneracy_tol is not None else 1e-10 * span
    s = np.diff(e)
    merged = int(np.sum(s <= tol))
    s = s[s > tol]
    r = np.minimum(s[:-1], s[1:]) / np.maximum(s[:-1], s[1:])
    s_norm = s / s.mean()
    return LevelStatistics(
        r_mean=float(r.mean()),
        r_values=r,
        spacings=s_norm,
        window=window,
        n_levels=len(e),
        n_degenerate_merged=merged,
        r_hist=np.histogram(r, bins=bins, range=(0.0, 1.0), density=True),
        spacing_hist=np.histogram(s_norm, bins=bins, range=(0.0, 4.0), density=True),
    )


R_MEAN_WIGNER_DYSON = 0.5295  # GOE reference value for the gap-ratio mean
R_MEAN_POISSON = 2.0 * math.log(2.0) - 1.0


# ---------------------------------------------------------------------------
# scar tower and the spectrum-generating algebra
# ---------------------------------------------------------------------------

@dataclass
class ScarTower:
    """Orthonormal tower states with their ladder operators.

    ``states[n]`` is proportional to ``(J^+)^n`` applied to the
    all-``d^-`` rung product state; nominal energies are
    ``(L - 2n) * rung_amplitude``.
    """

    L: int
    rung_amplitude: float
    states: np.ndarray          # (L+1, dim)
    energies: np.ndarray        # nominal (L - 2n) * t_perp
    j_plus: object              # sparse matrices
    j_minus: object
    j_z: object
    basis: FockBasis


def _tower_ground_state(basis: FockBasis) -> np.ndarray:
    """|d^-, d^-, ..., d^-> expanded over the one-per-rung configurations."""
    L = basis.lattice.L
    vec = np.zeros(basis.dim, dtype=complex)
    norm = 2.0 ** (-L / 2.0)
    for choice in range(2**L):
        config = [0] * basis.n_sites
        n_bottom = 0
        for m in range(L):
            if (choice >> m) & 1:
                config[ladder_site(m, "bottom", L)] = 1
                n_bottom += 1
            else:
                config[ladder_site(m, "top", L)] = 1
        vec[basis.index(config)] = norm * (-1.0) ** n_bottom
    return vec


def build_scar_tower(basis: FockBasis, L: int, rung_amplitude: float = 1.0) -> ScarTower:
    """Construct the (L+1)-state tower on the one-particle-per-rung sector.

    The basis must be the ``N = L`` particle-number sector of a hardcore
    ladder with ``L`` rungs.
    """
    lat = basis.lattice
    if lat.geometry != "ladder" or lat.L != L:
        raise ValueError("basis is not a ladder of the requested length")
    if lat.particle_kind not in ("hardcore_boson", "spin_half"):
        raise ValueError("tower lives on a hardcore-boson ladder")
    if basis.constraint.total_particles != L:
        raise ValueError("tower requires the N = L (one particle per rung) sector")

    hops_plus, hops_z = [], []
    diag_plus = np.zeros(basis.dim)
    occ = basis.occupations().astype(float)
    for m in range(L):
        top = ladder_site(m, "top", L)
        bot = ladder_site(m, "bottom", L)
        # |d^+><d^-| per rung = (n_t - n_b - t^dag b + b^dag t) / 2
        hops_plus.append(Hop(top, bot, -0.5))
        hops_plus.append(Hop(bot, top, +0.5))
        diag_plus += 0.5 * (occ[:, top] - occ[:, bot])
        hops_z.append(Hop(top, bot, 1.0))
    j_plus = compile_oneway(basis, hops_plus, diagonal=diag_plus)
    j_minus = j_plus.conj().T.tocsr()
    jz = compile_oneway(basis, hops_z + [Hop(h.j, h.i, np.conj(h.amp)) for h in hops_z])

    states = np.zeros((L + 1, basis.dim), dtype=complex)
    states[0] = _tower_ground_state(basis)
    for n in range(1, L + 1):
        nxt = j_plus @ states[n - 1]
        nrm = np.linalg.norm(nxt)
        if nrm < 1e-13:
            raise RuntimeError("tower terminated early; basis sector mismatch")
        states[n] = nxt / nrm
    energies = np.array([(L - 2 * n) * rung_amplitude for n in range(L + 1)])
    return ScarTower(L=L, rung_amplitude=rung_amplitude, states=states,
                     energies=energies, j_plus=j_plus, j_minus=j_minus, j_z=jz,
                     basis=basis)


@dataclass
class SgaReport:
    """Residuals of the restricted spectrum-generating algebra."""

    max_residual: float
    rayleigh_energies: np.ndarray
    measured_spacings: np.ndarray
    spacing_mean: float
    spacing_spread: float
    annihilator_norms: np.ndarray | None = None


def verify_sga(H: SparseOperator, tower: ScarTower,
               annihilator=None) -> SgaReport:
    """Check that the tower states are equally spaced eigenstates of ``H``.

    Reports ``max_n ||H psi_n - <H> psi_n||`` with Rayleigh-quotient
    energies and their consecutive spacings.  When the symmetric /
    spectrum-generating / annihilator split is available, pass the
    annihilator part to record ``||H_A psi_n||`` as well.
    """
    states = tower.states
    n_states, dim = states.shape
    if H.dim != dim:
        raise ValueError("dimension mismatch between operator and tower")
    energies = np.empty(n_states)
    max_res = 0.0
    for n in range(n_states):
        hv = H.matrix @ states[n]
        e = float(np.real(np.vdot(states[n], hv)))
        energies[n] = e
        max_res = max(max_res, float(np.linalg.norm(hv - e * states[n])))
    spacings = np.diff(energies)
    ann = None
    if annihilator is not None:
        mat = annihilator.matrix if isinstance(annihilator, SparseOperator) else annihilator
        ann = np.array([float(np.linalg.norm(mat @ states[n])) for n in range(n_states)])
    return SgaReport(
        max_residual=max_res,
        rayleigh_energies=energies,
        measured_spacings=spacings,
        spacing_mean=float(spacings.mean()),
        spacing_spread=float(np.max(np.abs(spacings - spacings.mean()))),
        annihilator_norms=ann,
    )


# rung basis states used by the algebra split, in (n_top, n_bottom) occupation
_D_STATES = {
    "d0": {(0, 0): 1.0},
    "d1": {(1, 1): 1.0},
    "d+": {(1, 0): 1.0 / math.sqrt(2), (0, 1): 1.0 / math.sqrt(2)},
    "d-": {(1, 0): 1.0 / math.sqrt(2), (0, 1): -1.0 / math.sqrt(2)},
}


def two_rung_dyad(basis: FockBasis, m: int, ket: tuple[str, str], bra: tuple[str, str]):
    """Sparse ``|ket_m ket_{m+1}><bra_m bra_{m+1}|`` on rungs ``m, m+1``."""
    import scipy.sparse as sp

    L = basis.lattice.L
    sites = [ladder_site(m, "top", L), ladder_site(m, "bottom", L),
             ladder_site(m + 1, "top", L), ladder_site(m + 1, "bottom", L)]
    ket_amp = {}
    for (o1, a1) in _D_STATES[ket[0]].items():
        for (o2, a2) in _D_STATES[ket[1]].items():
            ket_amp[o1 + o2] = a1 * a2
    bra_amp = {}
    for (o1, a1) in _D_STATES[bra[0]].items():
        for (o2, a2) in _D_STATES[bra[1]].items():
            bra_amp[o1 + o2] = a1 * a2

    rows, cols, vals = [], [], []
    for idx in range(basis.dim):
        config = list(basis.config(idx))
        local = tuple(config[s] for s in sites)
        if local not in bra_amp:
            continue
        amp_in = bra_amp[local]
        for out_local, amp_out in ket_amp.items():
            new = config.copy()
            for s, o in zip(sites, out_local):
                new[s] = o
            try:
                j = basis.index(tuple(new))
            except KeyError:
                continue
            rows.append(j)
            cols.append(idx)
            vals.append(amp_out * np.conj(amp_in))
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


def sga_split(basis: FockBasis, t_perp: float, t_par: float):
    """(H_sym, H_SG, H_A) decomposition of the bare frustrated ladder.

    ``H_SG`` is the rung term, ``H_A`` the annihilator combination of
    two-rung dyads scaled by ``t_par`` (open boundary), and ``H_sym`` the
    remainder, which commutes with the tower ladder operators.
    """
    from .models import LadderParams, build_pi_flux_ladder

    L = basis.lattice.L
    H = build_pi_flux_ladder(basis, LadderParams(L=L, t_perp=t_perp, t_par=t_par))
    H_sg = build_pi_flux_ladder(basis, LadderParams(L=L, t_perp=t_perp, t_par=0.0))
    ha = None
    for m in range(L - 1):
        block = (two_rung_dyad(basis, m, ("d0", "d-"), ("d+", "d0"))
                 + two_rung_dyad(basis, m, ("d-", "d0"), ("d0", "d+"))
                 - two_rung_dyad(basis, m, ("d-", "d1"), ("d1", "d+"))
                 - two_rung_dyad(basis, m, ("d1", "d-"), ("d+", "d1")))
        block = block + block.conj().T
        ha = block if ha is None else ha + block
    ha = t_par * ha
    h_sym = H.matrix - H_sg.matrix - ha
    return h_sym, H_sg.matrix, ha


# ---------------------------------------------------------------------------
# overlap spectra and fractional-energy width
# ---------------------------------------------------------------------------

@dataclass
class SpectralDecomposition:
    """Eigenvalues with a state's overlap weights ``|<psi|E_k>|^2``."""

    energies: np.ndarray
    weights: np.ndarray
    dropped_mass: float
    source: str = ""
    method: str = "dense"


def overlap_spectrum(psi: np.ndarray, decomp: EigenDecomposition,
                     floor: float = 1e-14, source: str = "") -> SpectralDecomposition:
    """Overlap weights of a state over an eigenbasis, with mass accounting."""
    vec = psi.vector if hasattr(psi, "vector") else np.asarray(psi, dtype=complex)
    amps = decomp.eigenvectors.conj().T @ vec
    w = np.abs(amps) ** 2
    keep = w > floor
    dropped = float(w[~keep].sum())
    return SpectralDecomposition(
        energies=decomp.eigenvalues[keep].copy(),
        weights=w[keep].copy(),
        dropped_mass=dropped,
        source=source,
        method="dense",
    )


def spectral_measure_lanczos(H: SparseOperator, psi: np.ndarray, order: int = 400,
                             floor: float = 1e-14, source: str = "") -> SpectralDecomposition:
    """Seeded-Lanczos approximation of the weighted spectral measure.

    With full reorthogonalization the Ritz values and first-component
    weights reproduce the measure ``sum_k |<psi|E_k>|^2 delta(E - E_k)``
    to quadrature accuracy; eigenstates orthogonal to the seed never
    enter, which is exactly what overlap-weighted statistics need.
    Cross-validated against ``overlap_spectrum`` on dense systems.
    """
    vec = psi.vector if hasattr(psi, "vector") else np.asarray(psi, dtype=complex)
    mat = H.matrix
    nrm = np.linalg.norm(vec)
    V = [vec / nrm]
    alphas, betas = [], []
    m = min(order, H.dim)
    for k in range(m):
        w = mat @ V[k]
        a = float(np.real(np.vdot(V[k], w)))
        alphas.append(a)
        w = w - a * V[k]
        if k > 0:
            w = w - betas[-1] * V[k - 1]
        for _ in range(2):
            for q in V:
                w = w - np.vdot(q, w) * q
        b = float(np.linalg.norm(w))
        if b < 1e-13 or k == m - 1:
            break
        betas.append(b)
        V.append(w / b)
    theta, S = sla.eigh_tridiagonal(alphas, betas[:len(alphas) - 1])
    weights = np.abs(S[0, :]) ** 2 * nrm**2
    keep = weights > floor
    return SpectralDecomposition(
        energies=theta[keep],
        weights=weights[keep],
        dropped_mass=float(weights[~keep].sum()),
        source=source,
        method="lanczos",
    )


@dataclass
class FractionalEnergyStats:
    """Distances to the exact-tower comb and their weighted spread."""

    delta_e: float
    anchor: float
    fractional: np.ndarray      # unsigned distances in [0, delta_e / 2]
    signed: np.ndarray
    weights: np.ndarray
    sigma: float
    anchor_mode: str = "nominal"


def fractional_energy_width(decomp: SpectralDecomposition, delta_e: float,
                            anchor: float, anchor_mode: str = "nominal") -> FractionalEnergyStats:
    """Weighted spread of eigenenergies about the comb ``anchor + n delta_e``.

    ``sigma`` is the weighted standard deviation of the signed distances
    to the nearest comb point (signed distances avoid the spurious mean
    a folded distribution would produce).
    """
    if delta_e <= 0:
        raise ValueError("delta_e must be positive")
    e = decomp.energies
    w = decomp.weights / decomp.weights.sum()
    signed = e - anchor - delta_e * np.round((e - anchor) / delta_e)
    mean = float(np.sum(w * signed))
    sigma = float(math.sqrt(max(0.0, np.sum(w * (signed - mean) ** 2))))
    return FractionalEnergyStats(
        delta_e=delta_e,
        anchor=anchor,
        fractional=np.abs(signed),
        signed=signed,
        weights=w,
        sigma=sigma,
        anchor_mode=anchor_mode,
    )


def measured_tower_spacing(decomp: SpectralDecomposition) -> tuple[float, float]:
    """(delta_e, anchor) from the two largest-weight spectral peaks.

    Used for families whose tower spacing convention is measured rather
    than assumed; the anchor is the strongest peak's energy.
    """
    order = np.argsort(decomp.weights)[::-1]
    e0 = decomp.energies[order[0]]
    e1 = decomp.energies[order[1]]
    return abs(e1 - e0), float(e0)


def fidelity_from_overlaps(decomp: SpectralDecomposition, times) -> np.ndarray:
    """Eigenbasis reconstruction ``|sum_k w_k e^{-i E_k t}|^2`` of the fidelity."""
    times = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.outer(times, decomp.energies))
    return np.abs(phases @ decomp.weights) ** 2
