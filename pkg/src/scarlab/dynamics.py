"""Time evolution under static and Floquet-driven Hamiltonians.

Evolution uses exact eigendecomposition for small operators and an
adaptive-order Lanczos propagator otherwise.  Floquet driving applies
diagonal pi-pulse unitaries between evolution segments; the companion
``average_hamiltonian`` computes the first-order toggling-frame mean of a
hopping term list, which is how the pulse sequence's cancellation of
longer-range couplings is checked without any time evolution.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .basis import FockBasis, ReducedBasis
from .lattices import ladder_site
from .operators import Hop, QuantumState, SparseOperator, compile_operator

log = logging.getLogger(__name__)

DENSE_EVOLVE_CAP = 4000
NORM_DRIFT_TOL = 1e-8


class KrylovError(RuntimeError):
    """Krylov propagation failed to converge within the order cap."""


def lanczos_expm(matvec, v: np.ndarray, dt: float, tol: float = 1e-11,
                 max_order: int = 90, max_splits: int = 30) -> np.ndarray:
    """``exp(-i H dt) v`` for Hermitian ``H`` via the Lanczos process.

    The Krylov order grows until the standard a-posteriori estimate drops
    below ``tol``; if the cap is reached the step is halved recursively.
    Vectors are fully reorthogonalized, so the tridiagonal coefficients
    stay accurate at large order.
    """
    if max_splits < 0:
        raise KrylovError("Krylov step splitting exceeded its cap")
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return v.copy()
    n = len(v)
    V = np.empty((max_order + 1, n), dtype=complex)
    V[0] = v / nrm
    alphas = np.empty(max_order)
    betas = np.empty(max_order)
    m = 0
    while m < max_order:
        w = matvec(V[m])
        a = float(np.real(np.vdot(V[m], w)))
        alphas[m] = a
        w = w - a * V[m]
        if m > 0:
            w = w - betas[m - 1] * V[m - 1]
        # full reorthogonalization, two BLAS passes
        basis = V[:m + 1]
        for _ in range(2):
            w = w - (basis.conj() @ w) @ basis
        b = float(np.linalg.norm(w))
        m += 1
        if m >= 2 or b < 1e-14:
            T = np.diag(alphas[:m]) + np.diag(betas[:m - 1], 1) + np.diag(betas[:m - 1], -1)
            y = sla.expm(-1j * dt * T)[:, 0]
            err = abs(b * y[-1]) * abs(dt)
            if b < 1e-14 or err < tol:
                return (y @ V[:m]) * nrm
        betas[m - 1] = b
        V[m] = w / b
    # did not converge: halve the step
    half = lanczos_expm(matvec, v, dt / 2, tol / 2, max_order, max_splits - 1)
    return lanczos_expm(matvec, half, dt / 2, tol / 2, max_order, max_splits - 1)


@dataclass
class StateTrajectory:
    """Sampled states along a time grid (strictly increasing)."""

    basis: FockBasis | ReducedBasis
    times: np.ndarray
    states: np.ndarray  # (n_times, dim)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")

    def state(self, k: int) -> np.ndarray:
        return self.states[k]


def _check_norms(states: np.ndarray):
    norms = np.linalg.norm(states, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > NORM_DRIFT_TOL:
        raise KrylovError(f"norm drift {drift:.2e} beyond {NORM_DRIFT_TOL}")
    if drift > 0:
        log.debug("renormalizing trajectory; max norm drift %.2e", drift)
    return states / norms[:, None]


def evolve(H: SparseOperator, psi0: QuantumState | np.ndarray, times,
           method: str = "auto", krylov_tol: float = 1e-11,
           eig=None) -> StateTrajectory:
    """Propagate ``psi(t) = exp(-i H t) psi0`` on a sample grid.

    ``method`` is ``"eigendecomposition"``, ``"krylov"`` (adaptive-order
    Lanczos), ``"taylor"`` (scaling-and-squaring Taylor stepping via
    ``scipy.sparse.linalg.expm_multiply``) or ``"auto"``
    (eigendecomposition up to dimension 4000, Taylor stepping above; the
    two sparse propagators agree to the Krylov tolerance and are
    cross-checked in the test suite).  ``times`` must be non-negative and
    strictly increasing; ``t = 0`` may be included.  A precomputed
    ``(eigenvalues, eigenvectors)`` pair amortizes repeated dense runs.
    """
    vec = psi0.vector if isinstance(psi0, QuantumState) else np.asarray(psi0, dtype=complex)
    basis = psi0.basis if isinstance(psi0, QuantumState) else H.basis
    if H.dim != len(vec):
        raise ValueError("state and operator dimensions differ")
    times = np.asarray(times, dtype=float)
    if method == "auto":
        method = "eigendecomposition" if H.dim <= DENSE_EVOLVE_CAP else "taylor"

    if method == "eigendecomposition":
        if eig is None:
            w, V = np.linalg.eigh(H.to_dense())
        else:
            w, V = eig
        c = V.conj().T @ vec
        phases = np.exp(-1j * np.outer(times, w))
        states = (V @ (phases * c[None, :]).T).T
    elif method in ("krylov", "taylor"):
        step = _stepper(H.matrix, method, krylov_tol)
        states = np.empty((len(times), H.dim), dtype=complex)
        cur = vec.astype(complex)
        t_prev = 0.0
        for k, t in enumerate(times):
            dt = t - t_prev
            if dt > 0:
                cur = step(cur, dt)
            t_prev = t
            states[k] = cur
    else:
        raise ValueError(f"unknown method {method!r}")
    states = _check_norms(states)
    return StateTrajectory(basis=basis, times=times, states=states)


def _stepper(mat, method: str, krylov_tol: float):
    """Single-step propagator ``v -> exp(-i mat dt) v`` for sparse methods."""
    from scipy.sparse.linalg import expm_multiply

    cmat = mat if np.iscomplexobj(mat.data) else mat.astype(complex)
    if method == "krylov":
        return lambda v, dt: lanczos_expm(lambda x: cmat @ x, v, dt, tol=krylov_tol)

    def taylor(v, dt):
        return expm_multiply(-1j * dt * cmat, v)

    return taylor


def evolve_diagonal_series(H: SparseOperator, psi0, times, diagonals: dict,
                           method: str = "auto", krylov_tol: float = 1e-11) -> dict:
    """Streamed expectation values of diagonal observables along an evolution.

    Avoids storing the state trajectory; intended for large sweeps where
    only a few occupation-diagonal series (imbalance, site densities) are
    required.  Returns ``{name: series}`` including the ``"time"`` grid.
    """
    vec = psi0.vector if isinstance(psi0, QuantumState) else np.asarray(psi0, dtype=complex)
    times = np.asarray(times, dtype=float)
    if method == "auto":
        method = "eigendecomposition" if H.dim <= DENSE_EVOLVE_CAP else "taylor"
    if method == "eigendecomposition":
        traj = evolve(H, psi0, times, method=method, krylov_tol=krylov_tol)
        probs = np.abs(traj.states) ** 2
        return {"time": times, **{k: probs @ d for k, d in diagonals.items()}}
    step = _stepper(H.matrix, method, krylov_tol)
    out = {k: np.empty(len(times)) for k in diagonals}
    cur = vec.astype(complex)
    t_prev = 0.0
    for k, t in enumerate(times):
        dt = t - t_prev
        if dt > 0:
            cur = step(cur, dt)
            nrm = np.linalg.norm(cur)
            if abs(nrm - 1.0) > NORM_DRIFT_TOL:
                raise KrylovError(f"norm drift {abs(nrm-1):.2e} beyond {NORM_DRIFT_TOL}")
            cur /= nrm
        t_prev = t
        probs = np.abs(cur) ** 2
        for name, d in diagonals.items():
            out[name][k] = probs @ d
    out["time"] = times
    return out


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

@dataclass
class ObservableSpec:
    """Named observable evaluated along a trajectory.

    ``kind`` is one of ``fidelity``, ``rung_imbalance``,
    ``generalized_imbalance``, ``site_sz`` (takes ``site``),
    ``scar_subspace_weight`` (takes ``tower_states``) or ``custom``
    (takes a Hermitian ``operator``).
    """

    kind: str
    site: int | None = None
    tower_states: np.ndarray | None = None
    operator: SparseOperator | None = None

    def __post_init__(self):
        if self.kind == "custom":
            if self.operator is None:
                raise ValueError("custom observable needs an operator")
            if self.operator.hermiticity_defect() > 1e-12:
                raise ValueError("custom observable must be Hermitian")


def _site_number_expectations(basis: FockBasis, states: np.ndarray) -> np.ndarray:
    occ = basis.occupations().astype(float)
    probs = np.abs(states) ** 2
    return probs @ occ


def _site_sz_expectations(basis: FockBasis, states: np.ndarray) -> np.ndarray:
    """Per-site <S^z>; spins use n - 1/2, fermions (n_up - n_dn)/2."""
    probs = np.abs(states) ** 2
    if basis.lattice.particle_kind == "spinful_fermion":
        codes = basis.codes
        sz = np.empty((basis.dim, basis.n_sites))
        for i in range(basis.n_sites):
            sz[:, i] = 0.5 * (((codes >> (2 * i)) & 1) - ((codes >> (2 * i + 1)) & 1))
        return probs @ sz
    occ = basis.occupations().astype(float)
    return probs @ (occ - 0.5)


def measure(traj: StateTrajectory, spec: ObservableSpec,
            reference: QuantumState | np.ndarray | None = None) -> np.ndarray:
    """Evaluate one observable on every sampled state."""
    basis = traj.basis
    states = traj.states
    if spec.kind == "fidelity":
        ref = _ref_vector(reference, states)
        return np.abs(states @ ref.conj()) ** 2
    if spec.kind == "rung_imbalance":
        lat = basis.lattice
        if lat.geometry != "ladder":
            raise ValueError("rung imbalance requires a ladder")
        n = _site_number_expectations(basis, states)
        L = lat.L
        tops = [ladder_site(m, "top", L) for m in range(L)]
        bots = [ladder_site(m, "bottom", L) for m in range(L)]
        return (n[:, tops].sum(axis=1) - n[:, bots].sum(axis=1)) / L
    if spec.kind == "generalized_imbalance":
        ref = _ref_vector(reference, states)
        occ_ref = _site_number_expectations(basis, ref[None, :])[0]
        sz_ref = 2.0 * occ_ref - 1.0
        n = _site_number_expectations(basis, states)
        sz = 2.0 * n - 1.0
        return (sz @ sz_ref) / basis.n_sites
    if spec.kind == "site_sz":
        if spec.site is None:
            raise ValueError("site_sz needs a site index")
        return _site_sz_expectations(basis, states)[:, spec.site]
    if spec.kind == "scar_subspace_weight":
        if spec.tower_states is None:
            raise ValueError("scar_subspace_weight needs tower states")
        ov = states @ spec.tower_states.conj().T
        return np.sum(np.abs(ov) ** 2, axis=1)
    if spec.kind == "custom":
        out = np.empty(len(states))
        for k, s in enumerate(states):
            out[k] = float(np.real(np.vdot(s, spec.operator.matrix @ s)))
        return out
    raise ValueError(f"unknown observable {spec.kind!r}")


def _ref_vector(reference, states):
    if reference is None:
        return states[0]
    if isinstance(reference, QuantumState):
        return reference.vector
    return np.asarray(reference, dtype=complex)


def generalized_imbalance_diagonal(basis: FockBasis, reference_config) -> np.ndarray:
    """Diagonal vector of ``(1/N) sum_i sigma^z_i(0) sigma^z_i`` for a product reference.

    Useful for evolving inside symmetry blocks: the vector is invariant
    under any symmetry that preserves the reference pattern's sign
    structure, so it reduces to a block diagonal via
    ``ReducedBasis.reduce_diagonal``.
    """
    ref = np.asarray(reference_config, dtype=float)
    sz_ref = 2.0 * ref - 1.0
    occ = basis.occupations().astype(float)
    sz = 2.0 * occ - 1.0
    return (sz @ sz_ref) / basis.n_sites


# ---------------------------------------------------------------------------
# Floquet driving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FloquetSchedule:
    """Piecewise evolution interleaved with rung pi-pulses.

    ``segments`` lists ``(fraction_of_T, rungs_pulsed_after_segment)`` in
    time order; fractions must sum to 1 and every rung index must be
    pulsed an even number of times per period so the pulses compose to
    the identity.  ``pulse_duration=0`` applies pulses instantaneously.
    """

    period: float
    segments: tuple
    pulse_duration: float = 0.0

    def __post_init__(self):
        fr = sum(f for f, _ in self.segments)
        if abs(fr - 1.0) > 1e-12:
            raise ValueError("segment fractions must sum to 1")
        counts: dict[int, int] = {}
        for _, rungs in self.segments:
            for r in rungs:
                counts[r] = counts.get(r, 0) + 1
        odd = [r for r, k in counts.items() if k % 2]
        if odd:
            raise ValueError(f"rungs {odd} are pulsed an odd number of times per period")


def four_rung_floquet_schedule(L: int, period: float, pulse_duration: float = 0.0) -> FloquetSchedule:
    """Built-in four-rung pulse sequence.

    Reading the period right to left in time, the quarter-period pulses
    hit rung classes (2,3), then (1,3), then (1,2) of each four-rung unit
    cell; rungs congruent to 0 are never pulsed.
    """
    def rungs(classes):
        return tuple(r for r in range(L) if r % 4 in classes)

    return FloquetSchedule(
        period=period,
        segments=(
            (0.25, rungs((2, 3))),
            (0.25, rungs((1, 3))),
            (0.25, rungs((1, 2))),
            (0.25, ()),
        ),
        pulse_duration=pulse_duration,
    )


def _rung_pulse_sign(basis: FockBasis, rungs: tuple) -> np.ndarray:
    """Diagonal of exp(i pi sum_{r in rungs} n_r) over the basis."""
    occ = basis.occupations()
    L = basis.lattice.L
    total = np.zeros(basis.dim, dtype=np.int64)
    for r in rungs:
        total += occ[:, ladder_site(r, "top", L)]
        total += occ[:, ladder_site(r, "bottom", L)]
    return np.where(total % 2 == 0, 1.0, -1.0)


def _rung_number_diagonal(basis: FockBasis, rungs: tuple) -> np.ndarray:
    occ = basis.occupations().astype(float)
    L = basis.lattice.L
    out = np.zeros(basis.dim)
    for r in rungs:
        out += occ[:, ladder_site(r, "top", L)]
        out += occ[:, ladder_site(r, "bottom", L)]
    return out


def floquet_evolve(H: SparseOperator, schedule: FloquetSchedule,
                   psi0: QuantumState, n_periods: int,
                   samples_per_period: int = 1,
                   krylov_tol: float = 1e-11) -> StateTrajectory:
    """Stroboscopic trajectory of the pulsed evolution.

    ``samples_per_period=1`` records period ends only;
    ``samples_per_period=len(segments)`` records after every segment
    (mid-period frames are gauge dependent and opt-in).  With a finite
    ``pulse_duration`` each pulse window is centred on its nominal
    instant and evolves under ``H`` plus the pulse generator.
    """
    basis = psi0.basis
    lat = basis.lattice
    if lat.geometry != "ladder":
        raise ValueError("rung pulses require a ladder basis")
    for _, rungs in schedule.segments:
        if any(r >= lat.L for r in rungs):
            raise ValueError("pulse rung index outside the ladder")
    n_seg = len(schedule.segments)
    if samples_per_period not in (1, n_seg):
        raise ValueError("samples_per_period must be 1 or the segment count")

    mat = H.matrix
    T = schedule.period
    tp = schedule.pulse_duration
    dense = H.dim <= DENSE_EVOLVE_CAP
    if dense:
        w, V = np.linalg.eigh(H.to_dense())
    else:
        step = _stepper(mat, "taylor", krylov_tol)

    def evolve_free(vec, dt):
        if dt <= 0:
            return vec
        if dense:
            return V @ (np.exp(-1j * w * dt) * (V.conj().T @ vec))
        return step(vec, dt)

    pulse_signs = {rungs: _rung_pulse_sign(basis, rungs) for _, rungs in schedule.segments if rungs}
    pulse_steps = {}
    if tp > 0:
        for _, rungs in schedule.segments:
            if rungs and rungs not in pulse_steps:
                gen = sp.diags(-(math.pi / tp) * _rung_number_diagonal(basis, rungs))
                pulse_steps[rungs] = _stepper((mat + gen).tocsr(), "taylor", krylov_tol)

    cur = psi0.vector.copy()
    times = [0.0]
    states = [cur.copy()]
    t = 0.0
    for _ in range(n_periods):
        for k, (frac, rungs) in enumerate(schedule.segments):
            seg_t = frac * T
            # carve half the pulse window from each adjacent segment
            lead = 0.5 * tp if (tp > 0 and rungs) else 0.0
            prev_rungs = schedule.segments[k - 1][1] if k > 0 else ()
            trail = 0.5 * tp if (tp > 0 and prev_rungs) else 0.0
            cur = evolve_free(cur, seg_t - lead - trail)
            if rungs:
                if tp > 0:
                    cur = pulse_steps[rungs](cur, tp)
                else:
                    cur = pulse_signs[rungs] * cur
            t += seg_t
            if samples_per_period == n_seg or k == n_seg - 1:
                times.append(t)
                states.append(cur.copy())
    states = _check_norms(np.asarray(states))
    return StateTrajectory(basis=basis, times=np.asarray(times), states=states)


def average_hamiltonian(H: SparseOperator, schedule: FloquetSchedule) -> SparseOperator:
    """First-order toggling-frame average of a hopping Hamiltonian.

    Builds the frames accumulated by the (instantaneous) pulses, flips
    each hopping amplitude in frames where exactly one endpoint site is
    pulsed, and averages with the segment fractions as weights.  Diagonal
    parts commute with the pulses and pass through unchanged.
    """
    if not H.hops and H.diagonal is None:
        raise ValueError("operator carries no term list to average")
    basis = H.basis
    lat = basis.lattice if isinstance(basis, FockBasis) else basis.parent.lattice
    L = lat.L

    def rung_sites(rungs):
        s = set()
        for r in rungs:
            s.add(ladder_site(r, "top", L))
            s.add(ladder_site(r, "bottom", L))
        return s

    frames = []
    current: set = set()
    for frac, rungs in schedule.segments:
        frames.append((frac, frozenset(current)))
        current = current.symmetric_difference(rung_sites(rungs))
    if current:
        raise ValueError("pulses do not compose to the identity over a period")

    new_hops = []
    for h in H.hops:
        coeff = 0.0
        for frac, sites in frames:
            flipped = (h.i in sites) != (h.j in sites)
            coeff += frac * (-1.0 if flipped else 1.0)
        new_hops.append(Hop(h.i, h.j, h.amp * coeff))
    return compile_operator(basis, new_hops, diagonal=H.diagonal,
                            symmetry_tags=frozenset(), conserved=H.conserved)
