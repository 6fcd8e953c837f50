"""Open-system route to decoherence: trace out an environment.

The closed composite lives on H_S (x) H_E with a system-major Kronecker
ordering (full index = i*dim_E + alpha).  Relevant observables are the
lifted ones O_S (x) I_E; the information they see is carried entirely by
the reduced state rho_S = Tr_E rho.  The matching coarse-graining
projector on Liouville space replaces rho by (Tr_E rho) (x) I_E/dim_E,
which reproduces every lifted pairing and is Hermitian and idempotent.

The concrete scenario is a pure-dephasing spin bath,

    H = sum_k (g_k/2) sigma_z^(S) (x) sigma_z^(k),

chosen because the reduced coherence has an exact product closed form
that serves as an independent oracle for the full simulation.  hbar = 1;
times are in units of inverse energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .liouville import (
    BiorthogonalBasis,
    DimensionMismatchError,
    build_projector,
    validate_density,
    validate_observable,
)

__all__ = [
    "ResourceCapError",
    "CompositeSystem",
    "SpinBathParams",
    "PreferredBasis",
    "SPIN_CAP",
    "DENSE_SPIN_CAP",
    "lift_observable",
    "partial_trace",
    "eid_projector",
    "coarse_state_eid",
    "evolve_unitary",
    "purity",
    "spin_bath_scenario",
    "spin_bath_hamiltonian_diagonal",
    "spin_bath_initial_vector",
    "spin_bath_reduced_dynamics",
    "spin_bath_coherence",
    "spin_bath_recurrence_window",
    "preferred_basis",
]

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)

# caps for the spin-bath scenario; full state dimension is 2^(n+1)
SPIN_CAP = 14          # state-vector path
DENSE_SPIN_CAP = 10    # dense (CompositeSystem, DensityOperator) materialization


class ResourceCapError(ValueError):
    """Requested problem size exceeds the configured desk-scale cap."""


@dataclass(frozen=True)
class CompositeSystem:
    """System(x)environment split with the closed-system Hamiltonian."""

    dim_s: int
    dim_e: int
    hamiltonian: np.ndarray

    def __post_init__(self):
        if self.dim_s < 1 or self.dim_e < 1:
            raise DimensionMismatchError("dimensions must be positive")
        h = np.asarray(self.hamiltonian, dtype=complex)
        d = self.dim_s * self.dim_e
        if h.shape != (d, d):
            raise DimensionMismatchError(
                f"H has shape {h.shape}, expected ({d}, {d})"
            )
        validate_observable(h)
        object.__setattr__(self, "hamiltonian", h)

    @property
    def dim(self):
        return self.dim_s * self.dim_e


@dataclass(frozen=True)
class SpinBathParams:
    """Pure-dephasing bath: couplings g_k, bath Bloch angles, qubit (a, b).

    Bath spin k starts in cos(theta_k/2)|0> + sin(theta_k/2)|1>; the
    system qubit starts in a|0> + b|1>.
    """

    couplings: tuple
    angles: tuple
    amplitude_0: complex = 1 / np.sqrt(2)
    amplitude_1: complex = 1 / np.sqrt(2)

    def __post_init__(self):
        g = tuple(float(x) for x in self.couplings)
        th = tuple(float(x) for x in self.angles)
        if len(g) != len(th) or not g:
            raise ValueError(
                f"{len(g)} couplings vs {len(th)} angles (need equal, nonzero)"
            )
        norm = abs(self.amplitude_0) ** 2 + abs(self.amplitude_1) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|a|^2+|b|^2 = {norm!r}, expected 1")
        object.__setattr__(self, "couplings", g)
        object.__setattr__(self, "angles", th)
        object.__setattr__(self, "amplitude_0", complex(self.amplitude_0))
        object.__setattr__(self, "amplitude_1", complex(self.amplitude_1))

    @property
    def n_spins(self):
        return len(self.couplings)


# ---------------------------------------------------------------------------
# lifting, tracing, the open-system projector
# ---------------------------------------------------------------------------

def lift_observable(obs_s, dim_e):
    """O_S (x) I_E: the relevant-observable embedding."""
    obs_s = np.asarray(obs_s, dtype=complex)
    validate_observable(obs_s)
    return np.kron(obs_s, np.eye(dim_e, dtype=complex))


def partial_trace(rho, dim_s, dim_e):
    """Reduced state (rho_S)_ij = sum_alpha rho_{i alpha, j alpha}."""
    rho = np.asarray(rho)
    d = dim_s * dim_e
    if rho.shape != (d, d):
        raise DimensionMismatchError(
            f"state shape {rho.shape} does not factor as {dim_s}x{dim_e}"
        )
    return np.trace(rho.reshape(dim_s, dim_e, dim_s, dim_e), axis1=1, axis2=3)


def eid_projector(dim_s, dim_e):
    """Coarse-graining superoperator X -> (Tr_E X) (x) I_E/dim_E.

    Built from the biorthonormal pairs E_ij (x) I_E/sqrt(dim_E) (matrix
    units on the system factor), so it is Hermitian as well as idempotent.
    """
    pairs = []
    eye_e = np.eye(dim_e, dtype=complex) / np.sqrt(dim_e)
    for j in range(dim_s):
        for i in range(dim_s):
            unit = np.zeros((dim_s, dim_s), dtype=complex)
            unit[i, j] = 1.0
            pairs.append(np.kron(unit, eye_e))
    basis = BiorthogonalBasis(pairs, pairs)
    return build_projector(basis)


def coarse_state_eid(rho_s, dim_e):
    """The coarse state (Tr_E rho) (x) I_E / dim_E as a density matrix."""
    rho_s = np.asarray(rho_s, dtype=complex)
    return np.kron(rho_s, np.eye(dim_e, dtype=complex) / dim_e)


# ---------------------------------------------------------------------------
# exact unitary evolution
# ---------------------------------------------------------------------------

def evolve_unitary(rho0, hamiltonian, times):
    """rho(t) = e^{-iHt} rho0 e^{+iHt} via one eigendecomposition of H.

    Returns an array of shape (len(times), d, d).
    """
    h = np.asarray(hamiltonian, dtype=complex)
    validate_observable(h)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != h.shape:
        raise DimensionMismatchError(
            f"state shape {rho0.shape} vs H shape {h.shape}"
        )
    evals, vecs = np.linalg.eigh(h)
    rho_eig = vecs.conj().T @ rho0 @ vecs
    out = np.empty((len(times),) + rho0.shape, dtype=complex)
    for k, t in enumerate(times):
        phase = np.exp(-1j * evals * t)
        # e^{-iHt} rho e^{iHt} in the eigenbasis is an outer phase mask
        out[k] = vecs @ (np.outer(phase, phase.conj()) * rho_eig) @ vecs.conj().T
    return out


def purity(rho):
    """Tr(rho^2), real part."""
    rho = np.asarray(rho)
    return float(np.sum(rho * rho.T).real)


# ---------------------------------------------------------------------------
# spin-bath scenario
# ---------------------------------------------------------------------------

def spin_bath_hamiltonian_diagonal(params):
    """Diagonal of H in the computational product basis (length 2^(n+1)).

    H = sum_k (g_k/2) sigma_z^(S) (x) sigma_z^(k) is diagonal; entry for
    (system bit s, bath bits b) is z_s * sum_k (g_k/2) z_k with z = +/-1.
    """
    n = params.n_spins
    bath = np.zeros(2 ** n)
    for k, g in enumerate(params.couplings):
        # sigma_z pattern of bath spin k in kron order: +1/-1 blocks
        block = 2 ** (n - 1 - k)
        pattern = np.tile(np.repeat(np.array([1.0, -1.0]), block), 2 ** k)
        bath += 0.5 * g * pattern
    return np.concatenate([bath, -bath])


def spin_bath_initial_vector(params):
    """Product initial vector (a|0> + b|1>) (x) prod_k |theta_k>."""
    psi = np.array([params.amplitude_0, params.amplitude_1], dtype=complex)
    for th in params.angles:
        psi = np.kron(psi, np.array([np.cos(th / 2), np.sin(th / 2)],
                                    dtype=complex))
    return psi


def spin_bath_scenario(params, cap=SPIN_CAP, dense_cap=DENSE_SPIN_CAP):
    """Dense (CompositeSystem, initial DensityOperator) for the spin bath.

    The state dimension is 2^(n+1).  Beyond ``dense_cap`` spins the dense
    matrices stop being desk-scale (GB-sized), so the call is refused and
    the state-vector route (:func:`spin_bath_reduced_dynamics`, valid up
    to ``cap``) is pointed to instead.
    """
    n = params.n_spins
    if n > cap:
        raise ResourceCapError(
            f"{n} bath spins means state dimension 2^{n + 1} = {2 ** (n + 1)}; "
            f"cap is {cap} spins"
        )
    if n > dense_cap:
        raise ResourceCapError(
            f"dense matrices at {n} bath spins would be "
            f"{2 ** (n + 1)}x{2 ** (n + 1)}; use spin_bath_reduced_dynamics "
            f"(state-vector route, cap {cap}) instead"
        )
    h = np.diag(spin_bath_hamiltonian_diagonal(params)).astype(complex)
    psi = spin_bath_initial_vector(params)
    rho0 = np.outer(psi, psi.conj())
    system = CompositeSystem(dim_s=2, dim_e=2 ** n, hamiltonian=h)
    return system, validate_density(rho0)


def spin_bath_reduced_dynamics(params, times, cap=SPIN_CAP):
    """rho_S(t) from the full 2^(n+1)-dimensional simulation.

    H is diagonal in the product basis and the initial state is pure, so
    the exact evolution is a phase mask on the state vector; the partial
    trace of |psi><psi| is psi_mat @ psi_mat^dag with psi reshaped to
    (2, 2^n).  No approximation is made.  Returns (len(times), 2, 2).
    """
    n = params.n_spins
    if n > cap:
        raise ResourceCapError(
            f"{n} bath spins means state dimension 2^{n + 1} = {2 ** (n + 1)}; "
            f"cap is {cap} spins"
        )
    diag = spin_bath_hamiltonian_diagonal(params)
    psi0 = spin_bath_initial_vector(params)
    out = np.empty((len(times), 2, 2), dtype=complex)
    for k, t in enumerate(times):
        psi_mat = (np.exp(-1j * diag * t) * psi0).reshape(2, -1)
        out[k] = psi_mat @ psi_mat.conj().T
    return out


def spin_bath_coherence(params, times):
    """Closed form for the reduced coherence rho_S,01(t).

    rho_S,01(t) = a conj(b) prod_k [cos(g_k t) - i cos(theta_k) sin(g_k t)],
    the product of single-spin bath overlaps <chi_k|e^{-i g_k sigma_z t}|chi_k>.
    """
    times = np.asarray(times, dtype=float)
    coh = np.full(times.shape,
                  params.amplitude_0 * np.conj(params.amplitude_1),
                  dtype=complex)
    for g, th in zip(params.couplings, params.angles):
        coh *= np.cos(g * times) - 1j * np.cos(th) * np.sin(g * times)
    return coh


def spin_bath_recurrence_window(couplings):
    """Conservative time window free of near-recurrences.

    The coherence is a trigonometric polynomial whose frequencies are the
    2^n signed sums sum_k (+/-)g_k; below 2*pi over the minimal positive
    gap of that spectrum the quasi-periodic signal cannot re-align.  A
    single spin gives pi/g, the period of |cos(g t)|.  Returns inf when
    the spectrum collapses to a point (all couplings zero).
    """
    freqs = np.zeros(1)
    for g in couplings:
        freqs = np.concatenate([freqs + g, freqs - g])
    freqs = np.unique(np.round(freqs, 12))
    if freqs.size < 2:
        return np.inf
    gap = float(np.min(np.diff(freqs)))
    if gap <= 0:
        return np.inf
    return 2 * np.pi / gap


# ---------------------------------------------------------------------------
# preferred basis
# ---------------------------------------------------------------------------

class PreferredBasis(NamedTuple):
    eigenvalues: np.ndarray   # descending
    eigenvectors: np.ndarray  # columns, matching order
    degenerate: bool


def preferred_basis(rho_s, gap_tol=1e-8):
    """Instantaneous eigenbasis of a reduced state, populations descending.

    When the spectrum has a gap below ``gap_tol`` the eigenvectors are not
    unique; any orthonormal choice is returned and the ``degenerate`` flag
    is set so that downstream users rely on eigenvalues only.
    """
    rho_s = np.asarray(rho_s, dtype=complex)
    evals, evecs = np.linalg.eigh(rho_s)
    order = np.argsort(evals)[::-1]
    evals = evals[order].real
    evecs = evecs[:, order]
    degenerate = bool(evals.size > 1 and np.min(-np.diff(evals)) < gap_tol)
    return PreferredBasis(evals, evecs, degenerate)
