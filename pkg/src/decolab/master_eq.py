"""Coarse-grained dynamics as a projected Liouville equation.

With L the commutator superoperator (i d|rho)/dt = L|rho), hbar = 1) and
pi a coarse-graining projector, the projected state obeys

    i d|rho_G)/dt = L|rho_G) + N|rho(t)),      N = pi L - L pi,

which is exact but not closed: the defect N feeds the fine-grained state
back in.  The P/Q elimination closes it at the price of memory: with
Q = 1 - P and y = P|rho),

    i dy/dt = PLP y + PLQ e^{-iQLQ t} Q|rho_0)
              - i int_0^t PLQ e^{-iQLQ(t-s)} QLP y(s) ds.

Both forms are integrated here and cross-validated against the oracle
pi applied to the exactly evolved state.  The convolution is realized
by auxiliary memory modes (the eigenmodes of QLQ on range(Q)), which
reproduces the memory integral exactly rather than by kernel sampling;
an optional finite memory window truncates the integral explicitly and
says so.

The module also carries a small dissipative generator (not of
commutator form) whose coherence-decay and population-relaxation rates
are set independently, for exercising decoherence-vs-relaxation time
ordering; nothing in the projection machinery depends on it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .liouville import (
    CoarseState,
    DimensionMismatchError,
    unvec,
    validate_observable,
    vec,
)

__all__ = [
    "Liouvillian",
    "DefectSuperOp",
    "MemoryKernel",
    "DissipativeToy",
    "build_liouvillian",
    "defect",
    "evolve_master_exact",
    "evolve_nakajima_zwanzig",
    "memory_kernel",
    "evolve_linear_generator",
    "dissipative_toy",
]


@dataclass(frozen=True)
class Liouvillian:
    """Superoperator of i d|rho)/dt = L|rho) with L|rho) = [H, rho].

    L inherits Hermiticity from H (so its spectrum is real: the Bohr
    frequency differences), it annihilates the identity, and e^{-iLt}
    is the unitary conjugation group on operators.
    """

    superop: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.superop, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(
                f"superoperator shape {m.shape} is not square"
            )
        d2 = m.shape[0]
        d = int(round(np.sqrt(d2)))
        if d * d != d2:
            raise DimensionMismatchError(
                f"superoperator size {d2} is not a squared dimension"
            )
        dev = float(np.max(np.abs(m - m.conj().T)))
        if dev > 1e-10:
            raise ValueError(
                f"commutator superoperator must be Hermitian (real Bohr "
                f"spectrum); deviation {dev:.3e}"
            )
        resid = float(np.max(np.abs(m @ vec(np.eye(d)))))
        if resid > 1e-10:
            raise ValueError(f"L does not annihilate the identity: {resid:.3e}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "superop", m)

    @property
    def dim(self):
        return int(round(np.sqrt(self.superop.shape[0])))

    def spectrum(self):
        """Real eigenvalues (the Bohr frequency differences)."""
        return np.linalg.eigvalsh(self.superop)


@dataclass(frozen=True)
class DefectSuperOp:
    """N = pi L - L pi, the non-closure of the projected equation."""

    superop: np.ndarray

    def norm(self):
        return float(np.linalg.norm(self.superop))

    def is_zero(self, tol=1e-12):
        return self.norm() <= tol


def build_liouvillian(hamiltonian):
    """L = I (x) H - H^T (x) I in column-stacking vectorization."""
    h = np.asarray(hamiltonian, dtype=complex)
    validate_observable(h)
    eye = np.eye(h.shape[0], dtype=complex)
    return Liouvillian(np.kron(eye, h) - np.kron(h.T, eye))


def defect(pi, liouville):
    """N = pi L - L pi; zero exactly when the projector commutes with L."""
    pi = np.asarray(pi, dtype=complex)
    lm = liouville.superop
    if pi.shape != lm.shape:
        raise DimensionMismatchError(
            f"projector shape {pi.shape} vs Liouvillian {lm.shape}"
        )
    return DefectSuperOp(pi @ lm - lm @ pi)


# ---------------------------------------------------------------------------
# exact projected evolution
# ---------------------------------------------------------------------------

def _integrate_complex(rhs, y0, times, rtol, atol):
    t0, t1 = float(times[0]), float(times[-1])
    sol = solve_ivp(rhs, (t0, t1), y0, t_eval=np.asarray(times, dtype=float),
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    return sol.y


def evolve_master_exact(rho0, pi, liouville, times, rtol=1e-10, atol=1e-12):
    """Integrate i d|rho_G)/dt = L|rho_G) + N|rho(t)).

    The feedback term uses |rho(t)) from the exact unitary group
    e^{-iLt} (eigendecomposition of the Hermitian L); the projected
    equation itself is integrated numerically, so agreement with
    pi|rho(t)) is a consistency check, not a tautology.  Returns a list
    of :class:`CoarseState`.
    """
    pi = np.asarray(pi, dtype=complex)
    lm = liouville.superop
    n = defect(pi, liouville).superop
    x0 = vec(np.asarray(rho0, dtype=complex))
    if pi.shape[0] != x0.size:
        raise DimensionMismatchError("projector does not match state dimension")
    evals, vmat = np.linalg.eigh(lm)
    x0_eig = vmat.conj().T @ x0
    n_eig = n @ vmat  # feed eigen-coordinates straight into N

    def rhs(t, y):
        x_t = n_eig @ (np.exp(-1j * evals * t) * x0_eig)
        return -1j * (lm @ y + x_t)

    times = np.asarray(times, dtype=float)
    ys = _integrate_complex(rhs, pi @ x0, times, rtol, atol)
    return [CoarseState(unvec(ys[:, k])) for k in range(times.size)]


# ---------------------------------------------------------------------------
# memory-kernel (P/Q) route
# ---------------------------------------------------------------------------

def _range_basis(projector, tol=1e-10):
    """Orthonormal basis of the column space of an idempotent matrix."""
    u, s, _ = np.linalg.svd(np.asarray(projector, dtype=complex))
    rank = int(np.sum(s > tol * max(1.0, float(s[0]))))
    return u[:, :rank]


def _pq_system(pi, liouville):
    """Restricted operators for the P/Q split of L."""
    p = np.asarray(pi, dtype=complex)
    lm = liouville.superop
    q = np.eye(p.shape[0], dtype=complex) - p
    u_q = _range_basis(q)
    a = u_q.conj().T @ (q @ lm @ q) @ u_q      # QLQ on range(Q)
    lam, smat = np.linalg.eig(a)
    s_inv = np.linalg.inv(smat)
    plp = p @ lm @ p
    into_modes = s_inv @ u_q.conj().T @ (q @ lm @ p)   # y -> dz drive
    from_modes = p @ lm @ (u_q @ smat)                 # z -> dy drive
    return p, q, plp, lam, into_modes, from_modes, u_q, smat, s_inv


@dataclass(frozen=True)
class MemoryKernel:
    """K(tau) samples on range(P) coordinates (basis columns included)."""

    taus: np.ndarray
    matrices: list
    basis: np.ndarray


def memory_kernel(pi, liouville, taus):
    """Sample K(tau) = PLQ e^{-iQLQ tau} QLP restricted to range(P).

    Returns a :class:`MemoryKernel` whose matrices act on coordinates in
    the returned orthonormal basis of range(P); K(0) is PLQ QLP itself.
    """
    p, q, _, lam, into_modes, from_modes, *_ = _pq_system(pi, liouville)
    u_p = _range_basis(p)
    left = u_p.conj().T @ from_modes
    right = into_modes @ u_p
    mats = [left @ np.diag(np.exp(-1j * lam * float(tau))) @ right
            for tau in taus]
    return MemoryKernel(np.asarray(taus, dtype=float), mats, u_p)


def evolve_nakajima_zwanzig(rho0, pi, liouville, times, kernel_window=None,
                            relevant_only=True, rtol=1e-10, atol=1e-12,
                            history_step=None):
    """Solve the closed P/Q equation for y = P|rho).

    The memory integral is carried exactly by the eigenmodes of QLQ on
    range(Q): the pair (y, z) with z the mode coordinates of Q|rho)
    obeys a local linear system whose y-component reproduces the
    convolution equation.  ``relevant_only`` starts the modes at zero
    (the Q|rho_0) = 0 assumption); otherwise Q|rho_0) seeds them, which
    is exactly the inhomogeneous term.

    A finite ``kernel_window`` w replaces the integral over [0, t] by
    [t - w, t] (delayed-subtraction of the mode history, fixed-step
    integration); if w is shorter than the requested horizon a
    truncation warning with a crude bound estimate is emitted.  The
    windowed path requires ``relevant_only``.
    """
    times = np.asarray(times, dtype=float)
    p, q, plp, lam, into_modes, from_modes, u_q, smat, s_inv = \
        _pq_system(pi, liouville)
    x0 = vec(np.asarray(rho0, dtype=complex))
    y0 = p @ x0
    if relevant_only:
        z0 = np.zeros(lam.size, dtype=complex)
    else:
        z0 = s_inv @ (u_q.conj().T @ (q @ x0))
    horizon = float(times[-1] - times[0])

    if kernel_window is None or kernel_window >= horizon:
        yz0 = np.concatenate([y0, z0])
        ny = y0.size

        def rhs(t, yz):
            y, z = yz[:ny], yz[ny:]
            dy = -1j * (plp @ y + from_modes @ z)
            dz = -1j * (lam * z + into_modes @ y)
            return np.concatenate([dy, dz])

        ys = _integrate_complex(rhs, yz0, times, rtol, atol)
        return [CoarseState(unvec(ys[:ny, k])) for k in range(times.size)]

    if not relevant_only:
        raise ValueError(
            "a finite kernel window cannot be combined with the "
            "inhomogeneous Q rho_0 term; the delayed subtraction would "
            "truncate it too"
        )
    # crude tail bound: |e^{-iQLQ tau}| stays O(1) on a real spectrum, so
    # nothing decays by itself and the dropped history is bounded only by
    # its duration times the coupling strengths
    drop = (np.linalg.norm(from_modes, 2) * np.linalg.norm(into_modes, 2)
            * max(horizon - kernel_window, 0.0))
    warnings.warn(
        f"memory window {kernel_window} is shorter than the horizon "
        f"{horizon}; dropped-tail bound ~ {drop:.3e} * sup|y|",
        RuntimeWarning, stacklevel=2)
    return _nz_windowed(y0, lam, plp, into_modes, from_modes, times,
                        kernel_window, history_step)


def _nz_windowed(y0, lam, plp, into_modes, from_modes, times, window,
                 history_step):
    """Fixed-step integration with the mode history cut at t - window."""
    t0, t1 = float(times[0]), float(times[-1])
    dt = history_step or min(0.002, window / 50)
    steps = int(np.ceil((t1 - t0) / dt))
    dt = (t1 - t0) / steps
    decay = np.exp(-1j * lam * window)
    grid = t0 + dt * np.arange(steps + 1)
    hist_z = np.zeros((steps + 1, lam.size), dtype=complex)

    def z_at(t):
        # linear interpolation into the recorded history; zero before t0
        if t <= t0:
            return np.zeros(lam.size, dtype=complex)
        k = min(int((t - t0) / dt), steps - 1)
        frac = (t - grid[k]) / dt
        return hist_z[k] * (1 - frac) + hist_z[k + 1] * frac

    def windowed(z, t):
        if t - window <= t0:
            return z
        return z - decay * z_at(t - window)

    y = y0.astype(complex).copy()
    z = np.zeros(lam.size, dtype=complex)
    out = {}
    want = {float(t) for t in times}

    def record(t, yv):
        for tw in list(want):
            if abs(tw - t) <= 0.5 * dt:
                out.setdefault(tw, yv.copy())

    record(t0, y)
    for k in range(steps):
        t = grid[k]

        def f(state, tt):
            yv, zv = state
            dy = -1j * (plp @ yv + from_modes @ windowed(zv, tt))
            dz = -1j * (lam * zv + into_modes @ yv)
            return dy, dz

        k1 = f((y, z), t)
        k2 = f((y + 0.5 * dt * k1[0], z + 0.5 * dt * k1[1]), t + 0.5 * dt)
        k3 = f((y + 0.5 * dt * k2[0], z + 0.5 * dt * k2[1]), t + 0.5 * dt)
        k4 = f((y + dt * k3[0], z + dt * k3[1]), t + dt)
        y = y + (dt / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        z = z + (dt / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        hist_z[k + 1] = z
        record(grid[k + 1], y)

    return [CoarseState(unvec(out[float(t)])) for t in times]


# ---------------------------------------------------------------------------
# dissipative toy generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DissipativeToy:
    """d=3 linear generator with separately dialed decay rates.

    Coherences rho_ij (i != j) evolve as e^{(-gamma_decohere + i phi_ij) t};
    populations relax toward ``equilibrium`` at rate gamma_relax (trace
    preserving).  Constructed, not derived: it stands in for dissipative
    dynamics so the decoherence-vs-relaxation ordering can be exercised
    with known ground truth t_D = 1/gamma_decohere, t_R = 1/gamma_relax.
    """

    generator: np.ndarray
    equilibrium: np.ndarray
    gamma_decohere: float
    gamma_relax: float
    frequencies: np.ndarray
    rho0: np.ndarray

    @property
    def dim(self):
        return self.equilibrium.size


def dissipative_toy(gamma_decohere=1.0, gamma_relax=0.2):
    """The named d=3 fixture: t_D = 1/gamma_decohere, t_R = 1/gamma_relax."""
    d = 3
    p_star = np.array([0.5, 0.3, 0.2])
    freqs = np.array([0.0, 1.3, 2.9])
    gen = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            row = i + d * j  # column-stacking vec index of entry (i, j)
            if i == j:
                continue
            gen[row, row] = -gamma_decohere + 1j * (freqs[i] - freqs[j])
    # population sector: dp/dt = -gamma (p - p*); trace conservation makes
    # it linear, dp/dt = gamma (p* 1^T - I) p
    for i in range(d):
        for j in range(d):
            gen[i + d * i, j + d * j] = gamma_relax * (
                p_star[i] - (1.0 if i == j else 0.0))
    v = np.sqrt(np.array([0.2, 0.5, 0.3], dtype=complex))
    rho0 = np.outer(v, v.conj())
    return DissipativeToy(gen, p_star, float(gamma_decohere),
                          float(gamma_relax), freqs, rho0)


def evolve_linear_generator(generator, rho0, times):
    """d|rho)/dt = G|rho) via eigendecomposition of a diagonalizable G."""
    g = np.asarray(generator, dtype=complex)
    x0 = vec(np.asarray(rho0, dtype=complex))
    if g.shape != (x0.size, x0.size):
        raise DimensionMismatchError(
            f"generator shape {g.shape} vs state length {x0.size}"
        )
    lam, smat = np.linalg.eig(g)
    coeff = np.linalg.solve(smat, x0)
    out = np.empty((len(times), rho0.shape[0], rho0.shape[0]), dtype=complex)
    for k, t in enumerate(times):
        out[k] = unvec(smat @ (np.exp(lam * float(t)) * coeff))
    return out
