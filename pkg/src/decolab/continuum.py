"""Closed-system route to decoherence on a discretized energy continuum.

States and observables are kernel pairs over an energy variable: a
singular diagonal part sampled as O(omega) plus a regular off-diagonal
function O(omega, omega').  The pairing

    <O>_rho(t) = int rho(w) O(w) dw
               + int int rho(w', w) O(w, w') e^{-i(w - w')t} dw dw'

is a direct sum of the two sectors; the oscillatory second term dies out
by Riemann-Lebesgue decay for regular kernels, so every such expectation
value settles to the diagonal quadrature alone (a weak limit: the state
kernel itself never converges).  The continuum is replaced by an N-point
grid with trapezoid weights; all decay claims are windowed below the
grid recurrence time 2*pi / (min energy gap), which is computed and
logged rather than assumed away.

Nothing here exchanges energy: evolution touches only the phases of the
off-diagonal kernel, so diag(rho) is exactly time-invariant.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .liouville import DimensionMismatchError

__all__ = [
    "EnergyGrid",
    "VanHoveObservable",
    "VanHoveState",
    "SingularRidge",
    "GeneralKernelObservable",
    "UntaggedComponentError",
    "expectation_sid",
    "sid_limit",
    "energy_expectation",
    "hamiltonian_observable",
    "sid_projector",
    "smooth_functional",
    "reconstruct_functional",
    "MeasuredObservable",
    "build_vanhove_from_measurements",
    "discretized_unitary_oracle",
    "kernel_decay_report",
    "load_table_kernel",
    "gaussian_scenario",
]

log = logging.getLogger(__name__)

ORACLE_GRID_CAP = 400


class UntaggedComponentError(ValueError):
    """A kernel component without a recognized singular/regular tag.

    The regular-vs-singular split cannot be detected from samples; it has
    to be declared by the caller.
    """


# ---------------------------------------------------------------------------
# grid and kernel types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyGrid:
    """Strictly increasing energies >= 0 with trapezoid quadrature weights."""

    omega: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("grid needs at least 2 energies")
        if np.any(np.diff(w) <= 0):
            raise ValueError("grid energies must be strictly increasing")
        if w[0] < 0:
            raise ValueError("grid energies must be >= 0")
        if self.weights is None:
            q = np.empty_like(w)
            q[0] = 0.5 * (w[1] - w[0])
            q[-1] = 0.5 * (w[-1] - w[-2])
            q[1:-1] = 0.5 * (w[2:] - w[:-2])
        else:
            q = np.asarray(self.weights, dtype=float)
            if q.shape != w.shape or np.any(q <= 0):
                raise ValueError("weights must be positive, one per energy")
        w = w.copy()
        w.setflags(write=False)
        q = q.copy()
        q.setflags(write=False)
        object.__setattr__(self, "omega", w)
        object.__setattr__(self, "weights", q)

    @classmethod
    def uniform(cls, omega_min, omega_max, n):
        return cls(np.linspace(omega_min, omega_max, n))

    @property
    def size(self):
        return self.omega.size

    @property
    def span(self):
        return float(self.omega[-1] - self.omega[0])

    def quad(self, values):
        """Quadrature of samples against the grid weights."""
        return complex(np.sum(self.weights * np.asarray(values))) \
            if np.iscomplexobj(values) else float(np.sum(self.weights * values))

    def recurrence_window(self):
        """2*pi / (minimal energy gap): below it the discretization cannot
        fake a revival of the continuum dynamics."""
        return 2 * np.pi / float(np.min(np.diff(self.omega)))


def _check_kernel(grid, kernel, herm_tol, what):
    k = np.asarray(kernel, dtype=complex)
    n = grid.size
    if k.shape != (n, n):
        raise DimensionMismatchError(
            f"{what} kernel shape {k.shape} vs grid size {n}"
        )
    if not np.all(np.isfinite(k)):
        raise ValueError(f"{what} kernel has non-finite entries")
    dev = float(np.max(np.abs(k - k.conj().T)))
    if dev > herm_tol:
        raise ValueError(f"{what} kernel not Hermitian: deviation {dev:.3e}")
    k = k.copy()
    k.setflags(write=False)
    return k


@dataclass(frozen=True)
class VanHoveObservable:
    """Diagonal weight O(w) plus regular Hermitian kernel O(w, w')."""

    grid: EnergyGrid
    diag: np.ndarray
    offdiag: np.ndarray = None

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        if d.shape != self.grid.omega.shape:
            raise DimensionMismatchError(
                f"diag shape {d.shape} vs grid size {self.grid.size}"
            )
        if not np.all(np.isfinite(d)):
            raise ValueError("diagonal part has non-finite entries")
        off = self.offdiag
        if off is None:
            off = np.zeros((self.grid.size, self.grid.size))
        off = _check_kernel(self.grid, off, 1e-12, "observable")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", off)


@dataclass(frozen=True)
class VanHoveState:
    """Energy distribution rho(w) >= 0 (quadrature 1) plus Hermitian kernel."""

    grid: EnergyGrid
    diag: np.ndarray
    offdiag: np.ndarray = None

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        if d.shape != self.grid.omega.shape:
            raise DimensionMismatchError(
                f"diag shape {d.shape} vs grid size {self.grid.size}"
            )
        if float(d.min()) < -1e-12:
            raise ValueError(f"rho(w) has negative value {d.min():.3e}")
        norm = float(np.sum(self.grid.weights * d))
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"quadrature of rho(w) is {norm!r}, expected 1")
        off = self.offdiag
        if off is None:
            off = np.zeros((self.grid.size, self.grid.size))
        off = _check_kernel(self.grid, off, 1e-12, "state")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", off)


@dataclass(frozen=True)
class SingularRidge:
    """Singular component weight(w) concentrated on the line w - w' = offset."""

    offset: float
    weight: np.ndarray
    label: str = "ridge"


@dataclass(frozen=True)
class GeneralKernelObservable:
    """Kernel observable before the regular/singular choice is imposed.

    ``offdiag_singular`` entries must be :class:`SingularRidge` instances;
    the split is declarative (it cannot be inferred from samples).
    """

    grid: EnergyGrid
    diag: np.ndarray
    offdiag_regular: np.ndarray = None
    offdiag_singular: tuple = field(default_factory=tuple)

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        if d.shape != self.grid.omega.shape:
            raise DimensionMismatchError(
                f"diag shape {d.shape} vs grid size {self.grid.size}"
            )
        off = self.offdiag_regular
        if off is None:
            off = np.zeros((self.grid.size, self.grid.size))
        off = _check_kernel(self.grid, off, 1e-12, "regular")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag_regular", off)
        object.__setattr__(self, "offdiag_singular",
                           tuple(self.offdiag_singular))


# ---------------------------------------------------------------------------
# pairings and limits
# ---------------------------------------------------------------------------

def _same_grid(a, b):
    if a.grid.size != b.grid.size or \
            float(np.max(np.abs(a.grid.omega - b.grid.omega))) > 0:
        raise DimensionMismatchError("state and observable grids differ")


def expectation_sid(state, obs, t, with_residue=False):
    """The time-dependent pairing <O>_rho(t).

    Diagonal sector: quadrature of rho(w) O(w).  Off-diagonal sector: the
    double quadrature of rho(w', w) O(w, w') e^{-i(w-w')t}.  The result
    of the Hermitian-kernel double sum is real up to roundoff; the
    imaginary residue is available via ``with_residue``.  Summation is
    numpy pairwise over a fixed layout, so results are deterministic.
    """
    _same_grid(state, obs)
    g = state.grid
    diag_part = float(np.sum(g.weights * state.diag * obs.diag))
    # term(i, j) = rho(w_j, w_i) O(w_i, w_j) e^{-i(w_i - w_j) t} q_i q_j
    phase = np.exp(-1j * float(t) * np.subtract.outer(g.omega, g.omega))
    ww = np.outer(g.weights, g.weights)
    total = complex(np.sum(state.offdiag.T * obs.offdiag * phase * ww))
    value = diag_part + total.real
    if with_residue:
        return value, abs(total.imag)
    return value


def offdiag_contribution(state, obs, t):
    """Only the oscillatory sector of :func:`expectation_sid`."""
    return expectation_sid(state, obs, t) - sid_limit(state, obs)


def sid_limit(state, obs):
    """Weak-limit value: the diagonal quadrature alone survives t -> inf."""
    _same_grid(state, obs)
    return float(np.sum(state.grid.weights * state.diag * obs.diag))


def energy_expectation(state, grid=None):
    """<H> = int rho(w) w dw; time-independent since H has no regular kernel."""
    g = state.grid if grid is None else grid
    if g.size != state.grid.size or \
            float(np.max(np.abs(g.omega - state.grid.omega))) > 0:
        raise DimensionMismatchError("state grid differs from supplied grid")
    return float(np.sum(g.weights * state.diag * g.omega))


def hamiltonian_observable(grid):
    """H as a kernel observable: diag weight w, no regular kernel."""
    return VanHoveObservable(grid, grid.omega.copy())


# ---------------------------------------------------------------------------
# the kernel projector
# ---------------------------------------------------------------------------

def sid_projector(obs):
    """Keep the diagonal weight and the regular kernel, drop singular ridges.

    Acting on an already-projected observable is the identity, so the map
    is idempotent.  Components in ``offdiag_singular`` must be tagged
    (:class:`SingularRidge`); anything else is rejected, because regular
    vs singular is a declaration, not a property of samples.
    """
    if isinstance(obs, VanHoveObservable):
        return obs
    if not isinstance(obs, GeneralKernelObservable):
        raise UntaggedComponentError(
            f"cannot project {type(obs).__name__}: kernel components must "
            "arrive tagged as diag / offdiag_regular / SingularRidge"
        )
    for comp in obs.offdiag_singular:
        if not isinstance(comp, SingularRidge):
            raise UntaggedComponentError(
                f"singular component {comp!r} is not a SingularRidge; "
                "the regular/singular split must be declared explicitly"
            )
    return VanHoveObservable(obs.grid, obs.diag.copy(),
                             obs.offdiag_regular.copy())


def smooth_functional(samples, cutoff, frequencies=None, taper=False):
    """Truncate functional coefficients to a square-summable vector.

    ``samples`` are the values F[e_i] on an orthonormal basis.  ``cutoff``
    is an index count, or an energy threshold when ``frequencies`` labels
    the basis elements.  Hard truncation (default) keeps the leading
    coefficients unchanged and is idempotent.  ``taper=True`` applies a
    raised-cosine roll-off over the upper half of the kept band instead;
    that variant reduces reconstruction ringing but is *not* a projector
    (applying it twice squares the taper weights).
    """
    samples = np.asarray(samples, dtype=complex)
    if frequencies is not None:
        frequencies = np.asarray(frequencies, dtype=float)
        if frequencies.shape != samples.shape:
            raise DimensionMismatchError("one frequency label per sample")
        keep = int(np.sum(frequencies <= cutoff))
    else:
        keep = int(cutoff)
    if keep < 1:
        raise ValueError("cutoff keeps no coefficients")
    keep = min(keep, samples.size)
    if not np.all(np.isfinite(samples[:keep])):
        raise ValueError(
            "no finite leading coefficients to keep; the functional has no "
            "square-summable prefix at this cutoff"
        )
    out = np.zeros_like(samples)
    out[:keep] = samples[:keep]
    if taper:
        ramp_start = keep // 2
        idx = np.arange(ramp_start, keep)
        out[ramp_start:keep] *= 0.5 * (
            1 + np.cos(np.pi * (idx - ramp_start) / max(keep - ramp_start, 1)))
    return out


def reconstruct_functional(coeffs, basis_values):
    """Evaluate sum_i f_i e_i(x) given basis samples e_i(x) as rows."""
    coeffs = np.asarray(coeffs)
    basis_values = np.asarray(basis_values)
    if basis_values.shape[0] != coeffs.size:
        raise DimensionMismatchError("one basis row per coefficient")
    return coeffs @ basis_values


# ---------------------------------------------------------------------------
# finite-resolution measurement construction
# ---------------------------------------------------------------------------

class MeasuredObservable(NamedTuple):
    observable: VanHoveObservable
    gradient_bound: float   # measured max |grad| of the sampled kernel
    error_bound: float      # gradient_bound * delta_omega


def build_vanhove_from_measurements(z, delta_omega, kernel_fn=None):
    """Rebuild a kernel observable from resolution-limited measurements.

    The instrument reads the regular kernel at the nodes of a lattice of
    spacing ``delta_omega``; the returned observable bilinearly
    interpolates those readings back onto the working grid (exactly
    matching them at the nodes).  The diagonal weight is kept as is, and
    singular ridges are invisible at finite resolution.  ``kernel_fn``,
    when given, supplies exact lattice readings ``kernel_fn(w, w')``;
    otherwise the gridded kernel itself is sampled.

    Pairings against the rebuilt observable differ from the original by
    at most C * delta_omega for kernels with bounded gradient; C is
    measured from the lattice readings and reported.
    """
    obs = sid_projector(z)  # also validates tags
    g = obs.grid
    dw = float(delta_omega)
    if dw <= 0:
        raise ValueError("instrument resolution must be positive")
    if dw > g.span:
        raise ValueError(
            f"resolution {dw} exceeds the grid span {g.span}; nothing to "
            "interpolate"
        )
    n_cells = int(np.ceil(g.span / dw))
    nodes = g.omega[0] + dw * np.arange(n_cells + 1)

    if kernel_fn is None:
        # read the gridded kernel at the lattice nodes
        idx = np.clip(np.searchsorted(g.omega, nodes), 0, g.size - 1)
        # snap to nearest grid point (instrument reads the actual data)
        left = np.clip(idx - 1, 0, g.size - 1)
        snap = np.where(
            np.abs(g.omega[left] - nodes) <= np.abs(g.omega[idx] - nodes),
            left, idx)
        readings = obs.offdiag[np.ix_(snap, snap)]
        node_pos = g.omega[snap]
        # snapped nodes may repeat at the ends; dedupe for interpolation
        node_pos, uniq = np.unique(node_pos, return_index=True)
        readings = readings[np.ix_(uniq, uniq)]
    else:
        readings = np.asarray(
            [[kernel_fn(wa, wb) for wb in nodes] for wa in nodes],
            dtype=complex)
        node_pos = nodes

    rebuilt = _bilinear(node_pos, readings, g.omega)
    # Hermitize away interpolation roundoff
    rebuilt = 0.5 * (rebuilt + rebuilt.conj().T)

    # measured gradient bound from node differences
    dre = np.abs(np.diff(readings, axis=0)).max(initial=0.0)
    dco = np.abs(np.diff(readings, axis=1)).max(initial=0.0)
    gap = float(np.min(np.diff(node_pos))) if node_pos.size > 1 else dw
    grad = float(max(dre, dco)) / gap
    built = VanHoveObservable(g, obs.diag.copy(), rebuilt)
    return MeasuredObservable(built, grad, grad * dw)


def _bilinear(nodes, values, targets):
    """Separable linear interpolation of a kernel from nodes to targets."""
    t = np.clip(targets, nodes[0], nodes[-1])
    hi = np.clip(np.searchsorted(nodes, t, side="right"), 1, nodes.size - 1)
    lo = hi - 1
    frac = (t - nodes[lo]) / (nodes[hi] - nodes[lo])
    # rows first, then columns
    rows = values[lo, :] * (1 - frac)[:, None] + values[hi, :] * frac[:, None]
    out = rows[:, lo] * (1 - frac)[None, :] + rows[:, hi] * frac[None, :]
    return out


# ---------------------------------------------------------------------------
# independent oracle: phases on explicit matrices
# ---------------------------------------------------------------------------

def discretized_unitary_oracle(state, obs, t, cap=ORACLE_GRID_CAP):
    """Brute-force pairing via explicit matrix representations.

    Each sector is represented as an N x N matrix with quadrature weights
    folded in: the diagonal sector as diag(q * rho(w)), the kernel sector
    as sqrt(q_i q_j) rho(w_i, w_j).  The diagonal Hamiltonian evolves the
    kernel matrix entrywise as rho_ij e^{-i(w_i - w_j)t}; the pairing is
    the sector-wise sum of Tr(rho(t) O).  The sectors never mix (the
    kernel algebra is a direct sum), which is what makes this an honest
    rephrasing of the quadrature rather than a second copy of it.
    """
    _same_grid(state, obs)
    g = state.grid
    if g.size > cap:
        raise ValueError(f"oracle capped at N = {cap}, grid has {g.size}")
    sq = np.sqrt(g.weights)
    rho_diag = np.diag(g.weights * state.diag)
    obs_diag = np.diag(obs.diag)
    rho_kern = np.outer(sq, sq) * state.offdiag
    obs_kern = np.outer(sq, sq) * obs.offdiag
    phase = np.exp(-1j * float(t) * np.subtract.outer(g.omega, g.omega))
    val = np.trace(rho_diag @ obs_diag) + np.trace((rho_kern * phase) @ obs_kern)
    return float(val.real)


# ---------------------------------------------------------------------------
# kernel diagnostics and loading
# ---------------------------------------------------------------------------

def kernel_decay_report(obs):
    """Fit how the kernel magnitude falls off along |w - w'|.

    Integrability of the kernel along the off-diagonal direction is what
    the decay-to-limit argument leans on; it cannot be enforced from
    finite samples, so the measured fall-off (exponential and power-law
    fits of band maxima over |w - w'|) is logged for inspection instead.
    Returns a dict with both fitted rates and their log-space R^2.
    """
    k = np.abs(np.asarray(obs.offdiag))
    n = k.shape[0]
    sep = np.abs(np.subtract.outer(obs.grid.omega, obs.grid.omega))
    bands = []
    seps = []
    for d in range(1, n):
        mx = float(np.max(np.diagonal(k, offset=d)))
        if mx > 0:
            bands.append(mx)
            seps.append(float(np.mean(np.diagonal(sep, offset=d))))
    report = {"n_bands": len(bands)}
    if len(bands) >= 3:
        y = np.log(np.asarray(bands))
        s = np.asarray(seps)
        for name, x in (("exponential", s), ("power", np.log(s))):
            a = np.vstack([x, np.ones_like(x)]).T
            coef, res, *_ = np.linalg.lstsq(a, y, rcond=None)
            ss_tot = float(np.sum((y - y.mean()) ** 2))
            r2 = 1.0 - (float(res[0]) / ss_tot if res.size and ss_tot > 0 else 0.0)
            report[f"{name}_rate"] = -float(coef[0])
            report[f"{name}_r2"] = r2
        better = "exponential" if report["exponential_r2"] >= report["power_r2"] \
            else "power"
        report["better_fit"] = better
        log.info("kernel decay along |w-w'|: best %s, rate %.4g (r2 %.4f)",
                 better, report[f"{better}_rate"], report[f"{better}_r2"])
    else:
        report["better_fit"] = "undetermined"
    return report


def load_table_kernel(path, grid, tol=1e-9):
    """Load an off-diagonal kernel from CSV rows (omega, omega', re, im).

    Every (omega_i, omega_j) pair of the working grid must be covered
    exactly once (values matched to grid points within ``tol``); the
    assembled kernel must be Hermitian.
    """
    n = grid.size
    kernel = np.full((n, n), np.nan, dtype=complex)
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{row_no}: expected 4 columns")
            w, wp, re, im = (float(x) for x in row)
            i = int(np.argmin(np.abs(grid.omega - w)))
            j = int(np.argmin(np.abs(grid.omega - wp)))
            if abs(grid.omega[i] - w) > tol or abs(grid.omega[j] - wp) > tol:
                raise ValueError(
                    f"{path}:{row_no}: ({w}, {wp}) is not a grid point"
                )
            kernel[i, j] = complex(re, im)
    missing = int(np.sum(np.isnan(kernel.real)))
    if missing:
        raise ValueError(f"{path}: kernel incomplete, {missing} grid pairs unset")
    return _check_kernel(grid, kernel, 1e-12, "table")


# ---------------------------------------------------------------------------
# stock scenario
# ---------------------------------------------------------------------------

def gaussian_scenario(n=400, omega_max=10.0, center=5.0, width=1.2,
                      cross_width=0.5, amplitude=0.25):
    """Gaussian state/observable pair with an exactly known envelope.

    Both kernels carry the same center-of-mass profile
    exp(-((w+w')/2 - center)^2 / (2 width^2)) and the same cross profile
    exp(-(w-w')^2 / (4 cross_width^2)), so their product separates in the
    rotated variables (mean, difference) and the oscillatory sector is an
    exact Gaussian Fourier transform: offdiag(t) = offdiag(0) *
    exp(-cross_width^2 t^2 / 2).  Window edges and quadrature spacing are
    chosen so that boundary tails and aliasing sit far below 1e-4 of the
    envelope for t <= 4.
    """
    grid = EnergyGrid.uniform(0.0, omega_max, n)
    w = grid.omega
    mean = 0.5 * np.add.outer(w, w)
    diff = np.subtract.outer(w, w)
    profile = np.exp(-((mean - center) ** 2) / (2 * width ** 2)) \
        * np.exp(-(diff ** 2) / (4 * cross_width ** 2))
    rho_diag = np.exp(-((w - center) ** 2) / (2 * width ** 2))
    rho_diag = rho_diag / float(np.sum(grid.weights * rho_diag))
    state = VanHoveState(grid, rho_diag, amplitude * profile)
    obs_diag = np.exp(-((w - center) ** 2) / (2 * 1.5 ** 2))
    obs = VanHoveObservable(grid, obs_diag, profile)
    return state, obs


def gaussian_envelope(t, cross_width=0.5):
    """Analytic modulus of the oscillatory sector, normalized to t = 0."""
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * (cross_width * t) ** 2)
