"""Finite-dimensional operator algebra on Liouville space.

Operators on a d-dimensional Hilbert space are treated as vectors of the
d^2-dimensional Liouville space: observables enter as kets |O), states act
as linear functionals (bras) (rho|, and the physical pairing is

    (rho|O) = Tr(rho O).

Coarse-graining is a projection superoperator pi = sum_a |O_a)(rho_a|
built from a biorthogonal family of observable kets and state bras; the
coarse-grained state is the bra (rho_G| = (rho|pi, which reproduces every
expectation value of the retained observables and discards the rest.

Conventions
-----------
* Vectorization is column-stacking: ``vec(A)[i + d*j] = A[i, j]``, so
  ``vec(A X B) = kron(B.T, A) @ vec(X)``.  Superoperator matrices are
  convention-dependent; everything in this package uses this one.
* The Liouville inner product is ``<A|B> = Tr(A^dag B) = vec(A)^dag vec(B)``.
  For Hermitian arguments this coincides with the pairing Tr(rho O).
* hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DimensionMismatchError",
    "BiorthogonalityError",
    "InvalidStateError",
    "CoarseState",
    "BiorthogonalBasis",
    "vec",
    "unvec",
    "liouville_inner",
    "pairing",
    "is_hermitian",
    "validate_density",
    "validate_observable",
    "projector_defect",
    "is_projector",
    "build_projector",
    "biorthogonalize",
    "coarse_grain",
    "project_final_state",
    "matrix_unit_basis",
    "diagonal_projector",
    "identity_superop",
    "save_operator",
    "load_operator",
]

# Default tolerances; every check below takes these as keyword parameters.
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_TOL = 1e-10
BIORTHOGONALITY_TOL = 1e-10
IDEMPOTENCE_TOL = 1e-10


class DimensionMismatchError(ValueError):
    """Operands live on different Hilbert/Liouville spaces."""


class BiorthogonalityError(ValueError):
    """A candidate basis violates (rho_a|O_b) = delta_ab."""


class InvalidStateError(ValueError):
    """A matrix fails the density-operator invariants."""


# ---------------------------------------------------------------------------
# vectorization
# ---------------------------------------------------------------------------

def vec(a):
    """Column-stacking vectorization of a d x d matrix into a d^2 vector."""
    a = np.asarray(a)
    return a.reshape(-1, order="F")


def unvec(v):
    """Inverse of :func:`vec`; the length must be a perfect square."""
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionMismatchError(f"length {v.size} is not a perfect square")
    return v.reshape(d, d, order="F")


def liouville_inner(a, b):
    """Inner product <A|B> = Tr(A^dag B)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")
    return complex(np.vdot(a, b))


# ---------------------------------------------------------------------------
# states, observables, pairing
# ---------------------------------------------------------------------------

class CoarseState:
    """A Liouville bra: the linear functional O -> Tr(B^dag O).

    Coarse-grained states are functionals on the observable space.  They
    need not be valid density operators (positivity and even hermiticity
    can be lost under an oblique projection); they are only required to
    reproduce pairings.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got {m.shape}")
        m = m.copy()
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self):
        return self.matrix.shape[0]

    def pair(self, obs):
        """(rho_G|O) = Tr(B^dag O)."""
        obs = np.asarray(obs)
        if obs.shape != self.matrix.shape:
            raise DimensionMismatchError(
                f"observable shape {obs.shape} vs state dim {self.matrix.shape}"
            )
        return complex(np.sum(np.conj(self.matrix) * obs))

    def __repr__(self):
        return f"CoarseState(dim={self.dim})"


def pairing(state, obs):
    """Pairing (rho|O) between a state and an observable.

    ``state`` may be a plain matrix (the pairing is the literal Tr(rho O))
    or a :class:`CoarseState` bra (the pairing is Tr(B^dag O)); the two
    agree whenever the state matrix is Hermitian.  Returns the complex
    value; for Hermitian arguments its imaginary part is roundoff-level
    and the real part is the expectation value.
    """
    if isinstance(state, CoarseState):
        return state.pair(obs)
    state = np.asarray(state)
    obs = np.asarray(obs)
    if state.shape != obs.shape or state.ndim != 2:
        raise DimensionMismatchError(
            f"incompatible shapes {state.shape} and {obs.shape}"
        )
    # Tr(rho O) = sum_ij rho_ij O_ji, without forming the product.
    return complex(np.sum(state * obs.T))


def is_hermitian(m, tol=HERMITICITY_TOL):
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) <= tol if m.size else True


def validate_observable(o, tol=HERMITICITY_TOL):
    """Raise unless ``o`` is Hermitian to ``tol``."""
    o = np.asarray(o)
    dev = float(np.max(np.abs(o - o.conj().T)))
    if dev > tol:
        raise InvalidStateError(f"observable not Hermitian: max deviation {dev:.3e}")
    return o


def validate_density(rho, herm_tol=HERMITICITY_TOL, trace_tol=TRACE_TOL,
                     eig_tol=EIGENVALUE_TOL):
    """Check the density-operator invariants of ``rho``.

    Hermitian to ``herm_tol``, unit trace to ``trace_tol``, eigenvalues
    >= -``eig_tol``.  Returns ``rho`` as a complex array on success.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"expected a square matrix, got shape {rho.shape}")
    herm_dev = float(np.max(np.abs(rho - rho.conj().T)))
    if herm_dev > herm_tol:
        raise InvalidStateError(f"state not Hermitian: max deviation {herm_dev:.3e}")
    tr_dev = abs(complex(np.trace(rho)) - 1.0)
    if tr_dev > trace_tol:
        raise InvalidStateError(f"state trace deviates from 1 by {tr_dev:.3e}")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if float(evals.min()) < -eig_tol:
        raise InvalidStateError(f"state has eigenvalue {evals.min():.3e} < -{eig_tol}")
    return rho


# ---------------------------------------------------------------------------
# projectors from biorthogonal pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiorthogonalBasis:
    """Paired observable kets |O_a) and state bras (rho_a|.

    The pairing matrix G_ab = <rho_a|O_b> (Liouville inner product) must be
    the identity to tolerance; :func:`build_projector` enforces this.
    """

    observables: tuple = field()
    functionals: tuple = field()

    def __init__(self, observables, functionals):
        obs = tuple(np.asarray(o, dtype=complex) for o in observables)
        fun = tuple(np.asarray(f, dtype=complex) for f in functionals)
        if len(obs) != len(fun):
            raise DimensionMismatchError(
                f"{len(obs)} observables vs {len(fun)} functionals"
            )
        if not obs:
            raise ValueError("empty basis")
        d = obs[0].shape[0]
        for m in obs + fun:
            if m.shape != (d, d):
                raise DimensionMismatchError("basis elements have mixed dimensions")
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "functionals", fun)

    @property
    def size(self):
        return len(self.observables)

    @property
    def dim(self):
        return self.observables[0].shape[0]

    def gram(self):
        """Pairing matrix G_ab = <rho_a|O_b>."""
        n = self.size
        g = np.empty((n, n), dtype=complex)
        for a, f in enumerate(self.functionals):
            fv = np.conj(vec(f))
            for b, o in enumerate(self.observables):
                g[a, b] = fv @ vec(o)
        return g


def projector_defect(m):
    """Frobenius norm of M^2 - M."""
    m = np.asarray(m)
    return float(np.linalg.norm(m @ m - m))


def is_projector(m, tol=IDEMPOTENCE_TOL):
    return projector_defect(m) <= tol


def build_projector(basis, tol=BIORTHOGONALITY_TOL):
    """Assemble pi = sum_a |O_a)(rho_a| as a d^2 x d^2 superoperator matrix.

    Rejects the basis if any pairing <rho_a|O_b> deviates from delta_ab by
    more than ``tol``, naming the worst offending pair.
    """
    g = basis.gram()
    dev = np.abs(g - np.eye(basis.size))
    worst = float(dev.max())
    if worst > tol:
        a, b = np.unravel_index(int(dev.argmax()), dev.shape)
        raise BiorthogonalityError(
            f"pairing ({a}|{b}) = {g[a, b]:.6g} deviates from "
            f"{'1' if a == b else '0'} by {worst:.3e} (tol {tol:.1e}); "
            "biorthogonalize the pairs first"
        )
    d2 = basis.dim ** 2
    pi = np.zeros((d2, d2), dtype=complex)
    for o, f in zip(basis.observables, basis.functionals):
        pi += np.outer(vec(o), np.conj(vec(f)))
    return pi


def biorthogonalize(observables, functionals):
    """Return functionals rescaled so that <rho'_a|O_b> = delta_ab.

    The Gram matrix G_ab = <rho_a|O_b> is inverted and the new functionals
    are rho'_a = sum_b conj(G^-1)_ab rho_b, leaving the observables
    untouched.  Raises when the pairs are linearly degenerate (singular
    Gram matrix): biorthogonality is a precondition of projector building,
    not something repaired silently.
    """
    basis = BiorthogonalBasis(observables, functionals)
    g = basis.gram()
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise BiorthogonalityError(f"degenerate pairs, Gram matrix singular: {exc}")
    # <rho'_a|O_b> = sum_c conj(conj(Ginv)_ac) <rho_c|O_b> = (Ginv G)_ab.
    new_fun = []
    for a in range(basis.size):
        f = np.zeros_like(basis.functionals[0])
        for c in range(basis.size):
            f = f + np.conj(ginv[a, c]) * basis.functionals[c]
        new_fun.append(f)
    return BiorthogonalBasis(basis.observables, new_fun)


def coarse_grain(rho, pi):
    """Project the state: (rho_G| = (rho|pi.

    In the vectorized representation the bra action reads
    ``vec(rho_G) = pi^dag vec(rho)``.  The result is a functional
    (:class:`CoarseState`), not necessarily a valid density operator.
    """
    rho = np.asarray(rho, dtype=complex)
    pi = np.asarray(pi)
    d = rho.shape[0]
    if pi.shape != (d * d, d * d):
        raise DimensionMismatchError(
            f"projector shape {pi.shape} vs state dim {d}"
        )
    return CoarseState(unvec(pi.conj().T @ vec(rho)))


def project_final_state(rho_star, pi):
    """Project an equilibrium state: (rho_G*| = (rho_*|pi.

    Same contract as :func:`coarse_grain`; kept separate because the
    projected equilibrium state is what long-time runs are compared
    against (projection and the t -> infinity limit commute).
    """
    return coarse_grain(rho_star, pi)


# ---------------------------------------------------------------------------
# stock bases / projectors
# ---------------------------------------------------------------------------

def matrix_unit_basis(d):
    """The complete biorthogonal family of matrix units |i><j| on dim d.

    Complete, so the resulting projector is the identity superoperator.
    """
    units = []
    for j in range(d):
        for i in range(d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = 1.0
            units.append(m)
    return BiorthogonalBasis(units, units)


def diagonal_projector(d):
    """Superoperator keeping the diagonal entries of a d x d matrix."""
    basis = BiorthogonalBasis(
        [np.diag(np.eye(d, dtype=complex)[i]) for i in range(d)],
        [np.diag(np.eye(d, dtype=complex)[i]) for i in range(d)],
    )
    return build_projector(basis)


def identity_superop(d):
    return np.eye(d * d, dtype=complex)


# ---------------------------------------------------------------------------
# plain-text operator files
# ---------------------------------------------------------------------------
#
# Format: a header line "dim d", then d rows of d whitespace-separated
# "re,im" pairs, row-major.  Floats use repr precision, so a round trip
# is bit-exact.

def save_operator(path, m):
    """Write a square complex matrix in the plain-text operator format."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got {m.shape}")
    d = m.shape[0]
    lines = [f"dim {d}"]
    for i in range(d):
        lines.append(" ".join(
            f"{float(m[i, j].real)!r},{float(m[i, j].imag)!r}" for j in range(d)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_operator(path):
    """Read a matrix written by :func:`save_operator`."""
    with open(path) as fh:
        raw = [line.strip() for line in fh if line.strip()]
    if not raw or not raw[0].startswith("dim "):
        raise ValueError(f"{path}: missing 'dim d' header line")
    try:
        d = int(raw[0].split()[1])
    except (IndexError, ValueError):
        raise ValueError(f"{path}: malformed header {raw[0]!r}")
    if d < 1 or len(raw) != d + 1:
        raise ValueError(f"{path}: expected {d} rows, found {len(raw) - 1}")
    m = np.empty((d, d), dtype=complex)
    for i, line in enumerate(raw[1:]):
        tokens = line.split()
        if len(tokens) != d:
            raise ValueError(f"{path}: row {i} has {len(tokens)} entries, expected {d}")
        for j, tok in enumerate(tokens):
            re_s, _, im_s = tok.partition(",")
            if not _:
                raise ValueError(f"{path}: row {i} entry {j} is not a re,im pair: {tok!r}")
            m[i, j] = complex(float(re_s), float(im_s))
    return m
