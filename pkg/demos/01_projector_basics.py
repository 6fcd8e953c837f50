"""Coarse-graining projectors on operator space, from the ground up.

Operators live in a vector space of their own; states act on observables
through the pairing (rho|O) = Tr(rho O).  A coarse-graining is a
projector pi = sum_a |O_a)(rho_a| built from biorthogonal pairs, and the
coarse state keeps exactly the expectation values of the retained
observables.  This script builds one by hand and checks the laws.
"""

import numpy as np

from decolab.liouville import (biorthogonalize, build_projector, coarse_grain,
                               diagonal_projector, pairing, projector_defect,
                               vec)

rng = np.random.default_rng(1)

# ---------------------------------------------------------------------------
# a state, an observable, and the pairing between them
# ---------------------------------------------------------------------------
d = 3
a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
rho = a @ a.conj().T
rho /= np.trace(rho).real

sz_like = np.diag([1.0, 0.0, -1.0]).astype(complex)
print("pairing (rho|O) =", pairing(rho, sz_like))
print("same thing as a flat inner product:",
      complex(np.vdot(vec(rho.conj().T), vec(sz_like))))

# ---------------------------------------------------------------------------
# a projector that keeps only the populations
# ---------------------------------------------------------------------------
pi_diag = diagonal_projector(d)
print("\ndiagonal projector: defect |pi^2 - pi| =", projector_defect(pi_diag))

rho_g = coarse_grain(rho, pi_diag)
print("coarse state is the dephased state:")
print(np.round(rho_g.matrix, 4))
print("populations preserved:",
      np.allclose(np.diag(rho_g.matrix), np.diag(rho)))

# ---------------------------------------------------------------------------
# a custom biorthogonal basis: keep two specific observables
# ---------------------------------------------------------------------------
obs = [sz_like, np.eye(d, dtype=complex)]
functionals = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
               for _ in obs]
basis = biorthogonalize(obs, functionals)
pi = build_projector(basis)
print("\ncustom basis: defect |pi^2 - pi| =", projector_defect(pi))

rho_g = coarse_grain(rho, pi)
for name, o in [("O", sz_like), ("identity", np.eye(d))]:
    before = pairing(rho, o)
    after = rho_g.pair(o)
    print(f"  <{name}>: full state {before.real:+.6f}, "
          f"coarse state {after.real:+.6f}, "
          f"gap {abs(before - after):.2e}")

# everything outside the retained span is gone: projecting twice is a no-op
twice = coarse_grain(rho_g.matrix, pi)
print("projecting twice changes nothing:",
      float(np.max(np.abs(twice.matrix - rho_g.matrix))))
