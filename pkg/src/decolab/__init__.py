"""decolab: a desk-scale numerical laboratory for decoherence studies.

The package treats decoherence as a coarse-graining statement: expectation
values of a restricted observable family, evaluated on an exactly evolving
state, settle toward those of a stationary functional.  Two routes are
provided, one tracing over an environment (open-system route) and one
restricting the observables of a closed system with continuous spectrum
(closed-system route), plus a projected master equation connecting the
exact dynamics to the coarse-grained one.
"""

__version__ = "0.1.0"
