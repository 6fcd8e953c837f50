"""Projected Liouville equation, P/Q memory route, dissipative toy."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import solve_ivp

from decolab.liouville import (
    coarse_grain,
    diagonal_projector,
    identity_superop,
    vec,
    unvec,
)
from decolab.master_eq import (
    Liouvillian,
    build_liouvillian,
    defect,
    dissipative_toy,
    evolve_linear_generator,
    evolve_master_exact,
    evolve_nakajima_zwanzig,
    memory_kernel,
)
from decolab.open_system import eid_projector, evolve_unitary


def random_density(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (a + a.conj().T)


class TestLiouvillian:
    def test_identity_hamiltonian_gives_zero(self):
        lv = build_liouvillian(np.eye(3))
        assert np.max(np.abs(lv.superop)) == 0.0

    def test_diagonal_hamiltonian_bohr_spectrum(self):
        w = np.array([0.0, 1.0, 2.5])
        lv = build_liouvillian(np.diag(w))
        expected = np.sort(np.subtract.outer(w, w).ravel())
        assert_allclose(np.sort(lv.spectrum()), expected, atol=1e-12)

    def test_action_matches_commutator_oracle(self):
        rng = np.random.default_rng(1)
        h = random_hermitian(rng, 3)
        lv = build_liouvillian(h)
        for _ in range(20):
            rho = random_density(rng, 3)
            assert np.max(np.abs(
                unvec(lv.superop @ vec(rho)) - (h @ rho - rho @ h))) <= 1e-13

    def test_annihilates_identity(self):
        rng = np.random.default_rng(2)
        lv = build_liouvillian(random_hermitian(rng, 4))
        assert np.max(np.abs(lv.superop @ vec(np.eye(4)))) <= 1e-10

    def test_spectrum_real(self):
        rng = np.random.default_rng(3)
        lv = build_liouvillian(random_hermitian(rng, 3))
        full = np.linalg.eigvals(lv.superop)
        assert np.max(np.abs(full.imag)) <= 1e-10

    def test_rejects_non_square(self):
        with pytest.raises(Exception):
            Liouvillian(np.zeros((3, 4)))


class TestDefect:
    def test_identity_projector_commutes(self):
        rng = np.random.default_rng(4)
        lv = build_liouvillian(random_hermitian(rng, 3))
        assert defect(identity_superop(3), lv).is_zero()

    def test_diagonal_projector_diagonal_hamiltonian(self):
        lv = build_liouvillian(np.diag([0.3, 1.1, 2.2]))
        assert defect(diagonal_projector(3), lv).is_zero()

    def test_eid_projector_with_coupling(self):
        # sigma_x x sigma_x coupling does not commute with tracing out E
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        h = np.kron(sx, sx)
        lv = build_liouvillian(h)
        n = defect(eid_projector(2, 2), lv)
        assert n.norm() > 1e-6
        pi = eid_projector(2, 2)
        assert np.max(np.abs(pi @ lv.superop - (lv.superop @ pi + n.superop))) \
            <= 1e-13


def eid_fixture(rng, dim_s, dim_e, coupling=0.8):
    # local terms plus a random Hermitian coupling: N != 0 generically
    h = np.kron(random_hermitian(rng, dim_s), np.eye(dim_e)) \
        + np.kron(np.eye(dim_s), random_hermitian(rng, dim_e)) \
        + coupling * random_hermitian(rng, dim_s * dim_e)
    rho0 = random_density(rng, dim_s * dim_e)
    return h, rho0


class TestEvolveMasterExact:
    def test_initial_condition(self):
        rng = np.random.default_rng(10)
        h, rho0 = eid_fixture(rng, 2, 2)
        pi = eid_projector(2, 2)
        lv = build_liouvillian(h)
        out = evolve_master_exact(rho0, pi, lv, [0.0, 1.0])
        assert_allclose(out[0].matrix, coarse_grain(rho0, pi.conj().T).matrix,
                        atol=1e-12)

    def test_matches_unitary_then_project(self):
        rng = np.random.default_rng(11)
        h, rho0 = eid_fixture(rng, 2, 2)
        pi = eid_projector(2, 2)
        lv = build_liouvillian(h)
        times = np.linspace(0.0, 20.0, 21)
        got = evolve_master_exact(rho0, pi, lv, times)
        want = evolve_unitary(rho0, h, times)
        for k in range(len(times)):
            projected = unvec(pi @ vec(want[k]))
            assert np.max(np.abs(got[k].matrix - projected)) <= 1e-8

    def test_commuting_projector_keeps_projected_purity(self):
        rng = np.random.default_rng(12)
        h = np.diag(rng.uniform(0, 2, 4)).astype(complex)
        pi = diagonal_projector(4)
        lv = build_liouvillian(h)
        assert defect(pi, lv).is_zero()
        rho0 = random_density(rng, 4)
        out = evolve_master_exact(rho0, pi, lv, np.linspace(0, 10, 11))
        purities = [float(np.vdot(vec(s.matrix), vec(s.matrix)).real)
                    for s in out]
        assert np.ptp(purities) <= 1e-10

    def test_integrator_failure_reported(self):
        # a singular right-hand side drives the step size to underflow;
        # the failure must surface with the solver diagnostic attached
        from decolab.master_eq import _integrate_complex

        with pytest.raises(RuntimeError, match="step size"):
            _integrate_complex(lambda t, y: y / (0.5 - t),
                               np.array([1.0 + 0j]), [0.0, 1.0],
                               rtol=1e-8, atol=1e-10)


class TestNakajimaZwanzig:
    def test_memoryless_when_plq_vanishes(self):
        # diagonal projector + diagonal H: L acts sector-diagonally, so
        # PLQ = 0 and the closed equation is plain e^{-iPLP t}
        rng = np.random.default_rng(20)
        h = np.diag([0.4, 1.0, 1.9]).astype(complex)
        pi = diagonal_projector(3)
        lv = build_liouvillian(h)
        rho0 = unvec(pi @ vec(random_density(rng, 3)))
        times = np.linspace(0.0, 8.0, 9)
        got = evolve_nakajima_zwanzig(rho0, pi, lv, times)
        plp = pi @ lv.superop @ pi
        evals, vmat = np.linalg.eigh(plp)
        y0 = pi @ vec(rho0)
        for k, t in enumerate(times):
            direct = vmat @ (np.exp(-1j * evals * t) * (vmat.conj().T @ y0))
            assert np.max(np.abs(vec(got[k].matrix) - direct)) <= 1e-8

    def test_matches_master_exact_relevant_initial(self):
        rng = np.random.default_rng(21)
        h, raw = eid_fixture(rng, 2, 2)
        pi = eid_projector(2, 2)
        rho0 = unvec(pi @ vec(raw))  # relevant-only initial data
        lv = build_liouvillian(h)
        times = np.linspace(0.0, 10.0, 21)
        nz = evolve_nakajima_zwanzig(rho0, pi, lv, times)
        ex = evolve_master_exact(rho0, pi, lv, times)
        worst = max(np.max(np.abs(a.matrix - b.matrix))
                    for a, b in zip(nz, ex))
        assert worst <= 1e-6

    def test_inhomogeneous_term_restores_exactness(self):
        # Q rho0 != 0: seeding the modes reproduces P rho(t) exactly
        rng = np.random.default_rng(22)
        h, rho0 = eid_fixture(rng, 2, 2)
        pi = eid_projector(2, 2)
        lv = build_liouvillian(h)
        times = np.linspace(0.0, 10.0, 11)
        nz = evolve_nakajima_zwanzig(rho0, pi, lv, times, relevant_only=False)
        unit = evolve_unitary(rho0, h, times)
        for k in range(len(times)):
            projected = unvec(pi @ vec(unit[k]))
            assert np.max(np.abs(nz[k].matrix - projected)) <= 1e-6

    def test_dropping_inhomogeneous_term_costs_accuracy(self):
        # the Q rho0 = 0 assumption is visible when it is false
        rng = np.random.default_rng(23)
        h, rho0 = eid_fixture(rng, 2, 2, coupling=1.5)
        pi = eid_projector(2, 2)
        lv = build_liouvillian(h)
        times = np.linspace(0.0, 5.0, 6)
        kept = evolve_nakajima_zwanzig(rho0, pi, lv, times,
                                       relevant_only=False)
        dropped = evolve_nakajima_zwanzig(rho0, pi, lv, times)
        dev = max(np.max(np.abs(a.matrix - b.matrix))
                  for a, b in zip(kept, dropped))
        assert dev > 1e-3

    def test_kernel_at_zero_is_plq_qlp(self):
        rng = np.random.default_rng(24)
        h, _ = eid_fixture(rng, 2, 2)
        pi = eid_projector(2, 2)
        lv = build_liouvillian(h)
        kern = memory_kernel(pi, lv, [0.0])
        q = np.eye(16) - pi
        direct = pi @ lv.superop @ q @ lv.superop @ pi
        u_p = kern.basis
        assert_allclose(kern.matrices[0],
                        u_p.conj().T @ direct @ u_p, atol=1e-10)

    def test_hermiticity_preserved(self):
        rng = np.random.default_rng(25)
        h, raw = eid_fixture(rng, 2, 3)
        pi = eid_projector(2, 3)
        rho0 = unvec(pi @ vec(raw))
        lv = build_liouvillian(h)
        out = evolve_nakajima_zwanzig(rho0, pi, lv, np.linspace(0, 10, 11))
        for s in out:
            assert np.max(np.abs(s.matrix - s.matrix.conj().T)) <= 1e-9

    def test_finite_window_warns_and_truncates_late(self):
        rng = np.random.default_rng(26)
        h, raw = eid_fixture(rng, 2, 2)
        pi = eid_projector(2, 2)
        rho0 = unvec(pi @ vec(raw))
        lv = build_liouvillian(h)
        times = np.linspace(0.0, 5.0, 11)
        with pytest.warns(RuntimeWarning, match="window"):
            windowed = evolve_nakajima_zwanzig(rho0, pi, lv, times,
                                               kernel_window=4.5)
        exact = evolve_master_exact(rho0, pi, lv, times)
        for t, a, b in zip(times, windowed, exact):
            if t <= 4.5:  # truncation has not engaged yet
                assert np.max(np.abs(a.matrix - b.matrix)) <= 1e-6

    def test_window_incompatible_with_inhomogeneous(self):
        rng = np.random.default_rng(27)
        h, rho0 = eid_fixture(rng, 2, 2)
        lv = build_liouvillian(h)
        with pytest.raises(ValueError, match="window"):
            evolve_nakajima_zwanzig(rho0, eid_projector(2, 2), lv,
                                    [0.0, 5.0], kernel_window=1.0,
                                    relevant_only=False)


class TestDissipativeToy:
    def test_coherence_decay_rate_exact(self):
        toy = dissipative_toy()
        times = np.linspace(0.0, 6.0, 25)
        series = evolve_linear_generator(toy.generator, toy.rho0, times)
        mag0 = abs(toy.rho0[0, 1])
        for t, rho in zip(times, series):
            assert abs(abs(rho[0, 1]) - mag0 * np.exp(-t)) <= 1e-12

    def test_population_relaxation_rate_exact(self):
        toy = dissipative_toy()
        times = np.linspace(0.0, 25.0, 26)
        series = evolve_linear_generator(toy.generator, toy.rho0, times)
        gap0 = np.real(np.diag(toy.rho0)) - toy.equilibrium
        for t, rho in zip(times, series):
            gap = np.real(np.diag(rho)) - toy.equilibrium
            assert np.max(np.abs(gap - gap0 * np.exp(-0.2 * t))) <= 1e-12

    def test_trace_and_hermiticity_preserved(self):
        toy = dissipative_toy()
        series = evolve_linear_generator(toy.generator, toy.rho0,
                                         np.linspace(0, 10, 11))
        for rho in series:
            assert abs(np.trace(rho) - 1.0) <= 1e-12
            assert np.max(np.abs(rho - rho.conj().T)) <= 1e-12

    def test_matches_ode_oracle(self):
        toy = dissipative_toy()
        times = np.linspace(0.0, 5.0, 6)
        series = evolve_linear_generator(toy.generator, toy.rho0, times)
        sol = solve_ivp(lambda t, y: toy.generator @ y, (0.0, 5.0),
                        vec(toy.rho0.astype(complex)), t_eval=times,
                        method="DOP853", rtol=1e-11, atol=1e-13)
        assert sol.success
        for k in range(len(times)):
            assert np.max(np.abs(vec(series[k]) - sol.y[:, k])) <= 1e-9

    def test_rates_are_separated(self):
        toy = dissipative_toy()
        assert 1.0 / toy.gamma_relax >= 2.0 / toy.gamma_decohere
