import numpy as np
import pytest
from scipy.linalg import expm

from hcboson import dynamics as dyn
from hcboson import fock, lattice
from hcboson.errors import ValidationError


def make_system(n, N, shape="chain", J=1.0, U=0.0):
    build = {"chain": lattice.build_chain, "ring": lattice.build_ring}[shape]
    basis = fock.enumerate_basis(n, N)
    return basis, fock.build_hamiltonian(build(n), basis, J, U)


class TestQuantumState:
    def test_norm_check(self):
        basis = fock.enumerate_basis(3, 1)
        bad = dyn.QuantumState(basis, np.array([0.5, 0.0, 0.0], dtype=complex))
        with pytest.raises(ValidationError):
            bad.check_norm()

    def test_basis_state(self):
        basis = fock.enumerate_basis(4, 2)
        st = dyn.basis_state(basis, [0, 2])
        assert st.amplitudes[basis.index_of(0b0101)] == 1.0
        assert st.norm == 1.0

    def test_basis_state_validates_sites(self):
        basis = fock.enumerate_basis(4, 2)
        with pytest.raises(ValidationError):
            dyn.basis_state(basis, [0])
        with pytest.raises(ValidationError):
            dyn.basis_state(basis, [0, 7])

    def test_length_mismatch(self):
        basis = fock.enumerate_basis(4, 1)
        with pytest.raises(ValidationError):
            dyn.QuantumState(basis, np.zeros(3, dtype=complex))


class TestMakePropagator:
    def test_two_level_eigenvalues(self):
        _, H = make_system(2, 1)
        prop = dyn.make_propagator(H)
        assert prop.mode == "spectral"
        assert np.allclose(np.sort(prop.eigenvalues), [-1.0, 1.0])

    def test_auto_policy_spectral_below_cutoff(self):
        basis, H = make_system(16, 4)
        assert basis.dim == 1820
        assert dyn.make_propagator(H).mode == "spectral"

    def test_auto_policy_krylov_above_cutoff(self):
        # dim above the cutoff picks krylov without doing dense work
        basis = fock.enumerate_basis(18, 6)
        assert basis.dim == 18564
        H = fock.build_hamiltonian(lattice.build_chain(18), basis, 1.0, 0.0)
        assert dyn.make_propagator(H, "auto").mode == "krylov"

    def test_unknown_policy(self):
        _, H = make_system(2, 1)
        with pytest.raises(ValidationError):
            dyn.make_propagator(H, "magic")


class TestEvolve:
    def test_t_zero_identity(self):
        basis, H = make_system(5, 2)
        prop = dyn.make_propagator(H)
        psi0 = dyn.basis_state(basis, [0, 3])
        out = dyn.evolve(prop, psi0, 0.0)
        assert np.allclose(out.amplitudes, psi0.amplitudes, atol=1e-14)

    def test_two_site_rabi_oscillation(self):
        # against an independent dense matrix exponential
        basis, H = make_system(2, 1)
        prop = dyn.make_propagator(H)
        psi0 = dyn.basis_state(basis, [0])
        dense = H.matrix.toarray()
        for t in np.linspace(0.0, 20.0, 41):
            got = dyn.evolve(prop, psi0, t).amplitudes
            ref = expm(-1j * dense * t) @ psi0.amplitudes
            assert np.max(np.abs(got - ref)) < 1e-12
            assert abs(np.abs(got[0]) ** 2 - np.cos(t) ** 2) < 1e-12

    def test_time_reversal_round_trip(self):
        basis, H = make_system(6, 2, "ring", U=0.5)
        prop = dyn.make_propagator(H)
        psi0 = dyn.basis_state(basis, [0, 3])
        there = dyn.evolve(prop, psi0, 17.3)
        back = dyn.evolve(prop, there, -17.3)
        assert np.max(np.abs(back.amplitudes - psi0.amplitudes)) < 1e-8

    def test_norm_preserved(self):
        basis, H = make_system(7, 3)
        prop = dyn.make_propagator(H)
        psi = dyn.evolve(prop, dyn.basis_state(basis, [0, 1, 2]), 123.4)
        assert abs(psi.norm - 1.0) < 1e-10

    def test_krylov_matches_spectral(self):
        basis, H = make_system(12, 3)  # dim 220
        ps = dyn.make_propagator(H, "spectral")
        pk = dyn.make_propagator(H, "krylov")
        psi0 = dyn.basis_state(basis, [0, 1, 2])
        a = dyn.evolve(ps, psi0, 100.0)
        b = dyn.evolve(pk, psi0, 100.0)
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-7

    def test_krylov_time_reversal(self):
        basis, H = make_system(10, 2)
        pk = dyn.make_propagator(H, "krylov")
        psi0 = dyn.basis_state(basis, [0, 5])
        back = dyn.evolve(pk, dyn.evolve(pk, psi0, 42.0), -42.0)
        assert np.max(np.abs(back.amplitudes - psi0.amplitudes)) < 1e-8

    def test_dimension_mismatch(self):
        basis, H = make_system(4, 1)
        other = fock.enumerate_basis(4, 2)
        prop = dyn.make_propagator(H)
        with pytest.raises(ValidationError):
            dyn.evolve(prop, dyn.basis_state(other, [0, 1]), 1.0)

    def test_krylov_unreachable_tolerance_raises(self):
        from hcboson.errors import ConvergenceError
        basis, H = make_system(8, 2)
        prop = dyn.make_propagator(H, "krylov", krylov_dim=3,
                                   krylov_tol=1e-300)
        with pytest.raises(ConvergenceError, match="tolerance"):
            dyn.evolve(prop, dyn.basis_state(basis, [0, 1]), 5.0)


class TestSampleTrajectory:
    def test_norm_constant(self):
        basis, H = make_system(6, 2)
        prop = dyn.make_propagator(H)
        traj = dyn.sample_trajectory(prop, dyn.basis_state(basis, [0, 1]),
                                     0.1, 200, {"norm": lambda s: s.norm})
        assert np.max(np.abs(traj.series["norm"] - 1.0)) < 1e-10

    def test_energy_conserved(self):
        basis, H = make_system(6, 2, U=0.8)
        prop = dyn.make_propagator(H)

        def energy(state):
            return float(np.real(np.vdot(state.amplitudes,
                                         H.apply(state.amplitudes))))

        traj = dyn.sample_trajectory(prop, dyn.basis_state(basis, [0, 1]),
                                     0.25, 400, {"E": energy})
        e = traj.series["E"]
        assert np.max(np.abs(e - e[0])) < 1e-8 * max(1.0, abs(e[0]))

    def test_times_and_order(self):
        basis, H = make_system(3, 1)
        prop = dyn.make_propagator(H)
        traj = dyn.sample_trajectory(prop, dyn.basis_state(basis, [0]),
                                     0.5, 10, {"p0": lambda s: float(
                                         np.abs(s.amplitudes[0]) ** 2)})
        assert np.allclose(traj.times, 0.5 * np.arange(11))
        assert len(traj.series["p0"]) == 11

    def test_invalid_dt(self):
        basis, H = make_system(3, 1)
        prop = dyn.make_propagator(H)
        with pytest.raises(ValidationError):
            dyn.sample_trajectory(prop, dyn.basis_state(basis, [0]), -0.1, 5, {})

    def test_observer_failure_reports_context(self):
        basis, H = make_system(3, 1)
        prop = dyn.make_propagator(H)

        def broken(state):
            raise RuntimeError("boom")

        with pytest.raises(RuntimeError, match="observer 'bad' failed at t="):
            dyn.sample_trajectory(prop, dyn.basis_state(basis, [0]),
                                  0.1, 3, {"bad": broken})

    def test_krylov_sampling_matches_spectral(self):
        basis, H = make_system(9, 2)
        obs = {"p": lambda s: s.probabilities()}
        a = dyn.sample_trajectory(dyn.make_propagator(H, "spectral"),
                                  dyn.basis_state(basis, [0, 4]), 0.5, 40, obs)
        b = dyn.sample_trajectory(dyn.make_propagator(H, "krylov"),
                                  dyn.basis_state(basis, [0, 4]), 0.5, 40, obs)
        assert np.max(np.abs(a.series["p"] - b.series["p"])) < 1e-7
