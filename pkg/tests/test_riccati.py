"""System validation, stationary/finite Riccati solutions, Lyapunov solver."""
import numpy as np
import pytest
from conftest import GOLDEN, golden_system, lyapunov_kron_oracle, random_system

from lqgcomm.errors import NotControllable, NotPositiveDefinite, NotPSD, Unstable
from lqgcomm.linalg import spectral_radius
from lqgcomm.riccati import riccati_finite, solve_dare_control, solve_lyapunov
from lqgcomm.systems import make_system, validate_system

I2 = np.eye(2)


class TestValidate:
    def test_identity_input_map_is_valid(self):
        sys = validate_system(make_system(np.zeros((2, 2)), I2, I2, I2, I2, I2))
        assert sys.validated

    def test_double_integrator_is_controllable(self):
        # [b, a b] = [[0, 1], [1, 1]], rank 2 by hand
        sys = make_system([[1, 1], [0, 1]], [[0], [1]], I2, [[1.0]], I2, I2)
        assert validate_system(sys).validated

    def test_uncontrollable_pair_rejected(self):
        # [b, a b] = [[1, 1], [0, 0]], rank 1 by hand
        sys = make_system(I2, [[1], [0]], I2, [[1.0]], I2, I2)
        with pytest.raises(NotControllable):
            validate_system(sys)

    def test_psi_w_must_be_pd(self):
        sys = make_system([[0.0]], [[1.0]], [[1.0]], [[1.0]], [[0.0]], [[1.0]])
        with pytest.raises(NotPositiveDefinite):
            validate_system(sys)

    def test_asymmetric_weight_rejected(self):
        f = np.array([[1.0, 0.5], [0.0, 1.0]])
        sys = make_system(np.zeros((2, 2)), I2, f, I2, I2, I2)
        with pytest.raises(NotPSD):
            validate_system(sys)

    def test_nearly_symmetric_weight_is_cleaned(self):
        f = np.array([[1.0, 1e-13], [0.0, 1.0]])
        sys = validate_system(make_system(np.zeros((2, 2)), I2, f, I2, I2, I2))
        assert np.array_equal(sys.f, sys.f.T)


class TestStationary:
    def test_golden_closed_form(self):
        # scalar map reduces to gamma^2 - gamma - 1 = 0, root (1+sqrt5)/2
        sol = solve_dare_control(golden_system())
        assert sol.gamma[0, 0] == pytest.approx(GOLDEN, abs=1e-12)
        assert sol.gain[0, 0] == pytest.approx(1.0 / GOLDEN, abs=1e-12)
        assert sol.j_star == pytest.approx(GOLDEN, abs=1e-12)
        assert sol.residual <= 1e-12

    def test_zero_dynamics_gives_terminal_weight(self):
        f = np.diag([2.0, 3.0])
        psi_w = 0.5 * I2
        sys = validate_system(make_system(np.zeros((2, 2)), I2, f, I2, psi_w, I2))
        sol = solve_dare_control(sys)
        assert np.allclose(sol.gamma, f, atol=1e-12)
        assert np.allclose(sol.gain, 0.0, atol=1e-12)
        assert sol.j_star == pytest.approx(np.trace(f @ psi_w), abs=1e-12)

    def test_decoupled_axes_solve_per_axis_quadratic(self):
        # each axis: gamma = 1 + 0.25*gamma/(1+gamma), i.e. gamma^2 - 0.25 gamma - 1 = 0
        root = (0.25 + np.sqrt(0.25**2 + 4.0)) / 2.0
        sys = validate_system(make_system(0.5 * I2, I2, I2, I2, I2, I2))
        sol = solve_dare_control(sys)
        assert np.allclose(sol.gamma, root * I2, atol=1e-11)

    def test_random_systems_residual_and_stability(self):
        rng = np.random.default_rng(20240817)
        for _ in range(20):
            sys = random_system(rng, d1=int(rng.integers(1, 5)))
            sol = solve_dare_control(sys)
            # plugging gamma back into the map reproduces it
            m = sys.g + sys.b.T @ sol.gamma @ sys.b
            rhs = sys.f + sys.a.T @ (
                sol.gamma - sol.gamma @ sys.b @ np.linalg.solve(m, sys.b.T @ sol.gamma)
            ) @ sys.a
            assert np.max(np.abs(rhs - sol.gamma)) <= 1e-11 * max(1, np.max(np.abs(sol.gamma)))
            assert spectral_radius(sys.a - sys.b @ sol.gain) < 1.0
            eig = np.linalg.eigvalsh(sol.gamma)
            assert eig[0] >= -1e-10


class TestFiniteHorizon:
    def test_one_step_zero_dynamics(self):
        f = np.diag([2.0, 3.0])
        psi_w = 0.5 * I2
        psi_x = 2.0 * I2
        sys = validate_system(make_system(np.zeros((2, 2)), I2, f, I2, psi_w, psi_x))
        sol = riccati_finite(sys, 1)
        assert np.allclose(sol.gammas[0], f, atol=1e-15)
        assert np.allclose(sol.gains[0], 0.0, atol=1e-15)
        expected = np.trace(psi_x @ f) + np.trace(psi_w @ f)
        assert sol.j_star_n == pytest.approx(expected, abs=1e-12)

    def test_two_step_golden_by_hand(self):
        # gamma_3 = 1; gamma_2 = 1 + (1 - 1/2) = 1.5; gamma_1 = 1 + 1.5 - 1.5^2/2.5 = 1.6
        sol = riccati_finite(golden_system(), 2)
        assert sol.gammas[2][0, 0] == pytest.approx(1.0, abs=1e-15)
        assert sol.gammas[1][0, 0] == pytest.approx(1.5, abs=1e-15)
        assert sol.gammas[0][0, 0] == pytest.approx(1.6, abs=1e-15)
        # stage gains use the next stage's value matrix
        assert sol.gains[1][0, 0] == pytest.approx(1.0 / 2.0, abs=1e-15)
        assert sol.gains[0][0, 0] == pytest.approx(1.5 / 2.5, abs=1e-15)

    def test_terminal_entry_is_exactly_f(self):
        sys = golden_system()
        sol = riccati_finite(sys, 5)
        assert np.array_equal(sol.gammas[5], sys.f)
        assert all(np.linalg.eigvalsh(g)[0] >= -1e-12 for g in sol.gammas)

    def test_golden_converges_to_stationary(self):
        sys = golden_system()
        stat = solve_dare_control(sys)
        fin = riccati_finite(sys, 200)
        assert abs(fin.gammas[0][0, 0] - stat.gamma[0, 0]) <= 1e-9
        # the average cost itself converges at rate O(1/n)
        assert abs(fin.j_star_n - stat.j_star) <= 2.0 * stat.j_star / 200

    def test_random_systems_converge_at_500(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            sys = random_system(rng, d1=int(rng.integers(1, 4)))
            stat = solve_dare_control(sys)
            fin = riccati_finite(sys, 500)
            assert np.max(np.abs(fin.gammas[0] - stat.gamma)) <= 1e-8


class TestLyapunov:
    def test_zero_map(self):
        q = np.diag([1.0, 2.0])
        assert np.allclose(solve_lyapunov(np.zeros((2, 2)), q), q, atol=1e-14)

    def test_scalar_geometric_series(self):
        x = solve_lyapunov([[0.5]], [[1.0]])
        assert x[0, 0] == pytest.approx(4.0 / 3.0, abs=1e-12)

    def test_decoupled_axes(self):
        x = solve_lyapunov(0.5 * I2, I2)
        assert np.allclose(x, (4.0 / 3.0) * I2, atol=1e-12)

    def test_matches_kronecker_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            d = int(rng.integers(1, 4))
            m = rng.normal(size=(d, d))
            m *= rng.uniform(0.2, 0.9) / max(spectral_radius(m), 1e-9)
            qmat = rng.normal(size=(d, d))
            qmat = qmat @ qmat.T
            got = solve_lyapunov(m, qmat)
            want = lyapunov_kron_oracle(m, qmat)
            assert np.max(np.abs(got - want)) <= 1e-10 * max(1, np.max(np.abs(want)))

    def test_unstable_map_rejected(self):
        with pytest.raises(Unstable):
            solve_lyapunov([[1.0]], [[1.0]])

    def test_near_unit_radius_converges(self):
        x = solve_lyapunov([[1.0 - 1e-6]], [[1.0]])
        # geometric series 1/(1 - m^2)
        m = 1.0 - 1e-6
        assert x[0, 0] == pytest.approx(1.0 / (1.0 - m * m), rel=1e-9)
