import numpy as np
import pytest

from hilbert_ops.dynamics import TrajectorySpec, gen_trajectory
from hilbert_ops.errors import ConformabilityError, DegeneracyError, PreconditionError
from hilbert_ops.operator_learning import (
    Dictionary,
    KoopmanModel,
    OperatorMatrix,
    SnapshotPairs,
    apply_operator,
    delay_embed,
    eval_dictionary,
    fit_edmd,
    fit_operator_ridge,
    forecast,
    forecast_lifted,
    hs_norm,
    koopman_eigs,
    monomial_exponents,
    ridge_objective,
)

A_PLANTED = np.array([[0.9, 0.1], [0.0, 0.8]])


def _linear_pairs(rng, n=50, A=A_PLANTED):
    traj = [rng.standard_normal(A.shape[0])]
    for _ in range(n):
        traj.append(A @ traj[-1])
    return SnapshotPairs.from_trajectory(np.array(traj)), np.array(traj)


def _random_problem(rng, n=12, d_in=4, d_out=3):
    return rng.standard_normal((n, d_in)), rng.standard_normal((n, d_out))


class TestOperatorRidge:
    def test_single_pair_hand_value(self):
        T = fit_operator_ridge([[1.0, 0.0]], [[0.0, 1.0]], 1.0)
        assert np.max(np.abs(T.entries - np.array([[0.0, 0.0], [0.5, 0.0]]))) <= 1e-12
        np.testing.assert_allclose(apply_operator(T, [1.0, 0.0]), [0.0, 0.5], atol=1e-12)

    def test_planted_identity(self, rng):
        X = rng.standard_normal((20, 3))
        T = fit_operator_ridge(X, X, 1e-10)
        assert np.max(np.abs(T.entries - np.eye(3))) <= 1e-4

    def test_zero_outputs(self, rng):
        X = rng.standard_normal((5, 3))
        assert not np.any(fit_operator_ridge(X, np.zeros((5, 2)), 0.3).entries)

    def test_first_order_condition(self, rng):
        for _ in range(10):
            X, Y = _random_problem(rng)
            lam = 10 ** rng.uniform(-3, 1)
            T = fit_operator_ridge(X, Y, lam).entries
            Gxx, Gyx = X.T @ X, Y.T @ X
            assert np.max(np.abs(T @ (Gxx + lam * np.eye(4)) - Gyx)) <= 1e-8

    def test_closed_form_oracle(self, rng):
        X, Y = _random_problem(rng)
        # vectorized least squares on [X; sqrt(lam) I]
        lam = 0.7
        Xa = np.vstack([X, np.sqrt(lam) * np.eye(4)])
        Ya = np.vstack([Y, np.zeros((4, 3))])
        oracle = np.linalg.lstsq(Xa, Ya, rcond=None)[0].T
        np.testing.assert_allclose(fit_operator_ridge(X, Y, lam).entries, oracle, atol=1e-12)

    def test_complex_coefficients(self, rng):
        X = rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3))
        T_true = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        Y = X @ T_true.T
        T = fit_operator_ridge(X, Y, 1e-12)
        assert np.max(np.abs(T.entries - T_true)) <= 1e-8

    def test_perturbation_optimality(self, rng):
        for _ in range(10):
            X, Y = _random_problem(rng)
            lam = 10 ** rng.uniform(-2, 1)
            T = fit_operator_ridge(X, Y, lam)
            best = ridge_objective(T, X, Y, lam)
            for _ in range(50):
                D = rng.standard_normal(T.shape)
                D *= 1e-3 / np.linalg.norm(D)
                assert ridge_objective(OperatorMatrix(T.entries + D), X, Y, lam) >= best

    def test_hs_norm_monotone_in_lambda(self, rng):
        for _ in range(10):
            X, Y = _random_problem(rng)
            norms = [hs_norm(fit_operator_ridge(X, Y, lam)) for lam in np.logspace(-3, 2, 5)]
            assert all(b <= a for a, b in zip(norms, norms[1:]))

    def test_errors(self):
        with pytest.raises(ConformabilityError):
            fit_operator_ridge(np.ones((3, 2)), np.ones((2, 2)), 1.0)
        with pytest.raises(PreconditionError):
            fit_operator_ridge(np.ones((3, 2)), np.ones((3, 2)), 0.0)


class TestHsNormAndApply:
    def test_identity(self):
        assert hs_norm(OperatorMatrix.identity(3)) == pytest.approx(np.sqrt(3), abs=1e-15)

    def test_zero(self):
        assert hs_norm(OperatorMatrix(np.zeros((2, 5)))) == 0.0

    def test_column_oracle(self, rng):
        T = OperatorMatrix(rng.standard_normal((4, 6)))
        total = 0.0
        for i in range(6):
            e = np.zeros(6)
            e[i] = 1.0
            total += np.sum(apply_operator(T, e) ** 2)
        assert abs(hs_norm(T) ** 2 - total) <= 1e-12

    def test_apply_linear(self, rng):
        T = OperatorMatrix(rng.standard_normal((3, 3)))
        c, d = rng.standard_normal(3), rng.standard_normal(3)
        a, b = 1.7, -0.4
        lhs = apply_operator(T, a * c + b * d)
        assert np.max(np.abs(lhs - (a * apply_operator(T, c) + b * apply_operator(T, d)))) <= 1e-12

    def test_apply_identity_and_mismatch(self, rng):
        c = rng.standard_normal(4)
        assert np.array_equal(apply_operator(OperatorMatrix.identity(4), c), c)
        with pytest.raises(ConformabilityError):
            apply_operator(OperatorMatrix.identity(4), np.ones(3))

    def test_non_finite_rejected(self):
        with pytest.raises(PreconditionError):
            OperatorMatrix([[np.inf]])


class TestDictionary:
    def test_identity(self):
        assert eval_dictionary(Dictionary.identity(2), [2, 3]).tolist() == [2, 3]

    def test_monomials_1d(self):
        assert eval_dictionary(Dictionary.monomials(1, 2), [2]).tolist() == [1, 2, 4]

    def test_monomials_enumeration(self):
        exps = monomial_exponents(2, 2)
        assert exps[:3] == [(0, 0), (1, 0), (0, 1)]
        assert sorted(exps) == sorted({(a, b) for a in range(3) for b in range(3) if a + b <= 2})
        d = Dictionary.monomials(3, 2)
        assert d.output_dim == 10
        x = np.array([2.0, -1.0, 0.5])
        psi = eval_dictionary(d, x)
        for e, v in zip(monomial_exponents(3, 2), psi):
            assert v == pytest.approx(np.prod(x ** np.array(e)))

    def test_rbf_center(self):
        d = Dictionary.rbf([[1.0, 2.0], [0.0, 0.0]], 0.5)
        psi = eval_dictionary(d, [1.0, 2.0])
        assert psi[2] == 1.0 and psi[:2].tolist() == [1.0, 2.0]

    def test_readout_recovers_state(self, rng):
        x = rng.standard_normal(3)
        for d in (Dictionary.identity(3), Dictionary.monomials(3, 3), Dictionary.rbf(rng.standard_normal((4, 3)), 1.0)):
            assert np.max(np.abs(d.readout_matrix() @ eval_dictionary(d, x) - x)) <= 1e-8
            assert d.output_dim >= 3

    def test_delay(self):
        traj = np.arange(10.0)[:, None]
        Z = delay_embed(traj, 2)
        assert Z[0].tolist() == [2.0, 1.0, 0.0] and Z.shape == (8, 3)
        d = Dictionary.delay(1, 2)
        assert (d.readout_matrix() @ eval_dictionary(d, Z[0])).tolist() == [2.0]

    def test_errors(self):
        with pytest.raises(ConformabilityError):
            eval_dictionary(Dictionary.identity(2), [1.0, 2.0, 3.0])
        with pytest.raises(ConformabilityError):
            Dictionary("rbf", 2, centers=np.zeros((2, 3)))
        with pytest.raises(PreconditionError):
            Dictionary("fourier", 2)

    def test_dict_round_trip(self, rng):
        for d in (Dictionary.monomials(2, 3), Dictionary.rbf(rng.standard_normal((3, 2)), 0.7), Dictionary.delay(2, 1)):
            back = Dictionary.from_dict(d.to_dict())
            x = rng.standard_normal(d.state_dim)
            assert np.array_equal(eval_dictionary(back, x), eval_dictionary(d, x))


class TestEdmd:
    def test_planted_linear_system(self, rng):
        pairs, traj = _linear_pairs(rng)
        m = fit_edmd(pairs, Dictionary.identity(2), 0.0)
        assert np.max(np.abs(m.K.entries - A_PLANTED)) <= 1e-8
        eigs = [w for w, _ in koopman_eigs(m)]
        assert abs(eigs[0] - 0.9) <= 1e-8 and abs(eigs[1] - 0.8) <= 1e-8
        x0 = traj[0]
        fc = forecast(m, x0, 20)
        exact = np.array([np.linalg.matrix_power(A_PLANTED, t) @ x0 for t in range(1, 21)])
        assert np.max(np.abs(fc - exact)) <= 1e-6

    def test_exact_for_random_linear_systems(self, rng):
        for p in (2, 3, 5):
            A = rng.standard_normal((p, p))
            A *= 0.95 / max(abs(np.linalg.eigvals(A)))
            X = rng.standard_normal((40, p))
            m = fit_edmd(SnapshotPairs(X, X @ A.T), Dictionary.identity(p))
            assert np.max(np.abs(m.K.entries - A)) <= 1e-8

    def test_constant_trajectory_fixed_point(self):
        x = np.array([0.3, -1.2])
        pairs = SnapshotPairs(np.tile(x, (10, 1)), np.tile(x, (10, 1)))
        d = Dictionary.monomials(2, 2)
        with pytest.raises(DegeneracyError, match="lambda > 0"):
            fit_edmd(pairs, d, 0.0)
        for m in (fit_edmd(pairs, d, 0.0, strict=False), fit_edmd(pairs, d, 1e-12)):
            z = eval_dictionary(d, x)
            assert np.max(np.abs(m.K.entries @ z - z)) <= 1e-10

    def test_underdetermined_warns(self, rng):
        X = rng.standard_normal((3, 2))
        with pytest.warns(UserWarning):
            fit_edmd(SnapshotPairs(X, X), Dictionary.monomials(2, 2), 1e-3)

    def test_ridge_path_matches_operator_ridge(self, rng):
        pairs, _ = _linear_pairs(rng, 30)
        d = Dictionary.monomials(2, 2)
        m = fit_edmd(pairs, d, 0.1)
        T = fit_operator_ridge(d.lift(pairs.X), d.lift(pairs.Y), 0.1)
        assert np.array_equal(m.K.entries, T.entries)

    def test_lorenz_one_step(self):
        pairs, traj = gen_trajectory(TrajectorySpec("lorenz", (1.0, 1.0, 1.0), 0.01, 2000))
        train = SnapshotPairs(pairs.X[:1500], pairs.Y[:1500])
        m = fit_edmd(train, Dictionary.monomials(3, 2), 0.0)
        pred = np.array([forecast(m, x, 1)[0] for x in pairs.X[1500:]])
        rmse = np.sqrt(np.mean((pred - pairs.Y[1500:]) ** 2, axis=0))
        assert np.all(rmse <= 0.05 * traj.std(axis=0))

    def test_negative_lambda(self, rng):
        pairs, _ = _linear_pairs(rng)
        with pytest.raises(PreconditionError):
            fit_edmd(pairs, Dictionary.identity(2), -1.0)

    def test_model_dict_round_trip(self, rng):
        pairs, _ = _linear_pairs(rng)
        m = fit_edmd(pairs, Dictionary.monomials(2, 2), 1e-6)
        back = KoopmanModel.from_dict(m.to_dict())
        assert np.array_equal(back.K.entries, m.K.entries) and np.array_equal(back.readout, m.readout)


class TestEigs:
    def _model(self, K):
        return KoopmanModel(Dictionary.identity(K.shape[0]), OperatorMatrix(K), np.eye(K.shape[0]))

    def test_diagonal(self):
        w = [e for e, _ in koopman_eigs(self._model(np.diag([0.5, -0.25])))]
        assert w == [0.5, -0.25]

    def test_identity(self):
        assert all(e == 1 for e, _ in koopman_eigs(self._model(np.eye(4))))

    def test_sorted_with_small_residuals(self, rng):
        K = rng.standard_normal((6, 6))
        pairs = koopman_eigs(self._model(K))
        mags = [abs(w) for w, _ in pairs]
        assert all(a >= b - 1e-12 for a, b in zip(mags, mags[1:]))
        for w, v in pairs:
            assert np.linalg.norm(K @ v - w * v) <= 1e-8
            assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_conjugate_pair_order_is_deterministic(self):
        K = np.array([[0.0, -1.0], [1.0, 0.0]])
        w = [e for e, _ in koopman_eigs(self._model(K))]
        assert w == [1j, -1j]


class TestForecast:
    def test_identity_k_constant(self, rng):
        d = Dictionary.monomials(2, 2)
        m = KoopmanModel(d, OperatorMatrix.identity(d.output_dim), d.readout_matrix())
        x0 = rng.standard_normal(2)
        assert np.all(forecast(m, x0, 7) == x0)

    def test_one_step_definition(self, rng):
        pairs, _ = _linear_pairs(rng)
        d = Dictionary.monomials(2, 2)
        m = fit_edmd(pairs, d, 1e-6)
        x0 = rng.standard_normal(2)
        assert np.array_equal(forecast(m, x0, 1)[0], m.readout @ (m.K.entries @ eval_dictionary(d, x0)))

    def test_k_step_equals_composed_steps(self, rng):
        pairs, _ = _linear_pairs(rng)
        d = Dictionary.monomials(2, 3)
        m = fit_edmd(pairs, d, 1e-6)
        z = eval_dictionary(d, rng.standard_normal(2))
        many = forecast_lifted(m, z, 12)
        for t in range(12):
            z = forecast_lifted(m, z, 1)[0]
            assert np.array_equal(z, many[t])

    def test_steps_must_be_positive(self, rng):
        m = KoopmanModel(Dictionary.identity(2), OperatorMatrix.identity(2), np.eye(2))
        with pytest.raises(PreconditionError):
            forecast(m, [0.0, 0.0], 0)
