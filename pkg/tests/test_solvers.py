import numpy as np
import pytest

from tuckerkit.genbench import SyntheticSpec, gen_synthetic
from tuckerkit.linalg import orthonormality_defect, sin_theta_dist, singular_values, thin_svd
from tuckerkit.model import TuckerFactors, approx_error, contracted_unfolding, objective, reconstruct
from tuckerkit.solvers import (
    KKT_CONVERGED,
    MAX_SWEEPS,
    OBJ_STALLED,
    NumericalError,
    SolverConfig,
    asi,
    hooi,
    hosvd_init,
    random_init,
    solve,
    sweep_shared_contractions,
)
from tuckerkit.tensor import FlopCounter, count_madds, frobenius_norm

from conftest import assert_monotone_history, random_tensor, random_unitary


class TestRandomInit:
    def test_deterministic(self):
        a = random_init((9, 8), (3, 2), seed=7)
        b = random_init((9, 8), (3, 2), seed=7)
        for Pa, Pb in zip(a, b):
            assert np.array_equal(Pa, Pb)

    def test_orthonormal(self):
        for kind in ("real", "complex"):
            F = random_init((10, 7, 6), (4, 3, 2), seed=1, kind=kind)
            for P in F:
                assert orthonormality_defect(P) <= 1e-12 * np.sqrt(P.shape[1])

    def test_distinct_seeds_give_distinct_subspaces(self):
        a = random_init((100, 50), (10, 5), seed=0)
        b = random_init((100, 50), (10, 5), seed=1)
        assert sin_theta_dist(a[0], b[0]) > 0.1

    def test_invalid_core(self):
        with pytest.raises(ValueError):
            random_init((4, 4), (5, 2), seed=0)


class TestHosvdInit:
    def test_matrix_case_is_global_optimum(self, rng):
        for kind in ("real", "complex"):
            B = random_tensor(rng, (20, 15), kind)
            k = 4
            F = hosvd_init(B, (k, k))
            best = float(np.sum(singular_values(B)[:k] ** 2))
            assert objective(B, F) == pytest.approx(best, rel=1e-12)

    def test_exact_model_captured(self):
        spec = SyntheticSpec(dims=(16, 14, 12), core_dims=(4, 3, 3), eta=0.0, seed=2)
        B = gen_synthetic(spec)
        F = hosvd_init(B, spec.core_dims)
        assert objective(B, F) == pytest.approx(frobenius_norm(B) ** 2, rel=1e-10)

    def test_beats_random_init_on_noisy_model(self):
        better = 0
        for seed in range(20):
            spec = SyntheticSpec(dims=(30, 28, 26), core_dims=(4, 3, 3), eta=2.0**-3, seed=seed)
            B = gen_synthetic(spec)
            f_hosvd = objective(B, hosvd_init(B, spec.core_dims))
            f_rand = objective(B, random_init(spec.dims, spec.core_dims, seed))
            better += f_hosvd > f_rand
        assert better >= 18

    def test_rank_bound(self, rng):
        B = random_tensor(rng, (8, 2, 2))  # mode-0 unfolding is 8x4, rank bound 4
        with pytest.raises(ValueError):
            hosvd_init(B, (5, 2, 2))


class TestHooi:
    def test_full_dimension_converges_in_one_sweep(self, rng):
        B = random_tensor(rng, (4, 3, 2), "complex")
        res = hooi(B, B.shape)
        assert res.termination == KKT_CONVERGED
        assert len(res.history) == 1
        assert res.history[-1].objective == pytest.approx(frobenius_norm(B) ** 2, rel=1e-12)
        for P, n in zip(res.factors, B.shape):
            assert np.array_equal(P, np.eye(n, dtype=B.dtype))

    @pytest.mark.parametrize("kind", ["real", "complex"])
    def test_exact_model_recovery(self, kind):
        spec = SyntheticSpec(dims=(18, 16, 14), core_dims=(4, 3, 3), eta=0.0, seed=3, kind=kind)
        B = gen_synthetic(spec)
        res = hooi(B, spec.core_dims, SolverConfig(init="hosvd", eps_kkt=1e-10))
        assert approx_error(B, reconstruct(res.core, res.factors)) <= 1e-10
        assert res.termination == KKT_CONVERGED

    def test_rank_one_matches_normalized_power_updates(self):
        # with every core dimension 1, each update is C / ||C|| up to the
        # deterministic sign convention
        spec = SyntheticSpec(dims=(8, 7, 6), core_dims=(1, 1, 1), eta=2.0**-2, seed=9)
        B = gen_synthetic(spec)
        sweeps = 6
        cfg = SolverConfig(
            init=("random", 4), max_sweeps=sweeps, eps_kkt=1e-300, eps_obj=1e-300
        )
        res = hooi(B, (1, 1, 1), cfg)
        assert len(res.history) == sweeps

        factors = [P.copy() for P in random_init(B.shape, (1, 1, 1), 4)]
        for _ in range(sweeps):
            for mode in range(3):
                c = contracted_unfolding(B, factors, mode)
                v = c / np.linalg.norm(c)
                top = v[np.argmax(np.abs(v)), 0]
                v = v * np.conj(top / abs(top))
                factors[mode] = v
        for mode in range(3):
            assert np.allclose(res.factors[mode], factors[mode], atol=1e-13)

    def test_monotone_and_bounded(self):
        spec = SyntheticSpec(dims=(20, 18, 16), core_dims=(4, 3, 2), eta=2.0**-3, seed=1)
        B = gen_synthetic(spec)
        res = hooi(B, spec.core_dims, SolverConfig(init=("random", 0)))
        assert_monotone_history(res.history)
        bound = frobenius_norm(B) ** 2
        for rec in res.history:
            assert rec.objective <= bound * (1 + 1e-12)


class TestAsi:
    def test_full_dimension_fixed_point(self, rng):
        B = random_tensor(rng, (4, 3, 2))
        res = asi(B, B.shape)
        assert len(res.history) == 1
        assert res.history[-1].objective == pytest.approx(frobenius_norm(B) ** 2, rel=1e-12)

    @pytest.mark.parametrize("kind", ["real", "complex"])
    def test_exact_model_recovery(self, kind):
        spec = SyntheticSpec(dims=(18, 16, 14), core_dims=(4, 3, 3), eta=0.0, seed=3, kind=kind)
        B = gen_synthetic(spec)
        res = asi(B, spec.core_dims, SolverConfig(init=("random", 2), eps_kkt=1e-10))
        assert approx_error(B, reconstruct(res.core, res.factors)) <= 1e-10

    def test_takes_at_least_as_many_sweeps_as_hooi(self):
        wins = 0
        for seed in range(20):
            spec = SyntheticSpec(dims=(40, 36, 32), core_dims=(5, 4, 3), eta=2.0**-3, seed=seed)
            B = gen_synthetic(spec)
            init = ("random", seed)
            res_h = hooi(B, spec.core_dims, SolverConfig(init=init))
            res_a = asi(B, spec.core_dims, SolverConfig(init=init))
            assert_monotone_history(res_a.history)
            wins += len(res_a.history) >= len(res_h.history)
            f_h = res_h.history[-1].objective
            f_a = res_a.history[-1].objective
            assert abs(f_h - f_a) <= 1e-6 * f_h
        assert wins >= 16  # >= 80% of paired runs

    def test_multipliers_psd_at_convergence(self):
        spec = SyntheticSpec(dims=(20, 18, 16), core_dims=(4, 3, 2), eta=2.0**-4, seed=6)
        B = gen_synthetic(spec)
        res = asi(B, spec.core_dims, SolverConfig(init=("random", 1), eps_kkt=1e-11))
        for Om in res.final_full_kkt.mode_multipliers:
            eigs = np.linalg.eigvalsh(Om)
            assert eigs[0] >= -1e-10 * max(1.0, eigs[-1])


class TestSweepSharedContractions:
    def test_three_mode_matches_naive(self, rng):
        B = random_tensor(rng, (6, 5, 4), "complex")
        F = [random_init(B.shape, (3, 2, 2), 0, "complex")[i] for i in range(3)]
        shared = sweep_shared_contractions(B, F)
        for mode in range(3):
            naive = contracted_unfolding(B, F, mode)
            assert np.allclose(shared[mode], naive, rtol=1e-13, atol=1e-13 * frobenius_norm(B))

    def test_two_mode_degenerates_to_naive(self, rng):
        B = random_tensor(rng, (5, 4))
        F = list(random_init(B.shape, (2, 2), 3))
        shared = sweep_shared_contractions(B, F)
        for mode in range(2):
            assert np.array_equal(shared[mode], contracted_unfolding(B, F, mode))

    def test_shared_path_costs_strictly_less(self, rng):
        B = random_tensor(rng, (60, 55, 50))
        F = list(random_init(B.shape, (6, 5, 4), 0))
        with count_madds(FlopCounter()) as shared_counter:
            sweep_shared_contractions(B, F)
        with count_madds(FlopCounter()) as naive_counter:
            for mode in range(3):
                contracted_unfolding(B, F, mode)
        assert shared_counter.madds < naive_counter.madds


class TestStoppingAndDiagnostics:
    def test_max_sweeps_termination(self):
        spec = SyntheticSpec(dims=(12, 10, 8), core_dims=(3, 2, 2), eta=2.0**-2, seed=0)
        B = gen_synthetic(spec)
        res = hooi(B, spec.core_dims, SolverConfig(max_sweeps=2, eps_kkt=1e-300, eps_obj=1e-300))
        assert res.termination == MAX_SWEEPS
        assert len(res.history) == 2

    def test_objective_stall_termination(self):
        # with eps_kkt below the attainable floor, the run must end via the
        # stall rule once the objective is flat and the residual is tiny
        spec = SyntheticSpec(dims=(12, 10, 8), core_dims=(3, 2, 2), eta=0.0, seed=5)
        B = gen_synthetic(spec)
        res = hooi(B, spec.core_dims, SolverConfig(eps_kkt=1e-30, init=("random", 1), max_sweeps=200))
        assert res.termination == OBJ_STALLED
        assert res.history[-1].cheap_kkt <= 1e-15

    def test_deterministic_histories(self):
        spec = SyntheticSpec(dims=(14, 12, 10), core_dims=(3, 3, 2), eta=2.0**-3, seed=8)
        B = gen_synthetic(spec)
        cfg = SolverConfig(init=("random", 5))
        r1 = hooi(B, spec.core_dims, cfg)
        r2 = hooi(B, spec.core_dims, cfg)
        assert len(r1.history) == len(r2.history)
        for a, b in zip(r1.history, r2.history):
            assert a.objective == b.objective
            assert a.cheap_kkt == b.cheap_kkt
            for da, db in zip(a.per_mode, b.per_mode):
                assert (da is None) == (db is None)
                if da is not None:
                    assert da == db

    def test_right_unitary_invariance_of_iteration(self, rng):
        spec = SyntheticSpec(dims=(16, 14, 12), core_dims=(4, 3, 2), eta=2.0**-3, seed=2)
        B = gen_synthetic(spec)
        init = random_init(spec.dims, spec.core_dims, 3)
        rotated = TuckerFactors(
            tuple(P @ random_unitary(rng, P.shape[1]) for P in init)
        )
        r1 = hooi(B, spec.core_dims, SolverConfig(init=init))
        r2 = hooi(B, spec.core_dims, SolverConfig(init=rotated))
        for a, b in zip(r1.history, r2.history):
            assert b.objective == pytest.approx(a.objective, rel=1e-10)

    def test_greedy_align_neutral(self):
        spec = SyntheticSpec(dims=(20, 18, 16), core_dims=(4, 3, 3), eta=2.0**-4, seed=7)
        B = gen_synthetic(spec)
        plain = hooi(B, spec.core_dims, SolverConfig(init=("random", 7)))
        greedy = hooi(B, spec.core_dims, SolverConfig(init=("random", 7), greedy_align=True))
        f_p = plain.history[-1].objective
        f_g = greedy.history[-1].objective
        assert abs(f_p - f_g) <= 1e-8 * f_p
        for Pa, Pb in zip(plain.factors, greedy.factors):
            assert sin_theta_dist(Pa, Pb) <= 1e-6

    def test_kkt_check_period(self):
        spec = SyntheticSpec(dims=(12, 10, 8), core_dims=(3, 2, 2), eta=2.0**-2, seed=1)
        B = gen_synthetic(spec)
        res = hooi(B, spec.core_dims, SolverConfig(kkt_check_period=3, max_sweeps=7,
                                                   eps_kkt=1e-300, eps_obj=1e-300))
        for rec in res.history:
            assert (rec.cheap_kkt is not None) == (rec.sweep % 3 == 0)

    def test_series_terms_recorded(self):
        spec = SyntheticSpec(dims=(14, 12, 10), core_dims=(3, 3, 2), eta=2.0**-3, seed=8)
        B = gen_synthetic(spec)
        for method in ("hooi", "asi"):
            res = solve(B, spec.core_dims, SolverConfig(method=method, init=("random", 5)))
            rec = res.history[0]
            for diag in rec.per_mode:
                assert diag is not None
                assert diag.weight >= 0
                assert diag.subspace_change >= 0
                assert diag.multiplier_residual is not None
                assert diag.series_subspace == pytest.approx(
                    diag.weight * diag.subspace_change**2
                )
                assert diag.series_residual == pytest.approx(
                    diag.weight * diag.multiplier_residual**2
                )

    def test_record_series_off_skips_expensive_fields(self):
        spec = SyntheticSpec(dims=(12, 10, 8), core_dims=(3, 2, 2), eta=2.0**-2, seed=1)
        B = gen_synthetic(spec)
        res = asi(B, spec.core_dims, SolverConfig(method="asi", record_series=False, max_sweeps=3,
                                                  eps_kkt=1e-300, eps_obj=1e-300))
        for rec in res.history:
            for diag in rec.per_mode:
                assert diag.multiplier_residual is None
                assert diag.series_residual is None
                assert diag.kkt_term is not None  # cheap residual still tracked


class TestValidation:
    def test_non_finite_input(self, rng):
        B = random_tensor(rng, (4, 3, 2))
        B[1, 1, 1] = np.nan
        with pytest.raises(NumericalError):
            hooi(B, (2, 2, 2))

    def test_zero_tensor(self):
        with pytest.raises(ValueError):
            hooi(np.zeros((3, 3, 3)), (2, 2, 2))

    def test_bad_core_dims(self, rng):
        B = random_tensor(rng, (4, 3))
        with pytest.raises(ValueError):
            hooi(B, (5, 2))
        with pytest.raises(ValueError):
            hooi(B, (2,))

    def test_oversized_core_dimension_warns(self, rng):
        B = random_tensor(rng, (6, 2, 2))
        with pytest.warns(UserWarning, match="exceeds the product"):
            res = hooi(B, (5, 2, 2), SolverConfig(max_sweeps=4, eps_kkt=1e-300, eps_obj=1e-300))
        for P in res.factors:
            assert orthonormality_defect(P) <= 1e-11

    def test_provided_factors_shape_mismatch(self, rng):
        B = random_tensor(rng, (6, 5, 4))
        wrong = random_init((6, 5, 4), (2, 2, 2), 0)
        with pytest.raises(ValueError):
            hooi(B, (3, 2, 2), SolverConfig(init=wrong))

    def test_bad_config(self, rng):
        B = random_tensor(rng, (4, 3))
        with pytest.raises(ValueError):
            hooi(B, (2, 2), SolverConfig(eps_kkt=0.0))
        with pytest.raises(ValueError):
            hooi(B, (2, 2), SolverConfig(max_sweeps=0))
        with pytest.raises(ValueError):
            solve(B, (2, 2), SolverConfig(method="gradient"))
        with pytest.raises(ValueError):
            hooi(B, (2, 2), SolverConfig(init="warmstart"))

    def test_provided_init_via_string_seed(self, rng):
        spec = SyntheticSpec(dims=(10, 8, 6), core_dims=(2, 2, 2), eta=0.0, seed=1)
        B = gen_synthetic(spec)
        a = hooi(B, spec.core_dims, SolverConfig(init="random:7"))
        b = hooi(B, spec.core_dims, SolverConfig(init=("random", 7)))
        assert a.history[0].objective == b.history[0].objective


def test_thin_svd_used_for_updates_matches_eig_route(rng):
    # the left-singular-vector update must span the same subspace as the
    # dominant eigenvectors of the Gram matrix
    B = random_tensor(rng, (12, 10, 8), "complex")
    F = list(random_init(B.shape, (3, 3, 2), 0, "complex"))
    C = contracted_unfolding(B, F, 0)
    from tuckerkit.linalg import top_k_eigvectors
    from tuckerkit.model import gram

    U = thin_svd(C).U[:, :3]
    V, _ = top_k_eigvectors(gram(C), 3)
    assert sin_theta_dist(U, V) <= 1e-9
