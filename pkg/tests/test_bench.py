import numpy as np
import pytest

from duelopt import (
    RngState,
    SyntheticObjective,
    check_estimator_error,
    check_sign_agreement,
    make_nonconvex_sparse,
    make_sparse_quadratic,
    point_with_gradient_norm,
    sweep_convergence,
)
from duelopt.bench import start_with_gap
from duelopt.errors import InvalidTestError


def sampled_smoothness_holds(obj, n_pairs=1000, seed=0):
    gen = np.random.default_rng(seed)
    for _ in range(n_pairs):
        a = gen.standard_normal(obj.dim) * gen.uniform(0.1, 3.0)
        b = gen.standard_normal(obj.dim) * gen.uniform(0.1, 3.0)
        lhs = np.linalg.norm(obj.gradient(a) - obj.gradient(b))
        rhs = obj.ell * np.linalg.norm(a - b)
        if lhs > rhs * (1 + 1e-12):
            return False
    return True


# ----- objective families ---------------------------------------------------


def test_quadratic_with_unit_coeffs_is_half_norm_squared():
    obj = make_sparse_quadratic(4, 4, seed=0, coeffs=np.ones(4))
    theta = np.array([1.0, -2.0, 0.5, 3.0])
    assert obj.value(theta) == pytest.approx(0.5 * np.dot(theta, theta), rel=1e-12)
    assert obj.ell == 1.0


def test_quadratic_minimum_at_origin():
    obj = make_sparse_quadratic(10, 3, seed=1)
    zero = np.zeros(10)
    assert obj.value(zero) == 0.0
    assert np.array_equal(obj.gradient(zero), zero)


def test_quadratic_smoothness_sampled():
    obj = make_sparse_quadratic(12, 4, seed=5)
    assert sampled_smoothness_holds(obj)


def test_nonconvex_alpha_zero_reduces_to_quadratic():
    obj = make_nonconvex_sparse(8, 3, seed=2, alpha=0.0)
    gen = np.random.default_rng(3)
    for _ in range(50):
        theta = gen.standard_normal(8)
        assert obj.value(theta) == pytest.approx(np.sum(theta[obj.support] ** 2), rel=1e-12)


def test_nonconvex_origin_is_stationary():
    obj = make_nonconvex_sparse(8, 3, seed=4, alpha=0.6)
    assert np.array_equal(obj.gradient(np.zeros(8)), np.zeros(8))
    assert obj.ell == pytest.approx(2.6)


def test_nonconvex_smoothness_sampled():
    obj = make_nonconvex_sparse(12, 5, seed=6)
    assert sampled_smoothness_holds(obj)


def test_sparse_gradient_inequality_at_sampled_points():
    gen = np.random.default_rng(7)
    for seed in range(5):
        for factory in (make_sparse_quadratic, make_nonconvex_sparse):
            obj = factory(30, 4, seed=seed)
            for _ in range(50):
                g = obj.gradient(gen.standard_normal(30) * 2)
                assert np.abs(g).sum() <= np.sqrt(obj.sparsity) * np.linalg.norm(g) + 1e-12


def test_value_batch_matches_scalar_value():
    for factory in (make_sparse_quadratic, make_nonconvex_sparse):
        obj = factory(9, 4, seed=8)
        gen = np.random.default_rng(9)
        thetas = gen.standard_normal((20, 9))
        batch = obj.value_batch(thetas)
        for row, expected in zip(thetas, batch):
            assert obj.value(row) == pytest.approx(expected, rel=1e-12)


def test_point_with_gradient_norm_hits_target():
    gen = np.random.default_rng(10)
    for factory in (make_sparse_quadratic, make_nonconvex_sparse):
        obj = factory(20, 5, seed=11)
        theta = point_with_gradient_norm(obj, 1.0, gen)
        assert np.linalg.norm(obj.gradient(theta)) == pytest.approx(1.0, abs=1e-9)


def test_start_with_gap_matches_requested_gap():
    obj = make_sparse_quadratic(15, 4, seed=12)
    theta0, delta = start_with_gap(obj, 0.5)
    assert obj.value(theta0) - obj.f_min == pytest.approx(0.5, abs=1e-9)
    assert delta == pytest.approx(0.5, abs=1e-9)


# ----- sign agreement ---------------------------------------------------------


def linear_objective(d, direction):
    direction = np.asarray(direction, dtype=float)
    support = np.flatnonzero(direction)

    def value(theta):
        return float(np.dot(direction, theta))

    def gradient(_theta):
        return direction.copy()

    def value_batch(thetas):
        return thetas @ direction

    # ell is an upper bound on the gradient Lipschitz constant (0 for linear)
    return SyntheticObjective(
        dim=d, support=support, ell=1.0, f_min=-np.inf,
        value=value, gradient=gradient, value_batch=value_batch,
    )


def test_sign_agreement_exact_for_linear():
    obj = linear_objective(6, [0.0, 2.0, 0.0, -1.0, 0.0, 0.0])
    theta = np.zeros(6)
    agreement = check_sign_agreement(obj, theta, epsilon=1.0, n_samples=5000, rng=RngState(1))
    assert agreement == 1.0


def test_sign_agreement_requires_large_gradient():
    obj = make_sparse_quadratic(10, 3, seed=13)
    with pytest.raises(InvalidTestError):
        check_sign_agreement(obj, np.zeros(10), epsilon=1.0, n_samples=10, rng=RngState(0))


def test_sign_agreement_improves_as_radius_shrinks():
    obj = make_sparse_quadratic(50, 5, seed=14)
    rng = RngState(15)
    theta = point_with_gradient_norm(obj, 1.0, rng.substream(rng.next_block()))
    base = 1.0 / (40.0 * obj.ell * np.sqrt(obj.dim))
    fractions = [
        check_sign_agreement(obj, theta, 1.0, 20_000, RngState(16), radius=base * scale)
        for scale in (16.0, 4.0, 1.0)
    ]
    assert fractions[0] <= fractions[1] + 0.005
    assert fractions[1] <= fractions[2] + 0.005


# ----- estimator recovery -------------------------------------------------------


def test_estimator_error_one_dimensional_is_exact():
    report = check_estimator_error(d=1, s=1, flip_prob=0.0, m=8, trials=5, rng=RngState(2))
    assert np.array_equal(report.errors, np.zeros(5))


def test_estimator_error_decreases_with_m():
    medians = []
    for m in (40, 160, 640):
        report = check_estimator_error(d=50, s=3, flip_prob=0.0, m=m, trials=30, rng=RngState(3))
        medians.append(float(np.median(report.errors)))
    assert medians[2] < medians[0]


def test_estimator_error_deterministic():
    a = check_estimator_error(d=30, s=3, flip_prob=0.1, m=60, trials=10, rng=RngState(4))
    b = check_estimator_error(d=30, s=3, flip_prob=0.1, m=60, trials=10, rng=RngState(4))
    assert np.array_equal(a.errors, b.errors)


def test_estimator_error_validates_flip_probability():
    with pytest.raises(InvalidTestError):
        check_estimator_error(d=10, s=2, flip_prob=0.5, m=10, trials=2, rng=RngState(0))


# ----- convergence sweep ---------------------------------------------------------


def test_sweep_small_grid_converges():
    report = sweep_convergence([50, 100], 5, 0.1, 0.1, seeds=[0, 1], c_m=2.0)
    assert report.all_converged()
    assert report.mean_calls(50) is not None
    ratios = report.doubling_ratios()
    assert len(ratios) == 1 and ratios[0][:2] == (50, 100)


def test_sweep_dense_needs_more_calls_than_sparse():
    sparse = sweep_convergence([400], 5, 0.1, 0.1, seeds=[0], c_m=1.0)
    dense = sweep_convergence([400], 400, 0.1, 0.1, seeds=[0], c_m=1.0)
    assert sparse.all_converged() and dense.all_converged()
    assert dense.mean_calls(400) > sparse.mean_calls(400)


def test_sweep_halving_epsilon_multiplies_calls_reasonably():
    seeds = [0, 1, 2]
    coarse = sweep_convergence([100], 5, 0.2, 0.1, seeds=seeds, c_m=2.0)
    fine = sweep_convergence([100], 5, 0.1, 0.1, seeds=seeds, c_m=2.0)
    factor = fine.mean_calls(100) / coarse.mean_calls(100)
    assert 2.0 <= factor <= 8.0


def test_sweep_reports_are_deterministic():
    a = sweep_convergence([60], 4, 0.1, 0.1, seeds=[5], c_m=1.0)
    b = sweep_convergence([60], 4, 0.1, 0.1, seeds=[5], c_m=1.0)
    assert a.csv_rows() == b.csv_rows()


def test_sweep_censors_untracked_cells():
    from duelopt.bench import SweepCell, SweepReport

    report = SweepReport(
        s=2, epsilon=0.1, Lambda=0.1, c_m=1.0,
        cells=[
            SweepCell(d=10, seed=0, converged=True, oracle_calls=100, iterations=5, min_grad_norm=0.05),
            SweepCell(d=10, seed=1, converged=False, oracle_calls=None, iterations=50, min_grad_norm=0.5),
            SweepCell(d=20, seed=0, converged=True, oracle_calls=150, iterations=6, min_grad_norm=0.04),
        ],
    )
    assert not report.all_converged()
    assert report.mean_calls(10) == 100.0  # censored cell excluded, not fatal
    assert report.max_doubling_ratio() == pytest.approx(1.5)
    rows = report.csv_rows()
    assert rows[2][3] == ""  # censored cell exports an empty call count
