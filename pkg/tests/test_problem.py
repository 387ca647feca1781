import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtpga.engine import gradient_stream
from gtpga.problem import (
    Dataset,
    NoiseModel,
    generate_dataset,
    load_dataset,
    local_gradient,
    local_value,
    mean_gradient,
    objective_value,
    regularizer_grad,
    regularizer_value,
    save_dataset,
    smoothness_constant,
    stacked_gradients,
    stochastic_gradient,
)


def finite_difference_gradient(ds, i, x, h=1e-6):
    """Central-difference oracle for the local gradient."""
    fd = np.empty_like(x)
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        fd[j] = (local_value(ds, i, x + e) - local_value(ds, i, x - e)) / (2 * h)
    return fd


@pytest.fixture(scope="module")
def small_ds():
    return generate_dataset(n=6, d=8, m=20, label_noise_std=0.1, seed=42, lam=0.01)


def test_generate_shapes_and_determinism():
    ds = generate_dataset(n=4, d=3, m=10, label_noise_std=0.1, seed=1)
    assert ds.a.shape == (4, 10, 3) and ds.b.shape == (4, 10)
    ds2 = generate_dataset(n=4, d=3, m=10, label_noise_std=0.1, seed=1)
    assert np.array_equal(ds.a, ds2.a) and np.array_equal(ds.b, ds2.b)
    ds3 = generate_dataset(n=4, d=3, m=10, label_noise_std=0.1, seed=2)
    assert not np.array_equal(ds.a, ds3.a)


def test_zero_noise_targets_interpolate_exactly():
    ds = generate_dataset(n=2, d=1, m=1, label_noise_std=0.0, seed=0, lam=0.0)
    for i in range(2):
        assert local_value(ds, i, ds.planted[i]) == 0.0


def test_planted_vectors_are_heterogeneous():
    ds = generate_dataset(n=8, d=4, m=5, label_noise_std=0.0, seed=3)
    assert not np.allclose(ds.planted[0], ds.planted[1])


def test_local_value_identity_design():
    ds = Dataset(a=np.eye(5)[None], b=np.zeros((1, 5)), lam=0.0)
    assert local_value(ds, 0, np.ones(5)) == pytest.approx(5.0)


def test_local_value_regularizer_only():
    # r(1) = 1/2 under the default regularizer
    ds = Dataset(a=np.zeros((1, 1, 1)), b=np.zeros((1, 1)), lam=0.01)
    assert local_value(ds, 0, np.array([1.0])) == pytest.approx(0.005)


def test_objective_is_average_of_locals(small_ds):
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.standard_normal(small_ds.d)
        direct = np.mean([local_value(small_ds, i, x) for i in range(small_ds.n)])
        # the per-agent split replicates the regularizer, so the average keeps one copy
        data_avg = np.mean(
            [float(np.sum((small_ds.a[i] @ x - small_ds.b[i]) ** 2)) for i in range(small_ds.n)]
        )
        reference = data_avg + small_ds.lam * float(regularizer_value(x).sum())
        assert objective_value(small_ds, x) == pytest.approx(direct)
        assert objective_value(small_ds, x) == pytest.approx(reference)


def test_quadratic_gradient():
    ds = Dataset(a=np.eye(4)[None], b=np.zeros((1, 4)), lam=0.0)
    x = np.array([1.0, -2.0, 0.5, 3.0])
    np.testing.assert_allclose(local_gradient(ds, 0, x), 2 * x, atol=1e-14)


def test_regularizer_gradient_zero_at_origin():
    ds = Dataset(a=np.zeros((1, 1, 1)), b=np.zeros((1, 1)), lam=0.01)
    assert local_gradient(ds, 0, np.zeros(1))[0] == 0.0


def test_gradient_matches_finite_differences(small_ds):
    rng = np.random.default_rng(7)
    for _ in range(100):
        i = int(rng.integers(0, small_ds.n))
        x = rng.standard_normal(small_ds.d)
        grad = local_gradient(small_ds, i, x)
        fd = finite_difference_gradient(small_ds, i, x)
        assert np.linalg.norm(fd - grad) / np.linalg.norm(grad) <= 1e-6


def test_gradient_matches_finite_differences_unbounded_regularizer():
    ds = generate_dataset(n=3, d=4, m=10, label_noise_std=0.1, seed=5, lam=0.05,
                          regularizer="unbounded")
    rng = np.random.default_rng(8)
    for _ in range(20):
        i = int(rng.integers(0, ds.n))
        x = np.abs(rng.standard_normal(ds.d))  # stay clear of the pole at -1
        grad = local_gradient(ds, i, x)
        fd = finite_difference_gradient(ds, i, x)
        assert np.linalg.norm(fd - grad) / np.linalg.norm(grad) <= 1e-6


def test_unbounded_regularizer_domain_guard():
    with pytest.raises(ValueError, match="unbounded regularizer"):
        regularizer_value(np.array([-1.0]), "unbounded")
    with pytest.raises(ValueError, match="unbounded regularizer"):
        regularizer_grad(np.array([-2.0]), "unbounded")


def test_bounded_regularizer_range():
    t = np.concatenate([np.linspace(-1e6, 1e6, 20001), [0.0]])
    r = regularizer_value(t)
    assert np.all(r >= 0.0) and np.all(r < 1.0)


def test_stacked_matches_local(small_ds):
    rng = np.random.default_rng(3)
    rows = rng.standard_normal((small_ds.n, small_ds.d))
    stacked = stacked_gradients(small_ds, rows)
    for i in range(small_ds.n):
        np.testing.assert_array_equal(stacked[i], local_gradient(small_ds, i, rows[i]))


def test_mean_gradient_is_average_of_locals(small_ds):
    x = np.linspace(-1, 1, small_ds.d)
    direct = np.mean([local_gradient(small_ds, i, x) for i in range(small_ds.n)], axis=0)
    np.testing.assert_allclose(mean_gradient(small_ds, x), direct, atol=1e-14)


def test_additive_sigma_zero_is_exact(small_ds):
    x = np.ones(small_ds.d)
    g = stochastic_gradient(small_ds, 1, x, NoiseModel(sigma=0.0), None)
    np.testing.assert_array_equal(g, local_gradient(small_ds, 1, x))


def test_full_index_minibatch_matches_exact():
    # replacing the sample by the full index set recovers the exact gradient
    ds = generate_dataset(n=2, d=3, m=6, label_noise_std=0.1, seed=9, lam=0.01)
    x = np.array([0.3, -0.2, 1.0])

    class FullBatch:
        def integers(self, low, high, size):
            return np.arange(high)

    g = stochastic_gradient(ds, 0, x, NoiseModel(mode="minibatch", batch=ds.m), FullBatch())
    np.testing.assert_allclose(g, local_gradient(ds, 0, x), rtol=1e-12)


def test_minibatch_too_large_rejected(small_ds):
    with pytest.raises(ValueError, match="exceeds"):
        stochastic_gradient(
            small_ds, 0, np.zeros(small_ds.d),
            NoiseModel(mode="minibatch", batch=small_ds.m + 1),
            gradient_stream(0, 0, 0),
        )


def test_additive_noise_mean_and_variance():
    # Monte-Carlo oracle: with sigma=1 the squared noise norm averages to
    # sigma^2; tolerance is three standard errors of the estimator
    ds = generate_dataset(n=2, d=20, m=5, label_noise_std=0.0, seed=1, lam=0.0)
    x = np.zeros(ds.d)
    exact = local_gradient(ds, 0, x)
    nm = NoiseModel(sigma=1.0)
    draws = 100_000
    rng = gradient_stream(123, 0, 0)
    noise = np.stack(
        [stochastic_gradient(ds, 0, x, nm, rng) - exact for _ in range(draws)]
    )
    sq = np.sum(noise * noise, axis=1)
    se = float(np.std(sq, ddof=1) / np.sqrt(draws))
    assert abs(float(np.mean(sq)) - 1.0) <= 3 * se
    # unbiasedness: the mean noise vector is zero within 3 standard errors
    mean_noise = np.linalg.norm(noise.mean(axis=0))
    assert mean_noise <= 3.0 / np.sqrt(draws) * np.sqrt(ds.d)


def test_minibatch_unbiased():
    ds = generate_dataset(n=2, d=4, m=30, label_noise_std=0.1, seed=2, lam=0.01)
    x = np.array([0.5, -1.0, 0.25, 2.0])
    exact = local_gradient(ds, 0, x)
    nm = NoiseModel(mode="minibatch", batch=5)
    draws = 100_000
    rng = gradient_stream(77, 0, 0)
    noise = np.stack(
        [stochastic_gradient(ds, 0, x, nm, rng) - exact for _ in range(draws)]
    )
    per_coord_se = np.std(noise, axis=0, ddof=1) / np.sqrt(draws)
    assert np.all(np.abs(noise.mean(axis=0)) <= 4 * per_coord_se)


def test_smoothness_identity_design():
    ds = Dataset(a=np.eye(6)[None], b=np.zeros((1, 6)), lam=0.0)
    assert smoothness_constant(ds) == pytest.approx(2.0, abs=1e-7)
    ds2 = Dataset(a=np.eye(6)[None], b=np.zeros((1, 6)), lam=0.01)
    assert smoothness_constant(ds2) == pytest.approx(2.02, abs=1e-7)


def test_smoothness_rank_one():
    a = np.array([[[3.0, 4.0]]])  # single row of norm 5
    ds = Dataset(a=a, b=np.zeros((1, 1)), lam=0.0)
    assert smoothness_constant(ds) == pytest.approx(2 * 25.0, rel=1e-7)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_regularizer_bounded_everywhere(t):
    r = float(regularizer_value(t))
    assert 0.0 <= r < 1.0


def test_dataset_roundtrip(tmp_path, small_ds):
    save_dataset(small_ds, tmp_path / "data")
    loaded = load_dataset(tmp_path / "data")
    assert np.array_equal(loaded.a, small_ds.a)
    assert np.array_equal(loaded.b, small_ds.b)
    assert np.array_equal(loaded.planted, small_ds.planted)
    assert loaded.lam == small_ds.lam
    assert loaded.seed == small_ds.seed
    assert loaded.regularizer == small_ds.regularizer


def test_dataset_validation():
    with pytest.raises(ValueError, match="shape"):
        Dataset(a=np.zeros((2, 3, 4)), b=np.zeros((2, 5)), lam=0.0)
    with pytest.raises(ValueError, match="nonnegative"):
        Dataset(a=np.zeros((1, 2, 2)), b=np.zeros((1, 2)), lam=-0.1)
    with pytest.raises(ValueError, match="regularizer"):
        Dataset(a=np.zeros((1, 2, 2)), b=np.zeros((1, 2)), lam=0.0, regularizer="cubic")
    with pytest.raises(ValueError, match="positive"):
        generate_dataset(n=0, d=1, m=1, label_noise_std=0.0, seed=0)


def test_noise_model_validation():
    with pytest.raises(ValueError, match="noise mode"):
        NoiseModel(mode="poisson")
    with pytest.raises(ValueError, match="nonnegative"):
        NoiseModel(sigma=-1.0)
    with pytest.raises(ValueError, match="minibatch size"):
        NoiseModel(mode="minibatch", batch=0)
