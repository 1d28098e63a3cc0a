import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from overparam_lab import (
    distance_to_teacher,
    empirical_gradient,
    hessian_quadratic_form,
    make_teacher,
    optimal_alignment,
    population_gradient,
    population_hessian_quadratic_form,
    sample_dataset,
)
from oracles import fd_gradient, loss_of, random_instance, relative_error

seeds = st.integers(0, 2 ** 32 - 1)
dims = st.integers(2, 8)
widths = st.integers(1, 4)


def orthogonal(rng, K):
    Q, R = np.linalg.qr(rng.standard_normal((K, K)))
    return Q * np.sign(np.diag(R))


@settings(max_examples=40, deadline=None)
@given(seeds, dims, widths, st.integers(1, 16))
def test_gradient_matches_finite_differences(seed, d, K, n):
    _, data, W = random_instance(np.random.default_rng(seed), d=d, K=K, n=n)
    g = empirical_gradient(W, data)
    assert relative_error(g, fd_gradient(loss_of(data), W)) <= 1e-6


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(-3, 3))
def test_hessian_form_is_quadratic_in_direction(seed, c):
    rng = np.random.default_rng(seed)
    _, data, W = random_instance(rng)
    V = rng.standard_normal(W.shape)
    base = hessian_quadratic_form(W, V, data)
    assert hessian_quadratic_form(W, -V, data) == base
    assert np.isclose(hessian_quadratic_form(W, c * V, data), c * c * base, rtol=1e-10, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, dims, st.integers(1, 50), st.floats(0, 5))
def test_labels_are_nonnegative(seed, d, n, norm):
    data = sample_dataset(make_teacher(d, norm), n, seed)
    assert np.all(data.y >= 0)


@settings(max_examples=40, deadline=None)
@given(seeds, dims, widths)
def test_distance_invariant_under_neuron_rotations(seed, d, K):
    rng = np.random.default_rng(seed)
    teacher = make_teacher(d, float(rng.uniform(0.1, 2)))
    W = rng.standard_normal((d, K))
    R = orthogonal(rng, K)
    assert np.isclose(distance_to_teacher(W @ R, teacher), distance_to_teacher(W, teacher), rtol=1e-9, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds, dims, widths)
def test_population_quantities_are_rotation_equivariant(seed, d, K):
    rng = np.random.default_rng(seed)
    teacher = make_teacher(d, float(rng.uniform(0.1, 2)))
    W = rng.standard_normal((d, K))
    V = rng.standard_normal((d, K))
    R = orthogonal(rng, K)
    np.testing.assert_allclose(population_gradient(W @ R, teacher), population_gradient(W, teacher) @ R,
                               rtol=1e-10, atol=1e-10)
    assert np.isclose(population_hessian_quadratic_form(W @ R, V @ R, teacher),
                      population_hessian_quadratic_form(W, V, teacher), rtol=1e-9, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds, dims, widths, st.floats(-12, 4))
def test_alignment_always_unit(seed, d, K, log_scale):
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((d, K)) * 10.0 ** log_scale
    assert abs(np.linalg.norm(optimal_alignment(W, make_teacher(d)).q) - 1) <= 1e-12
