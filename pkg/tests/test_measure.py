import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from loggas.errors import ConfigurationError
from loggas.kernel import Domain, torus_log_kernel
from loggas.measure import (AliasTable, atomic_measure, convolve, convolve_at,
                            grid_measure, mean_interaction,
                            single_mode_measure, two_bump_measure,
                            uniform_measure)
from loggas.streams import generator, root_stream


def test_uniform_sample_moments(torus2):
    rng = generator(root_stream(1), 0)
    s = uniform_measure(torus2).sample(100_000, rng)
    se = 1.0 / math.sqrt(12.0 * 100_000)
    assert np.all(np.abs(s.mean(axis=0) - 0.5) < 5 * se)


def test_point_mass_sampling(torus2):
    rng = generator(root_stream(2), 0)
    m = atomic_measure(torus2, [[0.3, 0.8]], [1.0])
    s = m.sample(1000, rng)
    assert np.all(s == np.array([0.3, 0.8]))


def test_half_support_density(torus1):
    rng = generator(root_stream(3), 0)
    dens = np.zeros(64)
    dens[:32] = 2.0
    m = grid_measure(torus1, dens)
    s = m.sample(100_000, rng)
    assert np.all(s < 0.5)
    assert m.linf_density == 2.0


def test_grid_mass_validation(torus1):
    with pytest.raises(ConfigurationError):
        grid_measure(torus1, np.full(16, 1.01))
    with pytest.raises(ConfigurationError):
        grid_measure(torus1, -np.ones(16))


def test_atomic_weight_validation(torus1):
    with pytest.raises(ConfigurationError):
        atomic_measure(torus1, [[0.1], [0.2]], [0.7, 0.2])


def test_alias_table_frequencies():
    rng = generator(root_stream(4), 0)
    probs = np.array([0.1, 0.2, 0.3, 0.4])
    table = AliasTable(probs)
    draws = table.draw(rng, 200_000)
    freq = np.bincount(draws, minlength=4) / 200_000
    assert np.all(np.abs(freq - probs) < 0.005)


def test_sampler_chi_square_gof(torus1):
    rng = generator(root_stream(5), 0)
    m = single_mode_measure(torus1, 0.6, 16)
    s = m.sample(100_000, rng)[:, 0]
    counts, _ = np.histogram(s, bins=16, range=(0.0, 1.0))
    expected = m.density / m.density.sum() * 100_000
    _, pvalue = stats.chisquare(counts, expected)
    assert pvalue > 1e-3


def test_sampler_deterministic(torus2):
    m = two_bump_measure(torus2, cells=32)
    a = m.sample(1000, generator(root_stream(6), 1))
    b = m.sample(1000, generator(root_stream(6), 1))
    np.testing.assert_array_equal(a, b)


def test_convolve_uniform_is_zero(kernel2, uniform2):
    assert np.all(convolve(kernel2, 0.1, uniform2) == 0.0)


def test_convolve_single_mode_closed_form(torus1):
    m = single_mode_measure(torus1, 0.5, 64)
    k = torus_log_kernel(1, 8)
    field = convolve(k, 0.0, m)
    centers = (np.arange(64) + 0.5) / 64
    want = (1.0 / (2.0 * math.pi)) * 0.5 * np.cos(2.0 * np.pi * centers)
    np.testing.assert_allclose(field, want, atol=1e-14)


def test_convolve_linearity(torus1):
    k = torus_log_kernel(1, 16)
    m1 = single_mode_measure(torus1, 0.5, 64)
    m2 = two_bump_measure(torus1, cells=64)
    alpha = 0.3
    mix = grid_measure(torus1, alpha * m1.density + (1 - alpha) * m2.density)
    np.testing.assert_allclose(
        convolve(k, 0.02, mix),
        alpha * convolve(k, 0.02, m1) + (1 - alpha) * convolve(k, 0.02, m2),
        atol=1e-13)


def test_convolve_mean_preserved(torus1):
    k = torus_log_kernel(1, 16)
    m = two_bump_measure(torus1, cells=64)
    assert abs(convolve(k, 0.0, m).mean()) < 1e-14


def test_atomic_direct_vs_spectral(torus2, rng):
    k = torus_log_kernel(2, 4)
    m = atomic_measure(torus2, rng.random((5, 2)),
                       np.full(5, 0.2))
    pts = rng.random((7, 2))
    direct = convolve_at(k, 0.07, m, pts, method="direct")
    spectral = convolve_at(k, 0.07, m, pts, method="spectral")
    np.testing.assert_allclose(direct, spectral, atol=1e-8)


def test_convolve_rejects_free_space_grid():
    from loggas.kernel import free_log_kernel
    k = free_log_kernel(2)
    m = single_mode_measure(Domain("torus", 2), 0.2, 16)
    with pytest.raises(ConfigurationError):
        convolve(k, 0.1, m)


def test_mean_interaction_single_mode(torus1):
    # one Fourier mode at amplitude a: integral = 2 c_1 |a/2|^2
    m = single_mode_measure(torus1, 0.5, 64)
    k = torus_log_kernel(1, 8)
    want = 2.0 * (1.0 / (2.0 * math.pi)) * 0.25 * 0.25
    assert mean_interaction(k, 0.0, m) == pytest.approx(want, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=2,
                max_size=6))
def test_atomic_measures_normalize_and_sample_in_support(weights):
    torus1 = Domain("torus", 1)
    w = np.asarray(weights)
    w = w / w.sum()
    atoms = np.linspace(0.05, 0.9, w.size)[:, None]
    m = atomic_measure(torus1, atoms, w)
    s = m.sample(64, generator(root_stream(7), 0))
    assert set(np.unique(s)).issubset(set(atoms.ravel()))
