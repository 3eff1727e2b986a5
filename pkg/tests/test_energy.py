import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loggas.energy import (Configuration, batch_pair_sums, interaction_energy,
                           mean_energy, pair_sum_direct, probe_lower_bound)
from loggas.errors import ConfigurationError, DomainEvaluationError
from loggas.kernel import (Domain, displacement_field, free_log_kernel,
                           torus_log_kernel)
from loggas.measure import (atomic_measure, single_mode_measure,
                            uniform_measure)
from loggas.partition import _config_energies
from loggas.streams import generator, root_stream, substream


def test_single_particle_uniform_energy_is_zero(kernel2, uniform2):
    cfg = Configuration(np.array([[0.42, 0.13]]), kernel2.domain)
    br = interaction_energy(kernel2, 0.0, uniform2, cfg)
    assert br.pair_term == br.cross_term == br.mean_term == br.total == 0.0


def test_uniform_reduces_to_pair_sum(kernel2, uniform2, rng):
    cfg = Configuration(rng.random((6, 2)), kernel2.domain)
    br = interaction_energy(kernel2, 0.0, uniform2, cfg)
    assert br.cross_term == 0.0 and br.mean_term == 0.0
    assert br.total == pytest.approx(pair_sum_direct(kernel2, 0.0, cfg.points),
                                     rel=1e-10)


def test_two_point_antipodal_oracle(kernel2, uniform2):
    cfg = Configuration(np.array([[0.0, 0.0], [0.5, 0.5]]), kernel2.domain)
    br = interaction_energy(kernel2, 0.0, uniform2, cfg)
    oracle = torus_log_kernel(2, 512).displacement(
        np.array([[0.5, 0.5]]), 0.0)[0] / 2.0
    assert br.total == pytest.approx(oracle, abs=1e-4)


def test_breakdown_identity(kernel2, rng):
    m = single_mode_measure(kernel2.domain, 0.4, 32)
    cfg = Configuration(rng.random((5, 2)), kernel2.domain)
    br = interaction_energy(kernel2, 0.05, m, cfg)
    assert br.total == pytest.approx(br.pair_term - br.cross_term
                                     + br.mean_term, abs=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=2, max_value=32), st.integers(min_value=1,
                                                           max_value=16),
       st.integers(min_value=0, max_value=2**31 - 1))
def test_spectral_identity_matches_direct(n, cutoff, seed):
    rng = np.random.default_rng(seed)
    k = torus_log_kernel(2, cutoff)
    pts = rng.random((1, n, 2))
    spectral = batch_pair_sums(k, 0.01, pts)[0]
    direct = pair_sum_direct(k, 0.01, pts[0])
    assert spectral == pytest.approx(direct, rel=1e-8, abs=1e-10)


def test_positivity_after_diagonal_restoration(kernel2, rng):
    # adding back the per-particle diagonal mass makes the quadratic form
    # of the centered field, which is nonnegative mode by mode
    m = single_mode_measure(kernel2.domain, 0.4, 32)
    for n in (2, 5, 9):
        cfg = Configuration(rng.random((n, 2)), kernel2.domain)
        br = interaction_energy(kernel2, 0.05, m, cfg)
        assert br.total + 0.5 * kernel2.diagonal(0.05) >= -1e-12


def test_regularization_consistency_eps_to_zero(kernel2, uniform2, rng):
    cfg = Configuration(rng.random((6, 2)), kernel2.domain)
    bare = interaction_energy(kernel2, 0.0, uniform2, cfg).total
    vals = [interaction_energy(kernel2, eps, uniform2, cfg).total
            for eps in (1e-2, 1e-3, 1e-4, 1e-5)]
    errs = [abs(v - bare) for v in vals]
    assert errs[-1] < 1e-3
    assert errs[-1] <= errs[0]


def test_permutation_and_translation_invariance(kernel2, uniform2, rng):
    pts = rng.random((7, 2))
    base = interaction_energy(kernel2, 0.0, uniform2,
                              Configuration(pts, kernel2.domain)).total
    perm = interaction_energy(kernel2, 0.0, uniform2,
                              Configuration(pts[::-1], kernel2.domain)).total
    shift = interaction_energy(
        kernel2, 0.0, uniform2,
        Configuration((pts + np.array([0.37, 0.81])) % 1.0,
                      kernel2.domain)).total
    assert perm == pytest.approx(base, rel=1e-12)
    assert shift == pytest.approx(base, rel=1e-9)


def test_lattice_configuration_closed_form(kernel1):
    # an equally spaced lattice keeps only the modes that are multiples of n
    n = 8
    pts = (np.arange(n) / n)[:, None]
    got = batch_pair_sums(kernel1, 0.0, pts[None])[0]
    ks = np.arange(1, kernel1.cutoff + 1)
    c = 1.0 / (2.0 * np.pi * ks)
    keep = (ks % n) == 0
    want = (np.sum(2 * c[keep]) * n * n - n * np.sum(2 * c)) / (2 * n)
    assert got == pytest.approx(want, rel=1e-12)


def test_coincident_points_bare_free_log():
    k = free_log_kernel(2)
    u = atomic_measure(k.domain, [[0.0, 0.0]], [1.0])
    cfg = Configuration(np.zeros((2, 2)), k.domain)
    with pytest.raises(DomainEvaluationError):
        interaction_energy(k, 0.0, u, cfg)


def test_mean_energy_uniform_zero(kernel2, uniform2):
    for n in (1, 3, 17):
        assert mean_energy(kernel2, 0.0, uniform2, n) == 0.0


def test_mean_energy_single_mode_closed_form(kernel1):
    m = single_mode_measure(kernel1.domain, 0.5, 64)
    want = -0.5 * 2.0 * (1.0 / (2.0 * math.pi)) * 0.25 * 0.25
    for n in (1, 4, 9):
        assert mean_energy(kernel1, 0.0, m, n) == pytest.approx(want,
                                                                rel=1e-12)


def test_mean_energy_matches_monte_carlo(kernel1):
    m = single_mode_measure(kernel1.domain, 0.5, 64)
    want = mean_energy(kernel1, 0.0, m, 8)
    energies = _config_energies(kernel1, m, 8, 0.0, 10_000,
                                substream(root_stream(12), 0))
    se = energies.std(ddof=1) / math.sqrt(energies.size)
    assert abs(energies.mean() - want) < 4 * se


def test_literal_centering_variant(kernel1):
    m = single_mode_measure(kernel1.domain, 0.5, 64)
    rng = generator(root_stream(13), 0)
    cfg = Configuration(rng.random((5, 1)), kernel1.domain)
    strict = interaction_energy(kernel1, 0.02, m, cfg)
    literal = interaction_energy(kernel1, 0.02, m, cfg,
                                 literal_centering=True)
    n = cfg.n
    assert literal.cross_term == pytest.approx(strict.cross_term / n)
    assert literal.mean_term == pytest.approx(strict.mean_term / n**2)


def test_probe_two_points_matches_grid_oracle(kernel2, uniform2):
    rows = probe_lower_bound(kernel2, uniform2, [2], 4, root_stream(14),
                             sweeps=150)
    oracle = displacement_field(kernel2, 512).min() / 2.0
    n, found, ratio = rows[0]
    assert found <= oracle + 1e-3
    assert found >= oracle - 1e-6  # cannot beat the exact minimum


def test_probe_regularized_floor(kernel2, uniform2):
    eps = 2.0**-8
    rows = probe_lower_bound(kernel2, uniform2, [4, 8], 2, root_stream(15),
                             sweeps=100, eps=eps)
    floor = -0.5 * kernel2.diagonal(eps)
    for _, found, _ in rows:
        assert found >= floor - 1e-12
        assert found >= -kernel2.diagonal(eps) * abs(math.log(eps))


def test_probe_budget_guard(kernel2, uniform2):
    with pytest.raises(ConfigurationError):
        probe_lower_bound(kernel2, uniform2, [4], 0, root_stream(16))
    with pytest.raises(ConfigurationError):
        probe_lower_bound(kernel2, uniform2, [1], 2, root_stream(16))
