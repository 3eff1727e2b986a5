import math

import numpy as np
import pytest

from loggas.errors import ConfigurationError, EstimationError
from loggas.kernel import free_log_kernel, torus_log_kernel
from loggas.measure import atomic_measure, single_mode_measure, uniform_measure
from loggas.energy import mean_energy
from loggas.partition import (enumerate_partition, estimate_partition,
                              sweep_partition, trend_flatness)
from loggas.streams import root_stream


def test_single_particle_is_exactly_one(kernel2, uniform2):
    est = estimate_partition(kernel2, uniform2, 1, 3.7, 0.0, 1000,
                             root_stream(1))
    assert est.mean == 1.0
    assert est.ess == 1000.0


def test_sample_floor_enforced(kernel2, uniform2):
    with pytest.raises(ConfigurationError):
        estimate_partition(kernel2, uniform2, 2, 1.0, 0.0, 999, root_stream(2))
    with pytest.raises(ConfigurationError):
        estimate_partition(kernel2, uniform2, 2, 0.0, 0.0, 1000,
                           root_stream(2))


def test_two_atom_enumeration_matches_mc(kernel2):
    m = atomic_measure(kernel2.domain, [[0.1, 0.2], [0.6, 0.8]], [0.5, 0.5])
    exact = enumerate_partition(kernel2, m, 2, 1.5)
    est = estimate_partition(kernel2, m, 2, 1.5, 0.0, 30_000, root_stream(3))
    assert abs(est.mean - exact) < 3 * est.ci_halfwidth / 1.96


def test_three_atom_four_particle_enumeration(kernel2):
    m = atomic_measure(kernel2.domain,
                       [[0.05, 0.15], [0.45, 0.65], [0.8, 0.3]],
                       [0.25, 0.5, 0.25])
    exact = enumerate_partition(kernel2, m, 4, 1.0)
    est = estimate_partition(kernel2, m, 4, 1.0, 0.0, 50_000, root_stream(4))
    se = est.ci_halfwidth / 1.96
    assert abs(est.mean - exact) < 3 * se


def test_enumeration_budget_guard(kernel2):
    m = atomic_measure(kernel2.domain, [[x / 10.0, 0.0] for x in range(10)],
                       np.full(10, 0.1))
    with pytest.raises(ConfigurationError):
        enumerate_partition(kernel2, m, 7, 1.0)


def test_jensen_lower_bound(kernel1):
    m = single_mode_measure(kernel1.domain, 0.5, 64)
    beta = 2.0
    est = estimate_partition(kernel1, m, 6, beta, 0.0, 20_000, root_stream(5))
    floor = math.exp(-beta * mean_energy(kernel1, 0.0, m, 6))
    assert est.mean >= floor - est.ci_halfwidth


def test_sweep_shares_samples_across_betas(kernel2, uniform2):
    ests = sweep_partition(kernel2, uniform2, [2, 4], [1.0, 2.0], 2000,
                           root_stream(6))
    assert [(e.n, e.beta) for e in ests] == [(2, 1.0), (2, 2.0), (4, 1.0),
                                             (4, 2.0)]
    trend = trend_flatness([e for e in ests if e.beta == 1.0])
    assert set(trend) >= {"flat", "running_max", "ci_budget"}


def test_sweep_requires_increasing_n(kernel2, uniform2):
    with pytest.raises(ConfigurationError):
        sweep_partition(kernel2, uniform2, [4, 2], 1.0, 2000, root_stream(7))


def test_seed_determinism(kernel2, uniform2):
    a = estimate_partition(kernel2, uniform2, 4, 1.0, 0.0, 5000,
                           root_stream(8))
    b = estimate_partition(kernel2, uniform2, 4, 1.0, 0.0, 5000,
                           root_stream(8))
    assert a == b


def test_log_z_convex_in_beta(kernel2, uniform2):
    ests = sweep_partition(kernel2, uniform2, [16], [0.5, 1.0, 2.0], 50_000,
                           root_stream(9))
    logz = {e.beta: e.log_mean for e in ests}
    assert logz[0.5] <= logz[1.0] <= logz[2.0]
    # midpoint convexity on the grid {0.5, 1, 2}: 1 = (2/3) 0.5 + (1/3) 2
    assert logz[1.0] <= (2.0 / 3.0) * logz[0.5] + (1.0 / 3.0) * logz[2.0] + 1e-4


def test_discard_policy_raises_on_coincidences():
    k = free_log_kernel(2)
    m = atomic_measure(k.domain, [[0.0, 0.0], [0.5, 0.5]], [0.5, 0.5])
    with pytest.raises(EstimationError):
        estimate_partition(k, m, 2, 1.0, 0.0, 1000, root_stream(10))
