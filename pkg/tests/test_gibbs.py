import math

import numpy as np
import pytest
from scipy import stats

from loggas.errors import ConfigurationError, TuningError
from loggas.gibbs import (ChainConfig, entropy_rates, run_mala, sample_gibbs,
                          solve_minimizer, GenericTarget)
from loggas.kernel import torus_log_kernel, zero_kernel
from loggas.measure import uniform_measure
from loggas.potentials import CosinePotential, QuadraticPotential
from loggas.streams import root_stream


def grid_density(potential, cells=4096):
    x = np.arange(cells) / cells
    dens = np.exp(-potential.value(x[:, None]))
    return x, dens / dens.mean()


def test_minimizer_flat_for_zero_potential(kernel1):
    x = np.arange(256) / 256
    res = solve_minimizer(kernel1, None, 256,
                          initial=1 + 0.3 * np.cos(2 * np.pi * x))
    assert res.residual < 1e-10
    assert np.abs(res.density - 1.0).max() < 1e-9


def test_minimizer_decoupled_single_iteration():
    kz = zero_kernel(1)
    pot = CosinePotential(0.7)
    res = solve_minimizer(kz, pot, 256, damping=1.0, tol=1e-12)
    assert res.iterations <= 2
    x, dens = grid_density(pot, 256)
    np.testing.assert_allclose(res.density, dens, atol=1e-12)


def test_minimizer_grid_refinement_consistency(kernel1):
    pot = CosinePotential(0.5)
    coarse = solve_minimizer(kernel1, pot, 128, tol=1e-10)
    fine = solve_minimizer(kernel1, pot, 256, tol=1e-10)
    assert coarse.residual < 1e-8
    assert np.abs(fine.density[::2] - coarse.density).max() < 1e-4


def test_minimizer_damping_validation(kernel1):
    with pytest.raises(ConfigurationError):
        solve_minimizer(kernel1, None, 64, damping=0.0)


def test_mala_uniform_marginal_chi_square():
    kz = zero_kernel(1)
    chain = ChainConfig(n_chains=4, n_steps=4000, burn_in=500, thin=2)
    run, _, states = sample_gibbs(kz, None, 4, chain, root_stream(1))
    assert run.flagged  # flat target accepts everything
    samples = np.concatenate([s.ravel() for s in states])
    counts, _ = np.histogram(samples, bins=16, range=(0.0, 1.0))
    _, pvalue = stats.chisquare(counts)
    assert pvalue > 1e-3


def test_mala_quadratic_well_free_space_ks():
    kz = zero_kernel(1, kind="free")
    chain = ChainConfig(n_chains=8, n_steps=6000, burn_in=1000, thin=4)
    run, _, states = sample_gibbs(kz, QuadraticPotential(1.0), 2, chain,
                                  root_stream(2))
    samples = np.concatenate([s.ravel() for s in states])
    # target marginal exp(-x^2/2): standard normal
    stat, pvalue = stats.kstest(samples[::7], "norm")
    assert pvalue > 1e-3


def test_mala_double_well_detailed_balance():
    kz = zero_kernel(1)
    # two wells, barrier low enough that chains hop during the run
    pot = CosinePotential(1.2, mode=2)
    chain = ChainConfig(n_chains=16, n_steps=12_000, burn_in=1500, thin=8)
    run, _, states = sample_gibbs(kz, pot, 1, chain, root_stream(3))
    samples = np.concatenate([s.ravel() for s in states])
    x, dens = grid_density(pot, 32)
    counts, _ = np.histogram(samples, bins=32, range=(0.0, 1.0))
    expected = dens / dens.sum() * counts.sum()
    _, pvalue = stats.chisquare(counts, expected, ddof=1)
    assert pvalue > 1e-4


def test_mala_low_acceptance_raises():
    class Spike(GenericTarget):
        def energy_grad(self, x):
            u, grad, e = super().energy_grad(x)
            return u, grad + 1e6, e  # poisoned gradient kills acceptance

    tgt = Spike(QuadraticPotential(1.0), 1, wrap=False)
    chain = ChainConfig(n_chains=4, n_steps=400, burn_in=100,
                        step_size=0.5)
    with pytest.raises(TuningError):
        run_mala(tgt, 2, chain, root_stream(4))


def test_gibbs_mean_energy_matches_importance_sampling(kernel1):
    from loggas.partition import _config_energies
    from loggas.streams import substream
    u = uniform_measure(kernel1.domain)
    E = _config_energies(kernel1, u, 16, 0.0, 300_000,
                         substream(root_stream(5), 0))
    w = np.exp(-E)
    want = float(np.sum(E * w) / w.sum())
    chain = ChainConfig(n_chains=8, n_steps=6000, burn_in=1500, thin=0)
    run, _, _ = sample_gibbs(kernel1, None, 16, chain, root_stream(6))
    assert abs(run.mean_energy - want) <= 4 * run.mean_energy_se


def test_entropy_rates_zero_kernel_exact():
    out = entropy_rates(zero_kernel(1), None, [4, 8],
                        ChainConfig(n_chains=4, n_steps=400, burn_in=200,
                                    thin=0),
                        root_stream(7), is_samples=1000)
    for row in out["rows"]:
        assert row.log_z_is == 0.0
        assert row.entropy_forward == 0.0
        assert row.entropy_backward == 0.0


def test_entropy_rates_log_gas(kernel1):
    chain = ChainConfig(n_chains=8, n_steps=2500, burn_in=800, thin=0)
    out = entropy_rates(kernel1, None, [8, 16, 32], chain, root_stream(8),
                        is_samples=60_000, ti_nodes=8)
    for row in out["rows"]:
        assert row.cross_validated
        assert row.log_z_is >= 0.0  # Jensen at the uniform minimizer
        assert row.entropy_forward >= -3 * row.entropy_forward_se
        assert row.entropy_backward >= -3 * row.entropy_backward_se
    hb = [r.entropy_backward for r in out["rows"]]
    assert hb[0] > hb[-1]  # dimension-averaged entropy decays


def test_entropy_bound_chain(kernel1):
    # forward entropy <= W^2 integral / Z + Z_{N,2}/Z - log Z
    chain = ChainConfig(n_chains=8, n_steps=2500, burn_in=800, thin=0)
    out = entropy_rates(kernel1, None, [16], chain, root_stream(9),
                        is_samples=60_000, ti_nodes=4)
    row = out["rows"][0]
    z = math.exp(row.log_z_is)
    rhs = row.extras["w_sq_mu"] / z + row.extras["z2_mean"] / z \
        - row.log_z_is
    lhs = row.entropy_forward * row.n
    assert lhs <= rhs + 3 * row.entropy_forward_se * row.n


def test_entropy_sweep_cap():
    with pytest.raises(ConfigurationError):
        entropy_rates(torus_log_kernel(1, 8), None, [512],
                      ChainConfig(n_chains=2, n_steps=100, burn_in=50),
                      root_stream(10))
