import math

import numpy as np
import pytest

from loggas.dynamics import (PdeState, SdeState, modulated_energy_sweep,
                             mv_solve, pair_forces, particle_noise, sde_step,
                             simulate_sde)
from loggas.energy import batch_totals
from loggas.errors import ConfigurationError, IntegrationError
from loggas.kernel import (Domain, eval_gradient, free_log_kernel,
                           torus_log_kernel, zero_kernel)
from loggas.measure import single_mode_measure, uniform_measure
from loggas.partition import _config_energies
from loggas.potentials import QuadraticPotential, ZeroPotential
from loggas.streams import generator, root_stream, substream


def test_pure_diffusion_increment_variance():
    kz = zero_kernel(1)
    n, steps, dt = 1000, 10_000, 1e-3
    noise = particle_noise(root_stream(1), n, steps, 1)
    # with zero drift the update is x + sqrt(2 dt) xi
    increments = math.sqrt(2 * dt) * noise
    var = increments.var()
    assert abs(var - 2 * dt) < 0.05 * 2 * dt


def test_force_antisymmetry_two_particles(kernel1):
    pts = np.array([[0.3], [0.7]])
    f = pair_forces(kernel1, 1e-3, pts)
    assert abs(f[0] + f[1]) < 1e-13


def test_spectral_forces_match_direct(kernel1, rng):
    pts = rng.random((6, 1))
    fast = pair_forces(kernel1, 1e-3, pts)
    slow = np.zeros_like(pts)
    for i in range(6):
        for j in range(6):
            if i != j:
                slow[i] -= eval_gradient(kernel1, 1e-3, pts[i], pts[j]) / 6
    np.testing.assert_allclose(fast, slow, atol=1e-12)


def test_two_particle_deterministic_step_free_space():
    # separation 1 with the bare log force: each particle feels +z/(2 r^2)
    k = free_log_kernel(2, radius=3.0)
    x0 = np.array([[0.5, 0.0], [-0.5, 0.0]])
    st = SdeState(points=x0, time=0.0, dt=0.01, eps_reg=0.0)
    new = sde_step(st, k, None, noise=np.zeros((2, 2)))
    assert new.points[0, 0] == pytest.approx(0.5 + 0.01 * 0.5)
    assert new.points[1, 0] == pytest.approx(-0.5 - 0.01 * 0.5)
    assert new.points[0, 1] == 0.0


def test_exchangeability_under_stream_relabeling(kernel1):
    x0 = np.array([[0.1], [0.4], [0.8]])
    perm = [2, 0, 1]
    ss = root_stream(5)
    state_a, _ = simulate_sde(x0, kernel1, None, 1e-3, 50, ss)
    state_b, _ = simulate_sde(x0[perm], kernel1, None, 1e-3, 50, ss,
                              stream_ids=perm)
    np.testing.assert_allclose(state_b.points, state_a.points[perm],
                               atol=1e-13)


def test_force_cap_counts_activations(kernel1):
    pts = np.array([[0.0], [1e-4]])  # nearly coincident: huge repulsion
    st = SdeState(points=pts, time=0.0, dt=1e-3, eps_reg=1e-6, force_cap=1.0)
    new = sde_step(st, kernel1, None, noise=np.zeros((2, 1)))
    assert new.cap_activations == 2


def test_ou_weak_error():
    # dX = -X dt + sqrt(2) dW has stationary variance 1; Euler converges
    # to 1/(1 - dt/2), a first-order weak error
    kz = zero_kernel(1, kind="free")
    dt, steps, n = 0.02, 600, 4000
    rng = generator(root_stream(6), 0)
    state = SdeState(points=rng.standard_normal((n, 1)), time=0.0, dt=dt)
    pot = QuadraticPotential(1.0)
    noise = particle_noise(substream(root_stream(6), 1), n, steps, 1)
    for t in range(steps):
        state = sde_step(state, kz, pot, noise=noise[t])
    var = state.points.var()
    assert abs(var - 1.0) <= 3 * dt + 4 * math.sqrt(2.0 / n)


def test_heat_mode_decay():
    cells = 128
    x = np.arange(cells) / cells
    run = mv_solve(PdeState(1 + 0.5 * np.cos(2 * np.pi * x), 0.0, 1e-3),
                   zero_kernel(1), None, t_end=0.1, save_every=1000,
                   track_free_energy=False)
    amp = abs(np.fft.fft(run.final.density)[1]) / cells
    exact = 0.25 * math.exp(-(2 * math.pi) ** 2 * 0.1)
    assert abs(amp - exact) / exact < 1e-6


def test_uniform_density_is_stationary(kernel1):
    run = mv_solve(PdeState(np.ones(256), 0.0, 1e-3), kernel1, None,
                   t_end=0.2, save_every=100, track_free_energy=False)
    assert np.abs(run.final.density - 1.0).max() < 1e-10


def test_mass_conserved_every_step(kernel1):
    x = np.arange(256) / 256
    run = mv_solve(PdeState(1 + 0.5 * np.cos(2 * np.pi * x), 0.0, 1e-3),
                   kernel1, None, t_end=0.2, save_every=50,
                   track_free_energy=False)
    assert max(run.mass_corrections) < 1e-10


def test_nonlinear_free_energy_monotone(kernel1):
    x = np.arange(256) / 256
    run = mv_solve(PdeState(1 + 0.5 * np.cos(2 * np.pi * x), 0.0, 1e-3),
                   kernel1, None, t_end=0.5, save_every=20)
    values = [v for _, v in run.free_energy]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    assert np.abs(run.final.density - 1.0).max() < 1e-3  # relaxes to uniform


def test_cfl_rejection_halves_dt():
    # a huge advection pushes the first step over the CFL limit
    k = torus_log_kernel(1, 32)
    x = np.arange(128) / 128
    dens = 1 + 0.9 * np.cos(2 * np.pi * x)
    run = mv_solve(PdeState(dens, 0.0, 0.5), k, None, t_end=0.5,
                   save_every=1000, track_free_energy=False)
    assert run.dt_halvings >= 1


def test_two_dimensional_heat_step():
    cells = 32
    x = np.arange(cells) / cells
    dens = 1 + 0.3 * np.outer(np.cos(2 * np.pi * x), np.ones(cells))
    run = mv_solve(PdeState(dens, 0.0, 1e-3), zero_kernel(2), None,
                   t_end=0.05, save_every=1000, track_free_energy=False)
    amp = abs(np.fft.fft2(run.final.density)[1, 0]) / cells**2
    exact = 0.15 * math.exp(-(2 * math.pi) ** 2 * 0.05)
    assert abs(amp - exact) / exact < 1e-6


def test_modulated_energy_at_time_zero_matches_mean_energy(kernel1):
    # at t = 0 the particles are i.i.d. draws, so the expectation has the
    # closed form -(1/2N) double-int W_eps d rho d rho
    from loggas.energy import mean_energy
    m = single_mode_measure(kernel1.domain, 0.5, 64)
    eps = 1e-3
    n = 8
    want = mean_energy(kernel1, eps, m, n) / n
    rng = generator(root_stream(9), 0)
    pts = m.sample(2000 * n, rng).reshape(2000, n, 1)
    totals = batch_totals(kernel1, eps, m, pts) / n
    se = totals.std(ddof=1) / math.sqrt(totals.size)
    assert abs(totals.mean() - want) <= 4 * se


def test_modulated_sweep_slope_and_ci_scaling(kernel1):
    u = uniform_measure(kernel1.domain)
    out = modulated_energy_sweep(kernel1, u, [8, 16, 32], [0.1], 32,
                                 root_stream(10), dt=2e-3,
                                 window={0.1: (0.05, 0.25)})
    slope = out["slopes"][0.1]
    assert slope is not None and -1.6 <= slope <= -0.4
    out2 = modulated_energy_sweep(kernel1, u, [16], [0.1], 64,
                                  root_stream(10), dt=2e-3,
                                  window={0.1: (0.05, 0.25)})
    ci32 = [r["ci"] for r in out["rows"] if r["n"] == 16][0]
    ci64 = [r["ci"] for r in out2["rows"] if r["n"] == 16][0]
    assert ci64 < ci32  # doubling replicas tightens the interval


def test_integration_error_reports_pair_distance(kernel1):
    bad = SdeState(points=np.array([[0.1], [0.2]]), time=0.0, dt=1e-3)
    bad.points = np.array([[np.nan], [0.2]])
    with pytest.raises(IntegrationError):
        sde_step(bad, kernel1, None, noise=np.zeros((2, 1)))
