"""Particle SDE integrator, mean-field PDE solver, and the energy sweep.

The particle system follows Euler-Maruyama steps of

    dX_i = (-grad V(X_i) - (1/N) sum_{j != i} grad_1 W_eps(X_i, X_j)) dt
           + sqrt(2 dt) xi_i,

with per-particle noise streams (so relabeling particles together with
their streams relabels the trajectories), a per-particle cap on the drift
magnitude, and torus wrapping.  The limiting density evolves by a
pseudospectral scheme: diffusion integrated exactly by the Fourier
multiplier exp(-|2 pi k|^2 dt), transport assembled in physical space on a
3/2 zero-padded grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, IntegrationError
from .energy import _halfplane_weights, _trig_powers, batch_pair_sums
from .kernel import Kernel, eval_gradient, grid_mode_data
from .measure import BaseMeasure, mean_interaction
from .potentials import ZeroPotential
from .streams import generator, substream


@dataclass
class SdeState:
    points: np.ndarray
    time: float
    dt: float
    eps_reg: float = 1e-3
    force_cap: float | None = None
    cap_activations: int = 0

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if self.force_cap is None:
            self.force_cap = 10.0 / math.sqrt(self.dt)


def pair_forces(kernel: Kernel, eps: float, points: np.ndarray) -> np.ndarray:
    """-(1/N) sum_{j != i} grad_1 W_eps(x_i, x_j) for every particle.

    Separable spectral contraction on the one-dimensional torus; direct
    pairwise summation otherwise (O(N^2), fine at test scale).
    """
    pts = np.atleast_2d(points)
    n, d = pts.shape
    if kernel.family == "zero" or n == 1:
        return np.zeros_like(pts)
    if kernel.family == "torus-log" and d == 1:
        forces, _ = _forces_spectral_1d(kernel, eps, pts[None, :, 0])
        return forces[0][:, None]
    forces = np.zeros_like(pts)
    for i in range(n):
        others = np.delete(pts, i, axis=0)
        grads = np.array([eval_gradient(kernel, eps, pts[i], y) for y in others])
        forces[i] = -grads.sum(axis=0) / n
    return forces


def _forces_spectral_1d(kernel: Kernel, eps: float, x: np.ndarray):
    """Batched interaction drift on T^1; x has shape (R, N).

    Returns (forces (R, N), pair energies (R,)) so integrators can track
    the interaction energy for free.
    """
    K = kernel.cutoff
    R, N = x.shape
    c, s = _trig_powers(x, K)                   # (K+1, R, N)
    csum = c[1:].sum(axis=-1)                   # (K, R)
    ssum = s[1:].sum(axis=-1)
    wgt = _halfplane_weights(kernel, eps)       # 2 c_k m_k, k = 1..K
    two_pi_k = 2.0 * np.pi * np.arange(1, K + 1)
    wk = wgt * two_pi_k                         # (K,)
    # sum_j grad F(x_i - x_j) = -sum_k 2 c m 2 pi k (sin_i C_k - cos_i S_k)
    forces = (np.einsum("krn,kr->rn", s[1:], wk[:, None] * csum)
              - np.einsum("krn,kr->rn", c[1:], wk[:, None] * ssum)) / N
    energies = ((csum**2 + ssum**2).T @ wgt - N * kernel.tail_constant(eps)) \
        / (2.0 * N)
    return forces, energies


def sde_step(state: SdeState, kernel: Kernel, potential=None,
             noise=None, rng=None) -> SdeState:
    """One Euler-Maruyama step; `noise` are standard normals (N, d)."""
    potential = potential or ZeroPotential()
    pts = state.points
    n, d = pts.shape
    if noise is None:
        if rng is None:
            raise ConfigurationError("either noise or rng is required")
        noise = rng.standard_normal((n, d))
    drift = pair_forces(kernel, state.eps_reg, pts) - potential.gradient(pts)
    norms = np.linalg.norm(drift, axis=1)
    over = norms > state.force_cap
    activations = int(np.count_nonzero(over))
    if activations:
        drift[over] *= (state.force_cap / norms[over])[:, None]
    new = pts + state.dt * drift + math.sqrt(2.0 * state.dt) * noise
    if not np.all(np.isfinite(new)):
        diff = pts[:, None, :] - pts[None, :, :]
        r = np.linalg.norm(diff, axis=-1) + np.eye(n)
        raise IntegrationError(
            f"non-finite position at t={state.time}; min pair distance "
            f"{r.min():.3e}")
    new = kernel.domain.wrap(new)
    return SdeState(points=new, time=state.time + state.dt, dt=state.dt,
                    eps_reg=state.eps_reg, force_cap=state.force_cap,
                    cap_activations=state.cap_activations + activations)


def particle_noise(stream, n: int, steps: int, dim: int,
                   stream_ids=None) -> np.ndarray:
    """Noise block (steps, n, dim) with one child stream per particle."""
    ids = range(n) if stream_ids is None else stream_ids
    noise = np.empty((steps, n, dim))
    for col, sid in enumerate(ids):
        rng = generator(substream(stream, sid))
        noise[:, col, :] = rng.standard_normal((steps, dim))
    return noise


def simulate_sde(points0, kernel: Kernel, potential, dt: float, n_steps: int,
                 stream, eps_reg: float = 1e-3, force_cap: float | None = None,
                 stream_ids=None, record_every: int | None = None):
    """Integrate the particle system; returns (final state, snapshots).

    Snapshots are (time, points) pairs taken every `record_every` steps
    (final state always included).
    """
    state = SdeState(points=points0, time=0.0, dt=dt, eps_reg=eps_reg,
                     force_cap=force_cap)
    n, d = state.points.shape
    snapshots = []
    block = 512
    done = 0
    while done < n_steps:
        take = min(block, n_steps - done)
        noise = particle_noise(substream(stream, "noise", done), n, take, d,
                               stream_ids)
        for t in range(take):
            state = sde_step(state, kernel, potential, noise=noise[t])
            step_index = done + t + 1
            if record_every and step_index % record_every == 0:
                snapshots.append((state.time, state.points.copy()))
        done += take
    if not snapshots or snapshots[-1][0] != state.time:
        snapshots.append((state.time, state.points.copy()))
    return state, snapshots


# -- mean-field PDE ----------------------------------------------------------


@dataclass
class PdeState:
    density: np.ndarray
    time: float
    dt: float
    spectrum: np.ndarray | None = None

    def __post_init__(self):
        self.density = np.asarray(self.density, dtype=float)
        if self.spectrum is None:
            self.spectrum = np.fft.fftn(self.density)


@dataclass
class PdeRun:
    states: list
    free_energy: list
    mass_corrections: list = field(default_factory=list)
    negativity_clips: int = 0
    dt_halvings: int = 0

    @property
    def final(self) -> PdeState:
        return self.states[-1]


def _dealiased_product(a_hat, b_hat, cells: int, dim: int) -> np.ndarray:
    """Spectrum of the pointwise product a*b via 3/2 zero padding."""
    pad = (3 * cells) // 2
    def expand(spec):
        big = np.zeros((pad,) * dim, dtype=complex)
        idx = np.fft.fftfreq(cells, 1.0 / cells).astype(int)
        sel = np.ix_(*([idx] * dim))
        big[sel] = spec
        return np.fft.ifftn(big).real * (pad / cells) ** dim
    prod = expand(a_hat) * expand(b_hat)
    big_hat = np.fft.fftn(prod) * (cells / pad) ** dim
    idx = np.fft.fftfreq(cells, 1.0 / cells).astype(int)
    sel = np.ix_(*([idx] * dim))
    return big_hat[sel]


def _wavenumbers(cells: int, dim: int):
    k = 2.0 * np.pi * np.fft.fftfreq(cells, d=1.0 / cells)
    mesh = np.meshgrid(*([k] * dim), indexing="ij")
    return mesh, sum(m**2 for m in mesh)


def mv_solve(initial: PdeState, kernel: Kernel, potential=None,
             t_end: float = 1.0, eps: float = 0.0, save_every: int = 1,
             track_free_energy: bool = True) -> PdeRun:
    """March the mean-field density to t_end (torus, d <= 2)."""
    potential = potential or ZeroPotential()
    dim = initial.density.ndim
    if dim > 2:
        raise ConfigurationError("PDE solver supports d in {1, 2}")
    cells = initial.density.shape[0]
    mesh, ksq = _wavenumbers(cells, dim)
    conv_coef = grid_mode_data(kernel, cells, eps) if kernel.family != "zero" \
        else np.zeros_like(ksq)
    nodes = np.stack([m.ravel() for m in np.meshgrid(
        *([np.arange(cells) / cells] * dim), indexing="ij")], axis=1)
    grad_v = potential.gradient(nodes).reshape((cells,) * dim + (dim,))
    state = initial
    run = PdeRun(states=[state], free_energy=[])
    if track_free_energy:
        run.free_energy.append(
            (state.time, _free_energy(state, kernel, eps, potential, nodes)))
    step_index = 0
    while state.time < t_end - 1e-12:
        dt = min(state.dt, t_end - state.time)
        state, halved = _pde_step(state, dt, conv_coef, mesh, ksq, grad_v,
                                  cells, dim, run)
        run.dt_halvings += halved
        step_index += 1
        if step_index % save_every == 0 or state.time >= t_end - 1e-12:
            run.states.append(state)
            if track_free_energy:
                run.free_energy.append(
                    (state.time,
                     _free_energy(state, kernel, eps, potential, nodes)))
    return run


def _pde_step(state, dt, conv_coef, mesh, ksq, grad_v, cells, dim, run):
    rho_hat = state.spectrum
    halvings = 0
    while True:
        # drift field u = grad(W * rho) + grad V, spectral gradients
        u_hats = [1j * m * conv_coef * rho_hat for m in mesh]
        flux_hat = np.zeros_like(rho_hat)
        max_u = 0.0
        for axis in range(dim):
            u_ax_hat = u_hats[axis] + np.fft.fftn(grad_v[..., axis])
            u_ax = np.fft.ifftn(u_ax_hat).real
            max_u = max(max_u, float(np.abs(u_ax).max()))
            prod_hat = _dealiased_product(rho_hat, u_ax_hat, cells, dim)
            flux_hat = flux_hat + 1j * mesh[axis] * prod_hat
        if max_u * dt <= 1.0 / cells or halvings >= 10:
            if max_u * dt > 1.0 / cells:
                raise IntegrationError("CFL violated after 10 dt halvings")
            break
        dt *= 0.5
        halvings += 1
    new_hat = np.exp(-ksq * dt) * (rho_hat + dt * flux_hat)
    new_density = np.fft.ifftn(new_hat).real
    floor = new_density.min()
    if floor < -1e-8:
        run.negativity_clips += 1
        new_density = np.clip(new_density, 0.0, None)
    mass = new_density.mean()
    run.mass_corrections.append(abs(mass - 1.0))
    new_density = new_density / mass
    return PdeState(density=new_density, time=state.time + dt,
                    dt=dt if halvings else state.dt), halvings


def _free_energy(state: PdeState, kernel, eps, potential, nodes) -> float:
    """Entropy + interaction + potential energy of the density."""
    rho = state.density
    cells = rho.shape[0]
    vol = cells ** (-rho.ndim)
    positive = rho[rho > 1e-300]
    entropy = float(np.sum(positive * np.log(positive)) * vol)
    coef = grid_mode_data(kernel, cells, eps) if kernel.family != "zero" \
        else 0.0
    rho_hat = state.spectrum / rho.size
    interaction = 0.5 * float(np.sum(coef * np.abs(rho_hat) ** 2)) \
        if np.ndim(coef) else 0.0
    pot = float(np.sum(potential.value(nodes).reshape(rho.shape) * rho) * vol)
    return entropy + interaction + pot


# -- modulated energy across particle counts ---------------------------------


def _grid_modes_1d(density: np.ndarray, kmax: int):
    """(Re, Im) of the true Fourier coefficients for k = 1..kmax."""
    spec = np.fft.fft(density) / density.size
    coef = spec[1:kmax + 1]
    return coef.real.copy(), coef.imag.copy()


def modulated_energy_sweep(kernel: Kernel, measure0: BaseMeasure, n_values,
                           t_grid, replicas: int, stream,
                           eps_reg: float = 1e-3, dt: float = 2e-3,
                           potential=None, window=0.05,
                           pde_cells: int = 256, force_cap: float | None = None):
    """Mean interaction energy of the fluctuation field along the flow.

    Runs `replicas` particle simulations per N on T^1, evolves the limiting
    density with the same kernel and potential, and records the per-particle
    energy (1/N) I[eta] against the evolved density.  Each requested time is
    reported as an average over a disclosed window of steps (the energy is a
    byproduct of the force computation, so every step contributes); `window`
    is either a scalar half-width or a mapping t -> (t_lo, t_hi).  Returns
    per-(N, t) rows with the window bounds and an error-weighted log-log
    slope fit per time.
    """
    if kernel.domain.dim != 1 or not kernel.domain.is_torus:
        raise ConfigurationError("the sweep is implemented on T^1")
    potential = potential or ZeroPotential()
    t_grid = sorted(float(t) for t in t_grid)
    if isinstance(window, dict):
        bounds = {float(t): (float(lo), float(hi))
                  for t, (lo, hi) in window.items()}
    else:
        bounds = {t: (t - float(window), t + float(window)) for t in t_grid}
    t_end = max(hi for _, hi in bounds.values())
    n_steps = int(round(t_end / dt))
    uniform0 = measure0.kind == "uniform"

    if uniform0 and potential.is_zero:
        rho_states = None  # uniform density is stationary
    else:
        if uniform0:
            density0 = np.ones((pde_cells,))
        else:
            x_nodes = np.arange(pde_cells) / pde_cells
            idx = np.minimum((x_nodes * measure0.cells).astype(int),
                             measure0.cells - 1)
            density0 = measure0.density[idx]
        run = mv_solve(PdeState(density0, 0.0, dt), kernel, potential,
                       t_end=t_end, eps=eps_reg, save_every=1,
                       track_free_energy=False)
        rho_states = run.states

    K = kernel.cutoff
    wgt = _halfplane_weights(kernel, eps_reg)
    rows = []
    for n_idx, n in enumerate(n_values):
        x = np.stack([measure0.sample(n, generator(substream(
            stream, "init", n_idx, r)))[:, 0] for r in range(replicas)])
        series = np.empty((n_steps + 1, replicas))
        series[0] = _modulated_values(kernel, eps_reg, wgt, x, rho_states, 0,
                                      measure0)
        cap = force_cap if force_cap is not None else 10.0 / math.sqrt(dt)
        noise = np.empty((n_steps, replicas, n))
        for r in range(replicas):
            for i in range(n):
                g = generator(substream(stream, "noise", n_idx, r, i))
                noise[:, r, i] = g.standard_normal(n_steps)
        for step in range(n_steps):
            forces, energies = _forces_spectral_1d(kernel, eps_reg, x)
            if not potential.is_zero:
                forces = forces - potential.gradient(
                    x.reshape(-1, 1)).reshape(x.shape)
            np.clip(forces, -cap, cap, out=forces)
            x = np.mod(x + dt * forces + math.sqrt(2 * dt) * noise[step], 1.0)
            series[step + 1] = _modulated_values(
                kernel, eps_reg, wgt, x, rho_states, step + 1, measure0)
        times = np.arange(n_steps + 1) * dt
        for t in t_grid:
            lo, hi = bounds[t]
            sel = (times >= lo - 1e-12) & (times <= hi + 1e-12)
            per_replica = series[sel].mean(axis=0)
            mean = float(per_replica.mean())
            ci = 1.96 * float(per_replica.std(ddof=1)) / math.sqrt(replicas)
            rows.append({"n": int(n), "t": float(t), "mean": mean, "ci": ci,
                         "window_lo": lo, "window_hi": hi})
    slopes = {}
    for t in t_grid:
        pts = [(r["n"], -r["mean"], r["ci"]) for r in rows if r["t"] == t]
        if all(v > 0 for _, v, _ in pts) and len(pts) >= 2:
            xs = np.log([float(n) for n, _, _ in pts])
            ys = np.log([v for _, v, _ in pts])
            wts = np.array([max(v / max(ci, 1e-12), 1e-3) ** 2
                            for _, v, ci in pts])  # 1/var weights in log space
            slopes[t] = float(np.polyfit(xs, ys, 1, w=np.sqrt(wts))[0])
        else:
            slopes[t] = None
    return {"rows": rows, "slopes": slopes, "eps_reg": eps_reg, "dt": dt,
            "windows": bounds, "replicas": replicas}


def _modulated_values(kernel, eps, wgt, x, rho_states, step_index, measure0):
    """(1/N) I[eta] per replica for positions x (R, N) at one time step."""
    R, N = x.shape
    K = kernel.cutoff
    c, s = _trig_powers(x, K)
    csum = c[1:].sum(axis=-1)  # (K, R)
    ssum = s[1:].sum(axis=-1)
    pair = ((csum**2 + ssum**2).T @ wgt - N * kernel.tail_constant(eps)) \
        / (2.0 * N)
    if rho_states is None:
        return pair / N
    rho = rho_states[min(step_index, len(rho_states) - 1)]
    re, im = _grid_modes_1d(rho.density, K)
    # sum_i (W_eps * rho)(x_i) = sum_{k>=1} 2 c m (Re rho_k C_k - Im rho_k S_k)
    cross = (csum.T @ (wgt * re)) - (ssum.T @ (wgt * im))
    mean_term = float(np.sum(wgt * (re**2 + im**2)))
    total = pair - cross + (N / 2.0) * mean_term
    return total / N
