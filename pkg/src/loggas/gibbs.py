"""Mean-field minimizer, MALA sampling of the N-particle Gibbs law, and
dimension-averaged entropy rates at equilibrium.

With mu the minimizer of the mean-field free energy (Euler-Lagrange fixed
point mu = normalize(exp(-W * mu - V))), the Gibbs measure factorizes as

    M_{N, beta}(dx) = Z_{N, beta}^{-1} exp(-beta I[eta_x]) d mu^{(x N)},

so log Z_N is estimable two independent ways: importance sampling from
mu^{(x N)} and thermodynamic integration of the mean energy over beta.
The relative entropies follow from the identities

    H[mu^N | M_N]  = log Z_N + E_mu[I],
    H[M_N | mu^N]  = -E_{M_N}[I] - log Z_N,

with E_mu[I] = -(1/2) double-int W d mu d mu, exactly zero for uniform mu.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, ConvergenceError, TuningError
from .dynamics import _forces_spectral_1d
from .kernel import Kernel, grid_mode_data
from .measure import BaseMeasure, grid_measure, uniform_measure
from .partition import _config_energies
from .potentials import ZeroPotential
from .streams import generator, substream


@dataclass
class MeanFieldMinimizer:
    density: np.ndarray
    z_mu: float
    residual: float
    iterations: int

    def as_measure(self, domain) -> BaseMeasure:
        if float(np.ptp(self.density)) < 1e-12:
            return uniform_measure(domain)
        return grid_measure(domain, self.density / self.density.mean())


def solve_minimizer(kernel: Kernel, potential=None, cells: int = 256,
                    damping: float = 0.5, tol: float = 1e-10,
                    max_iter: int = 2000, initial=None) -> MeanFieldMinimizer:
    """Damped fixed-point iteration mu <- (1-t) mu + t normalize(e^{-W*mu-V})."""
    if not 0 < damping <= 1:
        raise ConfigurationError("damping must be in (0, 1]")
    potential = potential or ZeroPotential()
    dim = kernel.domain.dim
    if not kernel.domain.is_torus or dim > 2:
        raise ConfigurationError("minimizer solves on the torus, d <= 2")
    nodes = np.stack([m.ravel() for m in np.meshgrid(
        *([np.arange(cells) / cells] * dim), indexing="ij")], axis=1)
    v_grid = potential.value(nodes).reshape((cells,) * dim)
    coef = grid_mode_data(kernel, cells, 0.0) if kernel.family != "zero" else 0.0
    mu = np.ones((cells,) * dim) if initial is None \
        else np.asarray(initial, dtype=float) / np.mean(initial)
    history = []
    for it in range(1, max_iter + 1):
        conv = np.fft.ifftn(coef * np.fft.fftn(mu)).real \
            if np.ndim(coef) else np.zeros_like(mu)
        target = np.exp(-conv - v_grid)
        z_mu = target.mean()
        target = target / z_mu
        residual = float(np.max(np.abs(mu - target)))
        history.append(residual)
        mu = (1.0 - damping) * mu + damping * target
        if residual < tol:
            return MeanFieldMinimizer(density=mu / mu.mean(), z_mu=float(z_mu),
                                      residual=residual, iterations=it)
    raise ConvergenceError(
        f"minimizer stuck at residual {history[-1]:.3e}", history)


# -- MALA ---------------------------------------------------------------------


@dataclass
class ChainConfig:
    n_chains: int = 8
    n_steps: int = 3000
    burn_in: int = 1000
    step_size: float | None = None
    target_accept: float = 0.574
    h_min: float = 1e-8
    h_max: float = 0.25  # keeps the image-summed torus proposal exact
    thin: int = 1


@dataclass
class GibbsRun:
    n: int
    beta: float
    chain_steps: int
    burn_in: int
    step_size: float
    acceptance_rate: float
    flagged: bool
    mean_energy: float
    mean_energy_se: float
    log_z_is: float | None = None
    log_z_is_se: float | None = None
    log_z_ti: float | None = None
    log_z_ti_se: float | None = None
    entropy_forward: float | None = None
    entropy_forward_se: float | None = None
    entropy_backward: float | None = None
    entropy_backward_se: float | None = None
    cross_validated: bool | None = None
    extras: dict = field(default_factory=dict)


class TorusLogTarget:
    """U(x) = beta I[eta_x] - sum_i log mu(x_i) on T^1, batched over chains."""

    def __init__(self, kernel, measure, potential, beta=1.0):
        if kernel.domain.dim != 1:
            raise ConfigurationError("spectral target is one-dimensional")
        self.kernel = kernel
        self.measure = measure
        self.potential = potential or ZeroPotential()
        self.beta = float(beta)
        self.dim = 1
        self.wrap = True
        if measure.kind == "grid":
            from .dynamics import _grid_modes_1d
            self._mu_re, self._mu_im = _grid_modes_1d(
                measure.density, kernel.cutoff)
        else:
            self._mu_re = self._mu_im = None
        from .measure import mean_interaction
        self._mean_term = mean_interaction(kernel, 0.0, measure)

    def energy_grad(self, x):
        """x has shape (C, N); returns (U (C,), grad (C, N), I-ring (C,)).

        With mu = e^{-W*mu-V}/Z the target exponent collapses to
        U = beta pair + (1 - beta) sum_i (W*mu)(x_i) + sum_i V(x_i) + const.
        """
        C, N = x.shape
        forces, pair = _forces_spectral_1d(self.kernel, 0.0, x)
        energy_i = pair
        u = self.beta * pair
        grad = -self.beta * forces  # grad_i of the pair sum is -force_i
        if self._mu_re is not None:
            fld, dfld_particle = self._field_and_grad(x)
            energy_i = energy_i - fld + (N / 2.0) * self._mean_term
            u = u + (1.0 - self.beta) * fld
            grad = grad + (1.0 - self.beta) * dfld_particle
        if not self.potential.is_zero:
            pts = x.reshape(-1, 1)
            u = u + self.potential.value(pts).reshape(x.shape).sum(axis=1)
            grad = grad + self.potential.gradient(pts).reshape(x.shape)
        return u, grad, energy_i

    def _field_and_grad(self, x):
        from .energy import _trig_powers, _halfplane_weights
        K = self.kernel.cutoff
        wgt = _halfplane_weights(self.kernel, 0.0)
        c, s = _trig_powers(x, K)  # (K+1, C, N)
        re, im = self._mu_re, self._mu_im
        field = np.einsum("kcn,k->cn", c[1:], wgt * re) \
            - np.einsum("kcn,k->cn", s[1:], wgt * im)
        two_pi_k = 2.0 * np.pi * np.arange(1, K + 1)
        dfield = -np.einsum("kcn,k->cn", s[1:], wgt * re * two_pi_k) \
            - np.einsum("kcn,k->cn", c[1:], wgt * im * two_pi_k)
        return field.sum(axis=1), dfield


class GenericTarget:
    """U(x) = sum_i V(x_i) for zero-interaction chains (any domain/dim)."""

    def __init__(self, potential, dim, wrap):
        self.potential = potential or ZeroPotential()
        self.dim = dim
        self.wrap = wrap
        self.beta = 1.0

    def energy_grad(self, x):
        C = x.shape[0]
        pts = x.reshape(-1, self.dim)
        shape = x.shape[:2]
        u = self.potential.value(pts).reshape(shape).sum(axis=1)
        grad = self.potential.gradient(pts).reshape(x.shape)
        return u, grad, np.zeros(C)


def _wrapped_log_kernel(delta: np.ndarray, h: float) -> np.ndarray:
    """Unnormalized log proposal density on the torus, image-summed.

    `delta` is the coordinatewise displacement from the proposal mean,
    reduced to [-1/2, 1/2); periodic images out to |m| <= 2 carry all the
    mass for the step sizes the tuner reaches.
    """
    delta = delta - np.round(delta)
    images = np.stack([-((delta + m) ** 2) / (4.0 * h)
                       for m in range(-3, 4)])
    peak = images.max(axis=0)
    dens = peak + np.log(np.exp(images - peak).sum(axis=0))
    return dens.reshape(dens.shape[0], -1).sum(axis=1)


def run_mala(target, n: int, chain: ChainConfig, stream):
    """Metropolis-adjusted Langevin chains, batched; returns run + traces.

    Step size is tuned toward `target_accept` during burn-in and frozen
    afterwards.  Torus targets use the wrapped-Gaussian proposal density,
    which keeps the accept ratio exact when steps are comparable to the
    period.  A flat target accepts every proposal regardless of step size;
    that run is flagged (rate outside (0.2, 0.9)) but not an error, while a
    post-tuning rate below 0.05, or above 0.95 with the tuner active and
    not pinned at its cap, raises.
    """
    C = chain.n_chains
    dim = getattr(target, "dim", 1)
    rng = generator(substream(stream, "chain"))
    if target.wrap:
        x = rng.random((C, n, dim)) if dim > 1 else rng.random((C, n))
    else:
        x = 0.5 * rng.standard_normal((C, n, dim)) if dim > 1 \
            else 0.5 * rng.standard_normal((C, n))
    h = chain.step_size if chain.step_size is not None \
        else 0.2 * n ** (-1.0 / 3.0)
    u, grad, energy = target.energy_grad(x)
    total = chain.burn_in + chain.n_steps
    accept_window = []
    accepted_main = 0
    proposals_main = 0
    energies = np.empty((chain.n_steps, C))
    states = []
    for step in range(total):
        noise = rng.standard_normal(x.shape)
        prop = x - h * grad + math.sqrt(2.0 * h) * noise
        if target.wrap:
            prop = np.mod(prop, 1.0)
        pu, pgrad, penergy = target.energy_grad(prop)
        if target.wrap:
            log_alpha = u - pu \
                + _wrapped_log_kernel(x - prop + h * pgrad, h) \
                - _wrapped_log_kernel(prop - x + h * grad, h)
        else:
            axes = tuple(range(1, x.ndim))
            fwd = np.sum((prop - x + h * grad) ** 2, axis=axes)
            bwd = np.sum((x - prop + h * pgrad) ** 2, axis=axes)
            log_alpha = u - pu + (fwd - bwd) / (4.0 * h)
        accept = np.log(rng.random(C)) < log_alpha
        if np.any(accept):
            x[accept] = prop[accept]
            u[accept] = pu[accept]
            grad[accept] = pgrad[accept]
            energy[accept] = penergy[accept]
        rate_now = float(np.mean(accept))
        if step < chain.burn_in:
            accept_window.append(rate_now)
            if chain.step_size is None and len(accept_window) == 25:
                h = float(np.clip(
                    h * math.exp(0.7 * (np.mean(accept_window)
                                        - chain.target_accept)),
                    chain.h_min, chain.h_max))
                accept_window = []
        else:
            accepted_main += int(np.sum(accept))
            proposals_main += C
            energies[step - chain.burn_in] = energy
            if chain.thin and (step - chain.burn_in) % chain.thin == 0:
                states.append(x.copy())
    rate = accepted_main / max(proposals_main, 1)
    flagged = not 0.2 < rate < 0.9
    if rate < 0.05:
        raise TuningError(f"acceptance rate {rate:.3f} too low after tuning")
    if rate > 0.95 and chain.step_size is None and h < 0.999 * chain.h_max:
        raise TuningError(f"acceptance rate {rate:.3f} with untuned step")
    chain_means = energies.mean(axis=0)
    run = GibbsRun(n=n, beta=getattr(target, "beta", 1.0),
                   chain_steps=chain.n_steps, burn_in=chain.burn_in,
                   step_size=h, acceptance_rate=rate, flagged=flagged,
                   mean_energy=float(chain_means.mean()),
                   mean_energy_se=float(chain_means.std(ddof=1)
                                        / math.sqrt(C)))
    return run, energies, states


def sample_gibbs(kernel: Kernel, potential, n: int, chain: ChainConfig,
                 stream, beta: float = 1.0, measure: BaseMeasure | None = None):
    """MALA chains for the N-particle Gibbs law; returns (run, state trace)."""
    if kernel.family == "zero":
        target = GenericTarget(potential, kernel.domain.dim,
                               kernel.domain.is_torus)
    else:
        measure = measure or uniform_measure(kernel.domain)
        target = TorusLogTarget(kernel, measure, potential, beta)
    run, energies, states = run_mala(target, n, chain, stream)
    return run, energies, states


# -- entropy rates ------------------------------------------------------------


def _importance_log_z(kernel, measure, n, samples, stream, beta=1.0):
    energies = _config_energies(kernel, measure, n, 0.0, samples, stream)
    w = np.exp(-beta * energies)
    mean = w.mean()
    se = w.std(ddof=1) / math.sqrt(w.size)
    return float(np.log(mean)), float(se / mean), energies


def _gauss_legendre_01(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def entropy_rates(kernel: Kernel, potential, n_values, chain: ChainConfig,
                  stream, is_samples: int = 100_000, ti_nodes: int = 8,
                  cells: int = 256):
    """Per-N equilibrium entropy estimates with two log Z estimators.

    Importance sampling from the product law gives log Z directly;
    thermodynamic integration integrates the mean energy over the inverse
    temperature with Gauss-Legendre nodes, each node estimated by MALA.
    Rows carry dimension-averaged entropies and the cross-validation flag
    (the estimators agreeing within 3 combined standard errors).
    """
    potential = potential or ZeroPotential()
    if any(n > 256 for n in n_values):
        raise ConfigurationError("entropy sweep capped at N = 256")
    if kernel.family == "zero" or potential.is_zero:
        minimizer = MeanFieldMinimizer(
            density=np.ones(cells), z_mu=1.0, residual=0.0, iterations=0)
    else:
        minimizer = solve_minimizer(kernel, potential, cells)
    mu = minimizer.as_measure(kernel.domain)
    from .energy import mean_energy
    e_mu = mean_energy(kernel, 0.0, mu) if kernel.family != "zero" else 0.0
    nodes, weights = _gauss_legendre_01(ti_nodes)
    rows = []
    for idx, n in enumerate(n_values):
        sub = substream(stream, "rates", idx)
        if kernel.family == "zero":
            log_is, se_is = 0.0, 0.0
            energies_is = np.zeros(1)
        else:
            log_is, se_is, energies_is = _importance_log_z(
                kernel, mu, n, is_samples, substream(sub, "is"))
        run, energies, _ = sample_gibbs(kernel, potential, n, chain,
                                        substream(sub, "mala"), 1.0, mu)
        if kernel.family == "zero":
            log_ti, se_ti = 0.0, 0.0
        else:
            node_means, node_ses = [], []
            for j, beta_j in enumerate(nodes):
                node_chain = replace(chain,
                                     n_steps=max(chain.n_steps // 2, 500),
                                     burn_in=max(chain.burn_in // 2, 300),
                                     thin=0)
                node_run, _, _ = sample_gibbs(
                    kernel, potential, n, node_chain,
                    substream(sub, "ti", j), float(beta_j), mu)
                node_means.append(node_run.mean_energy)
                node_ses.append(node_run.mean_energy_se)
            log_ti = float(-np.dot(weights, node_means))
            se_ti = float(math.sqrt(np.dot(weights**2,
                                           np.square(node_ses))))
        combined = math.hypot(se_is, se_ti)
        ok = abs(log_is - log_ti) <= 3.0 * combined if combined > 0 else True
        h_bwd = log_is + e_mu
        h_fwd = -run.mean_energy - log_is
        extras = {
            "z2_mean": float(np.mean(np.exp(-2.0 * energies_is))),
            "w_sq_mu": _w_squared(kernel, mu),
            "mean_energy_mu": e_mu,
        }
        rows.append(replace(
            run, log_z_is=log_is, log_z_is_se=se_is, log_z_ti=log_ti,
            log_z_ti_se=se_ti,
            entropy_backward=h_bwd / n,
            entropy_backward_se=se_is / n,
            entropy_forward=h_fwd / n,
            entropy_forward_se=math.hypot(run.mean_energy_se, se_is) / n,
            cross_validated=ok, extras=extras))
    slope = _entropy_slope(n_values, [r.entropy_backward for r in rows])
    return {"rows": rows, "backward_slope": slope,
            "minimizer_residual": minimizer.residual}


def _w_squared(kernel, measure) -> float:
    """Double integral of W^2 against the measure squared (uniform only)."""
    if measure.kind != "uniform" or kernel.family == "zero":
        return float("nan")
    return float(np.sum(kernel.coefficients**2))


def _entropy_slope(n_values, h_values):
    pairs = [(n, h) for n, h in zip(n_values, h_values) if h and h > 0]
    if len(pairs) < 2:
        return None
    xs = np.log([n for n, _ in pairs])
    ys = np.log([h for _, h in pairs])
    return float(np.polyfit(xs, ys, 1)[0])
