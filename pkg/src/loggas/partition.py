"""Monte Carlo estimation of Z_{N, beta} = E[exp(-beta * energy)].

Configurations are drawn i.i.d. from the base measure; the exponential
weights are averaged with a seeded bootstrap confidence interval and an
effective sample size (ESS = (sum w)^2 / sum w^2) so heavy-tailed weight
distributions are visible in the output.  Sampling is chunked with one
child stream per chunk, so results do not depend on execution order or
worker count.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EstimationError
from .energy import batch_totals
from .kernel import Kernel, eval_kernel, eval_regularized
from .measure import BaseMeasure
from .streams import generator, substream

CHUNK = 4096
MAX_DISCARD_FRACTION = 1e-3


@dataclass
class PartitionEstimate:
    n: int
    beta: float
    eps: float
    samples: int
    mean: float
    log_mean: float
    ci_halfwidth: float
    ess: float
    discards: int = 0

    def row(self, seed="") -> list:
        return [self.n, self.beta, self.eps, self.samples, self.mean,
                self.ci_halfwidth, self.ess, seed]


def _config_energies(kernel, measure, n, eps, samples, stream) -> np.ndarray:
    """Energies of `samples` i.i.d. configurations, chunk-deterministic."""
    out = np.empty(samples)
    n_chunks = (samples + CHUNK - 1) // CHUNK
    pos = 0
    for c in range(n_chunks):
        take = min(CHUNK, samples - pos)
        rng = generator(substream(stream, c))
        pts = measure.sample(take * n, rng).reshape(take, n, -1)
        out[pos:pos + take] = batch_totals(kernel, eps, measure, pts)
        pos += take
    return out


def _estimate_from_energies(energies, n, beta, eps, boot_rng,
                            bootstrap_resamples=200) -> PartitionEstimate:
    finite = np.isfinite(energies)
    discards = int(energies.size - finite.sum())
    if discards > MAX_DISCARD_FRACTION * energies.size:
        raise EstimationError(
            f"{discards} non-finite energies out of {energies.size}")
    weights = np.exp(-beta * energies[finite])
    mean = float(weights.mean())
    ess = float(weights.sum() ** 2 / np.sum(weights**2))
    boot = np.empty(bootstrap_resamples)
    m = weights.size
    for b in range(bootstrap_resamples):
        idx = boot_rng.integers(0, m, m)
        boot[b] = weights[idx].mean()
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return PartitionEstimate(n=n, beta=beta, eps=eps, samples=int(energies.size),
                             mean=mean, log_mean=float(np.log(mean)),
                             ci_halfwidth=float((hi - lo) / 2.0), ess=ess,
                             discards=discards)


def estimate_partition(kernel: Kernel, measure: BaseMeasure, n: int,
                       beta: float, eps: float, samples: int,
                       stream) -> PartitionEstimate:
    """Monte Carlo Z_{N, beta} with bootstrap CI and effective sample size."""
    if samples < 1000:
        raise ConfigurationError("need at least 10^3 samples")
    if beta <= 0:
        raise ConfigurationError("beta must be positive")
    energies = _config_energies(kernel, measure, n, eps, samples,
                                substream(stream, "draw"))
    boot_rng = generator(substream(stream, "boot"))
    return _estimate_from_energies(energies, n, beta, eps, boot_rng)


def sweep_partition(kernel: Kernel, measure: BaseMeasure, n_values, betas,
                    samples: int, stream, eps: float = 0.0):
    """One estimate per (N, beta); energies are shared across betas.

    `betas` may be a scalar or a sequence.  Returns the estimates in
    (N-major, beta-minor) order together with the running max per beta.
    """
    if np.isscalar(betas):
        betas = [betas]
    n_values = list(n_values)
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ConfigurationError("n_values must be increasing")
    estimates = []
    for i, n in enumerate(n_values):
        energies = _config_energies(kernel, measure, n, eps, samples,
                                    substream(stream, "draw", i))
        for j, beta in enumerate(betas):
            boot_rng = generator(substream(stream, "boot", i, j))
            estimates.append(_estimate_from_energies(
                energies, n, float(beta), eps, boot_rng))
    return estimates


def running_max(estimates) -> list:
    out, best = [], -np.inf
    for e in estimates:
        best = max(best, e.mean)
        out.append(best)
    return out


def trend_flatness(estimates) -> dict:
    """Flat-trend verdict: last-quarter mean <= first-quarter mean + 2 CI."""
    means = np.array([e.mean for e in estimates])
    cis = np.array([e.ci_halfwidth for e in estimates])
    q = max(1, len(means) // 4)
    first, last = means[:q].mean(), means[-q:].mean()
    budget = 2.0 * cis.max()
    return {"first_quarter_mean": float(first), "last_quarter_mean": float(last),
            "ci_budget": float(budget), "flat": bool(last <= first + budget),
            "running_max": running_max(estimates)}


def enumerate_partition(kernel: Kernel, measure: BaseMeasure, n: int,
                        beta: float, eps: float = 0.0) -> float:
    """Exact Z by summation over all atom assignments (atomic measures)."""
    if measure.kind != "atomic":
        raise ConfigurationError("exact enumeration needs an atomic measure")
    m = measure.weights.size
    if m**n > 1_000_000:
        raise ConfigurationError("enumeration budget exceeded")
    table = _pair_table(kernel, eps, measure)
    cross_at = _cross_table(kernel, eps, measure)
    mean_val = _mean_value(kernel, eps, measure)
    idx = np.array(list(itertools.product(range(m), repeat=n)))  # (m^n, n)
    pair = np.zeros(idx.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            pair += table[idx[:, i], idx[:, j]]
    total = pair / n - cross_at[idx].sum(axis=1) + (n / 2.0) * mean_val
    weights = np.prod(measure.weights[idx], axis=1)
    return float(np.sum(weights * np.exp(-beta * total)))


def _pair_table(kernel, eps, measure) -> np.ndarray:
    atoms = measure.atoms
    m = atoms.shape[0]
    table = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            if eps > 0:
                table[i, j] = eval_regularized(kernel, eps, atoms[i], atoms[j])
            elif kernel.family == "free-log" and i == j:
                raise ConfigurationError(
                    "bare free-space enumeration is undefined on atom diagonals")
            else:
                table[i, j] = eval_kernel(kernel, atoms[i], atoms[j])
    return table


def _cross_table(kernel, eps, measure) -> np.ndarray:
    from .measure import convolve_at
    return convolve_at(kernel, eps, measure, measure.atoms)


def _mean_value(kernel, eps, measure) -> float:
    from .measure import mean_interaction
    return mean_interaction(kernel, eps, measure)
