"""Base measures on the domain: grid densities, atomic measures, sampling.

Grid densities are piecewise constant per cell; cell j covers
[j/M, (j+1)/M)^d and carries the stored value, so jittered alias sampling
draws exactly the represented law and the sup of the density is the max
grid value.  The discrete transform convention is

    rho_hat(k) = M^{-d} sum_j rho_j exp(-2 pi i k . c_j),   c_j cell centers,

i.e. a plain forward FFT of the cell values (divided by the cell count)
with a half-cell phase twist.  Grid-to-grid convolutions are twist-free
because synthesis happens at the same centers.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DomainEvaluationError
from .kernel import Domain, Kernel, grid_mode_data

MASS_TOL = 1e-12


class AliasTable:
    """Vose alias method for O(1) sampling of a finite distribution."""

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        if np.any(probs < 0):
            raise ConfigurationError("negative probability in alias table")
        n = probs.size
        scaled = probs * n / probs.sum()
        self.prob = np.ones(n)
        self.alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s, l = small.pop(), large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = l
            scaled[l] -= 1.0 - scaled[s]
            (small if scaled[l] < 1.0 else large).append(l)
        for i in small + large:
            self.prob[i] = 1.0

    def draw(self, rng, size) -> np.ndarray:
        idx = rng.integers(0, self.prob.size, size=size)
        flip = rng.random(size) >= self.prob[idx]
        return np.where(flip, self.alias[idx], idx)


class BaseMeasure:
    """Probability measure: uniform, grid density, or atomic."""

    def __init__(self, domain: Domain, kind: str, density=None, cells=None,
                 atoms=None, weights=None):
        self.domain = domain
        self.kind = kind
        self.density = None
        self.cells = None
        self.atoms = None
        self.weights = None
        self._alias = None
        if kind == "uniform":
            if not domain.is_torus:
                raise ConfigurationError("uniform measure requires the torus")
            self.linf_density = 1.0
        elif kind == "grid":
            if not domain.is_torus:
                raise ConfigurationError("grid densities are torus-only")
            density = np.asarray(density, dtype=float)
            if density.ndim != domain.dim:
                raise ConfigurationError("density array rank must equal dim")
            if np.any(density < 0):
                raise ConfigurationError("grid density must be nonnegative")
            if abs(density.mean() - 1.0) > MASS_TOL:
                raise ConfigurationError("grid density must have unit mass")
            self.density = density
            self.cells = density.shape[0]
            self.linf_density = float(density.max())
        elif kind == "atomic":
            atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
            weights = np.asarray(weights, dtype=float)
            if atoms.shape[0] != weights.size:
                raise ConfigurationError("atoms and weights must align")
            if np.any(weights < 0) or abs(weights.sum() - 1.0) > MASS_TOL:
                raise ConfigurationError("atomic weights must be nonnegative, mass 1")
            if not domain.is_torus and np.any(np.abs(atoms) > domain.radius):
                raise ConfigurationError("atoms outside the bounding box")
            self.atoms = domain.wrap(atoms)
            self.weights = weights
            self.linf_density = np.inf
        else:
            raise ConfigurationError(f"unknown measure kind {kind!r}")

    # -- sampling ----------------------------------------------------------

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n i.i.d. draws, shape (n, dim); deterministic given rng state."""
        if n < 1:
            raise ConfigurationError("need at least one sample")
        d = self.domain.dim
        if self.kind == "uniform":
            return rng.random((n, d))
        if self.kind == "atomic":
            if self._alias is None:
                self._alias = AliasTable(self.weights)
            idx = self._alias.draw(rng, n)
            return self.atoms[idx]
        if self._alias is None:
            self._alias = AliasTable(self.density.ravel())
        flat = self._alias.draw(rng, n)
        corner = np.stack(np.unravel_index(flat, self.density.shape), axis=1)
        jitter = rng.random((n, d))
        return (corner + jitter) / self.cells

    def sample_indices(self, n: int, rng) -> np.ndarray:
        """Atom indices for atomic measures (exact-enumeration cross-checks)."""
        if self.kind != "atomic":
            raise ConfigurationError("index sampling needs an atomic measure")
        if self._alias is None:
            self._alias = AliasTable(self.weights)
        return self._alias.draw(rng, n)

    # -- spectral data -------------------------------------------------------

    def grid_spectrum(self) -> np.ndarray:
        """Plain FFT of the cell values divided by the cell count."""
        if self.kind != "grid":
            raise ConfigurationError("grid spectrum needs a grid measure")
        return np.fft.fftn(self.density) / self.density.size


def uniform_measure(domain: Domain) -> BaseMeasure:
    return BaseMeasure(domain, "uniform")


def grid_measure(domain: Domain, density) -> BaseMeasure:
    return BaseMeasure(domain, "grid", density=density)


def atomic_measure(domain: Domain, atoms, weights) -> BaseMeasure:
    return BaseMeasure(domain, "atomic", atoms=atoms, weights=weights)


def _cell_centers(cells: int) -> np.ndarray:
    return (np.arange(cells) + 0.5) / cells


def single_mode_measure(domain: Domain, a: float, cells: int = 64) -> BaseMeasure:
    """Density 1 + a cos(2 pi x_1), |a| < 1, sampled at cell centers."""
    if abs(a) >= 1:
        raise ConfigurationError("mode amplitude must satisfy |a| < 1")
    x = _cell_centers(cells)
    vals = 1.0 + a * np.cos(2.0 * np.pi * x)
    if domain.dim > 1:
        shape = (cells,) + (1,) * (domain.dim - 1)
        vals = np.broadcast_to(vals.reshape(shape), (cells,) * domain.dim).copy()
    return grid_measure(domain, vals)


def two_bump_measure(domain: Domain, centers=(0.25, 0.75), sigma: float = 0.08,
                     weights=(0.5, 0.5), cells: int = 64) -> BaseMeasure:
    """Mixture of two wrapped Gaussian bumps, normalized on the grid."""
    grids = np.meshgrid(*([_cell_centers(cells)] * domain.dim), indexing="ij")
    dens = np.zeros((cells,) * domain.dim)
    for c, w in zip(centers, weights):
        c = np.broadcast_to(np.asarray(c, dtype=float), (domain.dim,))
        sq = sum((g - cc - np.round(g - cc)) ** 2 for g, cc in zip(grids, c))
        dens += w * np.exp(-sq / (2.0 * sigma**2))
    dens /= dens.mean()
    return grid_measure(domain, dens)


# -- convolution -----------------------------------------------------------


def convolve(kernel: Kernel, eps: float, measure: BaseMeasure) -> np.ndarray:
    """W_eps * rho on the measure's grid (spectral multiplication).

    eps = 0 is allowed: the bare truncated kernel is bounded, so the
    convolution is finite for any bounded density.
    """
    if not kernel.domain.is_torus:
        raise ConfigurationError("spectral convolution is torus-only; "
                                 "use convolve_at for atomic free-space measures")
    if measure.kind == "atomic":
        raise ConfigurationError("atomic measures convolve by direct summation; "
                                 "use convolve_at")
    if measure.kind == "uniform":
        cells = max(2 * kernel.cutoff + 2, 16)
        return np.zeros((cells,) * kernel.domain.dim)
    cells = measure.cells
    coef = grid_mode_data(kernel, cells, eps)
    return np.fft.ifftn(coef * np.fft.fftn(measure.density)).real


def convolve_at(kernel: Kernel, eps: float, measure: BaseMeasure,
                points, method: str = "auto") -> np.ndarray:
    """(W_eps * rho)(x) at arbitrary points.

    Atomic measures sum directly over atoms; torus grid measures evaluate the
    spectral series at the points.  `method` forces "direct" or "spectral"
    for the atomic cross-check.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if measure.kind == "uniform":
        return np.zeros(points.shape[0])
    if measure.kind == "atomic":
        if method in ("auto", "direct"):
            out = np.zeros(points.shape[0])
            for j, (atom, w) in enumerate(zip(measure.atoms, measure.weights)):
                z = kernel.domain.separation(points, atom)
                if kernel.family == "torus-log":
                    out += w * kernel.displacement(z, eps)
                elif eps == 0.0:
                    r = np.linalg.norm(z, axis=-1)
                    with np.errstate(divide="ignore"):
                        out += w * np.where(r > 0, -np.log(np.where(r > 0, r,
                                                                    1.0)),
                                            np.inf)
                else:
                    from .kernel import _free_reg_profile
                    r = np.linalg.norm(z, axis=-1)
                    out += w * np.array(
                        [_free_reg_profile(float(ri), eps, kernel.domain.dim)
                         for ri in r])
            return out
        if kernel.family != "torus-log":
            raise ConfigurationError("spectral path is torus-only")
        rho_hat = np.exp(-2j * np.pi * (measure.atoms @ kernel.lattice.T)).T \
            @ measure.weights
    else:
        if kernel.family != "torus-log":
            raise ConfigurationError("grid measures need a torus kernel")
        rho_hat = _grid_modes_on_lattice(measure, kernel.lattice)
    weights = kernel.weighted_coefficients(eps)
    phases = np.exp(2j * np.pi * (points @ kernel.lattice.T))
    return (phases @ (weights * rho_hat)).real


def _grid_modes_on_lattice(measure: BaseMeasure, lattice: np.ndarray) -> np.ndarray:
    """Center-convention rho_hat(k) for lattice rows k, from the grid FFT.

    Grid densities carry modes up to the grid Nyquist only; kernel modes
    beyond that band are zero rather than aliased copies.
    """
    spec = measure.grid_spectrum()
    cells = measure.cells
    idx = tuple(np.mod(lattice[:, a], cells) for a in range(lattice.shape[1]))
    vals = spec[idx]
    twist = np.exp(-1j * np.pi * lattice.sum(axis=1) / cells)
    in_band = np.all(np.abs(lattice) <= (cells - 1) // 2, axis=1)
    return np.where(in_band, vals * twist, 0.0)


def mean_interaction(kernel: Kernel, eps: float, measure: BaseMeasure) -> float:
    """Double integral of W_eps against the measure squared.

    Spectral for the torus (atomic measures included, so the self-pair mass
    on the diagonal is counted); direct double sum in free space.
    """
    if measure.kind == "uniform":
        return 0.0
    if kernel.family == "zero":
        return 0.0
    if kernel.domain.is_torus:
        if measure.kind == "atomic":
            rho_hat = np.exp(-2j * np.pi * (measure.atoms @ kernel.lattice.T)).T \
                @ measure.weights
        else:
            rho_hat = _grid_modes_on_lattice(measure, kernel.lattice)
        return float(np.sum(kernel.weighted_coefficients(eps)
                            * np.abs(rho_hat) ** 2))
    if measure.kind != "atomic":
        raise ConfigurationError("free-space mean interaction needs atoms")
    if eps == 0.0:
        return np.inf  # the diagonal self-mass of each atom diverges
    from .kernel import eval_regularized
    total = 0.0
    for a, wa in zip(measure.atoms, measure.weights):
        for b, wb in zip(measure.atoms, measure.weights):
            total += wa * wb * eval_regularized(kernel, eps, a, b)
    return total
