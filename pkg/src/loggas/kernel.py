"""Repulsive log-interaction kernels and their heat-flow regularization.

Two families are implemented:

* ``torus-log``: the zero-mean periodic kernel W(x, y) = F(x - y) with
  Fourier coefficients |2 pi k|^{-d} on the nonzero lattice, truncated at
  |k|_inf <= cutoff.  In d = 1 it sums to -(1/pi) ln(2 sin pi x).
* ``free-log``: W(x, y) = -ln|x - y| on R^d.

Regularization multiplies mode k by exp(-|2 pi k|^2 eps) ("full" order,
heat flow at time eps) or exp(-|2 pi k| eps) ("half" order, Poisson flow,
used in d = 1).  In free space the same smoothing is evaluated by adaptive
radial quadrature against the Gaussian (variance 2 eps per coordinate) or
Cauchy kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import ConfigurationError, DomainEvaluationError

TORUS = "torus"
FREE = "free"

DEFAULT_CUTOFF = {1: 64, 2: 64, 3: 24}


@dataclass(frozen=True)
class Domain:
    """Torus T^d (period 1) or free space R^d with a bounding radius."""

    kind: str
    dim: int
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in (TORUS, FREE):
            raise ConfigurationError(f"unknown domain kind {self.kind!r}")
        if self.dim not in (1, 2, 3):
            raise ConfigurationError("dimension must be 1, 2 or 3")
        if self.kind == FREE and self.radius <= 0:
            raise ConfigurationError("free-space radius must be positive")

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS

    def wrap(self, x: np.ndarray) -> np.ndarray:
        return np.mod(x, 1.0) if self.is_torus else np.asarray(x, dtype=float)

    def separation(self, x, y) -> np.ndarray:
        """Displacement x - y, reduced to [-1/2, 1/2)^d on the torus."""
        z = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.is_torus:
            z = z - np.round(z)
        return z


def _nonzero_lattice(dim: int, cutoff: int) -> np.ndarray:
    axes = [np.arange(-cutoff, cutoff + 1)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.stack([m.ravel() for m in mesh], axis=1)
    return lattice[np.any(lattice != 0, axis=1)]


class Kernel:
    """Interaction potential with spectral data and smoothing multipliers.

    Immutable after construction; all evaluations are pure functions of the
    arguments, safe for concurrent shared reads.
    """

    def __init__(self, domain: Domain, family: str, cutoff: int = 0):
        if family not in ("torus-log", "free-log", "zero"):
            raise ConfigurationError(f"unknown kernel family {family!r}")
        if family == "torus-log":
            if not domain.is_torus:
                raise ConfigurationError("torus-log requires a torus domain")
            if cutoff <= 0:
                raise ConfigurationError("torus-log needs a positive Fourier cutoff")
        if family == "free-log" and domain.is_torus:
            raise ConfigurationError("free-log requires a free-space domain")
        self.domain = domain
        self.family = family
        self.cutoff = int(cutoff)
        # half-order (Poisson) smoothing exactly in one dimension
        self.semigroup_order = "half" if domain.dim == 1 else "full"
        if family == "torus-log":
            self.lattice = _nonzero_lattice(domain.dim, cutoff)
            two_pi_k = 2.0 * np.pi * np.linalg.norm(self.lattice, axis=1)
            self.coefficients = two_pi_k ** (-float(domain.dim))
            self._kabs = two_pi_k
            self._ksq = two_pi_k**2
        else:
            self.lattice = np.zeros((0, domain.dim), dtype=int)
            self.coefficients = np.zeros(0)
            self._kabs = np.zeros(0)
            self._ksq = np.zeros(0)

    # -- spectral pieces -------------------------------------------------

    def multipliers(self, eps: float) -> np.ndarray:
        """Smoothing multipliers m_k(eps) on the kernel's lattice."""
        if eps < 0:
            raise DomainEvaluationError("eps must be nonnegative")
        if eps == 0:
            return np.ones_like(self.coefficients)
        rate = self._kabs if self.semigroup_order == "half" else self._ksq
        return np.exp(-rate * eps)

    def weighted_coefficients(self, eps: float) -> np.ndarray:
        return self.coefficients * self.multipliers(eps)

    def diagonal(self, eps: float) -> float:
        """W_eps(x, x); requires eps > 0 for the free-space family."""
        if self.family == "zero":
            return 0.0
        if self.family == "torus-log":
            return float(np.sum(self.weighted_coefficients(eps)))
        if eps <= 0:
            raise DomainEvaluationError("free-log diverges on the diagonal")
        if self.semigroup_order == "half":
            return -math.log(eps)
        # E[-ln |sqrt(2 eps) Z|], Z standard d-dimensional normal
        return -0.5 * (math.log(4.0 * eps) + special.digamma(self.domain.dim / 2.0))

    def tail_constant(self, eps: float = 0.0) -> float:
        """Sum of retained coefficients; also the eps-diagonal for torus-log."""
        return float(np.sum(self.weighted_coefficients(eps)))

    # -- pointwise evaluation -------------------------------------------

    def _series(self, z: np.ndarray, eps: float, gradient: bool = False):
        """Truncated Fourier sum (or its gradient) at displacements z (..., d)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        phases = 2.0 * np.pi * (z @ self.lattice.T)  # (..., M)
        weights = self.weighted_coefficients(eps)
        if not gradient:
            return np.cos(phases) @ weights
        # grad F(z) = -sum_k c_k m_k 2 pi k sin(2 pi k . z)
        s = np.sin(phases) * weights
        return -2.0 * np.pi * (s @ self.lattice)

    def displacement(self, z, eps: float = 0.0, difference: bool = False):
        """W_eps(x, y) as a function of z = x - y (torus family only).

        With ``difference=True`` returns (W - W_eps)(z).
        """
        if self.family == "zero":
            return np.zeros(np.shape(np.atleast_2d(z))[:-1])
        if self.family != "torus-log":
            raise ConfigurationError("displacement form is spectral/torus only")
        if difference:
            return self._series(z, 0.0) - self._series(z, eps)
        return self._series(z, eps)


def torus_log_kernel(dim: int, cutoff: int | None = None) -> Kernel:
    if cutoff is None:
        cutoff = DEFAULT_CUTOFF[dim]
    return Kernel(Domain(TORUS, dim), "torus-log", cutoff)


def free_log_kernel(dim: int, radius: float = 1.0) -> Kernel:
    return Kernel(Domain(FREE, dim, radius), "free-log")


def zero_kernel(dim: int, kind: str = TORUS, radius: float = 1.0) -> Kernel:
    return Kernel(Domain(kind, dim, radius), "zero")


# -- closed forms used as oracles and fast paths -------------------------


def torus_log_closed_form_1d(x) -> np.ndarray:
    """Exact d=1 periodic kernel -(1/pi) ln(2 sin pi x), x not an integer."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    return -np.log(2.0 * np.sin(np.pi * x)) / np.pi


def series_tail_bound_1d(x, cutoff: int) -> np.ndarray:
    """Pointwise bound on the 1-d truncation error.

    Summation by parts on sum_{k>K} cos(2 pi k x)/(pi k) with the Dirichlet
    partial-sum bound 1/|sin(pi x)| gives |error| <= 1/(pi (K+1) |sin pi x|).
    """
    x = np.asarray(x, dtype=float)
    return 1.0 / (np.pi * (cutoff + 1) * np.abs(np.sin(np.pi * x)))


def _free_reg_profile(r: float, eps: float, dim: int) -> float:
    """Heat-smoothed -ln|.| at radius r: E[-ln|r e_1 + sqrt(2 eps) Z|]."""
    if eps <= 0:
        raise DomainEvaluationError("eps must be positive")
    if dim == 1:
        # Poisson (half-order) smoothing has the harmonic-extension closed form
        return -0.5 * math.log(r * r + eps * eps)
    if r == 0.0:
        return -0.5 * (math.log(4.0 * eps) + special.digamma(dim / 2.0))
    sigma2 = 2.0 * eps  # per-coordinate variance of the smoothing kernel

    if dim == 2:
        def density(s):
            return (s / sigma2) * np.exp(-((s - r) ** 2) / (2.0 * sigma2)) \
                * special.i0e(r * s / sigma2)
    else:
        norm = 1.0 / (r * math.sqrt(2.0 * math.pi * sigma2))
        def density(s):
            return norm * s * (np.exp(-((s - r) ** 2) / (2.0 * sigma2))
                               - np.exp(-((s + r) ** 2) / (2.0 * sigma2)))

    upper = r + 14.0 * math.sqrt(sigma2)
    pts = [p for p in (r,) if 0.0 < p < upper]
    value, _ = integrate.quad(lambda s: -math.log(s) * density(s), 0.0, upper,
                              points=pts, limit=200, epsabs=1e-13, epsrel=1e-10)
    return value


def free_reg_closed_form_2d(r, eps):
    """d=2 closed form -ln r - E1(r^2 / (4 eps)) / 2 (quadrature oracle)."""
    r = np.asarray(r, dtype=float)
    return -np.log(r) - 0.5 * special.exp1(r * r / (4.0 * eps))


# -- public evaluation operations ----------------------------------------


def eval_kernel(kernel: Kernel, x, y) -> float:
    """Bare potential W(x, y)."""
    if kernel.family == "zero":
        return 0.0
    z = kernel.domain.separation(x, y)
    if kernel.family == "torus-log":
        return float(kernel._series(z, 0.0)[0])
    r = float(np.linalg.norm(z))
    if r == 0.0:
        raise DomainEvaluationError("free-log is undefined on the diagonal")
    return -math.log(r)


def eval_regularized(kernel: Kernel, eps: float, x, y) -> float:
    """Smoothed potential W_eps(x, y); finite on the diagonal."""
    if eps <= 0:
        raise DomainEvaluationError("eps must be positive")
    if kernel.family == "zero":
        return 0.0
    z = kernel.domain.separation(x, y)
    if kernel.family == "torus-log":
        return float(kernel._series(z, eps)[0])
    r = float(np.linalg.norm(z))
    return _free_reg_profile(r, eps, kernel.domain.dim)


def eval_gradient(kernel: Kernel, eps: float, x, y) -> np.ndarray:
    """Gradient of W_eps in the first argument."""
    if eps < 0:
        raise DomainEvaluationError("eps must be nonnegative")
    if kernel.family == "zero":
        return np.zeros(kernel.domain.dim)
    z = kernel.domain.separation(x, y)
    if kernel.family == "torus-log":
        return np.asarray(kernel._series(z, eps, gradient=True)[0])
    r = float(np.linalg.norm(z))
    if eps == 0.0:
        if r == 0.0:
            raise DomainEvaluationError("free-log gradient undefined on the diagonal")
        return -z / (r * r)
    return free_gradient(kernel, eps, z)


def free_gradient(kernel: Kernel, eps: float, z) -> np.ndarray:
    """Smoothed free-space force; closed forms in d = 1, 2."""
    z = np.asarray(z, dtype=float)
    r = float(np.linalg.norm(z))
    dim = kernel.domain.dim
    if dim == 1:
        return -z / (r * r + eps * eps)
    if r == 0.0:
        return np.zeros(dim)
    if dim == 2:
        return -(z / (r * r)) * (-np.expm1(-r * r / (4.0 * eps)))
    h = 1e-5 * max(r, 1.0)  # radial profile is smooth; centred difference
    lo = _free_reg_profile(max(r - h, 1e-12), eps, dim)
    hi = _free_reg_profile(r + h, eps, dim)
    return (z / r) * (hi - lo) / (2.0 * h)


# -- grid fields ----------------------------------------------------------


def grid_mode_data(kernel: Kernel, cells: int, eps: float = 0.0,
                   difference: bool = False) -> np.ndarray:
    """Spectral coefficients of W_eps on a cells^d FFT grid (fftfreq order)."""
    dim = kernel.domain.dim
    freqs = np.fft.fftfreq(cells, d=1.0 / cells)  # integer frequencies
    mesh = np.meshgrid(*([freqs] * dim), indexing="ij")
    kinf = np.max(np.abs(np.stack(mesh)), axis=0)
    ksq_2pi = sum((2.0 * np.pi * m) ** 2 for m in mesh)
    coef = np.zeros_like(ksq_2pi)
    mask = (kinf > 0) & (kinf <= kernel.cutoff)
    if kernel.family == "zero":
        return coef
    coef[mask] = ksq_2pi[mask] ** (-kernel.domain.dim / 2.0)
    if eps > 0 or difference:
        rate = np.sqrt(ksq_2pi) if kernel.semigroup_order == "half" else ksq_2pi
        mult = np.exp(-rate * eps)
        coef = coef * ((1.0 - mult) if difference else mult)
    return coef


def displacement_field(kernel: Kernel, cells: int, eps: float = 0.0,
                       difference: bool = False) -> np.ndarray:
    """Exact values of W_eps (or W - W_eps) on the regular cells^d grid."""
    if kernel.family != "torus-log" and kernel.family != "zero":
        raise ConfigurationError("grid fields are torus-only")
    if cells < 2 * kernel.cutoff + 1:
        raise ConfigurationError(
            f"grid of {cells} cells cannot represent cutoff {kernel.cutoff}")
    coef = grid_mode_data(kernel, cells, eps, difference)
    field = np.fft.ifftn(coef).real * cells**kernel.domain.dim
    return field


# -- regularity verification ----------------------------------------------


@dataclass
class RegularityReport:
    """Result rows of a kernel-regularity sweep over decreasing eps."""

    epsilons: list = field(default_factory=list)
    diagonal_values: list | None = None
    besov_norms: list | None = None
    superharm_minima: list | None = None
    fitted_exponents: dict = field(default_factory=dict)

    def __post_init__(self):
        eps = list(self.epsilons)
        if not eps:
            raise ConfigurationError("empty epsilon sweep")
        if any(e <= 0 or e >= 0.5 for e in eps):
            raise ConfigurationError("epsilons must lie in (0, 1/2)")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigurationError("epsilons must be strictly decreasing")

    def to_dict(self) -> dict:
        out = {"epsilons": list(self.epsilons),
               "fitted_exponents": dict(self.fitted_exponents)}
        for name in ("diagonal_values", "besov_norms", "superharm_minima"):
            val = getattr(self, name)
            if val is not None:
                out[name] = list(val)
        return out

    def rows(self) -> list:
        """(eps, value) pairs for the primary swept quantity."""
        for name in ("besov_norms", "superharm_minima", "diagonal_values"):
            val = getattr(self, name)
            if val is not None:
                return list(zip(self.epsilons, val))
        return []


def _loglog_slope(eps, values) -> tuple[float, float]:
    x = np.log(np.asarray(eps, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), resid


def verify_log_bound(kernel: Kernel, epsilons) -> RegularityReport:
    """Diagonal growth check: W at smoothing length eps vs |ln eps| + 1.

    The sweep parameter is the smoothing *length*; for the full-order
    semigroup the corresponding flow time is its square, for the half-order
    (d = 1) flow time and length coincide.
    """
    eps = sorted((float(e) for e in epsilons), reverse=True)
    times = [e if kernel.semigroup_order == "half" else e * e for e in eps]
    diag = [kernel.diagonal(t) for t in times]
    ratios = [d / (abs(math.log(e)) + 1.0) for d, e in zip(diag, eps)]
    fitted = {"log_bound_c0": max(ratios), "log_bound_ratios": ratios}
    if min(ratios) > 0:
        fitted["log_bound_ratio_spread"] = max(ratios) / min(ratios)
    return RegularityReport(epsilons=eps, diagonal_values=diag,
                            fitted_exponents=fitted)


def _lp_gap_norms_torus(kernel, measure, p, eps_list, cells) -> list:
    """sup_x of integral |(P_eps - id) W(x, .)|^p d rho for each eps.

    Both kernel families on the torus are translation invariant, so the sup
    is constant in x; the full-grid maximum (computed by circular FFT
    correlation against the density) is kept as a safety net.
    """
    norms = []
    vol = cells ** (-kernel.domain.dim)
    for eps in eps_list:
        gap = np.abs(displacement_field(kernel, cells, eps, difference=True))
        integrand = gap**p
        if measure.kind == "uniform":
            norms.append(float(np.sum(integrand) * vol))
            continue
        dens = measure.density
        # integral over y of f(x - y) rho(y): circular correlation
        corr = np.fft.ifftn(np.fft.fftn(integrand) * np.conj(np.fft.fftn(dens))).real
        norms.append(float(np.max(corr) * vol))
    return norms


def _lp_gap_norms_free(kernel, measure, p, eps_list, x_resolution) -> list:
    if measure.kind != "atomic":
        raise ConfigurationError("free-space regularity sweeps need atomic measures")
    rad = kernel.domain.radius
    axes = [np.linspace(-rad, rad, x_resolution)] * kernel.domain.dim
    xs = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    norms = []
    for eps in eps_list:
        best = 0.0
        for x in xs:
            acc = 0.0
            for atom, w in zip(measure.atoms, measure.weights):
                r = float(np.linalg.norm(x - atom))
                if r == 0.0:
                    continue  # bare kernel undefined there; excluded point mass
                gap = -math.log(r) - _free_reg_profile(r, eps, kernel.domain.dim)
                acc += w * abs(gap) ** p
            best = max(best, acc)
        norms.append(best)
    return norms


def verify_besov(kernel: Kernel, measure, p: int, epsilons,
                 x_resolution: int = 32) -> RegularityReport:
    """Smoothing-gap L^p sweep with a log-log slope fit of the exponent."""
    if not 1 <= p <= 16:
        raise ConfigurationError("p must be in [1, 16]")
    eps = sorted((float(e) for e in epsilons), reverse=True)
    if not eps:
        raise ConfigurationError("empty epsilon sweep")
    if kernel.domain.is_torus:
        cells = max(4 * kernel.cutoff, 128)
        norms = _lp_gap_norms_torus(kernel, measure, p, eps, cells)
    else:
        norms = _lp_gap_norms_free(kernel, measure, p, eps, x_resolution)
    fitted = {}
    if len(eps) >= 2:
        kappa, resid = _loglog_slope(eps, norms)
        fitted = {"kappa": kappa, "kappa_residual": resid}
    return RegularityReport(epsilons=eps, besov_norms=norms,
                            fitted_exponents=fitted)


def verify_superharmonicity(kernel: Kernel, epsilons,
                            grid_resolution: int = 256) -> RegularityReport:
    """Grid minimum of W - W_eps per eps, with a vanishing-rate fit."""
    if grid_resolution < 8:
        raise ConfigurationError("grid_resolution must be at least 8")
    eps = sorted((float(e) for e in epsilons), reverse=True)
    minima = []
    if kernel.domain.is_torus:
        cells = max(grid_resolution, 2 * kernel.cutoff + 2)
        for e in eps:
            gap = displacement_field(kernel, cells, e, difference=True)
            minima.append(float(np.min(gap)))
    else:
        radii = np.geomspace(1e-3 * kernel.domain.radius,
                             2.0 * kernel.domain.radius, grid_resolution)
        for e in eps:
            gap = [-math.log(r) - _free_reg_profile(r, e, kernel.domain.dim)
                   for r in radii]
            minima.append(float(np.min(gap)))
    fitted = {}
    neg = [(e, -m) for e, m in zip(eps, minima) if m < -1e-14]
    if len(neg) >= 2:
        alpha, resid = _loglog_slope([e for e, _ in neg], [v for _, v in neg])
        fitted["alpha"] = alpha
        fitted["alpha_residual"] = resid
        fitted["superharm_k"] = max(v / e**alpha for e, v in neg)
    return RegularityReport(epsilons=eps, superharm_minima=minima,
                            fitted_exponents=fitted)
