"""Fluctuation-field interaction energy and its lower-bound probes.

For a configuration x = (x_1, ..., x_N) and base measure rho, the centered
fluctuation field is eta = N^{-1/2} (sum_i delta_{x_i} - N rho) and the
diagonal-removed energy expands into three terms:

    total = (1/2N) sum_{i != j} W_eps(x_i, x_j)        (pair)
          -       sum_i (W_eps * rho)(x_i)             (cross)
          + (N/2) double-int W_eps d rho d rho         (mean)

The pair sum on the torus is evaluated through the spectral identity

    sum_{i != j} F(x_i - x_j) = sum_{k != 0} c_k m_k (|S_k|^2 - N),
    S_k = sum_i exp(2 pi i k . x_i),

which is exact for the truncated kernel and turns the O(N^2 M) double loop
into separable matrix products.  A literal-centering variant (eta built with
rho instead of N rho) is kept behind a flag for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainEvaluationError
from .kernel import Domain, Kernel, displacement_field, eval_kernel, eval_regularized
from .measure import BaseMeasure, convolve_at, mean_interaction
from .streams import generator, substream


@dataclass
class Configuration:
    """Ordered particle positions inside the domain."""

    points: np.ndarray
    domain: Domain

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != self.domain.dim:
            raise ConfigurationError("points do not match the domain dimension")
        if pts.shape[0] < 1:
            raise ConfigurationError("a configuration needs at least one point")
        self.points = self.domain.wrap(pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass
class EnergyBreakdown:
    pair_term: float
    cross_term: float
    mean_term: float
    total: float
    eps: float

    def row(self, n: int, seed="") -> list:
        return [n, self.eps, self.pair_term, self.cross_term,
                self.mean_term, self.total, seed]


# -- separable spectral machinery ------------------------------------------


def _trig_powers(x: np.ndarray, kmax: int):
    """cos(2 pi k x), sin(2 pi k x) for k = 0..kmax, leading mode axis.

    Built by the angle-addition recurrence with contiguous per-mode slabs;
    real arithmetic keeps the downstream quadratic forms on dgemm instead
    of zgemm.  Returns arrays of shape (kmax + 1,) + x.shape.
    """
    c1 = np.cos(2.0 * np.pi * x)
    s1 = np.sin(2.0 * np.pi * x)
    c = np.empty((kmax + 1,) + x.shape)
    s = np.empty_like(c)
    c[0] = 1.0
    s[0] = 0.0
    for k in range(1, kmax + 1):
        np.multiply(c[k - 1], c1, out=c[k])
        c[k] -= s[k - 1] * s1
        np.multiply(s[k - 1], c1, out=s[k])
        s[k] += c[k - 1] * s1
    return c, s


def _halfplane_weights(kernel: Kernel, eps: float):
    """Coefficient grids for the separable quadratic forms.

    d = 1: modes k = 1..K with weight 2 c_k m_k.
    d = 2: pair (w_full, w_inner) on the quadrant (k1, k2) in [0, K]^2:
           w_full doubles every mode and zeroes the corner (0, 0), covering
           modes with min(k1, k2) = 0 once per sign; w_inner = w_full[1:, 1:]
           weights the mirrored (-k1, +k2) quadrant.
    """
    K = kernel.cutoff
    if kernel.domain.dim == 1:
        k = np.arange(1, K + 1, dtype=float)
        rate = 2.0 * np.pi * k if kernel.semigroup_order == "half" \
            else (2.0 * np.pi * k) ** 2
        return 2.0 * (2.0 * np.pi * k) ** (-1.0) * np.exp(-rate * eps)
    if kernel.domain.dim == 2:
        k1 = np.arange(0, K + 1, dtype=float)[:, None]
        k2 = np.arange(0, K + 1, dtype=float)[None, :]
        ksq = (2.0 * np.pi) ** 2 * (k1**2 + k2**2)
        with np.errstate(divide="ignore"):
            coef = np.where(ksq > 0, 1.0 / ksq, 0.0)
        mult = np.exp(-(np.sqrt(ksq) if kernel.semigroup_order == "half" else ksq)
                      * eps)
        w_full = 2.0 * coef * mult
        return w_full, w_full[1:, 1:]
    raise ConfigurationError("separable sums implemented for d <= 2")


def _structure_factors(points: np.ndarray, kernel: Kernel):
    """Squared mode sums |S_k|^2, S_k = sum_i exp(2 pi i k . x_i), batched.

    d = 1: (trig powers, |S_k|^2 over k = 1..K).
    d = 2: (trig powers, (|S(+k1,+k2)|^2, |S(-k1,+k2)|^2)) on the quadrant
    k1, k2 in [0, K]^2, assembled from four real matrix products.
    """
    K = kernel.cutoff
    if kernel.domain.dim == 1:
        c, s = _trig_powers(points[..., 0], K)  # (K+1, B, N) each
        csum = np.moveaxis(c.sum(axis=-1)[1:], 0, -1)  # (B, K)
        ssum = np.moveaxis(s.sum(axis=-1)[1:], 0, -1)
        return (csum, ssum), csum**2 + ssum**2
    return _quadrant_blocks(points, K), None


def _quadrant_blocks(points: np.ndarray, K: int):
    """Cos/sin cross products on the quadrant (k1, k2) in [0, K]^2.

    The complex mode sums decompose as S(+k1, +k2) = (cc - ss) + i(cs + sc)
    and S(-k1, +k2) = (cc + ss) + i(cs - sc); all downstream quadratic and
    linear forms contract these four real blocks directly.
    """
    c1, s1 = _trig_powers(points[..., 0], K)   # (K+1, B, N)
    c2, s2 = _trig_powers(points[..., 1], K)
    left = np.concatenate([np.moveaxis(c1, 0, -1), np.moveaxis(s1, 0, -1)],
                          axis=-1)             # (B, N, 2(K+1))
    right = np.concatenate([np.moveaxis(c2, 0, -1), np.moveaxis(s2, 0, -1)],
                           axis=-1)
    prod = np.matmul(np.swapaxes(left, -1, -2), right)
    m = K + 1
    cc, cs = prod[..., :m, :m], prod[..., :m, m:]
    sc, ss = prod[..., m:, :m], prod[..., m:, m:]
    return cc, ss, cs, sc


def batch_pair_sums(kernel: Kernel, eps: float, points: np.ndarray) -> np.ndarray:
    """(1/2N) sum_{i != j} W_eps for each configuration in (B, N, d)."""
    if kernel.family == "zero":
        return np.zeros(points.shape[0])
    B, N, d = points.shape
    if N == 1:
        return np.zeros(B)  # the off-diagonal sum is empty
    if kernel.family != "torus-log":
        return np.array([_pair_sum_free(kernel, eps, points[b]) for b in range(B)])
    if d > 2:
        return np.array([pair_sum_direct(kernel, eps, points[b]) for b in range(B)])
    pair, _ = _torus_energy_terms(kernel, eps, points, None)
    return pair


def _measure_halfplane_modes(kernel: Kernel, measure: BaseMeasure):
    """Base-measure Fourier data arranged to match the half-plane weights."""
    from .measure import _grid_modes_on_lattice
    K = kernel.cutoff

    def modes(lattice):
        if measure.kind == "atomic":
            return np.exp(-2j * np.pi * (measure.atoms @ lattice.T)).T \
                @ measure.weights
        return _grid_modes_on_lattice(measure, lattice)

    if kernel.domain.dim == 1:
        return modes(np.arange(1, K + 1)[:, None])
    k1, k2 = np.meshgrid(np.arange(K + 1), np.arange(K + 1), indexing="ij")
    pp = modes(np.stack([k1.ravel(), k2.ravel()], axis=1)).reshape(K + 1, K + 1)
    mp = modes(np.stack([-k1[1:, 1:].ravel(), k2[1:, 1:].ravel()],
                        axis=1)).reshape(K, K)
    return pp, mp


def _torus_energy_terms(kernel: Kernel, eps: float, points: np.ndarray,
                        measure: BaseMeasure | None):
    """(pair, cross) sums for a batch on the torus, one slab pass.

    `measure` of None (or uniform) skips the cross term.
    """
    B, N, d = points.shape
    wgt = _halfplane_weights(kernel, eps)
    ctot = kernel.tail_constant(eps)
    want_cross = measure is not None and measure.kind != "uniform"
    rho = _measure_halfplane_modes(kernel, measure) if want_cross else None
    pair = np.empty(B)
    cross = np.zeros(B)
    if d == 2:
        w_full, w_inner = wgt
        w_pad = np.zeros_like(w_full)
        w_pad[1:, 1:] = w_inner  # mirrored quadrant skips the axes
        if want_cross:
            rho_pp, rho_mp = rho
            rho_mp_pad = np.zeros_like(rho_pp)
            rho_mp_pad[1:, 1:] = rho_mp
            # coefficients of (cc, ss, cs, sc) in the combined linear form
            c_cc = w_full * rho_pp.real + w_pad * rho_mp_pad.real
            c_ss = -w_full * rho_pp.real + w_pad * rho_mp_pad.real
            c_cs = -w_full * rho_pp.imag - w_pad * rho_mp_pad.imag
            c_sc = -w_full * rho_pp.imag + w_pad * rho_mp_pad.imag
    # keep the per-slab phase arrays around ~100 MB
    slab = max(8, int(4e6 // max(1, N * (2 * kernel.cutoff + 1))))
    for start in range(0, B, slab):
        sl = slice(start, start + min(slab, B - start))
        parts, sq = _structure_factors(points[sl], kernel)
        if d == 1:
            quad = (sq * wgt).sum(axis=-1)
            if want_cross:
                csum, ssum = parts
                cross[sl] = csum @ (wgt * rho.real) - ssum @ (wgt * rho.imag)
        else:
            cc, ss, cs, sc = parts
            # |S_pp|^2 + |S_mp|^2 = 2 (cc^2 + ss^2 + cs^2 + sc^2), and the
            # two quadrants coincide on the axes (ss, sc vanish at k1 = 0;
            # ss, cs at k2 = 0), so one fused pass plus edge corrections
            w2 = 0.5 * (w_full + w_pad)
            quad = 2.0 * (np.einsum("bij,bij,ij->b", cc, cc, w2)
                          + np.einsum("bij,bij,ij->b", ss, ss, w2)
                          + np.einsum("bij,bij,ij->b", cs, cs, w2)
                          + np.einsum("bij,bij,ij->b", sc, sc, w2))
            if want_cross:
                cross[sl] = np.einsum("bij,ij->b", cc, c_cc) \
                    + np.einsum("bij,ij->b", ss, c_ss) \
                    + np.einsum("bij,ij->b", cs, c_cs) \
                    + np.einsum("bij,ij->b", sc, c_sc)
        pair[sl] = (quad - N * ctot) / (2.0 * N)
    return pair, cross


def pair_sum_direct(kernel: Kernel, eps: float, points: np.ndarray) -> float:
    """Reference O(N^2) double loop over the truncated series (torus)."""
    pts = np.atleast_2d(points)
    n = pts.shape[0]
    z = kernel.domain.separation(pts[:, None, :], pts[None, :, :])
    vals = kernel.displacement(z.reshape(-1, pts.shape[1]), eps).reshape(n, n)
    np.fill_diagonal(vals, 0.0)
    return float(vals.sum()) / (2.0 * n)


def _pair_sum_free(kernel: Kernel, eps: float, points: np.ndarray) -> float:
    pts = np.atleast_2d(points)
    n = pts.shape[0]
    diff = pts[:, None, :] - pts[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    iu = np.triu_indices(n, k=1)
    rr = r[iu]
    if eps == 0.0:
        if np.any(rr == 0.0):
            return np.inf  # callers discard or raise per their coincident policy
        return float(np.sum(-np.log(rr))) / n
    from .kernel import _free_reg_profile
    vals = [_free_reg_profile(float(x), eps, kernel.domain.dim) for x in rr]
    return float(np.sum(vals)) / n


def _cross_terms(kernel, eps, measure, points):
    """(cross, mean) pieces for a batch (B, N, d); zero for uniform rho."""
    B, N, d = points.shape
    if measure.kind == "uniform" or kernel.family == "zero":
        return np.zeros(B), 0.0
    mean_val = mean_interaction(kernel, eps, measure)
    if kernel.family == "torus-log" and d <= 2:
        _, cross = _torus_energy_terms(kernel, eps, points, measure)
    else:
        cross = np.array([
            convolve_at(kernel, eps, measure, points[b]).sum()
            for b in range(B)])
    return cross, mean_val


def batch_totals(kernel: Kernel, eps: float, measure: BaseMeasure,
                 points: np.ndarray, literal_centering: bool = False) -> np.ndarray:
    """Diagonal-removed energy for each configuration in (B, N, d)."""
    B, N, d = points.shape
    nonuniform = measure.kind != "uniform" and kernel.family != "zero"
    if kernel.family == "torus-log" and d <= 2 and N > 1:
        pair, cross = _torus_energy_terms(kernel, eps, points,
                                          measure if nonuniform else None)
        mean_val = mean_interaction(kernel, eps, measure) if nonuniform else 0.0
    else:
        pair = batch_pair_sums(kernel, eps, points)
        cross, mean_val = _cross_terms(kernel, eps, measure, points)
    if literal_centering:
        return pair - cross / N + mean_val / (2.0 * N)
    return pair - cross + (N / 2.0) * mean_val


def interaction_energy(kernel: Kernel, eps: float, measure: BaseMeasure,
                       config: Configuration,
                       literal_centering: bool = False) -> EnergyBreakdown:
    """Three-term energy breakdown of the fluctuation field of `config`."""
    pts = config.points[None, ...]
    n = config.n
    if eps == 0.0 and kernel.family == "free-log":
        r = np.linalg.norm(
            config.points[:, None, :] - config.points[None, :, :], axis=-1)
        np.fill_diagonal(r, 1.0)
        if np.any(r == 0.0):
            raise DomainEvaluationError(
                "coincident points with the bare free-space kernel")
    pair = float(batch_pair_sums(kernel, eps, pts)[0])
    cross_arr, mean_val = _cross_terms(kernel, eps, measure, pts)
    if literal_centering:
        cross = float(cross_arr[0]) / n
        mean = mean_val / (2.0 * n)
    else:
        cross = float(cross_arr[0])
        mean = (n / 2.0) * mean_val
    return EnergyBreakdown(pair_term=pair, cross_term=cross, mean_term=mean,
                           total=pair - cross + mean, eps=eps)


def mean_energy(kernel: Kernel, eps: float, measure: BaseMeasure,
                n: int = 1) -> float:
    """Expected energy under n i.i.d. draws from the base measure.

    Expanding the three terms and taking expectations gives the coefficient
    (n-1)/2 - n + n/2 = -1/2 regardless of n.
    """
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    return -0.5 * mean_interaction(kernel, eps, measure)


# -- adversarial lower-bound probe -----------------------------------------


def _interp_periodic(field: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a periodic grid field at pts in [0,1)^d."""
    cells = field.shape[0]
    x = np.mod(pts, 1.0) * cells
    i0 = np.floor(x).astype(int) % cells
    frac = x - np.floor(x)
    if pts.shape[1] == 1:
        i1 = (i0[:, 0] + 1) % cells
        return field[i0[:, 0]] * (1 - frac[:, 0]) + field[i1] * frac[:, 0]
    i1 = (i0 + 1) % cells
    fx, fy = frac[:, 0], frac[:, 1]
    f00 = field[i0[:, 0], i0[:, 1]]
    f10 = field[i1[:, 0], i0[:, 1]]
    f01 = field[i0[:, 0], i1[:, 1]]
    f11 = field[i1[:, 0], i1[:, 1]]
    return (f00 * (1 - fx) * (1 - fy) + f10 * fx * (1 - fy)
            + f01 * (1 - fx) * fy + f11 * fx * fy)


def _initial_config(style: str, n: int, dim: int, rng) -> np.ndarray:
    if style == "lattice":
        if dim == 1:
            return (np.arange(n, dtype=float) / n)[:, None]
        side = int(np.ceil(n ** (1.0 / dim)))
        axes = [np.arange(side, dtype=float) / side] * dim
        grid = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")],
                        axis=1)
        return grid[:n]
    if style == "clustered":
        center = rng.random(dim)
        return np.mod(center + (rng.random((n, dim)) - 0.5) * (2.0 / n), 1.0)
    return rng.random((n, dim))


def probe_lower_bound(kernel: Kernel, measure: BaseMeasure, n_values,
                      search_budget: int, stream, sweeps: int = 200,
                      eps: float = 0.0):
    """Adversarial minimization of the energy by simulated annealing.

    Anneals single-particle moves (geometric cooling, proposal scale
    proportional to N^{-1/d}) from lattice, clustered and random starts;
    the best configuration found is re-evaluated exactly through the
    spectral pair sum.  Returns rows (N, min energy found, min / (-ln N)).
    """
    if search_budget < 1:
        raise ConfigurationError("search budget must be positive")
    if kernel.family != "torus-log":
        raise ConfigurationError("lower-bound probe runs on the torus")
    if any(n < 2 for n in n_values):
        raise ConfigurationError("probe needs at least two particles")
    dim = kernel.domain.dim
    cells = max(512 if dim <= 2 else 64, 2 * kernel.cutoff + 2)
    pair_field = displacement_field(kernel, cells, eps)
    if measure.kind == "uniform":
        cross_field = None
        mean_val = 0.0
    else:
        from .measure import convolve
        cross_field = convolve(kernel, eps, measure)
        mean_val = mean_interaction(kernel, eps, measure)
    styles = ["lattice", "clustered", "random"]
    rows = []
    for n_idx, n in enumerate(n_values):
        best_total = np.inf
        best_pts = None
        scale = 0.5 * n ** (-1.0 / dim)
        temps = np.geomspace(1.0, 1e-4, sweeps)
        for restart in range(search_budget):
            rng = generator(substream(stream, n_idx, restart))
            pts = _initial_config(styles[restart % len(styles)], n, dim, rng)
            energy = _approx_total(pair_field, cross_field, mean_val, pts, n)
            for t in temps:
                order = np.arange(n)
                for i in order:
                    old = pts[i].copy()
                    new = np.mod(old + rng.normal(scale=scale, size=dim), 1.0)
                    delta = _move_delta(pair_field, cross_field, pts, i, old,
                                        new, n)
                    if delta < 0 or rng.random() < np.exp(-delta / t):
                        pts[i] = new
                        energy += delta
                        if energy < best_total:
                            best_total = energy
                            best_pts = pts.copy()
            if best_pts is None:
                best_pts = pts.copy()
        exact = float(batch_pair_sums(kernel, eps, best_pts[None])[0])
        if cross_field is not None:
            exact -= convolve_at(kernel, eps, measure, best_pts).sum()
            exact += (n / 2.0) * mean_val
        rows.append((n, exact, exact / (-np.log(n))))
    return rows


def _approx_total(pair_field, cross_field, mean_val, pts, n):
    z = pts[:, None, :] - pts[None, :, :]
    vals = _interp_periodic(pair_field, z.reshape(-1, pts.shape[1]))
    vals = vals.reshape(n, n)
    np.fill_diagonal(vals, 0.0)
    total = vals.sum() / (2.0 * n)
    if cross_field is not None:
        total -= _interp_periodic(cross_field, pts).sum()
        total += (n / 2.0) * mean_val
    return total


def _move_delta(pair_field, cross_field, pts, i, old, new, n):
    others = np.delete(pts, i, axis=0)
    d_new = _interp_periodic(pair_field, new[None, :] - others).sum()
    d_old = _interp_periodic(pair_field, old[None, :] - others).sum()
    delta = (d_new - d_old) / n
    if cross_field is not None:
        delta -= (_interp_periodic(cross_field, new[None, :])
                  - _interp_periodic(cross_field, old[None, :]))[0]
    return delta
