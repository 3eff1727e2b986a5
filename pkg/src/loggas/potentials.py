"""Confining potentials V for the drift and the Gibbs Hamiltonian."""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError


class ZeroPotential:
    def value(self, points) -> np.ndarray:
        return np.zeros(np.atleast_2d(points).shape[0])

    def gradient(self, points) -> np.ndarray:
        return np.zeros_like(np.atleast_2d(np.asarray(points, dtype=float)))

    @property
    def is_zero(self) -> bool:
        return True


class CosinePotential:
    """V(x) = a cos(2 pi m x_1) on the torus."""

    def __init__(self, amplitude: float, mode: int = 1):
        self.amplitude = float(amplitude)
        self.mode = int(mode)

    def value(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))[:, 0]
        return self.amplitude * np.cos(2.0 * np.pi * self.mode * x)

    def gradient(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        g = np.zeros_like(pts)
        g[:, 0] = -2.0 * np.pi * self.mode * self.amplitude \
            * np.sin(2.0 * np.pi * self.mode * pts[:, 0])
        return g

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0


class QuadraticPotential:
    """V(x) = stiffness |x - center|^2 / 2 (free space)."""

    def __init__(self, stiffness: float = 1.0, center=0.0):
        self.stiffness = float(stiffness)
        self.center = np.asarray(center, dtype=float)

    def value(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return 0.5 * self.stiffness * np.sum((pts - self.center) ** 2, axis=1)

    def gradient(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.stiffness * (pts - self.center)

    @property
    def is_zero(self) -> bool:
        return self.stiffness == 0.0


def potential_from_config(spec) -> object:
    """Potential vocabulary used in experiment configs."""
    if spec is None or spec == "zero":
        return ZeroPotential()
    kind = spec.get("kind")
    if kind == "zero":
        return ZeroPotential()
    if kind == "cosine":
        return CosinePotential(spec.get("amplitude", 0.5), spec.get("mode", 1))
    if kind == "quadratic":
        return QuadraticPotential(spec.get("stiffness", 1.0),
                                  spec.get("center", 0.0))
    raise ConfigurationError(f"unknown potential kind {kind!r}")
