"""Potentials on the unit tangent bundle.

Two families matter in practice: pointwise-evaluable functions (constants,
footpoint bumps, user callables) and the geometric potential, whose value
needs the unstable Riccati solution along the orbit.  Pointwise potentials
vectorize over sample arrays; the geometric potential is evaluated along
whole orbit segments with a single two-seed sweep.
"""
from __future__ import annotations

import math

import numpy as np

from . import riccati
from .surfaces import UnitTangent, flow_arrays, shift_synthetic


class Potential:
    name = "potential"
    is_geometric = False

    def point(self, model, v):
        raise NotImplementedError

    def batch(self, model, positions, directions):
        """Vectorized values at scattered tangents."""
        raise NotImplementedError

    def __call__(self, model, v):
        return self.point(model, v)


class ConstantPotential(Potential):
    def __init__(self, value):
        self.value = float(value)
        self.name = f"const({value})"

    def point(self, model, v):
        return self.value

    def batch(self, model, positions, directions):
        return np.full(np.shape(positions), self.value)


ZERO = ConstantPotential(0.0)


class CallablePotential(Potential):
    """Wraps f(position, direction); f must broadcast over arrays."""

    def __init__(self, fn, name="callable"):
        self.fn = fn
        self.name = name

    def point(self, model, v):
        return float(self.fn(v.position, v.direction))

    def batch(self, model, positions, directions):
        return np.asarray(self.fn(positions, directions), float)


class FootpointBump(Potential):
    """Smooth bump of the footpoint: height * psi(Q/Q_r), Q = cosh d_hyp(z, c) - 1.

    Independent of direction, so weighted-orbit integrals are insensitive to
    orientation conventions.  Smooth, hence Hoelder.
    """

    def __init__(self, center, radius, height):
        self.center = complex(center)
        self.radius = float(radius)
        self.height = float(height)
        self.name = f"bump({self.center:.3g},{self.radius:.3g},{self.height:.3g})"

    def batch(self, model, positions, directions):
        z = np.asarray(positions, complex)
        kap = 2.0 / (1.0 - abs(self.center) ** 2)
        D = np.abs(z - self.center) ** 2
        P = 1.0 - np.abs(z) ** 2
        s = kap * D / P / (math.cosh(self.radius) - 1.0)
        inside = s < 1.0
        s = np.where(inside, s, 0.5)
        val = self.height * np.exp(1.0 - 1.0 / (1.0 - s))
        return np.where(inside, val, 0.0)

    def point(self, model, v):
        return float(self.batch(model, np.asarray(v.position), None))


class GeometricPotential(Potential):
    """q * phi_u with phi_u = -k_u (1 - K) / (1 + k_u^2)."""
    is_geometric = True

    def __init__(self, scale=1.0):
        self.scale = float(scale)
        self.name = "phi_u" if self.scale == 1.0 else f"{self.scale}*phi_u"

    def point(self, model, v):
        return self.scale * riccati.geometric_potential(model, v)


def scaled_geometric(q):
    return GeometricPotential(q)


def segment_values(model, potential, vs, t, h, T_conv=None):
    """Potential values along [0, t] at step h for each tangent in vs, batched.

    Returns (grid, values) with values of shape (n_grid, len(vs)).  Geometric
    potentials get one bracket sweep per batch; pointwise potentials get one
    batched flow with vectorized evaluation.
    """
    if T_conv is None:
        T_conv = riccati.default_t_conv(model)
    n = int(round(t / h))
    grid = h * np.arange(n + 1)
    if isinstance(potential, ConstantPotential):
        return grid, np.full((n + 1, len(vs)), potential.value)
    if potential.is_geometric:
        s_grid, lo, hi = riccati.unstable_bracket_profiles(model, vs, 0.0, n * h, T_conv, h)
        ku = np.maximum(0.5 * (lo + hi), 0.0)
        _, K = riccati.curvature_along(model, vs, 0.0, n * h, h)
        return grid, potential.scale * riccati.geometric_potential_from(ku, K)
    if model.kind == "synthetic":
        times = np.array([v.position for v in vs])
        signs = np.array([math.cos(v.direction) for v in vs])
        pts = times[None, :] + np.outer(grid, signs)
        return grid, potential.batch(model, pts, None)
    z0 = np.array([v.position for v in vs], complex)
    a0 = np.array([v.direction for v in vs], float)
    z0, a0 = model.wrap_points(z0, a0)
    _, _, (rz, ra) = flow_arrays(model, z0, a0, n * h, h, record_every=1)
    return grid, potential.batch(model, rz, ra)


def segment_integrals(model, potential, vs, t, h=0.01, T_conv=None):
    """Phi(v, t) for each v in vs: trapezoid quadrature of `segment_values`."""
    if t == 0:
        return np.zeros(len(vs))
    grid, vals = segment_values(model, potential, vs, t, h, T_conv)
    return np.trapezoid(vals, dx=h, axis=0)


def as_potential(obj):
    """Coerce user input (Potential | number | callable) to a Potential."""
    if isinstance(obj, Potential):
        return obj
    if isinstance(obj, (int, float)):
        return ConstantPotential(obj)
    if callable(obj):
        return CallablePotential(obj)
    raise TypeError(f"cannot interpret {obj!r} as a potential")
