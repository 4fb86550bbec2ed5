"""Poincare-disk Moebius calculus.

Disk isometries are elements of SU(1,1), stored as the complex pair (a, b)
of the matrix [[a, b], [conj b, conj a]] with |a|^2 - |b|^2 = 1, acting by
z -> (a z + b) / (conj(b) z + conj(a)).  All functions broadcast over numpy
arrays of points and over stacked (a, b) arrays.
"""
from __future__ import annotations

import numpy as np


def apply(ab, z):
    """Apply the disk isometry (a, b) to point(s) z."""
    a, b = ab
    return (a * z + b) / (np.conj(b) * z + np.conj(a))


def derivative(ab, z):
    """Complex derivative of the map at z (unit determinant assumed)."""
    a, b = ab
    return 1.0 / (np.conj(b) * z + np.conj(a)) ** 2


def apply_tangent(ab, z, angle):
    """Push a unit tangent (z, angle) forward; returns (z', angle')."""
    a, b = ab
    denom = np.conj(b) * z + np.conj(a)
    return (a * z + b) / denom, np.mod(angle - 2.0 * np.angle(denom), 2.0 * np.pi)


def compose(ab1, ab2):
    """Composition (ab1 after ab2) in SU(1,1)."""
    a1, b1 = ab1
    a2, b2 = ab2
    return a1 * a2 + b1 * np.conj(b2), a1 * b2 + b1 * np.conj(a2)


def inverse(ab):
    a, b = ab
    return np.conj(a), -b


def distance(z, w):
    """Hyperbolic distance in the disk (curvature -1, metric 2|dz|/(1-|z|^2))."""
    num = 2.0 * np.abs(z - w) ** 2
    den = (1.0 - np.abs(z) ** 2) * (1.0 - np.abs(w) ** 2)
    return np.arccosh(1.0 + num / den)


def to_origin(z0):
    """Isometry sending z0 to 0 with derivative argument 0 at z0."""
    # w -> (w - z0) / (1 - conj(z0) w), normalized into SU(1,1)
    s = 1.0 / np.sqrt(1.0 - np.abs(z0) ** 2)
    return s + 0j, -z0 * s


def translation(length):
    """Hyperbolic translation along the real diameter by `length` (toward +1)."""
    return np.cosh(length / 2.0) + 0j, np.sinh(length / 2.0) + 0j


def rotation(theta):
    """Rotation about the origin by theta."""
    return np.exp(1j * theta / 2.0), 0j


def from_sl2r(m):
    """SU(1,1) pair of an SL(2,R) matrix acting on the upper half-plane.

    Conjugation by the Cayley transform; m may be (..., 2, 2).
    """
    m = np.asarray(m, float)
    a = (m[..., 0, 0] + m[..., 1, 1]) / 2.0 + 1j * (m[..., 0, 1] - m[..., 1, 0]) / 2.0
    b = (m[..., 0, 0] - m[..., 1, 1]) / 2.0 - 1j * (m[..., 0, 1] + m[..., 1, 0]) / 2.0
    return a, b


def to_sl2r(ab):
    """Inverse of `from_sl2r`."""
    a, b = ab
    out = np.empty(np.shape(a) + (2, 2))
    out[..., 0, 0] = a.real + b.real
    out[..., 1, 1] = a.real - b.real
    out[..., 0, 1] = a.imag - b.imag
    out[..., 1, 0] = -a.imag - b.imag
    return out


def trace(ab):
    a, _ = ab
    return 2.0 * np.real(a)


def ideal_endpoint(z, angle):
    """Forward ideal boundary point of the geodesic through z with direction angle."""
    e = np.exp(1j * np.asarray(angle))
    return (e + z) / (1.0 + np.conj(z) * e)


def direction_to(z, target):
    """Initial direction at z of the geodesic toward `target` (in the closed disk)."""
    # move z to the origin; the geodesic to the image of target leaves radially
    w = (target - z) / (1.0 - np.conj(z) * target)
    return np.mod(np.angle(w), 2.0 * np.pi)


def geodesic_point(z, angle, s):
    """Point at arclength s along the geodesic from (z, angle); broadcasts over s."""
    g = to_origin(z)
    back = inverse(g)
    # from the origin the geodesic is radial
    p = np.tanh(np.asarray(s) / 2.0) * np.exp(1j * np.asarray(angle))
    return apply(back, p)


def perpendicular_offset(z, angle, delta):
    """Point at hyperbolic distance delta from z, perpendicular (left) to angle."""
    return geodesic_point(z, angle + np.pi / 2.0, delta)


def axis_of(ab):
    """Axis data of a hyperbolic isometry: (repelling, attracting) ideal points.

    Raises ValueError when |trace| <= 2.
    """
    a, b = ab
    tr = 2.0 * np.real(a)
    if abs(tr) <= 2.0:
        raise ValueError(f"not hyperbolic: trace {tr}")
    # fixed points of (a z + b)/(conj b z + conj a):  conj(b) z^2 - 2i Im(a) z - b = 0
    if abs(b) == 0:
        raise ValueError("elliptic/identity element has no axis")
    A = np.conj(b)
    B = -2j * a.imag
    disc = np.sqrt(B * B - 4.0 * A * (-b))
    z1 = (-B + disc) / (2.0 * A)
    z2 = (-B - disc) / (2.0 * A)
    # attracting endpoint has |map derivative| < 1
    if np.abs(derivative((a, b), z1)) < 1.0:
        return z2, z1
    return z1, z2


def axis_base_tangent(ab):
    """Unit tangent on the axis closest to the origin, pointing toward the attractor."""
    rep, att = axis_of(ab)
    mid = (rep + att) / 2.0
    if abs(mid) < 1e-14:
        z0 = 0j
    else:
        # euclidean circle through rep/att orthogonal to the unit circle
        c0 = mid / (mid * np.conj(att)).real
        r0 = np.sqrt(abs(c0) ** 2 - 1.0)
        z0 = c0 * (1.0 - r0 / abs(c0))  # point of the arc closest to the origin
    return z0, direction_to(z0, att)


def translation_length(ab):
    tr = abs(trace(ab))
    if tr <= 2.0:
        raise ValueError(f"not hyperbolic: |trace| = {tr}")
    return 2.0 * np.arccosh(tr / 2.0)
