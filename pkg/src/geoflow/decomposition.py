"""Good/bad orbit-segment decomposition driven by the window index lambda_T.

A segment (v, t) is *bad* at level (T, eta) when the integral of
lambda_T(f_theta v) over [0, t] stays below t*eta; it is *good* when both the
forward prefixes and the time-reversed prefixes accumulate at least eta per
unit time.  The decomposition takes the largest bad prefix, then the largest
bad suffix of the rest; the middle is good by construction, and on the shared
quadrature grid that implication is exact, so the membership postconditions
are asserted rather than hoped for.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import riccati
from .errors import UnsupportedOperation
from .surfaces import flow_arrays, surface_distance

DEFAULT_GRID_H = 1e-2


@dataclass
class DecompositionParams:
    T: float
    eta: float
    h: float = DEFAULT_GRID_H
    T_conv: float | None = None
    tol: float = 0.05

    def __post_init__(self):
        if self.T <= 0 or self.eta <= 0 or self.h <= 0:
            raise ValueError("T, eta, h must be positive")


@dataclass
class SegmentSplit:
    p: float
    g: float
    s: float


def _t_conv(model, params):
    return params.T_conv if params.T_conv is not None else riccati.default_t_conv(model)


def lambda_T_grids(model, vs, t, params):
    """lambda_T(f_theta v) on theta = 0, h, ..., t for each v, on one shared grid.

    Returns (theta_grid, values) with values shaped (n_theta, len(vs)).  The
    certified lower bracket of lambda enters the quadrature; NotConverged
    propagates when any bracket spread exceeds params.tol.
    """
    h = params.h
    T = round(params.T / h) * h
    n_t = int(round(t / h))
    s_grid, lam_lo, _, spread = riccati.lambda_profiles(
        model, vs, -T, n_t * h + T, _t_conv(model, params), h)
    worst = float(spread.max()) if spread.size else 0.0
    if worst > params.tol:
        raise riccati.NotConverged(worst)
    lam_T = riccati.moving_window_integral(lam_lo, h, T)
    theta = h * np.arange(n_t + 1)
    return theta, lam_T


def _cumtrapz(values, h):
    inner = 0.5 * (values[1:] + values[:-1]) * h
    return np.concatenate([np.zeros((1,) + values.shape[1:]), np.cumsum(inner, axis=0)])


def reg_T_member(model, v, params):
    """Is lambda_T(v) >= eta?  (Membership in the uniformly regular set.)"""
    val = riccati.lambda_T(model, v, params.T, _t_conv(model, params), params.tol, params.h)
    return bool(val >= params.eta)


def is_good(model, v, t, params, _grids=None):
    """Both defining inequalities of the good collection on the grid.

    (v, 0) is vacuously good.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    theta, lam_T = _grids if _grids is not None else lambda_T_grids(model, [v], t, params)
    col = _cumtrapz(lam_T[:, :1] if lam_T.ndim > 1 else lam_T[:, None], params.h)[:, 0]
    tau = theta
    fwd_ok = bool((col >= tau * params.eta - 1e-12).all())
    rev = col[-1] - col[::-1]
    rev_ok = bool((rev >= tau * params.eta - 1e-12).all())
    return fwd_ok and rev_ok


def is_bad(model, v, t, params, _grids=None):
    """Single integral inequality; (v, 0) is not bad (strict inequality fails)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return False
    theta, lam_T = _grids if _grids is not None else lambda_T_grids(model, [v], t, params)
    col = _cumtrapz(lam_T[:, :1] if lam_T.ndim > 1 else lam_T[:, None], params.h)[:, 0]
    return bool(col[-1] < t * params.eta)


def _split_from_column(col, h, eta):
    """(p, g, s) grid split from the cumulative lambda_T column over [0, t]."""
    n = len(col) - 1
    tau = h * np.arange(n + 1)
    bad_prefix = col < tau * eta  # strict; index 0 gives 0 < 0 = False
    i_p = int(np.nonzero(bad_prefix)[0].max()) if bad_prefix.any() else 0
    # suffix of length s = j*h starting at t - s: integral col[n] - col[n - j]
    j_max = n - i_p
    j = np.arange(j_max + 1)
    bad_suffix = (col[-1] - col[n - j]) < (h * j) * eta
    i_s = int(np.nonzero(bad_suffix)[0].max()) if bad_suffix.any() else 0
    return i_p, i_s


def decompose(model, v, t, params, _grids=None):
    """Largest bad prefix, then largest bad suffix, middle good (asserted).

    All searches run on the grid of step params.h; p + g + s = t exactly on
    the grid.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    theta, lam_T = _grids if _grids is not None else lambda_T_grids(model, [v], t, params)
    col = _cumtrapz(lam_T if lam_T.ndim > 1 else lam_T[:, None], params.h)[:, 0]
    h = params.h
    i_p, i_s = _split_from_column(col, h, params.eta)
    n = len(col) - 1
    p, s = i_p * h, i_s * h
    g = (n - i_p - i_s) * h
    # membership postconditions, exact on the shared grid
    tau_mid = h * np.arange(n - i_p - i_s + 1)
    mid = col[i_p: n - i_s + 1] - col[i_p]
    assert (mid >= tau_mid * params.eta - 1e-9).all(), "middle prefix condition failed"
    mid_rev = mid[-1] - mid[::-1]
    assert (mid_rev >= tau_mid * params.eta - 1e-9).all(), "middle suffix condition failed"
    return SegmentSplit(p, g, s)


def separation_profile(model, v, w, t, h=0.125):
    """[(tau, d_K(f_tau v, f_tau w))] on tau = 0, h, ..., t (h quantized to 1/32).

    One flow integration per orbit; the Knieper max runs over a 33-point
    window on the shared recording grid.
    """
    if model.kind == "synthetic":
        raise UnsupportedOperation("separation profiles need a disk model")
    h32 = max(1, round(h * 32)) / 32.0
    stride = int(round(h32 * 32))
    n_rec = int(round((t + 1.0) * 32))
    z0 = np.array([v.position, w.position], complex)
    a0 = np.array([v.direction, w.direction], float)
    z0, a0 = model.wrap_points(z0, a0)
    _, _, (rz, _) = flow_arrays(model, z0, a0, n_rec / 32.0, 1.0 / 1024.0, record_every=32)
    dists = np.array([surface_distance(model, rz[i, 0], rz[i, 1]) for i in range(n_rec + 1)])
    out = []
    n_tau = int(round(t / h32))
    for i in range(n_tau + 1):
        j = i * stride
        out.append((j / 32.0, float(dists[j: j + 33].max())))
    return out
