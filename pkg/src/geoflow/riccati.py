"""Jacobi fields, the Riccati equation, and hyperbolicity indices.

Along a unit-speed geodesic the orthogonal Jacobi equation is J'' + K J = 0
and the associated Riccati equation U' + U^2 + K = 0 is solved by U = J'/J.
The unstable horocycle curvature k_u(v) is the value at 0 of the Riccati
solution that stays bounded in backward time; it is bracketed here by running
the equation forward from two seeds 0 <= U_lo and U_hi = LAMBDA_CAP at time
-T_conv, which enclose the true solution by the comparison principle.

lambda(v) = min(k_u, k_s) and lambda_T integrates it over [-T, T].  Window
pipelines below share one curvature sweep per orbit, so decomposition-scale
workloads cost one flow integration, not one per sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotConverged
from .surfaces import UnitTangent, flow_arrays, shift_synthetic

LAMBDA_CAP = 10.0          # upper Riccati seed; valid while sup|K| <= 100
BLOWUP_THRESHOLD = 1e6
DEFAULT_T_CONV = 30.0
DEFAULT_TOL = 1e-6
DEFAULT_H = 1e-3
SWEEP_H = 0.01             # Riccati/quadrature step for window pipelines


def default_t_conv(model):
    """Convergence horizon suited to the model: flat stretches need long burn-in."""
    return 600.0 if model.kind == "synthetic" else DEFAULT_T_CONV


@dataclass
class RiccatiState:
    U: float
    valid: bool
    blowup_time: float | None = None


@dataclass
class JacobiState:
    J: float
    Jp: float


@dataclass
class HyperbolicityIndex:
    lam: float
    lam_T: float
    T: float


# -- curvature along orbits ---------------------------------------------------

def curvature_along(model, vs, s0, s1, h):
    """K(f_s v) for each v at s = s0, s0+h, ..., s1 (inclusive grid).

    Batched: `vs` is a list of UnitTangent.  One backward and one forward flow
    integration per batch; constant-curvature models skip the flow entirely.
    """
    n = int(round((s1 - s0) / h))
    grid = s0 + h * np.arange(n + 1)
    m = len(vs)
    if model.kind == "synthetic":
        times = np.array([v.position for v in vs])
        signs = np.array([math.cos(v.direction) for v in vs])
        pts = times[None, :] + np.outer(grid, signs)
        return grid, np.asarray(model.curvature_at(pts), float)
    if model.constant_curvature is not None:
        return grid, np.full((n + 1, m), model.constant_curvature)
    z0 = np.array([v.position for v in vs], complex)
    a0 = np.array([v.direction for v in vs], float)
    z0, a0 = model.wrap_points(z0, a0)
    out = np.empty((n + 1, m))
    i_zero = int(round(-s0 / h))
    if s0 < 0:
        # integrate backward from s=0 to s=s0, recording every step
        _, _, (rz, _) = flow_arrays(model, z0, a0, s0, h, record_every=1)
        k_back = np.asarray(model.curvature_at(rz), float)  # rows: 0, -h, ..., s0
        out[: i_zero + 1] = k_back[i_zero::-1]
    if s1 > 0:
        _, _, (rz, _) = flow_arrays(model, z0, a0, s1, h, record_every=1)
        k_fwd = np.asarray(model.curvature_at(rz), float)
        out[i_zero:] = k_fwd[: n + 1 - i_zero]
    return grid, out


def _rk4_riccati_sweep(K_half, h, U0, record=True):
    """RK4 on U' = -U^2 - K over a grid; K_half holds K at half-step resolution.

    K_half has shape (2*n + 1, ...) covering nodes and midpoints; U0 broadcasts
    against K_half[0].  Returns U at the n+1 nodes (or just the final U).
    """
    nsteps = (K_half.shape[0] - 1) // 2
    U = np.array(U0, float)
    rec = [U.copy()] if record else None
    for i in range(nsteps):
        K0 = K_half[2 * i]
        Km = K_half[2 * i + 1]
        K1 = K_half[2 * i + 2]
        k1 = -U * U - K0
        u2 = U + 0.5 * h * k1
        k2 = -u2 * u2 - Km
        u3 = U + 0.5 * h * k2
        k3 = -u3 * u3 - Km
        u4 = U + h * k3
        k4 = -u4 * u4 - K1
        U = U + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record:
            rec.append(U.copy())
    return np.array(rec) if record else U


def unstable_bracket_profiles(model, vs, s0, s1, T_conv=DEFAULT_T_CONV, h=SWEEP_H):
    """Bracket [U_lo, U_hi] of k_u(f_s v) on the grid s in [s0, s1], batched.

    Seeds 0 and LAMBDA_CAP start at s0 - T_conv; by the Riccati comparison
    principle the true bounded-in-the-past solution lies between the two
    sweeps at every grid time.
    """
    grid, K = curvature_along(model, vs, s0 - T_conv, s1, h / 2.0)
    n_grid = int(round((s1 - s0) / h))
    U = np.stack([np.zeros(K.shape[1]), np.full(K.shape[1], LAMBDA_CAP)])
    rec = _rk4_riccati_sweep(K[:, None, :], h, U[None, :, :] * np.ones((1, 2, K.shape[1])), record=True)
    # rec shape: (n_total+1, 1, 2, m) -> squeeze
    rec = rec[:, 0]
    i0 = int(round(T_conv / h))
    lo = rec[i0: i0 + n_grid + 1, 0]
    hi = rec[i0: i0 + n_grid + 1, 1]
    s_grid = s0 + h * np.arange(n_grid + 1)
    return s_grid, lo, hi


def lambda_profiles(model, vs, s0, s1, T_conv=DEFAULT_T_CONV, h=SWEEP_H):
    """(s_grid, lam_lo, lam_mid, spread) for lambda = min(k_u, k_s) on a grid, batched.

    k_s comes from the time-reversed sweep over the same curvature data.  The
    lower bracket is exact on flat stretches (seed 0 stays 0), which is what
    singular detection needs; the midpoint matches the point API.
    """
    s_grid, ku_lo, ku_hi = unstable_bracket_profiles(model, vs, s0, s1, T_conv, h)
    rev = [v.reversed() for v in vs]
    # k_s(f_s v) = k_u(-f_s v) = k_u(f_{-s} (-v)): sweep the reversed orbit over [-s1, -s0]
    r_grid, ks_lo_r, ks_hi_r = unstable_bracket_profiles(model, rev, -s1, -s0, T_conv, h)
    ks_lo = ks_lo_r[::-1]
    ks_hi = ks_hi_r[::-1]
    lam_lo = np.minimum(ku_lo, ks_lo)
    lam_hi = np.minimum(ku_hi, ks_hi)
    lam_mid = 0.5 * (lam_lo + lam_hi)
    spread = np.maximum(ku_hi - ku_lo, ks_hi - ks_lo)
    return s_grid, lam_lo, lam_mid, spread


def moving_window_integral(values, h, T):
    """psi_T(t) = integral of psi over [t-T, t+T], trapezoid on a shared grid.

    `values` samples psi on a uniform grid with step h; returns the window
    integral on the interior grid points where the full window fits.  T must
    be an integer multiple of h.
    """
    m = int(round(T / h))
    if abs(m * h - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a multiple of the grid step")
    v = np.asarray(values, float)
    if len(v) < 2 * m + 1:
        raise ValueError("grid too short for the window")
    cum = np.concatenate([np.zeros((1,) + v.shape[1:]), np.cumsum(v, axis=0)], axis=0) * h
    n_out = len(v) - 2 * m
    full = cum[2 * m + 1:] - cum[:n_out]
    # trapezoid endpoint correction: half weight on the two window boundaries
    corr = 0.5 * h * (v[:n_out] + v[2 * m:])
    return full - corr


# -- point operations ----------------------------------------------------------

def jacobi_integrate(model, v, t, J0, Jp0, h=DEFAULT_H):
    """Integrate J'' = -K(f_s v) J from 0 to t (t may be negative)."""
    if (J0, Jp0) == (0.0, 0.0):
        raise ValueError("trivial Jacobi initial data")
    s0, s1 = (0.0, t) if t >= 0 else (t, 0.0)
    nsteps = int(round(abs(t) / h))
    hh = abs(t) / nsteps if nsteps else h
    grid, K = curvature_along(model, [v], s0, s1, hh / 2.0)
    K = K[:, 0] if t >= 0 else K[::-1, 0]
    sgn = 1.0 if t >= 0 else -1.0
    J, Jp = float(J0), float(Jp0)
    for i in range(nsteps):
        K0, Km, K1 = K[2 * i], K[2 * i + 1], K[2 * i + 2]
        k1 = (Jp, -K0 * J)
        k2 = (Jp + 0.5 * sgn * hh * k1[1], -Km * (J + 0.5 * sgn * hh * k1[0]))
        k3 = (Jp + 0.5 * sgn * hh * k2[1], -Km * (J + 0.5 * sgn * hh * k2[0]))
        k4 = (Jp + sgn * hh * k3[1], -K1 * (J + sgn * hh * k3[0]))
        J = J + (sgn * hh / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        Jp = Jp + (sgn * hh / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return JacobiState(J, Jp)


def _riccati_march(K, hh, U0):
    """March U' = -U^2 - K over half-step samples K; stops at threshold crossing.

    Returns (U_values array up to and including the first bad step, crossed flag).
    """
    nsteps = (len(K) - 1) // 2
    U = float(U0)
    out = [U]
    for i in range(nsteps):
        K0, Km, K1 = K[2 * i], K[2 * i + 1], K[2 * i + 2]
        k1 = -U * U - K0
        u2 = U + 0.5 * hh * k1
        k2 = -u2 * u2 - Km
        u3 = U + 0.5 * hh * k2
        k3 = -u3 * u3 - Km
        u4 = U + hh * k3
        k4 = -u4 * u4 - K1
        U = U + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(U)
        if not np.isfinite(U) or abs(U) > BLOWUP_THRESHOLD:
            return np.array(out), True
    return np.array(out), False


def riccati_integrate(model, v, t0, t1, U0, h=DEFAULT_H):
    """Integrate U' = -U^2 - K(f_s v) from t0 to t1.

    Blowup (|U| crossing BLOWUP_THRESHOLD) is a legitimate outcome: the state
    comes back flagged with the crossing time refined to 1e-6, never as NaN.
    """
    if t1 < t0:
        raise ValueError("t0 must not exceed t1")
    nsteps = max(1, int(round((t1 - t0) / h)))
    hh = (t1 - t0) / nsteps
    _, K = curvature_along(model, [v], t0, t1, hh / 2.0)
    K = K[:, 0]
    Us, crossed = _riccati_march(K, hh, U0)
    if not crossed:
        return RiccatiState(float(Us[-1]), True, None)
    i_bad = len(Us) - 2  # last good node index
    t_lo = t0 + i_bad * hh
    U_lo = float(Us[i_bad])
    t_hi = t_lo + hh
    # bisect the crossing by re-marching the offending step at finer resolution
    for _ in range(40):
        if t_hi - t_lo < 1e-6:
            break
        tm = 0.5 * (t_lo + t_hi)
        sub_h = max((tm - t_lo) / 4.0, 1e-9)
        n_sub = max(1, int(round((tm - t_lo) / sub_h)))
        sub_h = (tm - t_lo) / n_sub
        _, K_sub = curvature_along(model, [v], t_lo, tm, sub_h / 2.0)
        U_sub, c_sub = _riccati_march(K_sub[:, 0], sub_h, U_lo)
        if c_sub:
            t_hi = tm
        else:
            t_lo, U_lo = tm, float(U_sub[-1])
    return RiccatiState(float(Us[-1]), False, 0.5 * (t_lo + t_hi))


def unstable_curvature(model, v, T_conv=DEFAULT_T_CONV, tol=DEFAULT_TOL, h=SWEEP_H):
    """k_u(v): Riccati forward over [-T_conv, 0] from seeds {0, LAMBDA_CAP}.

    Returns the bracket midpoint when the runs agree within tol, clamped to be
    nonnegative; raises NotConverged(spread) otherwise.
    """
    _, lo, hi = unstable_bracket_profiles(model, [v], 0.0, 0.0, T_conv, h)
    lo_v, hi_v = float(lo[0, 0]), float(hi[0, 0])
    spread = hi_v - lo_v
    if spread > tol:
        raise NotConverged(spread)
    return max(0.0, 0.5 * (lo_v + hi_v))


def stable_curvature(model, v, T_conv=DEFAULT_T_CONV, tol=DEFAULT_TOL, h=SWEEP_H):
    """k_s(v) = k_u(-v) by time reversal."""
    return unstable_curvature(model, v.reversed(), T_conv, tol, h)


def lambda_index(model, v, T_conv=DEFAULT_T_CONV, tol=DEFAULT_TOL, h=SWEEP_H):
    """lambda(v) = min(k_u(v), k_s(v))."""
    return min(unstable_curvature(model, v, T_conv, tol, h),
               stable_curvature(model, v, T_conv, tol, h))


def lambda_T(model, v, T, T_conv=DEFAULT_T_CONV, tol=DEFAULT_TOL, h=SWEEP_H):
    """Window index: trapezoid quadrature of lambda over [-T, T] at step h.

    Integrates the certified lower bracket of lambda so genuinely flat orbits
    report exactly 0 (the singular characterization); raises NotConverged when
    the bracket spread exceeds tol anywhere on the window.
    """
    T_eff = round(T / h) * h
    s_grid, lam_lo, lam_mid, spread = lambda_profiles(model, [v], -T_eff, T_eff, T_conv, h)
    worst = float(spread.max())
    if worst > tol:
        raise NotConverged(worst)
    return float(np.trapezoid(lam_lo[:, 0], dx=h))


def hyperbolicity_index(model, v, T, T_conv=DEFAULT_T_CONV, tol=DEFAULT_TOL, h=SWEEP_H):
    return HyperbolicityIndex(lambda_index(model, v, T_conv, tol, h),
                              lambda_T(model, v, T, T_conv, tol, h), T)


def geometric_potential(model, v, T_conv=DEFAULT_T_CONV, tol=DEFAULT_TOL, h=SWEEP_H):
    """phi_u(v) = -k_u (1 - K) / (1 + k_u^2).

    Exact Sasaki-norm derivative of log |df_t| on the one-dimensional unstable
    bundle, evaluated in closed form from (k_u, K).
    """
    ku = unstable_curvature(model, v, T_conv, tol, h)
    K = float(np.asarray(model.curvature_at(v.position)).reshape(-1)[0])
    return -ku * (1.0 - K) / (1.0 + ku * ku)


def geometric_potential_from(ku, K):
    """Closed form phi_u given precomputed k_u and K (vectorized)."""
    return -ku * (1.0 - K) / (1.0 + ku * ku)


def potential_integral(model, potential, v, t, h=DEFAULT_H):
    """Phi(v, t) = integral of the potential along the orbit, trapezoid at step h.

    `potential` is a callable on UnitTangent; see `potentials` for the
    geometric potential and other batched evaluators.
    """
    from .potentials import Potential, segment_integrals
    if isinstance(potential, Potential) and t >= 0:
        return float(segment_integrals(model, potential, [v], t, h)[0])
    if isinstance(potential, Potential):
        pot = potential
        potential = lambda u: pot.point(model, u)
    if t == 0:
        return 0.0
    nsteps = max(1, int(round(abs(t) / h)))
    hh = abs(t) / nsteps
    sgn = 1.0 if t >= 0 else -1.0
    if model.kind == "synthetic":
        pts = [shift_synthetic(v, sgn * hh * i) for i in range(nsteps + 1)]
    else:
        z0, a0 = model.wrap_points(v.position, v.direction)
        _, _, (rz, ra) = flow_arrays(model, z0, a0, sgn * hh * nsteps, hh, record_every=1)
        pts = [UnitTangent(complex(rz[i, 0]), float(ra[i, 0])) for i in range(nsteps + 1)]
    vals = np.array([potential(p) for p in pts])
    return sgn * float(np.trapezoid(vals, dx=hh))
