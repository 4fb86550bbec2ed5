"""Surface geometries and the geodesic flow.

Three model kinds:

* ``fuchsian``  -- constant curvature -1, quotient of the Poincare disk by a
  cocompact group; the one constructor is the Bolza surface (regular octagon,
  opposite sides paired by translations through the center).
* ``conformal`` -- metric e^{2u} g_hyp with u a finite sum of compactly
  supported bumps (hyperbolic-distance profile, analytic derivatives).
* ``synthetic`` -- a single notional orbit with prescribed curvature K(t);
  the flow is time translation.

Chart: Poincare disk, metric factor lam(z) = e^{u(z)} * 2 / (1 - |z|^2).
The flow state is (z, angle); unit speed holds identically in this
parametrization, so renormalization drift is zero by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import moebius as mb
from .errors import IntegratorDiverged, PositiveCurvature, UnsupportedOperation

# Bolza octagon constants
RHO = math.acosh(1.0 + math.sqrt(2.0))        # center-to-side distance
SIDE_MIDPOINT_R = math.tanh(RHO / 2.0)        # euclidean radius of side midpoints
VERTEX_R = math.tanh(math.acosh(3.0 + 2.0 * math.sqrt(2.0)) / 2.0)
CIRCUMRADIUS = math.acosh(3.0 + 2.0 * math.sqrt(2.0))
BOLZA_RELATOR = (0, 3, 6, 1, 4, 7, 2, 5)      # product of side pairings = identity

_WRAP_TOL = 1e-9
_CURVATURE_SUP_CAP = 100.0


@dataclass(frozen=True)
class UnitTangent:
    """A point of T^1 S: chart position plus direction angle.

    For disk models the position is complex with |z| < 1; for synthetic
    models it is the scalar orbit time and the direction is 0 or pi.
    """
    position: complex | float
    direction: float

    def reversed(self):
        return UnitTangent(self.position, (self.direction + np.pi) % (2.0 * np.pi))


@dataclass
class OrbitSegment:
    """A sampled orbit: states every `step` flow-time units plus the exact endpoint.

    Curvature is filled at integration time; the horocycle curvatures k_u and
    k_s stay None until a Riccati sweep fills them.
    """
    initial: UnitTangent
    duration: float
    step: float
    positions: np.ndarray
    directions: np.ndarray
    curvatures: np.ndarray
    endpoint: UnitTangent
    k_u: np.ndarray | None = None
    k_s: np.ndarray | None = None

    @property
    def count(self):
        return len(self.positions)

    def sample(self, i):
        ku = None if self.k_u is None else self.k_u[i]
        ks = None if self.k_s is None else self.k_s[i]
        return (UnitTangent(self.positions[i], self.directions[i]),
                self.curvatures[i], ku, ks)

    def tangent(self, i):
        return UnitTangent(self.positions[i], self.directions[i])

    def times(self):
        sign = 1.0 if self.duration >= 0 else -1.0
        return sign * self.step * np.arange(self.count)


class CurvatureProfile:
    """Piecewise plateau curvature K(t) with C^2 smoothstep joins.

    pieces: list of (t_start, t_end, K) with disjoint increasing intervals;
    between pieces K interpolates monotonically, outside the first/last piece
    it stays constant.
    """

    def __init__(self, pieces):
        pieces = [(float(a), float(b), float(k)) for a, b, k in pieces]
        if not pieces:
            raise ValueError("profile needs at least one piece")
        for a, b, _ in pieces:
            if not b > a:
                raise ValueError("piece with nonpositive width")
        for (a0, b0, _), (a1, b1, _) in zip(pieces, pieces[1:]):
            if a1 <= b0:
                raise ValueError("pieces must be disjoint and increasing")
        self.pieces = pieces

    def __call__(self, t):
        t = np.asarray(t, float)
        out = np.full(t.shape, self.pieces[0][2])
        for i, (a, b, k) in enumerate(self.pieces):
            out = np.where(t >= a, k, out)
            if i + 1 < len(self.pieces):
                a2, _, k2 = self.pieces[i + 1]
                s = np.clip((t - b) / (a2 - b), 0.0, 1.0)
                blend = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
                out = np.where((t > b) & (t < a2), k + (k2 - k) * blend, out)
        return out if out.shape else float(out)

    @property
    def sup_abs(self):
        return max(abs(k) for _, _, k in self.pieces)

    @property
    def max_value(self):
        return max(k for _, _, k in self.pieces)

    @property
    def identically_zero(self):
        return all(k == 0.0 for _, _, k in self.pieces)

    def to_pieces(self):
        return [list(p) for p in self.pieces]


@dataclass
class Bump:
    """Conformal bump: u = amplitude * psi(Q / Q_r) with Q = cosh d_hyp(-, center) - 1."""
    center: complex
    radius: float
    amplitude: float


class MetricModel:
    kind = "abstract"
    constant_curvature: float | None = None
    has_declared_singular_set = False

    def curvature_at(self, position):
        raise NotImplementedError

    @property
    def curvature_sup(self):
        raise NotImplementedError


class FuchsianModel(MetricModel):
    """Constant-curvature quotient model (Bolza octagon)."""
    kind = "fuchsian"
    constant_curvature = -1.0

    def __init__(self):
        ks = np.arange(8)
        thetas = ks * np.pi / 4.0
        self.inverse_pairing = (ks + 4) % 8
        self.relator = BOLZA_RELATOR
        self.gen_a = np.full(8, np.cosh(RHO), complex)
        self.gen_b = np.exp(1j * thetas) * np.sinh(RHO)
        self.generators = mb.to_sl2r((self.gen_a, self.gen_b))
        d = (1.0 + SIDE_MIDPOINT_R ** 2) / (2.0 * SIDE_MIDPOINT_R)
        self.side_centers = d * np.exp(1j * thetas)
        self.side_radius = (1.0 - SIDE_MIDPOINT_R ** 2) / (2.0 * SIDE_MIDPOINT_R)
        self._deck_cache = {}

    # -- curvature / metric ------------------------------------------------
    def curvature_at(self, position):
        return np.full(np.shape(position), -1.0) if np.ndim(position) else -1.0

    @property
    def curvature_sup(self):
        return 1.0

    def conformal_exponent(self, z):
        zero = np.zeros(np.shape(z))
        return zero, zero, zero, zero  # u, u_x, u_y, laplacian_eucl(u)

    def systole(self):
        return 2.0 * RHO

    def injectivity_radius(self):
        return RHO

    # -- fundamental domain ------------------------------------------------
    def side_penetrations(self, z):
        """Positive where z lies beyond a side, shape (n, 8)."""
        z = np.atleast_1d(np.asarray(z, complex))
        return self.side_radius - np.abs(z[:, None] - self.side_centers[None, :])

    def in_domain(self, z, tol=_WRAP_TOL):
        pen = self.side_penetrations(z)
        return (pen <= tol).all(axis=1)

    def wrap_points(self, z, angle, max_iter=64):
        """Wrap chart points into the octagon, adjusting direction angles."""
        z = np.array(np.atleast_1d(z), complex)
        angle = np.array(np.atleast_1d(angle), float)
        for _ in range(max_iter):
            pen = self.side_penetrations(z)
            k = np.argmax(pen, axis=1)
            outside = pen[np.arange(len(z)), k] > _WRAP_TOL
            if not outside.any():
                return z, np.mod(angle, 2.0 * np.pi)
            ki = self.inverse_pairing[k[outside]]
            zi = z[outside]
            denom = np.conj(self.gen_b[ki]) * zi + np.conj(self.gen_a[ki])
            z[outside] = (self.gen_a[ki] * zi + self.gen_b[ki]) / denom
            angle[outside] -= 2.0 * np.angle(denom)
        raise IntegratorDiverged("point could not be wrapped into the fundamental domain")

    def deck_ball(self, max_displacement):
        """Deck transformations with d(0, g(0)) <= max_displacement, sorted by it.

        Returns (a, b, disp) arrays; identity first.  Cached on the integer
        ceiling of the request so repeated nearby cutoffs share one ball.
        """
        max_displacement = float(np.ceil(max_displacement))
        key = max_displacement
        if key in self._deck_cache:
            return self._deck_cache[key]
        seen = {(1.0, 0.0, 0.0, 0.0)}
        frontier = [(1.0 + 0j, 0j)]
        alla, allb = [1.0 + 0j], [0j]
        # letters reach displacement 2*RHO each; depth covers the cutoff
        depth = max(1, int(np.ceil(max_displacement / (2.0 * RHO))) + 2)
        for _ in range(depth):
            nxt = []
            for a0, b0 in frontier:
                for k in range(8):
                    a1, b1 = mb.compose((a0, b0), (self.gen_a[k], self.gen_b[k]))
                    sig = (round(a1.real, 9), round(a1.imag, 9), round(b1.real, 9), round(b1.imag, 9))
                    sigm = tuple(-x for x in sig)
                    if sig in seen or sigm in seen:
                        continue
                    disp = 2.0 * math.atanh(min(abs(b1 / np.conj(a1)), 1.0 - 1e-15))
                    if disp > max_displacement + 2.0 * RHO:
                        continue
                    seen.add(sig)
                    nxt.append((a1, b1))
                    if disp <= max_displacement:
                        alla.append(a1)
                        allb.append(b1)
            frontier = nxt
        a = np.array(alla)
        b = np.array(allb)
        disp = 2.0 * np.arctanh(np.minimum(np.abs(b / np.conj(a)), 1.0 - 1e-15))
        order = np.argsort(disp)
        out = (a[order], b[order], disp[order])
        self._deck_cache[key] = out
        return out


class ConformalModel(MetricModel):
    """e^{2u} times the hyperbolic metric of a Fuchsian base."""
    kind = "conformal"
    constant_curvature = None

    def __init__(self, base: FuchsianModel, bumps):
        self.base = base
        self.bumps = list(bumps)
        self.max_sampled_curvature = None   # filled by make_conformal validation
        self.min_sampled_curvature = None
        self.inverse_pairing = base.inverse_pairing
        self.relator = base.relator
        self.gen_a, self.gen_b = base.gen_a, base.gen_b
        self.generators = base.generators
        self.side_centers, self.side_radius = base.side_centers, base.side_radius
        # periodize: deck images of bump centers whose support can reach the domain
        self._images = []  # (center, radius, amplitude) triples, flattened over deck images
        if self.bumps:
            a, b, disp = base.deck_ball(2.0 * CIRCUMRADIUS + 2.0 * max(bp.radius for bp in self.bumps) + 2.0)
            for bp in self.bumps:
                c_imgs = mb.apply((a, b), bp.center)
                keep = mb.distance(c_imgs, 0j) <= CIRCUMRADIUS + bp.radius + 1.0
                for c in c_imgs[keep]:
                    self._images.append((c, bp.radius, bp.amplitude))

    def conformal_exponent(self, z):
        """u and its chart derivatives: (u, u_x, u_y, euclidean laplacian of u)."""
        z = np.asarray(z, complex)
        u = np.zeros(z.shape)
        ux = np.zeros(z.shape)
        uy = np.zeros(z.shape)
        lap = np.zeros(z.shape)
        x, y = z.real, z.imag
        P = 1.0 - x * x - y * y
        for c, r, A in self._images:
            kap = 2.0 / (1.0 - abs(c) ** 2)
            D = (x - c.real) ** 2 + (y - c.imag) ** 2
            Q = kap * D / P
            Qr = math.cosh(r) - 1.0
            s = Q / Qr
            inside = s < 1.0
            if not inside.any():
                continue
            s = np.where(inside, s, 0.5)
            psi = np.exp(1.0 - 1.0 / (1.0 - s))
            dpsi = -psi / (1.0 - s) ** 2
            d2psi = psi * (2.0 * s - 1.0) / (1.0 - s) ** 4
            Qx = kap * (2.0 * (x - c.real) * P + 2.0 * x * D) / P ** 2
            Qy = kap * (2.0 * (y - c.imag) * P + 2.0 * y * D) / P ** 2
            Qxx = kap * ((2.0 * P + 2.0 * D) * P + 4.0 * x * (2.0 * (x - c.real) * P + 2.0 * x * D)) / P ** 3
            Qyy = kap * ((2.0 * P + 2.0 * D) * P + 4.0 * y * (2.0 * (y - c.imag) * P + 2.0 * y * D)) / P ** 3
            u += np.where(inside, A * psi, 0.0)
            ux += np.where(inside, A * dpsi * Qx / Qr, 0.0)
            uy += np.where(inside, A * dpsi * Qy / Qr, 0.0)
            lap += np.where(inside, A * (d2psi * (Qx ** 2 + Qy ** 2) / Qr ** 2 + dpsi * (Qxx + Qyy) / Qr), 0.0)
        return u, ux, uy, lap

    def curvature_at(self, position):
        z = np.asarray(position, complex)
        u, _, _, lap = self.conformal_exponent(z)
        hyp_lap = (1.0 - np.abs(z) ** 2) ** 2 / 4.0 * lap
        out = np.exp(-2.0 * u) * (-1.0 - hyp_lap)
        return out if out.shape else float(out)

    @property
    def curvature_sup(self):
        if not self.bumps or self.min_sampled_curvature is None:
            return 1.0
        # sampled range with a safety margin
        return 1.2 * max(1.0, abs(self.min_sampled_curvature), abs(self.max_sampled_curvature))

    def systole(self):
        return self.base.systole()

    def injectivity_radius(self):
        return self.base.injectivity_radius()

    def side_penetrations(self, z):
        return self.base.side_penetrations(z)

    def in_domain(self, z, tol=_WRAP_TOL):
        return self.base.in_domain(z, tol)

    def wrap_points(self, z, angle, max_iter=64):
        return self.base.wrap_points(z, angle, max_iter)

    def deck_ball(self, max_displacement):
        return self.base.deck_ball(max_displacement)


class SyntheticModel(MetricModel):
    """A single orbit with curvature prescribed as a function of orbit time."""
    kind = "synthetic"

    def __init__(self, profile: CurvatureProfile, declare_singular=None):
        self.profile = profile
        if declare_singular is None:
            declare_singular = profile.identically_zero
        self.has_declared_singular_set = bool(declare_singular)

    def curvature_at(self, position):
        return self.profile(position)

    @property
    def curvature_sup(self):
        return self.profile.sup_abs


# -- constructors -----------------------------------------------------------

def make_fuchsian_bolza():
    """The Bolza surface: regular hyperbolic octagon, 8 side-pairing generators."""
    return FuchsianModel()


def make_conformal(base, bumps, tol=1e-9, n_grid=4096, seed=7):
    """Conformal perturbation of a Fuchsian base by smooth bumps.

    bumps: iterable of (center, radius, amplitude) with complex or (x, y) center.
    Validation samples the curvature on a quasirandom grid over the domain plus
    dense discs around each bump; raises PositiveCurvature when the sampled
    maximum exceeds `tol`.
    """
    if base.kind != "fuchsian":
        raise ValueError("conformal models need a fuchsian base")
    blist = []
    for item in bumps:
        c, r, a = item if len(item) == 3 else (complex(item[0], item[1]), item[2], item[3])
        blist.append(Bump(complex(c), float(r), float(a)))
    model = ConformalModel(base, blist)
    rng = np.random.default_rng(seed)
    pts = []
    z = rng.uniform(-VERTEX_R, VERTEX_R, 4 * n_grid) + 1j * rng.uniform(-VERTEX_R, VERTEX_R, 4 * n_grid)
    z = z[base.in_domain(z)][:n_grid]
    pts.append(z)
    for bp in blist:
        local = bp.center + (rng.uniform(-0.5, 0.5, n_grid // 2) + 1j * rng.uniform(-0.5, 0.5, n_grid // 2)) * bp.radius
        local = local[np.abs(local) < 0.995]
        pts.append(local)
        pts.append(np.atleast_1d(np.asarray(bp.center)))
    z = np.concatenate(pts)
    curv = model.curvature_at(z)
    imax = int(np.argmax(curv))
    model.max_sampled_curvature = float(curv[imax])
    model.min_sampled_curvature = float(curv.min())
    if model.max_sampled_curvature > tol:
        raise PositiveCurvature(model.max_sampled_curvature, z[imax])
    if model.curvature_sup > _CURVATURE_SUP_CAP:
        raise ValueError(f"curvature bound {model.curvature_sup:.3g} above {_CURVATURE_SUP_CAP}")
    return model


def make_synthetic(profile, declare_singular=None):
    """Synthetic curvature-along-orbit model from a CurvatureProfile or pieces list."""
    if not isinstance(profile, CurvatureProfile):
        profile = CurvatureProfile(profile)
    if profile.max_value > 0.0:
        raise PositiveCurvature(profile.max_value, "profile")
    if profile.sup_abs > _CURVATURE_SUP_CAP:
        raise ValueError(f"curvature bound {profile.sup_abs:.3g} above {_CURVATURE_SUP_CAP}")
    return SyntheticModel(profile, declare_singular)


# -- flow --------------------------------------------------------------------

def _metric_terms(model, z, angle):
    """RHS of the unit-speed geodesic ODE: (dz/dt, dangle/dt)."""
    x, y = z.real, z.imag
    r2 = x * x + y * y
    base = 2.0 / (1.0 - r2)
    sx = 2.0 * x / (1.0 - r2)
    sy = 2.0 * y / (1.0 - r2)
    if model.kind == "conformal":
        u, ux, uy, _ = model.conformal_exponent(z)
        lam = np.exp(u) * base
        sx = sx + ux
        sy = sy + uy
    else:
        lam = base
    c, s = np.cos(angle), np.sin(angle)
    return (c + 1j * s) / lam, (sy * c - sx * s) / lam


def flow_arrays(model, z, angle, t, h=1e-3, record_every=0, wrap=True):
    """Batched RK4 geodesic flow; t may be negative.

    Returns (z_end, angle_end, recorded) where `recorded` is None or a pair of
    arrays with shape (n_records, n_points) sampled every `record_every` steps
    starting at the initial state.
    """
    z = np.array(np.atleast_1d(z), complex)
    angle = np.array(np.atleast_1d(angle), float)
    if model.kind == "synthetic":
        raise UnsupportedOperation("synthetic models use shift_synthetic")
    sign = 1.0 if t >= 0 else -1.0
    total = abs(t)
    nfull = int(total / h)
    rec_z, rec_a = ([z.copy()], [angle.copy()]) if record_every else (None, None)
    steps = [h] * nfull
    last = total - nfull * h
    if last > 1e-15:
        steps.append(last)
    for i, hi in enumerate(steps):
        hs = sign * hi
        k1z, k1a = _metric_terms(model, z, angle)
        k2z, k2a = _metric_terms(model, z + 0.5 * hs * k1z, angle + 0.5 * hs * k1a)
        k3z, k3a = _metric_terms(model, z + 0.5 * hs * k2z, angle + 0.5 * hs * k2a)
        k4z, k4a = _metric_terms(model, z + hs * k3z, angle + hs * k3a)
        z = z + (hs / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        angle = angle + (hs / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        if np.abs(z).max() > 0.999999:
            raise IntegratorDiverged("flow reached the chart boundary")
        if wrap:
            z, angle = model.wrap_points(z, angle)
        if record_every and (i + 1) % record_every == 0 and i + 1 <= nfull:
            rec_z.append(z.copy())
            rec_a.append(angle.copy())
    if record_every:
        return z, np.mod(angle, 2.0 * np.pi), (np.array(rec_z), np.array(rec_a))
    return z, np.mod(angle, 2.0 * np.pi), None


def shift_synthetic(v, t):
    """Flow on a synthetic model: translate orbit time by t (direction-signed)."""
    ds = t * math.cos(v.direction)
    return UnitTangent(v.position + ds, v.direction)


def flow(model, v, t, h=1e-3):
    """Integrate the geodesic flow from v for time t, sampling every h.

    Preconditions: h > 0.  Negative t integrates backward.  Returns an
    OrbitSegment whose samples sit at 0, h, 2h, ... and whose `endpoint`
    carries the exact time-t state.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    if model.kind == "synthetic":
        n = int(abs(t) / h) + 1
        sign = 1.0 if t >= 0 else -1.0
        times = v.position + sign * h * math.cos(v.direction) * np.arange(n)
        dirs = np.full(n, v.direction)
        curv = np.asarray(model.curvature_at(times), float)
        end = shift_synthetic(v, t)
        return OrbitSegment(v, t, h, times, dirs, curv, end)
    z0, a0 = model.wrap_points(v.position, v.direction)
    ze, ae, rec = flow_arrays(model, z0, a0, t, h, record_every=1)
    rz, ra = rec
    positions = rz[:, 0]
    directions = ra[:, 0]
    curv = np.asarray(model.curvature_at(positions), float)
    end = UnitTangent(complex(ze[0]), float(ae[0]))
    return OrbitSegment(UnitTangent(complex(z0[0]), float(a0[0])), t, h,
                        positions, directions, curv, end)


def wrap_tangent(model, v):
    if model.kind == "synthetic":
        return v
    z, a = model.wrap_points(v.position, v.direction)
    return UnitTangent(complex(z[0]), float(a[0]))


# -- distances ----------------------------------------------------------------

def _conformal_lengths(model, z1, z2, nodes=5):
    """Length of the chart-hyperbolic geodesic from z1 to each z2 in the e^{2u} metric.

    Exact for u = 0; for bumps this integrates e^u along the hyperbolic geodesic,
    an upper-bound approximation adequate at Bowen-ball scales.
    """
    d = mb.distance(z1, z2)
    if model.kind != "conformal":
        return d
    ts = np.linspace(0.0, 1.0, nodes)
    ang = mb.direction_to(z1, z2)
    pts = mb.geodesic_point(z1, ang, np.multiply.outer(ts, d))
    u = model.conformal_exponent(pts)[0]
    w = np.full(nodes, 2.0)
    w[0] = w[-1] = 1.0
    w[1::2] = 4.0  # Simpson weights (nodes odd)
    factor = (w[:, None] * np.exp(u)).sum(axis=0) / w.sum() if u.ndim > 1 else (w * np.exp(u)).sum() / w.sum()
    return d * factor


def surface_distance(model, z1, z2):
    """Distance on the quotient surface: min over deck translates of chart distance."""
    if model.kind == "synthetic":
        raise UnsupportedOperation("no distance on synthetic models")
    z1 = complex(z1)
    z2 = np.asarray(z2, complex)
    scalar = z2.ndim == 0
    z2 = np.atleast_1d(z2)
    base = np.asarray(_conformal_lengths(model, z1, z2), float)
    cutoff = float(base.max()) + mb.distance(z1, 0j) + float(mb.distance(z2, 0j).max()) + 1e-9
    a, b, disp = model.deck_ball(min(cutoff, 4.0 * CIRCUMRADIUS + 2.0))
    keep = disp <= cutoff
    a, b = a[keep], b[keep]
    if len(a) > 1:
        imgs = mb.apply((a[1:, None], b[1:, None]), z2[None, :])  # skip identity
        d_all = _conformal_lengths(model, z1, imgs.ravel()).reshape(imgs.shape)
        base = np.minimum(base, d_all.min(axis=0))
    return float(base[0]) if scalar else base


def knieper_distance(model, v, w, n0=32, tol=1e-9, n_max=1024):
    """Knieper metric: max over tau in [0,1] of surface distance of the two orbits.

    Adaptive grid: starts at n0+1 samples, doubles until the maximum moves by
    less than `tol` or the grid exceeds n_max points.
    """
    if model.kind == "synthetic":
        raise UnsupportedOperation("knieper_distance undefined on synthetic models")
    h = 1.0 / n_max
    _, _, (rv, _) = flow_arrays(model, [v.position, w.position],
                                [v.direction, w.direction], 1.0, h, record_every=1)
    zv, zw = rv[:, 0], rv[:, 1]
    n = n0
    prev = -1.0
    while True:
        idx = np.arange(0, n_max + 1, n_max // n)
        d = np.array([surface_distance(model, zv[i], zw[i]) for i in idx])
        cur = float(d.max())
        if abs(cur - prev) < tol or n >= n_max:
            return cur
        prev = cur
        n *= 2


# -- closed-form perturbations (constant curvature only) ----------------------

def stable_perturbation(model, v, delta):
    """Tangent at perpendicular distance delta whose forward orbit converges to v's.

    Constant-curvature construction: same forward ideal endpoint.
    """
    if model.kind != "fuchsian":
        raise UnsupportedOperation("closed-form perturbations need constant curvature")
    xi = mb.ideal_endpoint(v.position, v.direction)
    z = mb.perpendicular_offset(v.position, v.direction, delta)
    return UnitTangent(complex(z), float(mb.direction_to(z, xi)))


def unstable_perturbation(model, v, delta):
    """Tangent whose backward orbit converges to v's (time-reversed stable)."""
    w = stable_perturbation(model, v.reversed(), delta)
    return w.reversed()


# -- serialization -------------------------------------------------------------

def model_to_dict(model):
    if model.kind == "fuchsian":
        return {"kind": "fuchsian",
                "generators": [list(np.asarray(g).ravel()) for g in model.generators]}
    if model.kind == "conformal":
        return {"kind": "conformal",
                "base": model_to_dict(model.base),
                "bumps": [[b.center.real, b.center.imag, b.radius, b.amplitude]
                          for b in model.bumps]}
    return {"kind": "synthetic",
            "pieces": model.profile.to_pieces(),
            "declare_singular": model.has_declared_singular_set}


def model_from_dict(data):
    kind = data.get("kind")
    if kind == "fuchsian":
        model = make_fuchsian_bolza()
        gens = data.get("generators")
        if gens is not None:
            given = np.asarray(gens, float).reshape(-1, 2, 2)
            if given.shape != (8, 2, 2) or not np.allclose(given, model.generators, atol=1e-9):
                raise ValueError("only the Bolza generator set is supported")
        return model
    if kind == "conformal":
        base = model_from_dict(data["base"]) if isinstance(data.get("base"), dict) else make_fuchsian_bolza()
        return make_conformal(base, [(complex(b[0], b[1]), b[2], b[3]) for b in data["bumps"]])
    if kind == "synthetic":
        return make_synthetic(CurvatureProfile(data["pieces"]), data.get("declare_singular"))
    raise ValueError(f"unknown model kind {kind!r}")
