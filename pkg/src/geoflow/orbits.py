"""Closed geodesics of the Bolza-type models via group words.

Free-homotopy classes of closed curves correspond to conjugacy classes of
the deck group.  Words run over the eight side pairings 0..7 with inverse
pairing k <-> k+4 (mod 8); the single defining relation is the vertex cycle
g0 g3 g6 g1 g4 g7 g2 g5 = 1, whose rotations are the arithmetic progressions
of step 3 (and step 5 for the inverse) mod 8.

Canonical class representatives are cyclically reduced words that
  * contain no run of >= 5 relator letters (Dehn-reduced: such words shorten),
  * are lexicographically minimal over rotations, inversion, and half-relator
    exchanges (reversing in place any 4-letter run of step 3 or 5 -- the
    exactly-half-relator ambiguity of Dehn's algorithm).
On Dehn-reduced cyclically reduced words the exchange keeps both properties,
so the closure is finite and the canonical form is well defined.  Geometric
spot checks of the dedup (distinct axes for distinct classes) live in the
test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import moebius as mb
from . import riccati
from .errors import BudgetExceeded, IncompleteSpectrum, NoConvergence, NotHyperbolic
from .potentials import ConstantPotential, Potential, as_potential
from .surfaces import UnitTangent, flow_arrays, wrap_tangent

_INV = tuple((k + 4) % 8 for k in range(8))
_MAX_WORD_LEN = 12
_DEFAULT_CLASS_CAP = 600_000
_TRAJECTORY_H = 0.01


# -- word combinatorics --------------------------------------------------------

def _rotations(letters):
    n = len(letters)
    return [letters[i:] + letters[:i] for i in range(n)]


def _inverse_word(letters):
    return tuple(_INV[x] for x in reversed(letters))


def _cyclically_reduced(letters):
    n = len(letters)
    if n == 1:
        return True
    return all(letters[(i + 1) % n] != _INV[letters[i]] for i in range(n))


def _cyclic_diffs(letters):
    n = len(letters)
    return [(letters[(i + 1) % n] - letters[i]) % 8 for i in range(n)]


def _dehn_reducible(letters):
    """Contains more than half a relator: >= 4 consecutive cyclic diffs of 3 or 5."""
    n = len(letters)
    if n < 5:
        return False
    d = _cyclic_diffs(letters)
    for step in (3, 5):
        run = 0
        for i in range(2 * n):  # wrap twice to catch cyclic runs
            run = run + 1 if d[i % n] == step else 0
            if run >= 4:
                return True
    return False


def _half_relator_exchanges(letters):
    """Words obtained by reversing one 4-letter relator run in place."""
    n = len(letters)
    if n < 4:
        return []
    d = _cyclic_diffs(letters)
    out = []
    for step in (3, 5):
        for i in range(n):
            if d[i] == step and d[(i + 1) % n] == step and d[(i + 2) % n] == step:
                idx = [i, (i + 1) % n, (i + 2) % n, (i + 3) % n]
                new = list(letters)
                vals = [letters[j] for j in idx]
                for j, v in zip(idx, reversed(vals)):
                    new[j] = v
                out.append(tuple(new))
    return out


def _class_orbit(letters):
    """All words equivalent to `letters`: exchange closure x rotations x inversion."""
    seen = set()
    stack = [tuple(letters)]
    closure = []
    while stack:
        w = stack.pop()
        if w in seen:
            continue
        seen.add(w)
        closure.append(w)
        for e in _half_relator_exchanges(w):
            if e not in seen:
                stack.append(e)
        wi = _inverse_word(w)
        if wi not in seen:
            stack.append(wi)
    orbit = set()
    for w in closure:
        orbit.update(_rotations(w))
    return orbit


def _is_primitive_class(letters):
    """No word of the class orbit is a proper power (visible cyclic period)."""
    n = len(letters)
    divisors = [p for p in range(1, n) if n % p == 0]
    if not divisors:
        return True
    for w in _class_orbit(letters):
        for p in divisors:
            if all(w[i] == w[(i + p) % n] for i in range(n)):
                return False
    return True


@dataclass(frozen=True)
class GroupWord:
    """A free-homotopy class, held as its canonical cyclic word."""
    letters: tuple

    def __post_init__(self):
        if not self.letters:
            raise ValueError("empty word")
        if any(not 0 <= x < 8 for x in self.letters):
            raise ValueError("letters must be in 0..7")

    def canonical(self):
        if not _cyclically_reduced(self.letters):
            raise ValueError("word is not cyclically reduced")
        return GroupWord(min(_class_orbit(self.letters)))

    @property
    def is_canonical(self):
        return self.letters == min(_class_orbit(self.letters))

    def inverse(self):
        return GroupWord(_inverse_word(self.letters))

    def power(self, n):
        return GroupWord(self.letters * n)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return ".".join(str(x) for x in self.letters)

    @classmethod
    def parse(cls, text):
        return cls(tuple(int(x) for x in text.replace(",", ".").split(".")))


def word_isometry(model, word):
    """SU(1,1) pair of the word's deck transformation."""
    letters = word.letters if isinstance(word, GroupWord) else tuple(word)
    a, b = 1.0 + 0j, 0j
    for k in letters:
        a, b = mb.compose((a, b), (model.gen_a[k], model.gen_b[k]))
    return a, b


# -- enumeration ---------------------------------------------------------------

def _grow_words(n, w0, max_rows=60_000_000):
    """Vectorized word tree for fixed first letter, letters >= w0.

    Prunes adjacent inverses and linear runs of 5 relator letters during
    growth; returns an int8 array (rows, n).
    """
    words = np.array([[w0]], np.int8)
    for level in range(1, n):
        if len(words) * 8 > max_rows:
            raise BudgetExceeded(f"word tree beyond {max_rows} rows")
        last = words[:, -1]
        chunks = []
        for letter in range(w0, 8):
            ok = last != _INV[letter]
            cand = words[ok]
            if not len(cand):
                continue
            if level >= 4:
                d = np.diff(cand[:, -4:].astype(np.int16), axis=1) % 8
                dn = (letter - cand[:, -1].astype(np.int16)) % 8
                bad = ((d == 3).all(axis=1) & (dn == 3)) | ((d == 5).all(axis=1) & (dn == 5))
                cand = cand[~bad]
            chunks.append(np.concatenate(
                [cand, np.full((len(cand), 1), letter, np.int8)], axis=1))
        words = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, level + 1), np.int8)
    return words


def _keys(words):
    n = words.shape[1]
    pw = (8 ** np.arange(n - 1, -1, -1)).astype(np.int64)
    return words.astype(np.int64) @ pw


def _level_candidates(model, n, length_cap):
    """Rotation-canonical, Dehn-reduced words of length n with their lengths.

    Returns (words list of tuples, lengths array, min_length_at_level) where
    the cap filter applies only to the returned words, not the level minimum.
    """
    gens = np.asarray(model.generators)
    min_len = np.inf
    kept_words, kept_lens = [], []
    for w0 in range(8):
        words = _grow_words(n, w0)
        if not len(words):
            continue
        if n > 1:
            words = words[words[:, 0] != np.asarray(_INV, np.int8)[words[:, -1]]]
        if n >= 5:
            d = (np.roll(words, -1, axis=1).astype(np.int16) - words) % 8
            bad = np.zeros(len(words), bool)
            for step in (3, 5):
                eq = d == step
                for i in range(n):
                    run = eq[:, i]
                    for j in range(1, 4):
                        run = run & eq[:, (i + j) % n]
                    bad |= run
            words = words[~bad]
        if not len(words):
            continue
        own = _keys(words)
        best = own.copy()
        for r in range(1, n):
            np.minimum(best, _keys(np.roll(words, r, axis=1)), out=best)
        words = words[own == best]
        if not len(words):
            continue
        m = gens[words[:, 0]]
        for i in range(1, n):
            m = np.einsum("nij,njk->nik", m, gens[words[:, i]])
        tr = np.abs(m[:, 0, 0] + m[:, 1, 1])
        hyp = tr > 2.0 + 1e-9
        words, tr = words[hyp], tr[hyp]
        if not len(words):
            continue
        lengths = 2.0 * np.arccosh(tr / 2.0)
        min_len = min(min_len, float(lengths.min()))
        keep = lengths <= length_cap
        kept_words.extend(map(tuple, words[keep].tolist()))
        kept_lens.extend(lengths[keep].tolist())
    return kept_words, np.array(kept_lens), min_len


def enumerate_classes(model, max_word_len, length_cap=np.inf, class_cap=_DEFAULT_CLASS_CAP):
    """Primitive free-homotopy classes with canonical word length <= max_word_len.

    Classes are deduplicated under rotation, inversion, and half-relator
    exchange, and powers of shorter words are excluded.  `length_cap` bounds
    the geodesic length of returned classes (needed for long words, where the
    full class list does not fit in memory).

    Returns (classes, stats) ... no: returns the list; use `build_orbit_table`
    for completeness metadata.
    """
    if model.kind not in ("fuchsian", "conformal"):
        raise ValueError("enumeration needs a fuchsian or conformal model")
    if max_word_len > _MAX_WORD_LEN:
        raise BudgetExceeded(f"max_word_len {max_word_len} above {_MAX_WORD_LEN}")
    projected = sum(8 * 7 ** (n - 1) / (2 * n) for n in range(1, max_word_len + 1))
    if np.isinf(length_cap) and projected > class_cap:
        raise BudgetExceeded(
            f"projected {projected:.3g} classes above cap {class_cap}; set length_cap")
    classes, _ = _enumerate_with_stats(model, max_word_len, length_cap)
    return classes


def _enumerate_with_stats(model, max_word_len, length_cap):
    by_class = {}
    min_ratio = np.inf
    for n in range(1, max_word_len + 1):
        words, lengths, min_len = _level_candidates(model, n, length_cap)
        if np.isfinite(min_len):
            min_ratio = min(min_ratio, min_len / n)
        for w in words:
            w = tuple(int(x) for x in w)
            orbit = _class_orbit(w)
            key = min(orbit)
            if key in by_class:
                continue
            if not _is_primitive_class(w):
                by_class[key] = None
                continue
            by_class[key] = GroupWord(key)
    classes = [g for g in by_class.values() if g is not None]
    classes.sort(key=lambda g: (len(g.letters), g.letters))
    return classes, min_ratio


# -- closed orbits ---------------------------------------------------------------

@dataclass
class PeriodicOrbit:
    """A closed geodesic: canonical word, length, and a base tangent on it."""
    word: GroupWord
    length: float
    base: UnitTangent
    model: object
    refined: bool = False
    phi_cache: dict = field(default_factory=dict)
    _regular: bool | None = None
    _traj: tuple | None = None

    def trajectory(self, h=_TRAJECTORY_H):
        """(positions, directions) at n = round(length/h) equal steps around the loop."""
        if self._traj is None or abs(self._traj[0] - h) > 1e-15:
            self._traj = (h,) + _orbit_trajectory(self.model, self, h)
        return self._traj[1], self._traj[2]

    @property
    def regular(self):
        if self._regular is None:
            self._regular = classify_regular(self.model, self)
        return self._regular


def _orbit_trajectory(model, orbit, h):
    n = max(8, int(round(orbit.length / h)))
    if model.kind == "fuchsian":
        # closed form: the orbit is the axis through the base tangent
        z0, ang0 = orbit.base.position, orbit.base.direction
        att = mb.ideal_endpoint(z0, ang0)
        s = orbit.length * np.arange(n) / n
        zs = mb.geodesic_point(z0, ang0, s)
        angs = mb.direction_to(zs, att)
        return model.wrap_points(zs, angs)
    z0, a0 = model.wrap_points(orbit.base.position, orbit.base.direction)
    _, _, (rz, ra) = flow_arrays(model, z0, a0, orbit.length, orbit.length / n, record_every=1)
    return rz[:n, 0], ra[:n, 0]


def close_geodesic(model, word):
    """Closed geodesic in the free-homotopy class of `word`.

    Fuchsian: length from the trace, base tangent on the axis.  Conformal:
    the fuchsian orbit is refined by discrete length minimization over broken
    geodesics in the universal cover, then a shooting polish makes the flow
    close up to integrator accuracy.
    """
    if isinstance(word, (tuple, list)):
        word = GroupWord(tuple(word))
    a, b = word_isometry(model, word)
    tr = abs(mb.trace((a, b)))
    if tr <= 2.0 + 1e-12:
        raise NotHyperbolic(f"|trace| = {tr:.6g} for word {word}")
    length = 2.0 * float(np.arccosh(tr / 2.0))
    z0, ang0 = mb.axis_base_tangent((a, b))
    base = wrap_tangent(model, UnitTangent(complex(z0), float(ang0)))
    if model.kind == "fuchsian":
        return PeriodicOrbit(word, length, base, model)
    if model.kind != "conformal":
        raise ValueError("close_geodesic needs a fuchsian or conformal model")
    length_ref, base_ref = _refine_conformal(model, (a, b), base, length)
    orbit = PeriodicOrbit(word, length_ref, base_ref, model, refined=True)
    return orbit


# -- conformal refinement --------------------------------------------------------

def _segment_lengths_grad(model, z, w_next):
    """Discrete conformal lengths of consecutive nodes and their z-gradients.

    Nodes z (complex array); the last segment closes through the deck map
    w_next applied to z[0].  Length element: trapezoid of e^u times the
    hyperbolic distance.  Returns (total, grad) with grad as complex array
    (d/dx + i d/dy convention).
    """
    zc = np.concatenate([z, [mb.apply(w_next, z[0])]])
    u, ux, uy, _ = model.conformal_exponent(zc)
    eu = np.exp(u)
    gu = (ux + 1j * uy) * eu
    z1, z2 = zc[:-1], zc[1:]
    # hyperbolic distance and its complex gradients
    P1 = 1.0 - np.abs(z1) ** 2
    P2 = 1.0 - np.abs(z2) ** 2
    D = np.abs(z1 - z2) ** 2
    arg = 1.0 + 2.0 * D / (P1 * P2)
    d = np.arccosh(arg)
    dden = np.sqrt(arg ** 2 - 1.0)
    # d(arg)/dz1 (complex gradient of a real function)
    g_arg_1 = (2.0 * (z1 - z2) / (P1 * P2) + 2.0 * D * z1 / (P1 ** 2 * P2)) * 2.0
    g_arg_2 = (2.0 * (z2 - z1) / (P1 * P2) + 2.0 * D * z2 / (P1 * P2 ** 2)) * 2.0
    gd1 = g_arg_1 / dden
    gd2 = g_arg_2 / dden
    w = 0.5 * (eu[:-1] + eu[1:])
    total = float((w * d).sum())
    grad = np.zeros(len(zc), complex)
    grad[:-1] += 0.5 * gu[:-1] * d + w * gd1
    grad[1:] += 0.5 * gu[1:] * d + w * gd2
    # fold the closing node's gradient back onto z[0] through the deck map
    dW = mb.derivative(w_next, z[0])
    out = grad[:-1].copy()
    out[0] += np.conj(dW) * grad[-1]
    return total, out


def _refine_conformal(model, deck, base, length0, node_spacing=0.05,
                      grad_tol=1e-10, max_iter=4000):
    """Minimize discrete length over broken geodesics in the fixed class."""
    n = max(8, int(np.ceil(length0 / node_spacing)))
    s = length0 * np.arange(n) / n
    z = mb.geodesic_point(base.position, base.direction, s)
    val, grad = _segment_lengths_grad(model, z, deck)
    step = 0.1
    for it in range(max_iter):
        gn = float(np.abs(grad).max())
        if gn < grad_tol:
            break
        z_new = z - step * grad
        if np.abs(z_new).max() > 0.999:
            step *= 0.5
            continue
        val_new, grad_new = _segment_lengths_grad(model, z_new, deck)
        if val_new <= val:
            z, val, grad = z_new, val_new, grad_new
            step = min(step * 1.3, 2.0)
        else:
            step *= 0.5
            if step < 1e-14:
                break
    else:
        raise NoConvergence(max_iter, gn)
    if float(np.abs(grad).max()) > grad_tol and step < 1e-14:
        raise NoConvergence(it, float(np.abs(grad).max()))
    ang0 = mb.direction_to(z[0], z[1])
    base_ref = wrap_tangent(model, UnitTangent(complex(z[0]), float(ang0)))
    return _shoot_close(model, base_ref, val)


def _closure_gap(model, v, length):
    """Endpoint mismatch after flowing for `length`: (complex gap, angle gap)."""
    ze, ae, _ = flow_arrays(model, [v.position], [v.direction], length, 1e-3)
    z_end, a_end = complex(ze[0]), float(ae[0])
    a, b, _ = model.deck_ball(6.0)
    imgs = mb.apply((a, b), z_end)
    i = int(np.argmin(np.abs(imgs - v.position)))
    dz = imgs[i] - v.position
    da = (a_end - 2.0 * np.angle(np.conj(b[i]) * z_end + np.conj(a[i])) - v.direction
          + np.pi) % (2.0 * np.pi) - np.pi
    return dz, da


def _shoot_close(model, v, length, tol=1e-9, max_iter=12):
    """Newton-polish (offset, angle, period) until the orbit closes."""
    x = np.zeros(3)

    def state(x):
        z = mb.perpendicular_offset(v.position, v.direction, x[0]) if x[0] else v.position
        vv = UnitTangent(complex(z), (v.direction + x[1]) % (2 * np.pi))
        dz, da = _closure_gap(model, vv, length + x[2])
        return vv, np.array([dz.real, dz.imag, da])

    vv, F = state(x)
    for _ in range(max_iter):
        if np.abs(F).max() < tol:
            break
        J = np.zeros((3, 3))
        eps = 1e-7
        for j in range(3):
            xp = x.copy()
            xp[j] += eps
            J[:, j] = (state(xp)[1] - F) / eps
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        x = x + dx
        vv, F = state(x)
    return length + float(x[2]), wrap_tangent(model, vv)


# -- classification and potentials ------------------------------------------------

def classify_regular(model, orbit, T=1.0, eta_sing=1e-4):
    """Regular iff the window index lambda_T exceeds eta_sing somewhere on the orbit.

    Strictly negative curvature along the trajectory short-circuits to True;
    otherwise the periodic Riccati sweep decides.
    """
    if model.kind == "synthetic":
        K_vals = _periodic_curvature(model, orbit, _TRAJECTORY_H)
    else:
        pos, _ = orbit.trajectory(_TRAJECTORY_H)
        K_vals = np.asarray(model.curvature_at(pos), float)
        if K_vals.max() < -1e-3:
            return True
    lamT = _periodic_lambda_T(K_vals, _TRAJECTORY_H, T)
    return bool(lamT.max() > eta_sing)


def _periodic_curvature(model, orbit, h):
    n = max(8, int(round(orbit.length / h)))
    ts = orbit.length * np.arange(n) / n
    return np.asarray(model.curvature_at(orbit.base.position + ts), float)


def _periodic_lambda_T(K_period, h, T, T_conv=200.0):
    """lambda_T over one period from periodic curvature samples (no flow needed)."""
    n = len(K_period)
    m_T = int(np.ceil(T / h))
    T_eff = m_T * h
    burn = int(np.ceil(T_conv / h))
    pad = burn + 2 * m_T + 2
    reps = int(np.ceil(pad / n)) + 2
    tiled = np.tile(K_period, 2 * reps + 1)
    # half-step curvature samples via midpoint interpolation of the tiling
    half = np.empty(2 * len(tiled) - 1)
    half[::2] = tiled
    half[1::2] = 0.5 * (tiled[:-1] + tiled[1:])
    U = np.array([0.0, riccati.LAMBDA_CAP])
    rec_f = riccati._rk4_riccati_sweep(half[:, None], h, U[None, :], record=True)[:, 0]
    rec_b = riccati._rk4_riccati_sweep(half[::-1][:, None], h, U[None, :], record=True)[:, 0]
    ku_lo = rec_f[:, 0]
    ks_lo = rec_b[::-1, 0]
    lam_lo = np.minimum(ku_lo, ks_lo)
    # keep a window [start - m_T, start + n + m_T] fully burned in on both sides
    start = len(tiled) // 2 - n // 2
    lam_win = lam_lo[start - m_T: start + n + m_T + 1]
    return riccati.moving_window_integral(lam_win, h, T_eff)


def synthetic_closed_orbit(model, period):
    """Notional closed orbit of a synthetic model (profile treated as periodic)."""
    if model.kind != "synthetic":
        raise ValueError("needs a synthetic model")
    word = GroupWord((0,))
    return PeriodicOrbit(word, float(period), UnitTangent(0.0, 0.0), model)


def orbit_potential(orbit, potential):
    """Phi(gamma): closed-loop quadrature of the potential, cached by name.

    Geometric potentials use the periodic Riccati solution along the loop;
    q-scalings reuse the cached unit integral.
    """
    potential = as_potential(potential)
    model = orbit.model
    if isinstance(potential, ConstantPotential):
        return potential.value * orbit.length
    if potential.is_geometric:
        if "phi_u" not in orbit.phi_cache:
            orbit.phi_cache["phi_u"] = _orbit_phi_geometric(model, orbit)
        return potential.scale * orbit.phi_cache["phi_u"]
    if potential.name in orbit.phi_cache:
        return orbit.phi_cache[potential.name]
    h = _TRAJECTORY_H
    if model.kind == "synthetic":
        n = max(8, int(round(orbit.length / h)))
        ts = orbit.base.position + orbit.length * np.arange(n) / n
        vals = potential.batch(model, ts, None)
    else:
        pos, dirs = orbit.trajectory(h)
        vals = potential.batch(model, pos, dirs)
    out = float(vals.mean() * orbit.length)  # uniform weights: periodic trapezoid
    orbit.phi_cache[potential.name] = out
    return out


def _orbit_phi_geometric(model, orbit):
    h = _TRAJECTORY_H
    if model.kind == "synthetic":
        K_vals = _periodic_curvature(model, orbit, h)
    else:
        pos, _ = orbit.trajectory(h)
        K_vals = np.asarray(model.curvature_at(pos), float)
    ku = _periodic_unstable(K_vals, h)
    phi = riccati.geometric_potential_from(ku, K_vals)
    return float(phi.mean() * orbit.length)


def _periodic_unstable(K_period, h, T_conv=200.0):
    """k_u around the loop: bracket midpoint of the periodic Riccati solution."""
    n = len(K_period)
    burn = int(np.ceil(T_conv / h))
    reps = int(np.ceil(burn / n)) + 1
    tiled = np.tile(K_period, reps + 1)
    half = np.empty(2 * len(tiled) - 1)
    half[::2] = tiled
    half[1::2] = 0.5 * (tiled[:-1] + tiled[1:])
    U = np.array([0.0, riccati.LAMBDA_CAP])
    rec = riccati._rk4_riccati_sweep(half[:, None], h, U[None, :], record=True)[:, :, 0]
    lo, hi = rec[-n:, 0], rec[-n:, 1]
    ku = np.maximum(0.5 * (lo + hi), 0.0)
    return np.roll(ku, 0)  # last n samples align with loop phase 0..n-1


# -- tables -----------------------------------------------------------------------

@dataclass
class OrbitTable:
    """Closed orbits sorted by length, plus completeness metadata."""
    orbits: list
    complete_up_to: float
    max_word_len: int
    length_cap: float

    def __iter__(self):
        return iter(self.orbits)

    def __len__(self):
        return len(self.orbits)

    def in_window(self, t, Delta):
        return [o for o in self.orbits if t - Delta < o.length <= t]


def build_orbit_table(model, max_word_len, length_cap, classify_T=1.0, eta_sing=1e-4):
    """Enumerate, close, and classify all orbits with length <= length_cap.

    `complete_up_to` is min(length_cap, (L+1) * r_min) with r_min the smallest
    observed geodesic-length-per-letter ratio: any class missing from word
    length <= L must be at least that long.
    """
    classes, min_ratio = _enumerate_with_stats(model, max_word_len, length_cap)
    orbits = []
    for word in classes:
        orbit = close_geodesic(model, word)
        if orbit.length <= length_cap:
            orbits.append(orbit)
    orbits.sort(key=lambda o: o.length)
    complete = min(length_cap, (max_word_len + 1) * min_ratio)
    return OrbitTable(orbits, float(complete), max_word_len, float(length_cap))
