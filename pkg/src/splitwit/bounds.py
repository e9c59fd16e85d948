"""Separable bounds of first- and second-order witnesses.

Product states reach every point of the relaxation below, so its maximum
is a valid separable bound:

* first order: ``|u| <= n/2`` per site, ``u = <J>``;
* second order adds per site ``s_i = <J_i^2>`` with ``sum s <= (n/2)(n/2+1)``,
  ``s_i >= u_i^2`` and ``(s_i - u_i^2) + (s_j - u_j^2) >= |u_k|``.

This set is an outer relaxation of the true separable moments, so bounds
never undercount separable values.  The maximization is nonconvex; it is
solved by multistart local ascent without a global certificate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import lgamma, log

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidArgument
from .specs import WitnessSpec

DEFAULT_RESTARTS = 64


@dataclass(frozen=True)
class SeparableBound:
    value: float
    n_a: int
    n_b: int
    u_a: np.ndarray
    u_b: np.ndarray
    s_a: np.ndarray | None = None
    s_b: np.ndarray | None = None

    def features(self, order: int = 2) -> np.ndarray:
        """Point of the relaxed separable set in the witness vector layout."""
        vec = [np.outer(self.u_a, self.u_b).ravel(), self.u_a, self.u_b]
        if order == 2:
            sa = feasible_second(self.u_a) if self.s_a is None else self.s_a
            sb = feasible_second(self.u_b) if self.s_b is None else self.s_b
            vec += [sa, sb]
        return np.concatenate(vec)


def fibonacci_sphere(count: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Quasi-uniform unit vectors, optionally under a random global rotation."""
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    r = np.sqrt(np.maximum(0.0, 1 - z * z))
    phi = np.pi * (1 + 5**0.5) * i
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    if rng is not None:
        q, rr = np.linalg.qr(rng.normal(size=(3, 3)))
        pts = pts @ (q * np.sign(np.diag(rr)))
    return pts


def _unit_rows(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norm = np.linalg.norm(g, axis=-1)
    ok = norm > 1e-300
    out = np.zeros_like(g)
    out[ok] = g[ok] / norm[ok, None]
    return out, ok


# ---------------------------------------------------------------------------
# first order: alternating ascent over two balls
# ---------------------------------------------------------------------------

def _first_order_objective(spec, u, v):
    return np.einsum("qi,ij,qj->q", u, spec.alpha_ij, v) + u @ spec.alpha_bar + v @ spec.alpha


def _alternating_ascent(spec: WitnessSpec, r_a, r_b, v0: np.ndarray,
                        tol: float = 1e-12, max_iter: int = 20000):
    """Batched ascent: exact best response of one site given the other.

    Returns final ``(u, v, values)`` and the per-iteration objective history
    (used to check monotonicity).
    """
    mat = spec.alpha_ij
    r_a = np.broadcast_to(np.asarray(r_a, float), (len(v0),))
    r_b = np.broadcast_to(np.asarray(r_b, float), (len(v0),))
    v = v0.copy()
    u = np.zeros_like(v)
    history = []
    prev = None
    scale = 1.0 + np.abs(spec.to_vector()).max() * (1 + r_a.max()) * (1 + r_b.max())
    for _ in range(max_iter):
        g = v @ mat.T + spec.alpha_bar
        unit, ok = _unit_rows(g)
        # zero gradient: keep the previous u
        u = np.where(ok[:, None], r_a[:, None] * unit, u)
        h = u @ mat + spec.alpha
        unit, ok = _unit_rows(h)
        v = np.where(ok[:, None], r_b[:, None] * unit, v)
        val = _first_order_objective(spec, u, v)
        history.append(val)
        if prev is not None and np.all(np.abs(val - prev) < tol * scale):
            break
        prev = val
    return u, v, val, history


def _polish_first_order(spec: WitnessSpec, r_a, r_b, v):
    """Local BFGS over the B sphere with the A site solved exactly.

    For fixed ``v`` the best ``u`` is ``r_a (Mv + abar)/|Mv + abar|``, so
    the objective becomes ``r_a |Mv + abar| + a.v``.
    """
    if r_a == 0 or r_b == 0 or not np.any(v):
        return None
    v0 = v / np.linalg.norm(v)
    tangent = np.linalg.svd(v0[None, :])[2][1:].T          # (3, 2) basis orthogonal to v0

    def neg(x):
        w = v0 + tangent @ x
        wn = np.linalg.norm(w)
        vv = r_b * w / wn
        g = spec.alpha_ij @ vv + spec.alpha_bar
        gn = np.linalg.norm(g)
        val = r_a * gn + spec.alpha @ vv
        dv = r_a * spec.alpha_ij.T @ g / max(gn, 1e-300) + spec.alpha
        what = w / wn
        grad = tangent.T @ (r_b / wn * (dv - what * (what @ dv)))
        return -val, -grad

    res = minimize(neg, np.zeros(2), jac=True, method="BFGS",
                   options={"gtol": 1e-10 * (1 + r_a * r_b), "maxiter": 200})
    w = v0 + tangent @ res.x
    vv = r_b * w / np.linalg.norm(w)
    g = spec.alpha_ij @ vv + spec.alpha_bar
    norm = np.linalg.norm(g)
    if norm == 0:
        return None
    u = r_a * g / norm
    return float(_first_order_objective(spec, u[None], vv[None])[0]), u, vv


def bound_first_order(spec: WitnessSpec, r_a: float, r_b: float,
                      restarts: int = DEFAULT_RESTARTS, seed=0) -> SeparableBound:
    """Max of ``u.M v + abar.u + a.v`` over ``|u| <= r_a``, ``|v| <= r_b``.

    For the witness with ``n_a`` and ``n_b`` atoms, ``r = n/2``.
    """
    if r_a < 0 or r_b < 0:
        raise InvalidArgument("radii must be >= 0")
    if spec.order != 1:
        spec = _first_order_part(spec)
    return _first_order_batch(spec, [(2 * r_a, 2 * r_b)], restarts, seed)[0]


def _first_order_batch(spec: WitnessSpec, pairs, restarts: int, seed,
                       ascent_iter: int = 400, polish: int = 2) -> list[SeparableBound]:
    """First-order bounds for many atom partitions in one batched ascent.

    Starts whose ascent has not settled after ``ascent_iter`` sweeps (slow
    when singular values of ``alpha_ij`` nearly coincide) are finished by
    ``_polish_first_order``; the best ``polish`` starts per partition are used.
    """
    rng = np.random.default_rng(seed)
    unit = fibonacci_sphere(max(restarts, 1), rng)
    m = len(unit)
    na = np.repeat([p[0] for p in pairs], m).astype(float)
    nb = np.repeat([p[1] for p in pairs], m).astype(float)
    v0 = np.tile(unit, (len(pairs), 1)) * (nb / 2)[:, None]
    u, v, val, hist = _alternating_ascent(spec, na / 2, nb / 2, v0, max_iter=ascent_iter)
    scale = 1.0 + np.abs(spec.to_vector()).max() * (1 + na.max() / 2) * (1 + nb.max() / 2)
    moving = (np.abs(hist[-1] - hist[-2]) > 1e-12 * scale) if len(hist) > 1 else np.zeros(len(val), bool)
    out = []
    for i, (a, b) in enumerate(pairs):
        sl = slice(i * m, (i + 1) * m)
        vals = val[sl]
        j = int(np.argmax(vals))
        best = (float(vals[j]), u[sl][j], v[sl][j])
        if moving[sl].any():
            for j in np.argsort(vals)[::-1][:polish]:
                cand = _polish_first_order(spec, a / 2, b / 2, v[sl][j])
                if cand is not None and cand[0] > best[0]:
                    best = cand
        out.append(SeparableBound(best[0], a, b, best[1], best[2]))
    return out


def _first_order_part(spec: WitnessSpec) -> WitnessSpec:
    if spec.has_squares:
        raise InvalidArgument("spec has second-moment terms; use bound_second_order")
    return WitnessSpec(1, spec.alpha_ij, spec.alpha_bar, spec.alpha)


# ---------------------------------------------------------------------------
# second order
# ---------------------------------------------------------------------------

# rows of G t <= h for the excess variances t_i = s_i - u_i^2
_G = np.array([
    [-1, 0, 0], [0, -1, 0], [0, 0, -1],
    [0, -1, -1], [-1, 0, -1], [-1, -1, 0],
    [1, 1, 1],
], dtype=float)


def feasible_second(u: np.ndarray) -> np.ndarray:
    """Squares ``s = u^2 + t`` with the smallest excess meeting ``t_i + t_j >= |u_k|``.

    Valid whenever ``|u| <= n/2``; used when the spec has no square terms.
    """
    a = np.abs(u)
    return u**2 + np.maximum(0.0, 0.5 * a.sum(axis=-1, keepdims=True) - a)


def _vertex_maps():
    """Linear maps from ``(|u_x|, |u_y|, |u_z|, budget)`` to candidate vertices.

    Every vertex of the polytope solves three active rows of ``G t = h`` and
    ``h`` is linear in the four inputs, so vertices and slacks are too.
    """
    h_of = np.zeros((7, 4))
    h_of[3, 0] = h_of[4, 1] = h_of[5, 2] = -1.0
    h_of[6, 3] = 1.0
    verts, slacks = [], []
    for tri in itertools.combinations(range(len(_G)), 3):
        sub = _G[list(tri)]
        if abs(np.linalg.det(sub)) > 1e-9:
            vmap = np.linalg.inv(sub) @ h_of[list(tri)]        # (3, 4)
            verts.append(vmap)
            slacks.append(h_of - _G @ vmap)                    # (7, 4)
    return np.array(verts), np.array(slacks)


_VERT_MAPS, _SLACK_MAPS = _vertex_maps()
_NV = len(_VERT_MAPS)
_VERT_FLAT = _VERT_MAPS.transpose(2, 0, 1).reshape(4, -1)       # (4, V*3)
_SLACK_FLAT = _SLACK_MAPS.transpose(2, 0, 1).reshape(4, -1)     # (4, V*7)


def excess_lp(weights: np.ndarray, abs_u: np.ndarray, budget: np.ndarray):
    """Maximize ``weights . t`` over the excess-variance polytope, batched.

    Constraints: ``t >= 0``, ``t_i + t_j >= |u_k|``, ``sum t <= budget``.
    Solved exactly by enumerating the vertices of the 3-d polytope.
    ``weights`` is ``(3,)``; ``abs_u`` is ``(Q, 3)``; ``budget`` is ``(Q,)``.
    """
    q = abs_u.shape[0]
    hv = np.column_stack([abs_u, budget])                          # (Q, 4)
    verts = (hv @ _VERT_FLAT).reshape(q, _NV, 3)
    slack = (hv @ _SLACK_FLAT).reshape(q, _NV, 7)
    scale = 1e-14 * (1.0 + np.abs(hv).max(axis=1))
    feasible = slack.min(axis=2) >= -scale[:, None]
    vals = np.where(feasible, verts @ weights, -np.inf)
    best = np.argmax(vals, axis=1)
    t = verts[np.arange(q), best]
    out = vals[np.arange(q), best]
    if not np.all(np.isfinite(out)):
        # numerically infeasible points (|u| marginally above n/2): fall back to t = |u| pattern
        bad = ~np.isfinite(out)
        t[bad] = 0.5 * abs_u[bad].sum(axis=1)[:, None] - abs_u[bad]
        t[bad] = np.maximum(t[bad], 0)
        out[bad] = t[bad] @ weights
    return out, t


def _site_value(u, lin, sq, casimir):
    """``lin.u + sq.s`` maximized over the admissible second moments ``s``."""
    abs_u = np.abs(u)
    budget = casimir - np.einsum("qi,qi->q", u, u)
    lp, t = excess_lp(sq, abs_u, np.maximum(budget, 0.0))
    return u @ lin + (u * u) @ sq + lp, u * u + t


def _project(x, radius):
    norm = np.linalg.norm(x, axis=-1)
    factor = np.where(norm > radius, radius / np.maximum(norm, 1e-300), 1.0)
    return x * factor[..., None]


class _SecondOrderProblem:
    def __init__(self, spec: WitnessSpec, n_a, n_b):
        self.spec = spec
        self.n_a = np.asarray(n_a, float)
        self.n_b = np.asarray(n_b, float)
        self.r_a = self.n_a / 2
        self.r_b = self.n_b / 2
        self.cas_a = self.r_a * (self.r_a + 1)
        self.cas_b = self.r_b * (self.r_b + 1)

    def evaluate(self, x, idx):
        """Objective for positions ``x`` (Q, 6) belonging to problems ``idx``."""
        s = self.spec
        u = _project(x[:, :3], self.r_a[idx])
        v = _project(x[:, 3:], self.r_b[idx])
        bil = np.einsum("qi,ij,qj->q", u, s.alpha_ij, v)
        ha, sa = _site_value(u, s.alpha_bar, s.alpha2_bar, self.cas_a[idx])
        hb, sb = _site_value(v, s.alpha, s.alpha2, self.cas_b[idx])
        return bil + ha + hb, u, v, sa, sb


def _random_ascent(prob, x, idx, step, rng, iterations):
    val = prob.evaluate(x, idx)[0]
    for _ in range(iterations):
        trial = x + step[:, None] * rng.normal(size=x.shape)
        tval = prob.evaluate(trial, idx)[0]
        better = tval > val
        x = np.where(better[:, None], trial, x)
        val = np.where(better, tval, val)
        step = np.where(better, step * 1.6, step * 0.85)
    return x, val


# unordered (i, j) pairs with the remaining component k
_PAIRS = ((1, 2, 0), (0, 2, 1), (0, 1, 2))


def _site_constraints(x, r):
    """Lifted single-site constraints on ``(u, s)``, all ``>= 0``, with Jacobian."""
    u, s = x[:3], x[3:]
    ex = s - u * u
    vals = [r * r - u @ u, r * (r + 1) - s.sum()]
    jac = np.zeros((11, 6))
    jac[0, :3] = -2 * u
    jac[1, 3:] = -1
    vals += list(ex)
    for i in range(3):
        jac[2 + i, i] = -2 * u[i]
        jac[2 + i, 3 + i] = 1
    row = 5
    for i, j, k in _PAIRS:
        for sign in (1.0, -1.0):
            vals.append(ex[i] + ex[j] - sign * u[k])
            jac[row, [i, j]] = -2 * u[[i, j]]
            jac[row, [3 + i, 3 + j]] = 1
            jac[row, k] = -sign
            row += 1
    return np.array(vals), jac


def _polish_second_order(spec: WitnessSpec, n_a, n_b, x0):
    """SLSQP on ``(u_a, s_a, u_b, s_b)`` from an ascent point.

    Random ascent crawls along the ridges where some ``u_k`` vanishes (the
    ``|u_k|`` kinks); splitting ``|u_k|`` into two smooth constraints lets a
    gradient method follow them. Returns the polished ``(u_a, u_b)``.
    """
    ra, rb = n_a / 2, n_b / 2
    m = spec.alpha_ij
    lin = np.concatenate([spec.alpha_bar, spec.alpha2_bar, spec.alpha, spec.alpha2])

    def neg(x):
        ua, ub = x[:3], x[6:9]
        grad = lin.copy()
        grad[:3] += m @ ub
        grad[6:9] += m.T @ ua
        return -(ua @ m @ ub + lin @ x), -grad

    def cons(x):
        return np.concatenate([_site_constraints(x[:6], ra)[0], _site_constraints(x[6:], rb)[0]])

    def cons_jac(x):
        jac = np.zeros((22, 12))
        jac[:11, :6] = _site_constraints(x[:6], ra)[1]
        jac[11:, 6:] = _site_constraints(x[6:], rb)[1]
        return jac

    res = minimize(neg, x0, jac=True, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                   options={"ftol": 1e-13, "maxiter": 300})
    return res.x[:3], res.x[6:9]


def _second_order_batch(spec: WitnessSpec, pairs, restarts: int, seed,
                        iterations: int = 250, refine_iterations: int = 250,
                        polish: int = 3):
    """Bounds for many ``(n_a, n_b)`` at once via batched adaptive random ascent.

    A global phase runs ``restarts`` walkers per partition; a refinement
    phase restarts small-step walkers from the four best points, and the
    ``polish`` best distinct points are finished by ``_polish_second_order``.
    """
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    prob = _SecondOrderProblem(spec, pairs[:, 0], pairs[:, 1])
    rng = np.random.default_rng(seed)
    m = len(pairs)
    p = max(int(restarts), 16)
    ra, rb = prob.r_a, prob.r_b
    # starts: origin, axis-aligned points, then random points in the balls
    fixed = [np.zeros(6)]
    for i in range(3):
        for sa_ in (1, -1):
            for sb_ in (1, -1, 0):
                e = np.zeros(6)
                e[i] = sa_
                e[3 + i] = sb_
                fixed.append(e)
    fixed = np.array(fixed)[: p // 2]
    n_rand = p - len(fixed)
    rand = rng.normal(size=(m, n_rand, 6))
    rand *= (rng.uniform(0, 1, size=(m, n_rand, 1)) ** (1 / 6)
             / np.linalg.norm(rand, axis=2, keepdims=True))
    starts = np.concatenate([np.broadcast_to(fixed, (m, len(fixed), 6)), rand], axis=1)
    radius = np.stack([ra] * 3 + [rb] * 3, axis=1)[:, None, :]
    x = (starts * radius).reshape(-1, 6)
    idx = np.repeat(np.arange(m), p)
    big = np.maximum(np.maximum(ra, rb), 0.5)
    x, val = _random_ascent(prob, x, idx, np.repeat(0.25 * big, p), rng, iterations)

    keep = 4
    x_all = x.reshape(m, p, 6)
    top = np.argsort(-val.reshape(m, p), axis=1)[:, :keep]
    seeds = np.take_along_axis(x_all, top[:, :, None], axis=1)
    reps = max(p // keep, 2)
    x2 = np.repeat(seeds, reps, axis=1).reshape(-1, 6)
    idx2 = np.repeat(np.arange(m), keep * reps)
    step2 = np.repeat(1e-3 * big, keep * reps) * np.tile(np.logspace(0, -4, reps), m * keep)
    x2, val2 = _random_ascent(prob, x2, idx2, step2, rng, refine_iterations)
    x2 = np.concatenate([x2.reshape(m, -1, 6), x_all], axis=1)
    val2 = np.concatenate([val2.reshape(m, -1), val.reshape(m, p)], axis=1)
    best = np.argmax(val2, axis=1)
    best_x = x2[np.arange(m), best]
    best_val = val2[np.arange(m), best]
    if polish:
        v, u, w, sa, sb = prob.evaluate(x2.reshape(-1, 6), np.repeat(np.arange(m), x2.shape[1]))
        v, u, w = v.reshape(m, -1), u.reshape(m, -1, 3), w.reshape(m, -1, 3)
        sa, sb = sa.reshape(m, -1, 3), sb.reshape(m, -1, 3)
        for j in range(m):
            done = []
            for c in np.argsort(-v[j]):
                if len(done) == polish:
                    break
                pt = np.concatenate([u[j, c], w[j, c]])
                if any(np.linalg.norm(pt - d) < 1e-3 * (1 + big[j]) for d in done):
                    continue
                done.append(pt)
                x0 = np.concatenate([u[j, c], sa[j, c], w[j, c], sb[j, c]])
                pu, pv = _polish_second_order(spec, pairs[j, 0], pairs[j, 1], x0)
                # re-score with the exact inner problem at the projected point
                cand = np.concatenate([pu, pv])[None]
                cval = prob.evaluate(cand, np.array([j]))[0][0]
                if cval > best_val[j]:
                    best_val[j], best_x[j] = cval, cand[0]
    v, u, w, sa, sb = prob.evaluate(best_x, np.arange(m))
    return [SeparableBound(float(v[j]), int(pairs[j, 0]), int(pairs[j, 1]),
                           u[j], w[j], sa[j], sb[j]) for j in range(m)]


def bound_second_order(spec: WitnessSpec, n_a: int, n_b: int,
                       restarts: int = DEFAULT_RESTARTS, seed=0) -> SeparableBound:
    if n_a < 0 or n_b < 0:
        raise InvalidArgument("atom numbers must be >= 0")
    spec = spec.as_order2()
    if not spec.has_squares:
        b = bound_first_order(_first_order_part(spec), n_a / 2, n_b / 2, restarts, seed)
        return SeparableBound(b.value, n_a, n_b, b.u_a, b.u_b,
                              feasible_second(b.u_a), feasible_second(b.u_b))
    return _second_order_batch(spec, [(n_a, n_b)], restarts, seed)[0]


def binomial_weights(n_atoms: int, tail_eps: float = 0.0) -> dict[int, float]:
    out = {}
    for k in range(n_atoms + 1):
        w = np.exp(lgamma(n_atoms + 1) - lgamma(k + 1) - lgamma(n_atoms - k + 1) - n_atoms * log(2))
        if w >= tail_eps:
            out[k] = float(w)
    return out


@dataclass
class BoundCache:
    """Memo of per-partition bounds keyed by spec hash, restarts and seed."""

    store: dict = field(default_factory=dict)

    def get(self, key):
        return self.store.get(key)

    def put(self, key, value):
        self.store[key] = value


_DEFAULT_CACHE = BoundCache()


def partition_bounds(spec: WitnessSpec, n_atoms: int, tail_eps: float = 1e-12,
                     restarts: int = DEFAULT_RESTARTS, seed=0,
                     cache: BoundCache | None = _DEFAULT_CACHE,
                     iterations: int = 250, polish: int = 3) -> dict[int, SeparableBound]:
    """Bound for every retained atom partition ``(n_a, N - n_a)``.

    ``iterations`` sets the length of each second-order ascent phase and
    ``polish`` the number of constrained local refinements per partition.
    """
    if n_atoms < 1:
        raise InvalidArgument("n_atoms must be >= 1")
    weights = binomial_weights(n_atoms, tail_eps)
    symmetric = spec.is_symmetric()
    needed = sorted({(min(k, n_atoms - k), max(k, n_atoms - k)) if symmetric else (k, n_atoms - k)
                     for k in weights})
    key = (spec.key(), spec.order, n_atoms, restarts, str(seed), iterations, polish)
    found = {} if cache is None else dict(cache.get(key) or {})
    todo = [pr for pr in needed if pr not in found]
    if todo:
        if spec.order == 2 and spec.has_squares:
            for b in _second_order_batch(spec, todo, restarts, seed, iterations, iterations,
                                         polish):
                found[(b.n_a, b.n_b)] = b
        else:
            for b in _first_order_batch(_first_order_part(spec), todo, restarts, seed):
                if spec.order == 2:
                    b = SeparableBound(b.value, b.n_a, b.n_b, b.u_a, b.u_b,
                                       feasible_second(b.u_a), feasible_second(b.u_b))
                found[(b.n_a, b.n_b)] = b
        if cache is not None:
            cache.put(key, found)
    out = {}
    for k in weights:
        na, nb = k, n_atoms - k
        if (na, nb) in found:
            out[k] = found[(na, nb)]
        else:
            b = found[(nb, na)]
            out[k] = SeparableBound(b.value, na, nb, b.u_b, b.u_a, b.s_b, b.s_a)
    return out


def bound_binomial(spec: WitnessSpec, n_atoms: int, tail_eps: float = 1e-12,
                   restarts: int = DEFAULT_RESTARTS, seed=0,
                   cache: BoundCache | None = _DEFAULT_CACHE) -> float:
    """Binomially averaged separable bound, skipping partitions of weight < tail_eps."""
    weights = binomial_weights(n_atoms, tail_eps)
    parts = partition_bounds(spec, n_atoms, tail_eps, restarts, seed, cache)
    return float(sum(weights[k] * parts[k].value for k in weights))
