"""White-noise robustness of witnesses and the search for optimal ones.

A witness detects the noisy split state ``p rho + (1 - p) noise`` when
``p W_opt + (1 - p) W_noise > w``; the smallest such ``p`` is ``p_star``.
``W_opt`` is maximized over independent local rotations of the two sites.

``search_optimal`` treats the spec as unknown. For fixed rotations the
best spec is the supporting hyperplane at the point where the segment from
the noise moments to the state moments leaves the (binomially averaged)
separable set; that is a linear program over points of the set, which is
grown by column generation using the separable-bound solver as pricing
oracle. Rotations and spec are then improved alternately.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.spatial.transform import Rotation

from .bounds import (BoundCache, binomial_weights, bound_binomial, feasible_second,
                     fibonacci_sphere, partition_bounds)
from .dicke import SymmetricState
from .errors import InvalidArgument
from .momentmap import postsplit_table
from .monomials import MixedMoments
from .noise import detection_tolerance, resolve_backend, white_noise_part_summed
from .specs import SUMMARY_MONOMIALS, MomentSummary, WitnessSpec, euler_matrix
from . import fock4


@dataclass(frozen=True)
class RobustnessResult:
    p_star: float
    detected: bool
    spec: WitnessSpec
    rotation: np.ndarray          # shape (2, 3): ZYZ Euler angles for A and B
    witness_value_opt: float
    bound: float
    noise_value: float


def split_summary(state: SymmetricState, backend: str = "auto") -> MomentSummary:
    """First and second moments of the noiseless split state."""
    if resolve_backend(backend, state.n_atoms) == "oracle":
        table = fock4.moment_table(fock4.split_state(state), SUMMARY_MONOMIALS)
    else:
        table = postsplit_table(state, SUMMARY_MONOMIALS)
    return MomentSummary.from_moments(table)


def noise_summary(n_atoms: int) -> MomentSummary:
    """Moments of the locally white state; only the local squares survive."""
    tab = white_noise_part_summed(n_atoms, SUMMARY_MONOMIALS)
    return MomentSummary.from_moments(MixedMoments(n_atoms, tab))


def _rotation_value(spec_vec, summary: MomentSummary, angles) -> float:
    feats = summary.rotated(euler_matrix(angles[:3]), euler_matrix(angles[3:])).feature_vector()
    return float(spec_vec @ feats[: spec_vec.size])


def optimize_rotations(spec: WitnessSpec, summary, restarts: int = 8, seed=0,
                       tied: bool = False, starts=None):
    """Maximize the witness over local SO(3) rotations of the moments.

    Returns ``(W_opt, angles)`` with ``angles`` of shape (2, 3). Nelder-Mead
    then BFGS from the identity, any given ``starts`` and random Euler angles.
    """
    if isinstance(summary, MixedMoments):
        summary = MomentSummary.from_moments(summary)
    vec = spec.to_vector()
    rng = np.random.default_rng(seed)
    dim = 3 if tied else 6

    def full(x):
        return np.concatenate([x, x]) if tied else x

    def neg(x):
        return -_rotation_value(vec, summary, full(x))

    inits = [np.zeros(dim)]
    if starts is not None:
        inits += [np.asarray(s, float).ravel()[:dim] for s in starts]
    inits += [Rotation.random(2, random_state=rng).as_euler("ZYZ").ravel()[:dim]
              for _ in range(max(0, restarts - 1))]
    scale = 1.0 + abs(neg(inits[0]))
    best_val, best_x = -np.inf, inits[0]
    opts = dict(xatol=1e-6, fatol=1e-10 * scale, maxiter=1000 * dim, maxfev=1000 * dim)
    for x0 in inits:
        res = minimize(neg, x0, method="Nelder-Mead", options=opts)
        # smooth objective: finish with quasi-Newton
        pol = minimize(neg, res.x, method="BFGS", options={"gtol": 1e-9 * scale})
        if pol.fun < res.fun:
            res = pol
        if -res.fun > best_val:
            best_val, best_x = -res.fun, res.x
    return float(best_val), full(best_x).reshape(2, 3)


def _p_star(w_opt, bound, w_noise, n_atoms):
    if w_opt <= bound + detection_tolerance(n_atoms):
        return 1.0, False
    return float(np.clip((bound - w_noise) / (w_opt - w_noise), 0.0, 1.0)), True


def robustness(spec: WitnessSpec, state: SymmetricState, backend: str = "auto",
               restarts: int = 8, seed=0, bound_restarts: int = 64,
               tail_eps: float = 1e-12, summary: MomentSummary | None = None,
               cache: BoundCache | None = None) -> RobustnessResult:
    """Minimal white-noise survival probability at which ``spec`` still detects."""
    if spec.order not in (1, 2):
        raise InvalidArgument("spec order must be 1 or 2")
    spec = spec.normalized()
    n = state.n_atoms
    if summary is None:
        summary = split_summary(state, backend)
    w_opt, angles = optimize_rotations(spec, summary, restarts, seed)
    kw = {} if cache is None else {"cache": cache}
    bound = bound_binomial(spec, n, tail_eps, bound_restarts, seed, **kw)
    w_noise = float(spec.to_vector() @ noise_summary(n).feature_vector()[: spec.to_vector().size])
    p, ok = _p_star(w_opt, bound, w_noise, n)
    return RobustnessResult(p, ok, spec, angles, w_opt, bound, w_noise)


# ---------------------------------------------------------------------------
# column generation
# ---------------------------------------------------------------------------

def _symmetric_basis(order: int) -> np.ndarray:
    """Orthonormal basis of party-exchange-symmetric coefficient vectors."""
    size = 15 if order == 1 else 21
    cols = []
    for i in range(3):
        for j in range(i, 3):
            v = np.zeros(size)
            v[3 * i + j] = v[3 * j + i] = 1.0
            cols.append(v)
    for start in (9,) if order == 1 else (9, 15):
        for i in range(3):
            v = np.zeros(size)
            v[start + i] = v[start + 3 + i] = 1.0
            cols.append(v)
    basis = np.array(cols).T
    return basis / np.linalg.norm(basis, axis=0)


def _seed_points(n_a, n_b, order, directions):
    """Valid separable points with both mean spins on their spheres."""
    pts = fibonacci_sphere(directions)
    ua = np.repeat(pts, len(pts), axis=0) * (n_a / 2)
    ub = np.tile(pts, (len(pts), 1)) * (n_b / 2)
    cross = np.einsum("qi,qj->qij", ua, ub).reshape(len(ua), 9)
    out = np.hstack([cross, ua, ub])
    if order == 2:
        out = np.hstack([out, feasible_second(ua), feasible_second(ub)])
    return out


LP_TAIL = 1e-7


def _solve_lp(c, a_eq, b_eq, bounds):
    """``linprog`` with fallbacks for HiGHS numerical trouble; returns ``x`` and equality duals."""
    scale = np.abs(a_eq).max(axis=1)
    scale[scale == 0] = 1.0
    attempts = [(1.0, {"method": "highs"}),
                (scale, {"method": "highs"}),
                (scale, {"method": "highs-ipm"}),
                (scale, {"method": "highs", "options": {"presolve": False}})]
    for sc, kw in attempts:
        sc = np.broadcast_to(sc, scale.shape)
        res = linprog(c, A_eq=a_eq / sc[:, None], b_eq=b_eq / sc, bounds=bounds, **kw)
        if res.status == 0:
            return res.x, res.eqlin.marginals / sc
    raise RuntimeError(f"column LP failed: {res.message}")


class _ColumnPool:
    """Points of the separable set per atom partition, in reduced coordinates.

    The first column of every partition is its locally white point.
    """

    def __init__(self, n_atoms, order, symmetric, tail_eps, restarts, seed, directions=8,
                 iterations=80, polish=1):
        self.n, self.order, self.symmetric = n_atoms, order, symmetric
        self.iterations, self.polish = iterations, polish
        self.weights = binomial_weights(n_atoms, tail_eps)
        self.keys = sorted(self.weights)
        self.restarts, self.seed = restarts, seed
        size = 15 if order == 1 else 21
        self.basis = _symmetric_basis(order) if symmetric else np.eye(size)
        self.cache = BoundCache()
        self.cols = {}
        for k in self.keys:
            noise = self._project(self._noise_point(k))[None, :]
            seeds = self._project(_seed_points(k, n_atoms - k, order, directions).T).T
            self.cols[k] = [noise, seeds]
        self.noise = sum(self.weights[k] * self.cols[k][0][0] for k in self.keys)
        self.active = [k for k in self.keys if self.weights[k] >= LP_TAIL]
        self.pinned = sum((self.weights[k] * self.cols[k][0][0] for k in self.keys
                           if self.weights[k] < LP_TAIL), np.zeros_like(self.noise))

    def _noise_point(self, k):
        vec = np.zeros(15)
        if self.order == 2:
            ca, cb = k * (k + 2) / 12, (self.n - k) * (self.n - k + 2) / 12
            vec = np.concatenate([vec, np.full(3, ca), np.full(3, cb)])
        return vec

    def _project(self, vec):
        return self.basis.T @ vec

    def spec(self, alpha_red) -> WitnessSpec:
        spec = WitnessSpec.from_vector(self.basis @ alpha_red)
        return spec.symmetrized() if self.symmetric else spec

    def solve(self, target):
        """Largest ``lam`` with ``noise + lam (target - noise)`` in the pooled hull.

        Block variables carry the partition weight (they sum to ``w_k``).
        Partitions lighter than ``LP_TAIL`` are pinned to their white point,
        which keeps HiGHS away from right-hand sides below its feasibility
        tolerance. Returns ``lam``, the dual spec (scaled so its value on
        the segment direction is 1) and per-partition duals ``z_k``; a point
        ``g`` of partition ``k`` cuts the LP iff ``alpha.g > z_k``.
        """
        d = target - self.noise
        dim = d.size
        blocks = []
        for k in self.active:
            cols = np.vstack(self.cols[k])
            self.cols[k] = [cols]
            blocks.append(cols.T)
        top = np.hstack([-d[:, None]] + blocks)
        conv = np.zeros((len(blocks), top.shape[1]))
        pos = 1
        for i, b in enumerate(blocks):
            conv[i, pos:pos + b.shape[1]] = 1.0
            pos += b.shape[1]
        c = np.zeros(top.shape[1])
        c[0] = -1.0
        a_eq = np.vstack([top, conv])
        b_eq = np.concatenate([self.noise - self.pinned, [self.weights[k] for k in self.active]])
        x, marg = _solve_lp(c, a_eq, b_eq, [(None, None)] + [(0, None)] * (top.shape[1] - 1))
        return float(x[0]), marg[:dim], -marg[dim:]

    def price(self, alpha_red):
        """Best separable point per active partition, and the restricted bound."""
        parts = partition_bounds(self.spec(alpha_red), self.n, 0.0, self.restarts,
                                 self.seed, self.cache, self.iterations, self.polish)
        pts = {k: self._project(parts[k].features(self.order)) for k in self.active}
        bound = sum(self.weights[k] * parts[k].value for k in self.active) + alpha_red @ self.pinned
        return pts, bound

    def generate(self, target, center=None, gap_tol=1e-6, max_rounds=200, beta=0.5):
        """Column generation with in-out dual smoothing for a fixed target.

        Returns ``(p_upper, alpha, lam)``: the best spec found with its true
        ratio and the final LP value, which bounds every spec from below.
        """
        d = target - self.noise
        best_up, best = np.inf, None
        if center is not None and center @ d > 0:
            best = center / (center @ d)
            pts, bound = self.price(best)
            best_up = bound - best @ self.noise
            self._add(pts)
        smooth = beta
        lam = 0.0
        for _ in range(max_rounds):
            lam, a_out, z = self.solve(target)
            if best_up - lam < gap_tol:
                break
            a_sep = a_out if best is None else smooth * best + (1 - smooth) * a_out
            pts, bound = self.price(a_sep)
            up = bound - a_sep @ self.noise
            if up < best_up:
                best_up, best = up, a_sep
            cut = [k for i, k in enumerate(self.active)
                   if a_out @ pts[k] > z[i] + 1e-10 * (1 + abs(z[i]))]
            self._add(pts)
            if not cut:
                if smooth == 0:
                    break
                smooth = 0.0        # mispricing: next round at the LP dual
            else:
                smooth = beta
        return best_up, best, lam

    def _add(self, pts):
        for k, p in pts.items():
            # flush round-off dust (products of ~1e-19 coordinates) that upsets HiGHS
            p = np.where(np.abs(p) < 1e-13 * (1 + np.abs(p).max()), 0.0, p)
            self.cols[k].append(p[None, :])


def search_optimal(state: SymmetricState, order: int, symmetric: bool = False,
                   restarts: int = 200, seed=0, backend: str = "auto",
                   tail_eps: float = 1e-12, pricing_restarts: int = 16,
                   bound_restarts: int = 64, refine: int = 3, alternations: int = 6,
                   gap_tol: float = 1e-6) -> RobustnessResult:
    """Spec (and local rotations) minimizing ``p_star`` for ``state``.

    A priced column-generation pass at the identity rotation fills the pool
    of separable points. Every seeded restart then draws random rotations,
    solves the pooled LP, takes one rotation step for its dual spec and
    solves again; the ``refine`` best starts alternate fully priced spec
    steps with rotation steps. Candidates are ranked by ``robustness`` at
    the full bound budget.
    """
    if order not in (1, 2):
        raise InvalidArgument("order must be 1 or 2")
    if restarts < 1:
        raise InvalidArgument("restarts must be >= 1")
    n = state.n_atoms
    summary = split_summary(state, backend)
    pool = _ColumnPool(n, order, symmetric, tail_eps, pricing_restarts, seed)
    size = 15 if order == 1 else 21
    rng = np.random.default_rng(seed)

    def target(angles):
        feats = summary.rotated(euler_matrix(angles[0]), euler_matrix(angles[1])).feature_vector()
        return pool._project(feats[:size])

    def rotate_for(alpha, angles):
        return optimize_rotations(pool.spec(alpha), summary, restarts=1, seed=seed,
                                  tied=symmetric, starts=[angles.ravel()])[1]

    start = np.zeros((2, 3))
    _, center, _ = pool.generate(target(start), None, gap_tol)

    screened = []
    for r in range(restarts):
        angles = start if r == 0 else Rotation.random(2, random_state=rng).as_euler("ZYZ")
        if symmetric:
            angles[1] = angles[0]
        _, alpha, _ = pool.solve(target(angles))
        angles = rotate_for(alpha, angles)
        lam, _, _ = pool.solve(target(angles))
        screened.append((lam, r, angles))
    screened.sort(key=lambda t: (t[0], t[1]))

    # cheap pricing can flatter a spec, so candidates are ranked at full budget
    candidates = [center]
    for _, _, angles in screened[:refine]:
        last, best = np.inf, (np.inf, center)
        for _ in range(alternations):
            up, alpha, _ = pool.generate(target(angles), center, gap_tol)
            center = alpha
            if up < best[0]:
                best = (up, alpha)
            angles = rotate_for(alpha, angles)
            if up > last - 1e-9:
                break
            last = up
        candidates.append(best[1])
    results = []
    for alpha in candidates:
        spec = pool.spec(alpha).normalized()
        results.append(robustness(spec, state, backend, restarts=8, seed=seed,
                                  bound_restarts=bound_restarts, tail_eps=tail_eps,
                                  summary=summary))
    return min(results, key=lambda res: (not res.detected, res.p_star))
