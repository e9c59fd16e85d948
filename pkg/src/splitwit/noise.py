"""Noise channels, witness evaluation under noise and run-count estimates.

Channels are composed in the order preparation -> frame -> detection:
local white noise (survival probability ``p``), Gaussian phase noise of
std ``sigma_p`` on each site, and Gaussian atom-counting noise of std
``sigma_c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import fock4
from .bounds import bound_binomial, binomial_weights
from .dicke import SymmetricState, spin_operators
from .errors import InvalidArgument
from .momentmap import postsplit_table
from .monomials import (MixedMoments, apply_expansion, canonical, closure,
                        coarse_grain_expansion, split_sites)
from .specs import WitnessSpec, d_spec, s_spec, witness_value, MomentSummary, SUMMARY_MONOMIALS

ORACLE_AUTO_MAX = 20
BACKENDS = ("oracle", "moment-map", "auto")


@dataclass(frozen=True)
class NoiseConfig:
    p: float = 1.0
    sigma_p: float = 0.0   # radians
    sigma_c: float = 0.0   # atoms

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise InvalidArgument(f"p must lie in [0, 1], got {self.p}")
        if self.sigma_p < 0 or self.sigma_c < 0:
            raise InvalidArgument("noise standard deviations must be >= 0")


def resolve_backend(backend: str, n_atoms: int) -> str:
    if backend not in BACKENDS:
        raise InvalidArgument(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "auto":
        return "oracle" if n_atoms <= ORACLE_AUTO_MAX else "moment-map"
    if backend == "oracle" and n_atoms > fock4.ORACLE_MAX_ATOMS:
        raise InvalidArgument(f"oracle backend needs N <= {fock4.ORACLE_MAX_ATOMS}")
    return backend


# ---------------------------------------------------------------------------
# local white noise by summation over the atom partition
# ---------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def mixed_trace(word: tuple, n: int) -> complex:
    """``tr(J_w1 ... J_wd) / (n+1)`` on the n-atom symmetric subspace."""
    if not word:
        return 1.0 + 0j
    if n == 0:
        return 0j
    ops = spin_operators(n)
    mat = sp.identity(n + 1, dtype=complex, format="csr")
    for c in word:
        mat = mat @ ops[c]
    return complex(mat.diagonal().sum() / (n + 1))


def white_noise_part_summed(n_atoms: int, monos) -> dict:
    """Noise-state moments: binomial sum of products of local maximally mixed traces."""
    weights = binomial_weights(n_atoms)
    out = {}
    for m in monos:
        m = canonical(m)
        wa, wb = split_sites(m)
        out[m] = complex(sum(w * mixed_trace(wa, k) * mixed_trace(wb, n_atoms - k)
                             for k, w in weights.items()))
    return out


def white_noise_second_moment(n_atoms: int) -> float:
    """``<(J_i^A)^2>`` of the noise state; equals ``N(N+5)/48``."""
    return white_noise_part_summed(n_atoms, [("Ax", "Ax")])[("Ax", "Ax")].real


def white_mix(moments: MixedMoments, p: float, backend: str = "moment-map") -> MixedMoments:
    if not 0 <= p <= 1:
        raise InvalidArgument(f"p must lie in [0, 1], got {p}")
    if p == 1:
        return moments.with_channel(dict(moments.table), "white")
    if backend == "oracle":
        return fock4.white_noise_moments(moments.n_atoms, p, moments)
    noise = white_noise_part_summed(moments.n_atoms, moments.table)
    return moments.with_channel(
        {m: p * v + (1 - p) * noise[m] for m, v in moments.table.items()}, "white")


def coarse_grain_moments(moments: MixedMoments, sigma_c: float, monos=None) -> MixedMoments:
    """Moments of readings with Gaussian counting noise (see ``coarse_grain_expansion``)."""
    if sigma_c < 0:
        raise InvalidArgument("sigma_c must be >= 0")
    monos = list(moments.table) if monos is None else [canonical(m) for m in monos]
    if sigma_c == 0:
        return moments.with_channel({m: moments[m] for m in monos}, "coarse")
    return apply_expansion(moments, monos, lambda m: coarse_grain_expansion(m, sigma_c), "coarse")


def noisy_moments(state: SymmetricState, monos, noise: NoiseConfig = NoiseConfig(),
                  backend: str = "auto") -> MixedMoments:
    """Post-split moments after white, phase and counting noise."""
    backend = resolve_backend(backend, state.n_atoms)
    monos = sorted({canonical(m) for m in monos if canonical(m) != ()})
    need = set(monos)
    if noise.sigma_c > 0:
        need |= closure(monos, lambda m: coarse_grain_expansion(m, noise.sigma_c))
    need = sorted(need)
    if backend == "oracle":
        split = fock4.split_state(state)
        pure = fock4.phase_noise_moments(split, noise.sigma_p, need)
    else:
        pure = postsplit_table(state, need, noise.sigma_p)
    mixed = white_mix(pure, noise.p, backend)
    return coarse_grain_moments(mixed, noise.sigma_c, monos)


# ---------------------------------------------------------------------------
# witness values under noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WitnessEvaluation:
    """``violated`` is True when the value lies beyond the separable threshold.

    For S the value must exceed the threshold; for D it must fall below it;
    for custom specs ``W`` must exceed its separable bound.
    """

    name: str
    value: float
    threshold: float
    violated: bool

    @property
    def gap(self) -> float:
        return abs(self.value - self.threshold)


def detection_tolerance(n_atoms: int) -> float:
    """Margin below which a witness value counts as saturating its threshold.

    Witness values grow like ``N^2``; the margin absorbs round-off only.
    """
    return 1e-10 * (1.0 + n_atoms * n_atoms)


def s_threshold(n_atoms: int) -> float:
    return n_atoms * (n_atoms - 1) / 16


def evaluate_witness(spec, moments: MixedMoments, restarts: int = 64, seed=0,
                     tail_eps: float = 1e-12) -> WitnessEvaluation:
    """Witness value and separable threshold from a noisy moment table.

    D is read off coarse-grained data without noise subtraction, so its
    threshold stays 0; counting noise raises D by ``2 sigma_c^2``, which is
    the same as requiring ``D_true < -2 sigma_c^2``.
    """
    summary = MomentSummary.from_moments(moments)
    n = moments.n_atoms
    tol = detection_tolerance(n)
    if isinstance(spec, str) and spec.upper() == "S":
        val = witness_value(s_spec(), summary)
        thr = s_threshold(n)
        return WitnessEvaluation("S", val, thr, val > thr + tol)
    if isinstance(spec, str) and spec.upper() == "D":
        val = -witness_value(d_spec(), summary)
        return WitnessEvaluation("D", val, 0.0, val < -tol)
    if isinstance(spec, str):
        raise InvalidArgument(f"unknown witness {spec!r}")
    val = witness_value(spec, summary)
    thr = bound_binomial(spec, n, tail_eps, restarts, seed)
    return WitnessEvaluation("custom", val, thr, val > thr + tol)


def witness_under_noise(spec, state: SymmetricState, noise: NoiseConfig = NoiseConfig(),
                        backend: str = "auto", **bound_kw) -> WitnessEvaluation:
    """Evaluate on ``state`` in its given frame (S and D expect the squeezed frame)."""
    moments = noisy_moments(state, SUMMARY_MONOMIALS, noise, backend)
    return evaluate_witness(spec, moments, **bound_kw)


# ---------------------------------------------------------------------------
# estimator statistics
# ---------------------------------------------------------------------------

# per-setting random variables, as polynomials in commuting local readings
SETTINGS = {
    "S": {"X": {("Ax", "Bx"): 1.0}, "Y": {("Ay", "By"): 1.0}, "Z": {("Az", "Bz"): -1.0}},
    "D": {"X": {("Ax",): -1.0, ("Bx",): -1.0},
          "Y": {("Ay", "Ay"): 1.0, ("By", "By"): 1.0, ("Ay", "By"): -2.0},
          "Z": {("Az", "Az"): 1.0, ("Bz", "Bz"): 1.0, ("Az", "Bz"): 2.0}},
}


def _product(m1, m2):
    return canonical(m1 + m2)


def estimator_monomials(name: str) -> set:
    out = set()
    for poly in SETTINGS[name].values():
        for m1 in poly:
            out.add(canonical(m1))
            for m2 in poly:
                out.add(_product(m1, m2))
    return out


def estimator_variance(name: str, moments: MixedMoments) -> dict[str, float]:
    """Single-run variance of each setting's random variable."""
    name = name.upper()
    if name not in SETTINGS:
        raise InvalidArgument(f"estimator statistics defined for S and D, not {name!r}")
    out = {}
    for setting, poly in SETTINGS[name].items():
        mean = sum(c * moments.real(m) for m, c in poly.items())
        second = sum(c1 * c2 * moments.real(_product(m1, m2))
                     for m1, c1 in poly.items() for m2, c2 in poly.items())
        out[setting] = max(0.0, second - mean * mean)
    return out


VARIANCE_MODELS = ("state", "readings")


@dataclass(frozen=True)
class EstimatorReport:
    witness: str
    witness_value: float
    separable_threshold: float
    variances: dict = field(default_factory=dict)
    required_runs: int | None = None
    k_sigma: float = 3.0
    variance_model: str = "state"


def runs_for_gap(gap: float, total_variance: float, k_sigma: float = 3.0) -> int:
    """Least N_m with ``gap >= k_sigma * sqrt(total_variance / N_m)``."""
    if gap <= 0:
        raise InvalidArgument("no violation gap")
    exact = (k_sigma**2) * total_variance / gap**2
    return max(1, math.ceil(exact * (1 - 1e-12)))


def required_runs(name: str, state: SymmetricState, noise: NoiseConfig = NoiseConfig(),
                  backend: str = "auto", k_sigma: float = 3.0,
                  variance_model: str = "state") -> EstimatorReport:
    """Runs per setting so the estimate clears its threshold by ``k_sigma`` std devs.

    The witness value always includes every noise channel. With
    ``variance_model="state"`` the per-setting variances are quantum variances
    of the white- and phase-noisy state, so counting noise only moves D's
    mean; ``"readings"`` also adds the counting noise to the variances.
    """
    name = name.upper()
    if variance_model not in VARIANCE_MODELS:
        raise InvalidArgument(f"variance_model must be one of {VARIANCE_MODELS}")
    monos = set(SUMMARY_MONOMIALS) | estimator_monomials(name)
    moments = noisy_moments(state, monos, noise, backend)
    ev = evaluate_witness(name, moments)
    if variance_model == "state" and noise.sigma_c > 0:
        quiet = NoiseConfig(noise.p, noise.sigma_p, 0.0)
        var = estimator_variance(name, noisy_moments(state, monos, quiet, backend))
    else:
        var = estimator_variance(name, moments)
    runs = runs_for_gap(ev.gap, sum(var.values()), k_sigma) if ev.violated else None
    return EstimatorReport(name, ev.value, ev.threshold, var, runs, k_sigma, variance_model)


def setting_samples(name: str, setting: str, split: "fock4.FourModeState", n_runs: int,
                    seed, sigma_c: float = 0.0) -> np.ndarray:
    """Monte Carlo draws of one setting's random variable from the exact state."""
    poly = SETTINGS[name.upper()][setting]
    comps = {}
    for m in poly:
        for f in m:
            comps.setdefault(f[0], f[1])
    rng = np.random.default_rng(seed)
    counts = fock4.sample_measurements(split, {"A": comps.get("A", "z"), "B": comps.get("B", "z")},
                                       n_runs, rng).astype(float)
    if sigma_c > 0:
        counts = counts + rng.normal(scale=sigma_c, size=counts.shape)
    read = {"A": 0.5 * (counts[:, 0] - counts[:, 1]), "B": 0.5 * (counts[:, 2] - counts[:, 3])}
    out = np.zeros(n_runs)
    for m, c in poly.items():
        term = np.full(n_runs, c)
        for f in m:
            term = term * read[f[0]]
        out += term
    return out
