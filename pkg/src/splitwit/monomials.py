"""Local collective spin monomials and linear maps acting on moment tables.

A monomial is a tuple of factor labels such as ``("Ax", "Ax", "Bz")``:
site letter then component.  Operators on different sites commute, so the
canonical form puts every A factor before every B factor and keeps the
order within each site.  The empty tuple stands for the identity.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import InsufficientMoments, InvalidArgument, UnsupportedDegree

SITES = ("A", "B")
AXES = ("x", "y", "z")
MAX_DEGREE = 4

Monomial = tuple  # tuple[str, ...]


def canonical(mono: Iterable[str]) -> Monomial:
    mono = tuple(mono)
    for f in mono:
        if len(f) != 2 or f[0] not in SITES or f[1] not in AXES:
            raise InvalidArgument(f"bad factor {f!r}; expected e.g. 'Ax' or 'Bz'")
    if len(mono) > MAX_DEGREE:
        raise UnsupportedDegree(f"degree {len(mono)} > {MAX_DEGREE}")
    return tuple(f for f in mono if f[0] == "A") + tuple(f for f in mono if f[0] == "B")


def parse(text: str) -> Monomial:
    """``"AxBz"`` -> ``("Ax", "Bz")``; ``""`` or ``"1"`` -> identity."""
    text = text.strip()
    if text in ("", "1"):
        return ()
    if len(text) % 2:
        raise InvalidArgument(f"cannot parse monomial {text!r}")
    return canonical(text[i:i + 2] for i in range(0, len(text), 2))


def label(mono: Monomial) -> str:
    return "".join(mono) if mono else "1"


def split_sites(mono: Monomial) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Component words at A and at B."""
    return (tuple(f[1] for f in mono if f[0] == "A"),
            tuple(f[1] for f in mono if f[0] == "B"))


def join_sites(word_a, word_b) -> Monomial:
    return tuple("A" + c for c in word_a) + tuple("B" + c for c in word_b)


def is_hermitian(mono: Monomial) -> bool:
    wa, wb = split_sites(mono)
    return wa == wa[::-1] and wb == wb[::-1]


@lru_cache(maxsize=None)
def all_monomials(max_degree: int = MAX_DEGREE) -> tuple[Monomial, ...]:
    """Every canonical monomial of degree 1..max_degree (546 for degree 4)."""
    out = []
    for d in range(1, max_degree + 1):
        for na in range(d + 1):
            for wa in itertools.product(AXES, repeat=na):
                for wb in itertools.product(AXES, repeat=d - na):
                    out.append(join_sites(wa, wb))
    return tuple(out)


@dataclass
class MixedMoments:
    """Moment table of a (possibly mixed) split state.

    ``provenance`` lists the channels applied, e.g. ``("pure", "white")``.
    """

    n_atoms: int
    table: dict = field(default_factory=dict)
    provenance: tuple = ("pure",)

    def __getitem__(self, mono) -> complex:
        if isinstance(mono, str):
            mono = parse(mono)
        mono = canonical(mono)
        if mono == ():
            return 1.0 + 0j
        try:
            return self.table[mono]
        except KeyError:
            raise InsufficientMoments(f"moment {label(mono)} not tabulated") from None

    def __contains__(self, mono) -> bool:
        return canonical(mono) == () or canonical(mono) in self.table

    def real(self, mono) -> float:
        return float(np.real(self[mono]))

    def with_channel(self, table: dict, name: str) -> "MixedMoments":
        return MixedMoments(self.n_atoms, table, self.provenance + (name,))


# ---------------------------------------------------------------------------
# linear maps on monomials
# ---------------------------------------------------------------------------

LinearExpansion = dict  # Monomial -> complex coefficient

# J_x = (J+ + J-)/2, J_y = (J+ - J-)/(2i); J+ = J_x + i J_y, J- = J_x - i J_y
_TO_LADDER = {"x": {+1: 0.5, -1: 0.5}, "y": {+1: -0.5j, -1: 0.5j}}
_FROM_LADDER = {+1: {"x": 1.0, "y": 1.0j}, -1: {"x": 1.0, "y": -1.0j}}


@lru_cache(maxsize=None)
def _harmonic_terms(mono: Monomial) -> tuple:
    """Decompose into pieces of fixed z-rotation harmonic per site.

    Returns tuples ``(k_A, k_B, expansion)`` with ``expansion`` a dict over
    x/y/z monomials; summing all expansions reproduces ``mono``.
    """
    slots = [i for i, f in enumerate(mono) if f[1] != "z"]
    buckets: dict = {}
    for signs in itertools.product((+1, -1), repeat=len(slots)):
        coef_in = 1.0 + 0j
        for i, s in zip(slots, signs):
            coef_in *= _TO_LADDER[mono[i][1]][s]
        ka = sum(s for i, s in zip(slots, signs) if mono[i][0] == "A")
        kb = sum(s for i, s in zip(slots, signs) if mono[i][0] == "B")
        bucket = buckets.setdefault((ka, kb), {})
        for comps in itertools.product("xy", repeat=len(slots)):
            coef = coef_in
            factors = list(mono)
            for i, s, c in zip(slots, signs, comps):
                coef *= _FROM_LADDER[s][c]
                factors[i] = mono[i][0] + c
            key = tuple(factors)
            bucket[key] = bucket.get(key, 0) + coef
    return tuple((ka, kb, {m: c for m, c in b.items() if abs(c) > 1e-15})
                 for (ka, kb), b in sorted(buckets.items()))


def phase_damping_expansion(mono: Monomial, sigma_p: float) -> LinearExpansion:
    """Exact Gaussian average over independent z-rotations of A and B.

    Each harmonic ``exp(i (k_A theta_A + k_B theta_B))`` averages to
    ``exp(-(k_A^2 + k_B^2) sigma_p^2 / 2)``.
    """
    mono = canonical(mono)
    out: dict = {}
    for ka, kb, expansion in _harmonic_terms(mono):
        damp = np.exp(-0.5 * (ka * ka + kb * kb) * sigma_p**2)
        for m, c in expansion.items():
            out[m] = out.get(m, 0) + damp * c
    return {m: c for m, c in out.items() if abs(c) > 1e-300}


def _gauss_moment(order: int, var: float) -> float:
    if order % 2:
        return 0.0
    dfact = 1
    for j in range(order - 1, 0, -2):
        dfact *= j
    return dfact * var ** (order // 2)


def coarse_grain_expansion(mono: Monomial, sigma_c: float) -> LinearExpansion:
    """Additive detection noise on each local spin reading.

    Counting noise of std ``sigma_c`` on both populations of a site shifts
    every spin component read there by ``delta = (eps_1 - eps_2)/2``, a
    zero-mean Gaussian of variance ``sigma_c^2 / 2``, independent between
    sites.  Every factor at a site is replaced by ``J + delta_site`` and the
    Gaussian moments of ``delta`` are taken (``E delta^2 = v``,
    ``E delta^4 = 3 v^2``).
    """
    mono = canonical(mono)
    var = 0.5 * sigma_c**2
    out: dict = {}
    for mask in itertools.product((False, True), repeat=len(mono)):
        na = sum(1 for f, m in zip(mono, mask) if m and f[0] == "A")
        nb = sum(1 for f, m in zip(mono, mask) if m and f[0] == "B")
        weight = _gauss_moment(na, var) * _gauss_moment(nb, var)
        if weight == 0:
            continue
        rest = tuple(f for f, m in zip(mono, mask) if not m)
        out[rest] = out.get(rest, 0.0) + weight
    return out


def closure(monos: Iterable[Monomial], expand: Callable[[Monomial], Mapping]) -> set:
    """All monomials an expansion needs (excluding the identity)."""
    need = set()
    for m in monos:
        need.update(k for k in expand(canonical(m)) if k != ())
    return need


def apply_expansion(moments: MixedMoments, monos, expand, name: str) -> MixedMoments:
    table = {}
    for m in monos:
        m = canonical(m)
        table[m] = complex(sum(c * moments[k] for k, c in expand(m).items()))
    return moments.with_channel(table, name)
