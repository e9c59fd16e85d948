"""Post-split moments from pre-split collective moments (scales to N ~ 1000).

A local collective operator is a sum over atoms of a site projector times a
single-spin operator.  After the 50/50 splitter the spatial part of every
atom is ``(|A> + |B>)/sqrt(2)``, so each atom lands at A or B with a fair
coin.  Expanding a monomial over tuples of atoms, grouping coincident atoms
(set partitions of the factor positions), and using permutation symmetry,
every moment becomes a combination of symmetric k-body correlators
``<s_c1 x ... x s_ck>`` on distinct atoms, k <= 4.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dicke import AXES, SymmetricState, spin_operators
from .errors import InvalidArgument, UnsupportedDegree
from .monomials import (MAX_DEGREE, MixedMoments, canonical,
                        phase_damping_expansion)

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@lru_cache(maxsize=None)
def set_partitions(n: int) -> tuple:
    """All set partitions of ``range(n)``; blocks are sorted tuples."""
    if n == 0:
        return ((),)
    out = []
    for part in set_partitions(n - 1):
        for i in range(len(part)):
            out.append(part[:i] + (part[i] + (n - 1,),) + part[i + 1:])
        out.append(part + ((n - 1,),))
    return tuple(out)


@lru_cache(maxsize=None)
def _single_atom(word: tuple) -> tuple:
    """Ordered product of ``s_c = sigma_c/2`` as coefficients on (1, s_x, s_y, s_z)."""
    mat = np.eye(2, dtype=complex)
    for c in word:
        mat = mat @ (0.5 * _PAULI[c])
    coeffs = [("", np.trace(mat) / 2)]
    coeffs += [(c, np.trace(mat @ _PAULI[c])) for c in AXES]
    return tuple((c, v) for c, v in coeffs if abs(v) > 1e-15)


def falling(n: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= n - j
    return out


@lru_cache(maxsize=None)
def _block_expansion(blocks: tuple) -> dict:
    """Distinct-atom tensor of block operators as {sorted components: coeff}."""
    out: dict = {}
    for choice in itertools.product(*(_single_atom(b) for b in blocks)):
        coef = 1.0 + 0j
        comps = []
        for c, v in choice:
            coef *= v
            if c:
                comps.append(c)
        key = tuple(sorted(comps))
        out[key] = out.get(key, 0) + coef
    return out


@lru_cache(maxsize=None)
def _collective_terms(word: tuple) -> tuple:
    """``<J_w1...J_wd> = sum (N)_|pi| * coeff * corr[key]`` as (|pi|, key, coeff)."""
    terms = []
    for part in set_partitions(len(word)):
        blocks = tuple(tuple(word[i] for i in b) for b in part)
        for key, coef in _block_expansion(blocks).items():
            terms.append((len(part), key, coef))
    return tuple(terms)


@lru_cache(maxsize=None)
def _postsplit_terms(mono: tuple) -> tuple:
    """Like ``_collective_terms`` with fair-coin site weights ``2^-|pi|``.

    A block of coincident factors survives only if all its factors sit at
    the same site (one atom cannot be in A and B).
    """
    terms = []
    for part in set_partitions(len(mono)):
        if any(len({mono[i][0] for i in b}) > 1 for b in part):
            continue
        blocks = tuple(tuple(mono[i][1] for i in b) for b in part)
        for key, coef in _block_expansion(blocks).items():
            terms.append((len(part), key, coef))
    return tuple(terms)


def all_words(max_degree: int = MAX_DEGREE):
    for d in range(1, max_degree + 1):
        yield from itertools.product(AXES, repeat=d)


def presplit_moments(state: SymmetricState, max_degree: int = MAX_DEGREE) -> dict:
    """Every collective word of degree <= max_degree, keyed by component tuple."""
    if max_degree > MAX_DEGREE:
        raise UnsupportedDegree(f"degree {max_degree} > {MAX_DEGREE}")
    ops = spin_operators(state.n_atoms)
    cache: dict = {(): state.amplitudes}

    def applied(word):
        if word not in cache:
            cache[word] = ops[word[0]] @ applied(word[1:])
        return cache[word]

    out = {}
    for w in all_words(max_degree):
        half = len(w) // 2
        out[w] = complex(np.vdot(applied(w[:half][::-1]), applied(w[half:])))
    return out


@dataclass(frozen=True)
class KBodyCorrelators:
    """Symmetric correlators of k distinct atoms, keyed by sorted components."""

    n_atoms: int
    table: dict

    def __getitem__(self, key) -> complex:
        return self.table[tuple(sorted(key))]


def kbody_from_collective(moments: dict, n_atoms: int, max_k: int = MAX_DEGREE) -> KBodyCorrelators:
    """Invert the triangular relation between collective moments and correlators.

    Correlators with more atoms than ``n_atoms`` do not exist; with
    ``max_k > n_atoms`` they are omitted (their counting factors vanish).
    """
    if max_k > MAX_DEGREE:
        raise UnsupportedDegree(f"degree {max_k} > {MAX_DEGREE}")
    n = int(n_atoms)
    if n < 1:
        raise InvalidArgument("n_atoms must be >= 1")
    table: dict = {(): 1.0 + 0j}
    for k in range(1, min(max_k, n) + 1):
        for key in itertools.combinations_with_replacement(AXES, k):
            total = 0j
            for size, sub, coef in _collective_terms(key):
                if size == k and sub == key:
                    continue
                if size > n:
                    continue
                total += falling(n, size) * coef * table[sub]
            table[key] = (moments[key] - total) / falling(n, k)
    return KBodyCorrelators(n, table)


def kbody_correlators(state: SymmetricState, max_k: int = MAX_DEGREE) -> KBodyCorrelators:
    if state.n_atoms < max_k:
        max_k = state.n_atoms
    return kbody_from_collective(presplit_moments(state, max_k), state.n_atoms, max_k)


def collective_from_kbody(corr: KBodyCorrelators, word) -> complex:
    n = corr.n_atoms
    return complex(sum(falling(n, size) * coef * corr.table[key]
                       for size, key, coef in _collective_terms(tuple(word)) if size <= n))


def postsplit_moment(mono, corr: KBodyCorrelators, n_atoms: int | None = None) -> complex:
    mono = canonical(mono)
    n = corr.n_atoms if n_atoms is None else int(n_atoms)
    if mono == ():
        return 1.0 + 0j
    total = 0j
    for size, key, coef in _postsplit_terms(mono):
        if size > n:
            continue
        # exact integer counting factor, converted once
        total += (falling(n, size) / 2**size) * coef * corr.table[key]
    return complex(total)


def phase_damped_postsplit(mono, corr: KBodyCorrelators, n_atoms: int | None,
                           sigma_p: float) -> complex:
    if sigma_p < 0:
        raise InvalidArgument("sigma_p must be >= 0")
    if sigma_p == 0:
        return postsplit_moment(mono, corr, n_atoms)
    return complex(sum(c * postsplit_moment(m, corr, n_atoms)
                       for m, c in phase_damping_expansion(canonical(mono), sigma_p).items()))


def postsplit_table(state: SymmetricState, monos, sigma_p: float = 0.0) -> MixedMoments:
    corr = kbody_correlators(state, min(MAX_DEGREE, max((len(m) for m in monos), default=1)))
    table = {canonical(m): phase_damped_postsplit(m, corr, state.n_atoms, sigma_p)
             for m in monos if canonical(m) != ()}
    prov = ("pure", "phase") if sigma_p else ("pure",)
    return MixedMoments(state.n_atoms, table, prov)
