"""Exact four-mode simulation of the split condensate (small N oracle).

Modes are ordered ``(a1, a2, b1, b2)``: internal states 1, 2 at site A,
then at site B.  The splitter substitutes creation operators
``a_i^dag -> (a_i^dag + b_i^dag)/sqrt(2)`` and
``b_i^dag -> (b_i^dag - a_i^dag)/sqrt(2)``; applying it twice moves every
atom from A to B.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, lgamma
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.hermite_e import hermegauss
from scipy.sparse.linalg import expm_multiply

from .dicke import SymmetricState
from .errors import InvalidArgument, UnsupportedDegree
from .monomials import MAX_DEGREE, MixedMoments, canonical, all_monomials

ORACLE_MAX_ATOMS = 30
_MODE = {("A", 1): 0, ("A", 2): 1, ("B", 1): 2, ("B", 2): 3}


@lru_cache(maxsize=32)
def fock_basis(n_atoms: int) -> tuple[np.ndarray, np.ndarray]:
    """Occupations ``(dim, 4)`` and the inverse lookup ``index4[n_a1, n_a2, n_b1, n_b2]``."""
    n = n_atoms
    occ = [(a1, a2, b1, n - a1 - a2 - b1)
           for a1 in range(n + 1)
           for a2 in range(n + 1 - a1)
           for b1 in range(n + 1 - a1 - a2)]
    occ = np.array(occ, dtype=np.int64)
    index4 = -np.ones((n + 1,) * 4, dtype=np.int64)
    index4[tuple(occ.T)] = np.arange(len(occ))
    occ.setflags(write=False)
    index4.setflags(write=False)
    return occ, index4


@dataclass(frozen=True)
class FourModeState:
    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        n = int(self.n_atoms)
        if n < 1:
            raise InvalidArgument("n_atoms must be >= 1")
        if n > ORACLE_MAX_ATOMS:
            raise InvalidArgument(
                f"four-mode oracle limited to N <= {ORACLE_MAX_ATOMS}, got {n}")
        amps = np.array(self.amplitudes, dtype=complex)
        dim = comb(n + 3, 3)
        if amps.shape != (dim,):
            raise InvalidArgument(f"expected {dim} amplitudes, got {amps.shape}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1) > 1e-12:
            raise InvalidArgument(f"state is not normalized (|psi|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "n_atoms", n)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def occupations(self) -> np.ndarray:
        return fock_basis(self.n_atoms)[0]

    def to_array4(self) -> np.ndarray:
        occ, _ = fock_basis(self.n_atoms)
        arr = np.zeros((self.n_atoms + 1,) * 4, dtype=complex)
        arr[tuple(occ.T)] = self.amplitudes
        return arr

    @classmethod
    def from_array4(cls, n_atoms: int, arr: np.ndarray) -> "FourModeState":
        occ, _ = fock_basis(n_atoms)
        return cls(n_atoms, arr[tuple(occ.T)])


def _hop(n_atoms: int, to_mode: int, from_mode: int) -> sp.csr_matrix:
    """Sparse ``c_to^dag c_from`` in the compact basis."""
    occ, index4 = fock_basis(n_atoms)
    if to_mode == from_mode:
        return sp.diags(occ[:, to_mode].astype(float), 0, format="csr")
    src = np.nonzero(occ[:, from_mode] > 0)[0]
    new = occ[src].copy()
    amp = np.sqrt(new[:, from_mode] * (new[:, to_mode] + 1.0))
    new[:, from_mode] -= 1
    new[:, to_mode] += 1
    dst = index4[tuple(new.T)]
    dim = len(occ)
    return sp.csr_matrix((amp, (dst, src)), shape=(dim, dim))


@lru_cache(maxsize=32)
def local_operators(n_atoms: int) -> dict[str, sp.csr_matrix]:
    """``{"Ax": J_x^A, ...}`` as sparse matrices."""
    ops = {}
    for site in ("A", "B"):
        m1, m2 = _MODE[(site, 1)], _MODE[(site, 2)]
        jp = _hop(n_atoms, m1, m2)
        jm = _hop(n_atoms, m2, m1)
        n1 = _hop(n_atoms, m1, m1)
        n2 = _hop(n_atoms, m2, m2)
        ops[site + "x"] = ((jp + jm) * 0.5).astype(complex).tocsr()
        ops[site + "y"] = ((jp - jm) * (-0.5j)).tocsr()
        ops[site + "z"] = ((n1 - n2) * 0.5).astype(complex).tocsr()
    return ops


def embed_in_A(state: SymmetricState) -> FourModeState:
    n = state.n_atoms
    if n > ORACLE_MAX_ATOMS:
        raise InvalidArgument(f"four-mode oracle limited to N <= {ORACLE_MAX_ATOMS}")
    _, index4 = fock_basis(n)
    amps = np.zeros(comb(n + 3, 3), dtype=complex)
    n1 = np.arange(n + 1)
    amps[index4[n1, n - n1, 0, 0]] = state.amplitudes
    return FourModeState(n, amps)


@lru_cache(maxsize=None)
def _splitter_block(n: int) -> np.ndarray:
    """Matrix ``B[p, k]``: ``|k, n-k> -> sum_p B[p, k] |p, n-p>`` for one mode pair."""
    out = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        for p in range(n + 1):
            poly = sum(comb(k, r) * comb(n - k, p - r) * (-1) ** (p - r)
                       for r in range(max(0, p - (n - k)), min(k, p) + 1))
            if poly:
                log_norm = 0.5 * (lgamma(p + 1) + lgamma(n - p + 1)
                                  - lgamma(k + 1) - lgamma(n - k + 1)) - 0.5 * n * np.log(2)
                out[p, k] = poly * np.exp(log_norm)
    return out


def _split_pair(arr: np.ndarray, ax_a: int, ax_b: int) -> np.ndarray:
    work = np.moveaxis(arr, (ax_a, ax_b), (0, 1))
    out = np.zeros_like(work)
    size = work.shape[0]
    for n in range(size):
        ks = np.arange(n + 1)
        sub = work[ks, n - ks]
        out[ks, n - ks] = np.tensordot(_splitter_block(n), sub, axes=(1, 0))
    return np.moveaxis(out, (0, 1), (ax_a, ax_b))


def split_half(state: FourModeState) -> FourModeState:
    """50/50 state-independent splitter on both internal modes."""
    arr = state.to_array4()
    arr = _split_pair(arr, 0, 2)
    arr = _split_pair(arr, 1, 3)
    out = FourModeState.from_array4(state.n_atoms, arr / np.linalg.norm(arr))
    return out


def split_state(state: SymmetricState) -> FourModeState:
    return split_half(embed_in_A(state))


def _check_mono(mono) -> tuple:
    mono = canonical(mono)
    if len(mono) > MAX_DEGREE:
        raise UnsupportedDegree(f"degree {len(mono)} > {MAX_DEGREE}")
    return mono


def lcso_moment(state: FourModeState, mono) -> complex:
    mono = _check_mono(mono)
    ops = local_operators(state.n_atoms)
    vec = state.amplitudes
    for f in reversed(mono):
        vec = ops[f] @ vec
    return complex(np.vdot(state.amplitudes, vec))


def _moment_table_vec(n_atoms: int, amps: np.ndarray, monos) -> dict:
    ops = local_operators(n_atoms)
    cache: dict = {(): amps}

    def applied(word):
        if word not in cache:
            cache[word] = ops[word[0]] @ applied(word[1:])
        return cache[word]

    out = {}
    for m in monos:
        half = len(m) // 2
        left = tuple(reversed(m[:half]))  # Hermitian factors: (L)^dag = reversed L
        out[m] = complex(np.vdot(applied(left), applied(m[half:])))
    return out


def moment_table(state: FourModeState, monos: Iterable | None = None) -> MixedMoments:
    monos = all_monomials() if monos is None else [_check_mono(m) for m in monos]
    monos = [m for m in monos if m != ()]
    return MixedMoments(state.n_atoms, _moment_table_vec(state.n_atoms, state.amplitudes, monos))


def white_noise_weights(n_atoms: int) -> np.ndarray:
    """Diagonal of the binomially weighted local maximally mixed state.

    Sum over ``k`` of ``2^-N C(N, k) (I_k/(k+1)) x (I_{N-k}/(N-k+1))``, with
    ``I_k`` the identity on the k-atom symmetric subspace.  Every Fock state
    with ``k`` atoms in A has weight ``2^-N C(N,k) / ((k+1)(N-k+1))``.
    """
    occ, _ = fock_basis(n_atoms)
    k = occ[:, 0] + occ[:, 1]
    w = np.array([comb(n_atoms, int(x)) for x in k], dtype=float) / 2.0**n_atoms
    return w / ((k + 1) * (n_atoms - k + 1))


def white_noise_part(n_atoms: int, monos) -> dict:
    """Moments of the pure-noise state by explicit trace."""
    ops = local_operators(n_atoms)
    weights = white_noise_weights(n_atoms)
    dim = len(weights)
    out = {}
    for m in monos:
        m = _check_mono(m)
        mat = sp.identity(dim, dtype=complex, format="csr")
        for f in m:
            mat = mat @ ops[f]
        out[m] = complex(np.dot(weights, mat.diagonal()))
    return out


def white_noise_moments(n_atoms: int, p: float, pure: MixedMoments) -> MixedMoments:
    """Mix tabulated pure moments with local white noise, survival probability ``p``."""
    if not 0 <= p <= 1:
        raise InvalidArgument(f"p must lie in [0, 1], got {p}")
    if n_atoms > ORACLE_MAX_ATOMS:
        raise InvalidArgument(f"explicit noise construction limited to N <= {ORACLE_MAX_ATOMS}")
    if p == 1:
        return pure.with_channel(dict(pure.table), "white")
    noise = white_noise_part(n_atoms, pure.table)
    table = {m: p * v + (1 - p) * noise[m] for m, v in pure.table.items()}
    return pure.with_channel(table, "white")


def _phase_average(state: FourModeState, sigma_p: float, monos, nodes: int) -> dict:
    x, w = hermegauss(nodes)
    w = w / np.sqrt(2 * np.pi)
    occ = state.occupations
    m_a = 0.5 * (occ[:, 0] - occ[:, 1])
    m_b = 0.5 * (occ[:, 2] - occ[:, 3])
    acc = dict.fromkeys(monos, 0j)
    for xa, wa in zip(x, w):
        phase_a = np.exp(1j * sigma_p * xa * m_a)
        for xb, wb in zip(x, w):
            # R_A R_B = exp(i theta_A Jz^A) exp(i theta_B Jz^B) is diagonal here
            amps = state.amplitudes * phase_a * np.exp(1j * sigma_p * xb * m_b)
            vals = _moment_table_vec(state.n_atoms, amps, monos)
            for m in monos:
                acc[m] += wa * wb * vals[m]
    return acc


def phase_noise_moments(state: FourModeState, sigma_p: float, monos=None,
                        tol: float = 1e-10, max_nodes: int = 128) -> MixedMoments:
    """Gauss-Hermite tensor quadrature over independent Gaussian z-rotations.

    The node count doubles until no tracked moment moves by more than ``tol``.
    """
    if sigma_p < 0:
        raise InvalidArgument("sigma_p must be >= 0")
    monos = all_monomials() if monos is None else [_check_mono(m) for m in monos]
    monos = [m for m in monos if m != ()]
    if sigma_p == 0:
        return MixedMoments(state.n_atoms, _moment_table_vec(state.n_atoms, state.amplitudes, monos),
                            ("pure", "phase"))
    nodes = 6
    prev = _phase_average(state, sigma_p, monos, nodes)
    while True:
        nodes *= 2
        cur = _phase_average(state, sigma_p, monos, nodes)
        change = max(abs(cur[m] - prev[m]) for m in monos)
        if change < tol:
            return MixedMoments(state.n_atoms, cur, ("pure", "phase"))
        if nodes >= max_nodes:
            raise ArithmeticError(
                f"phase quadrature not converged at {nodes} nodes (change {change:.2e})")
        prev = cur


# rotations taking the measured component onto z: U^dag Jz U = J_c
MEASURE_ROTATION = {"x": ("y", -np.pi / 2), "y": ("x", np.pi / 2), "z": ("z", 0.0)}


def rotate_site(state: FourModeState, site: str, axis: str, angle: float) -> FourModeState:
    """``exp(-i angle J_axis^site)`` applied to the state."""
    if angle == 0:
        return state
    gen = local_operators(state.n_atoms)[site + axis]
    out = expm_multiply(-1j * angle * gen, state.amplitudes)
    return FourModeState(state.n_atoms, out / np.linalg.norm(out))


def measurement_probabilities(state: FourModeState, setting: Mapping) -> np.ndarray:
    """Born probabilities over the occupation basis after the setting rotations.

    ``setting`` maps each site to a component label (``"x"``, ``"y"``,
    ``"z"``) or to an explicit ``(axis, angle)`` rotation.
    """
    for site in ("A", "B"):
        spec = setting.get(site, "z")
        axis, angle = MEASURE_ROTATION[spec] if isinstance(spec, str) else spec
        state = rotate_site(state, site, axis, angle)
    probs = np.abs(state.amplitudes) ** 2
    return probs / probs.sum()


def sample_measurements(state: FourModeState, setting: Mapping, n_runs: int,
                        seed) -> np.ndarray:
    """``n_runs`` i.i.d. occupation records ``(n_a1, n_a2, n_b1, n_b2)``."""
    if n_runs < 1:
        raise InvalidArgument("n_runs must be >= 1")
    probs = measurement_probabilities(state, setting)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(probs), size=n_runs, p=probs)
    return state.occupations[idx].copy()
