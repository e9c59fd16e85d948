"""Symmetric (Dicke basis) collective spin states before splitting.

Basis index ``n1`` counts atoms in internal state 1, so that ``Jz`` has
eigenvalue ``m = n1 - N/2``.  Rotations are active, ``exp(-i angle J_axis)``:
rotating the x-polarized coherent state about y by ``pi/2`` gives
``<Jz> = -N/2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from .errors import DegenerateState, InvalidArgument, UnsupportedDegree

AXES = ("x", "y", "z")
MAX_DEGREE = 4


@dataclass(frozen=True)
class SymmetricState:
    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if int(self.n_atoms) < 1:
            raise InvalidArgument(f"n_atoms must be >= 1, got {self.n_atoms}")
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.n_atoms + 1,):
            raise InvalidArgument(
                f"expected {self.n_atoms + 1} amplitudes, got shape {amps.shape}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > 1e-12:
            raise InvalidArgument(f"state is not normalized (|psi|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_unnormalized(cls, n_atoms, amplitudes):
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(n_atoms, amps / np.linalg.norm(amps))

    def to_csv(self) -> str:
        lines = ["index,re,im"]
        for k, a in enumerate(self.amplitudes):
            lines.append(f"{k},{a.real:.17g},{a.imag:.17g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SqueezingReport:
    xi2: float
    xi2_db: float
    squeezing_angle: float
    mean_spin: np.ndarray


@lru_cache(maxsize=64)
def spin_operators(n_atoms: int) -> dict[str, sp.csr_matrix]:
    """Sparse ``Jx, Jy, Jz`` on the (N+1)-dimensional symmetric subspace."""
    n1 = np.arange(n_atoms + 1)
    # <n1+1| a1^dag a2 |n1>
    raise_amp = np.sqrt((n1[:-1] + 1.0) * (n_atoms - n1[:-1]))
    jp = sp.diags(raise_amp, -1, format="csr")
    jm = jp.T.tocsr()
    ops = {
        "x": ((jp + jm) * 0.5).astype(complex).tocsr(),
        "y": ((jp - jm) * (-0.5j)).tocsr(),
        "z": sp.diags((n1 - n_atoms / 2.0).astype(complex), 0, format="csr"),
    }
    for op in ops.values():
        op.data.setflags(write=False)
    return ops


def _check_word(word) -> tuple[str, ...]:
    word = tuple(word)
    if not word:
        raise InvalidArgument("operator word must have degree >= 1")
    if len(word) > MAX_DEGREE:
        raise UnsupportedDegree(f"degree {len(word)} > {MAX_DEGREE}")
    bad = [c for c in word if c not in AXES]
    if bad:
        raise InvalidArgument(f"unknown spin components {bad}")
    return word


def coherent_state_x(n_atoms: int) -> SymmetricState:
    """All spins along +x: amplitudes ``2^{-N/2} sqrt(C(N, n1))``."""
    if int(n_atoms) < 1:
        raise InvalidArgument(f"n_atoms must be >= 1, got {n_atoms}")
    n = int(n_atoms)
    k = np.arange(n + 1)
    log_amp = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)) - 0.5 * n * np.log(2.0)
    amps = np.exp(log_amp).astype(complex)
    return SymmetricState(n, amps / np.linalg.norm(amps))


def one_axis_twist(state: SymmetricState, chi_t: float) -> SymmetricState:
    m = np.arange(state.n_atoms + 1) - state.n_atoms / 2.0
    return SymmetricState(state.n_atoms, state.amplitudes * np.exp(-1j * chi_t * m**2))


def rotate(state: SymmetricState, axis: str, angle: float) -> SymmetricState:
    """Apply ``exp(-i angle J_axis)``."""
    if axis not in AXES:
        raise InvalidArgument(f"axis must be one of {AXES}, got {axis!r}")
    if angle == 0:
        return state
    if axis == "z":
        m = np.arange(state.n_atoms + 1) - state.n_atoms / 2.0
        out = state.amplitudes * np.exp(-1j * angle * m)
    else:
        gen = spin_operators(state.n_atoms)[axis]
        out = expm_multiply(-1j * angle * gen, state.amplitudes)
    # expm_multiply drifts at the 1e-15 level; renormalize so the invariant holds
    return SymmetricState(state.n_atoms, out / np.linalg.norm(out))


def apply_word(state: SymmetricState, word) -> np.ndarray:
    """Vector ``J_{w1} ... J_{wd} |psi>`` (rightmost factor acts first)."""
    ops = spin_operators(state.n_atoms)
    vec = state.amplitudes
    for c in reversed(tuple(word)):
        vec = ops[c] @ vec
    return vec


def collective_moment(state: SymmetricState, word) -> complex:
    word = _check_word(word)
    return complex(np.vdot(state.amplitudes, apply_word(state, word)))


def mean_spin(state: SymmetricState) -> np.ndarray:
    return np.array([collective_moment(state, (c,)).real for c in AXES])


def second_moment_matrix(state: SymmetricState) -> np.ndarray:
    """Symmetrized ``Re <J_i J_j + J_j J_i>/2``."""
    ops = spin_operators(state.n_atoms)
    vecs = [ops[c] @ state.amplitudes for c in AXES]
    g = np.array([[np.vdot(vi, vj) for vj in vecs] for vi in vecs])
    return 0.5 * (g + g.T).real


def _rotation_to_x(direction: np.ndarray) -> np.ndarray:
    """Minimal SO(3) matrix mapping the unit vector ``direction`` onto +x."""
    ex = np.array([1.0, 0.0, 0.0])
    v = np.cross(direction, ex)
    c = float(np.dot(direction, ex))
    s = np.linalg.norm(v)
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        return np.diag([-1.0, 1.0, -1.0])  # pi about y
    k = v / s
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * kx + (1 - c) * kx @ kx


def xi2_numeric(state: SymmetricState) -> SqueezingReport:
    """Wineland parameter from the covariance orthogonal to the mean spin.

    The minimal orthogonal variance is the smaller eigenvalue of the 2x2
    covariance block in the plane orthogonal to ``<J>``.  The returned angle
    is the rotation about x which, once the mean spin has been brought onto
    +x, maps the minimal-variance direction onto z.
    """
    n = state.n_atoms
    mean = mean_spin(state)
    length = np.linalg.norm(mean)
    if length < 1e-12 * max(1.0, n):
        raise DegenerateState("mean spin vanishes; squeezing undefined")
    cov = second_moment_matrix(state) - np.outer(mean, mean)
    rot = _rotation_to_x(mean / length)
    block = (rot @ cov @ rot.T)[1:, 1:]
    evals, evecs = np.linalg.eigh(block)
    vmin = evals[0]
    if abs(evals[1] - evals[0]) <= 1e-12 * max(1.0, abs(evals[1])):
        angle = 0.0
    else:
        vy, vz = evecs[:, 0]
        angle = float(np.arctan2(vy, vz))
        if angle <= -np.pi / 2:
            angle += np.pi
        elif angle > np.pi / 2:
            angle -= np.pi
    xi2 = n * vmin / length**2
    return SqueezingReport(float(xi2), float(10 * np.log10(xi2)), angle, mean)


def xi2_closed_form(n_atoms: int, chi_t: float) -> float:
    """Wineland parameter of the one-axis-twisted x-polarized coherent state."""
    n = int(n_atoms)
    if n < 2:
        raise InvalidArgument(f"closed form needs n_atoms >= 2, got {n_atoms}")
    c, c2, s = np.cos(chi_t), np.cos(2 * chi_t), np.sin(chi_t)
    a = c2 ** (n - 2)
    root = np.sqrt((1 - a) ** 2 + 16 * c ** (2 * n - 4) * s**2)
    return float(0.25 * c ** (2 - 2 * n) * (3 + n - (n - 1) * (a + root)))


def squeezed_state(n_atoms: int, chi_t: float) -> SymmetricState:
    return one_axis_twist(coherent_state_x(n_atoms), chi_t)


def squeezed_frame_state(n_atoms: int, chi_t: float) -> SymmetricState:
    """Twisted state rotated about x so that z is the squeezed direction."""
    state = squeezed_state(n_atoms, chi_t)
    if chi_t == 0:
        return state
    return rotate(state, "x", xi2_numeric(state).squeezing_angle)


def chi_t_for_db(n_atoms: int, target_db: float) -> float:
    """Smallest twisting strength reaching ``target_db`` (negative = squeezed)."""
    from scipy.optimize import brentq, minimize_scalar

    if target_db > 0:
        raise InvalidArgument("target squeezing must be <= 0 dB")
    if target_db == 0:
        return 0.0
    db = lambda x: 10 * np.log10(xi2_closed_form(n_atoms, x))
    upper = min(np.pi / 4, 3.0 * n_atoms ** (-2 / 3))
    best = minimize_scalar(db, bounds=(0.0, upper), method="bounded",
                           options={"xatol": 1e-12})
    if best.fun > target_db:
        raise InvalidArgument(
            f"{target_db} dB unreachable for N={n_atoms} (best {best.fun:.3f} dB)")
    return float(brentq(lambda x: db(x) - target_db, 0.0, best.x, xtol=1e-15))
