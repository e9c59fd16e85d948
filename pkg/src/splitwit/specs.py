"""Witness coefficient vectors and the degree-2 moment summary they act on."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpec
from .monomials import MixedMoments

AXES = ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class WitnessSpec:
    """Coefficients of ``W = sum a_ij <Ji^A Jj^B> + abar.<J^A> + a.<J^B> (+ squares)``.

    Entanglement is detected when ``W`` exceeds its separable bound.
    Vector layout: ``a_ij`` row-major (9), ``abar`` (3), ``a`` (3), then for
    order 2 ``abar2`` (3) and ``a2`` (3) weighting ``<(Ji^A)^2>``, ``<(Ji^B)^2>``.
    """

    order: int
    alpha_ij: np.ndarray
    alpha_bar: np.ndarray
    alpha: np.ndarray
    alpha2_bar: np.ndarray | None = None
    alpha2: np.ndarray | None = None

    def __post_init__(self):
        if self.order not in (1, 2):
            raise InvalidSpec(f"order must be 1 or 2, got {self.order}")
        fields = {"alpha_ij": (3, 3), "alpha_bar": (3,), "alpha": (3,)}
        if self.order == 2:
            fields.update(alpha2_bar=(3,), alpha2=(3,))
        for name, shape in fields.items():
            val = getattr(self, name)
            if val is None:
                val = np.zeros(shape)
            arr = np.array(val, dtype=float).reshape(shape)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.order == 1:
            object.__setattr__(self, "alpha2_bar", None)
            object.__setattr__(self, "alpha2", None)
        vec = self.to_vector()
        if not np.all(np.isfinite(vec)):
            raise InvalidSpec("witness coefficients must be finite")
        if not np.any(vec):
            raise InvalidSpec("witness coefficients are all zero")

    @classmethod
    def from_vector(cls, vec) -> "WitnessSpec":
        vec = np.asarray(vec, dtype=float).ravel()
        if vec.size == 15:
            return cls(1, vec[:9], vec[9:12], vec[12:15])
        if vec.size == 21:
            return cls(2, vec[:9], vec[9:12], vec[12:15], vec[15:18], vec[18:21])
        raise InvalidSpec(f"expected 15 or 21 coefficients, got {vec.size}")

    def to_vector(self) -> np.ndarray:
        parts = [self.alpha_ij.ravel(), self.alpha_bar, self.alpha]
        if self.order == 2:
            parts += [self.alpha2_bar, self.alpha2]
        return np.concatenate(parts)

    def normalized(self) -> "WitnessSpec":
        vec = self.to_vector()
        return WitnessSpec.from_vector(vec / np.linalg.norm(vec))

    def scaled(self, factor: float) -> "WitnessSpec":
        return WitnessSpec.from_vector(self.to_vector() * factor)

    def as_order2(self) -> "WitnessSpec":
        if self.order == 2:
            return self
        return WitnessSpec(2, self.alpha_ij, self.alpha_bar, self.alpha, np.zeros(3), np.zeros(3))

    def swapped(self) -> "WitnessSpec":
        """Same witness with the roles of A and B exchanged."""
        if self.order == 1:
            return WitnessSpec(1, self.alpha_ij.T, self.alpha, self.alpha_bar)
        return WitnessSpec(2, self.alpha_ij.T, self.alpha, self.alpha_bar, self.alpha2, self.alpha2_bar)

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.to_vector(), self.swapped().to_vector(), atol=tol, rtol=0))

    def symmetrized(self) -> "WitnessSpec":
        return WitnessSpec.from_vector(0.5 * (self.to_vector() + self.swapped().to_vector()))

    @property
    def has_squares(self) -> bool:
        return self.order == 2 and bool(np.any(self.alpha2_bar) or np.any(self.alpha2))

    def key(self) -> str:
        return hashlib.sha1(np.round(self.to_vector(), 15).tobytes()).hexdigest()

    def to_text(self) -> str:
        return " ".join(f"{v:.17g}" for v in self.to_vector()) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WitnessSpec":
        vals = []
        for line in text.splitlines():
            line = line.split("#", 1)[0]
            vals.extend(float(tok) for tok in line.replace(",", " ").split())
        return cls.from_vector(vals)


def s_spec() -> WitnessSpec:
    """``<Jx^A Jx^B> + <Jy^A Jy^B> - <Jz^A Jz^B>`` (separable bound N(N-1)/16)."""
    return WitnessSpec(1, np.diag([1.0, 1.0, -1.0]), np.zeros(3), np.zeros(3))


def d_spec() -> WitnessSpec:
    """Minus the linearized Duan-type combination; separable states give <= 0.

    ``-D = -<(Jy^A - Jy^B)^2> - <(Jz^A + Jz^B)^2> + <Jx^A + Jx^B>``.
    """
    return WitnessSpec(2, np.diag([0.0, 2.0, -2.0]), [1.0, 0, 0], [1.0, 0, 0],
                       [0, -1.0, -1.0], [0, -1.0, -1.0])


def named_spec(name: str) -> WitnessSpec:
    name = name.upper()
    if name == "S":
        return s_spec()
    if name == "D":
        return d_spec()
    raise InvalidSpec(f"unknown named witness {name!r}")


SUMMARY_MONOMIALS = tuple(
    [("A" + i,) for i in AXES] + [("B" + i,) for i in AXES]
    + [("A" + i, "B" + j) for i in AXES for j in AXES]
    + [("A" + i, "A" + j) for i in AXES for j in AXES]
    + [("B" + i, "B" + j) for i in AXES for j in AXES])


@dataclass(frozen=True)
class MomentSummary:
    """First and second moments of the split state as 3-vectors/3x3 matrices."""

    u_a: np.ndarray
    u_b: np.ndarray
    cross: np.ndarray
    second_a: np.ndarray
    second_b: np.ndarray

    @classmethod
    def from_moments(cls, mom: MixedMoments) -> "MomentSummary":
        u_a = np.array([mom.real(("A" + i,)) for i in AXES])
        u_b = np.array([mom.real(("B" + i,)) for i in AXES])
        cross = np.array([[mom.real(("A" + i, "B" + j)) for j in AXES] for i in AXES])
        sa = np.array([[mom.real(("A" + i, "A" + j)) for j in AXES] for i in AXES])
        sb = np.array([[mom.real(("B" + i, "B" + j)) for j in AXES] for i in AXES])
        return cls(u_a, u_b, cross, 0.5 * (sa + sa.T), 0.5 * (sb + sb.T))

    def rotated(self, rot_a: np.ndarray, rot_b: np.ndarray) -> "MomentSummary":
        return MomentSummary(rot_a @ self.u_a, rot_b @ self.u_b,
                             rot_a @ self.cross @ rot_b.T,
                             rot_a @ self.second_a @ rot_a.T,
                             rot_b @ self.second_b @ rot_b.T)

    def feature_vector(self) -> np.ndarray:
        """Moments in the 21-entry witness layout."""
        return np.concatenate([self.cross.ravel(), self.u_a, self.u_b,
                               np.diag(self.second_a), np.diag(self.second_b)])


def euler_matrix(angles) -> np.ndarray:
    """Intrinsic ZYZ rotation ``Rz(a) Ry(b) Rz(c)`` (scipy's "ZYZ")."""
    a, b, c = angles
    ca, sa, cb, sb, cc, sc = np.cos(a), np.sin(a), np.cos(b), np.sin(b), np.cos(c), np.sin(c)
    return np.array([
        [ca * cb * cc - sa * sc, -ca * cb * sc - sa * cc, ca * sb],
        [sa * cb * cc + ca * sc, -sa * cb * sc + ca * cc, sa * sb],
        [-sb * cc, sb * sc, cb],
    ])


def witness_value(spec: WitnessSpec, summary: MomentSummary) -> float:
    feats = summary.feature_vector()
    vec = spec.to_vector()
    return float(vec @ feats[: vec.size])
