import itertools
import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from splitwit.dicke import (coherent_state_x, collective_moment, mean_spin, one_axis_twist,
                            rotate, squeezed_frame_state, squeezed_state, xi2_closed_form,
                            xi2_numeric, chi_t_for_db, SymmetricState)
from splitwit.errors import DegenerateState, InvalidArgument, UnsupportedDegree

PAULI = {"x": np.array([[0, 1], [1, 0]], complex) / 2,
         "y": np.array([[0, -1j], [1j, 0]]) / 2,
         "z": np.array([[1, 0], [0, -1]], complex) / 2}


def qubit_collective(n, axis):
    """Collective spin on n explicit qubits (state 1 = |0>, spin up)."""
    eye = np.eye(2)
    total = np.zeros((2**n, 2**n), complex)
    for i in range(n):
        ops = [eye] * n
        ops[i] = PAULI[axis]
        total += reduce(np.kron, ops)
    return total


def dicke_to_qubits(state):
    """Embed Dicke amplitudes (index = atoms in state 1) into the 2^n qubit space."""
    n = state.n_atoms
    out = np.zeros(2**n, complex)
    for bits in itertools.product((0, 1), repeat=n):
        n1 = bits.count(0)
        idx = int("".join(map(str, bits)), 2)
        out[idx] = state.amplitudes[n1] / np.sqrt(math.comb(n, n1))
    return out


def random_state(n, rng):
    return SymmetricState.from_unnormalized(n, rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1))


def test_coherent_amplitudes_and_mean():
    s = coherent_state_x(1)
    assert np.allclose(s.amplitudes, [2**-0.5, 2**-0.5])
    s = coherent_state_x(4)
    assert np.allclose(mean_spin(s), [2, 0, 0], atol=1e-12)
    assert abs(collective_moment(s, "zz") - 1.0) < 1e-12


def test_invalid_atom_number():
    with pytest.raises(InvalidArgument):
        coherent_state_x(0)
    with pytest.raises(InvalidArgument):
        xi2_closed_form(1, 0.1)


def test_degree_limit():
    with pytest.raises(UnsupportedDegree):
        collective_moment(coherent_state_x(3), "xxxxx")


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_moments_match_explicit_qubits(n):
    rng = np.random.default_rng(n)
    s = random_state(n, rng)
    psi = dicke_to_qubits(s)
    ops = {c: qubit_collective(n, c) for c in "xyz"}
    for word in ["x", "y", "z", "xy", "zx", "yzy", "xyzz"]:
        mat = reduce(np.matmul, [ops[c] for c in word])
        assert abs(np.vdot(psi, mat @ psi) - collective_moment(s, word)) < 1e-12


def test_rotation_sign_matches_single_spin_matrix():
    # exp(-i pi/2 Jy) maps +x onto -z for a spin-1/2
    for n in (1, 4, 7):
        s = rotate(coherent_state_x(n), "y", np.pi / 2)
        assert np.allclose(mean_spin(s), [0, 0, -n / 2], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 30), st.floats(-3, 3), st.sampled_from("xyz"), st.integers(0, 2**31))
def test_unitaries_preserve_norm_and_casimir(n, angle, axis, seed):
    s = random_state(n, np.random.default_rng(seed))
    for t in (one_axis_twist(s, angle), rotate(s, axis, angle)):
        assert abs(np.linalg.norm(t.amplitudes) - 1) < 1e-12
        cas = sum(collective_moment(t, c + c).real for c in "xyz")
        assert abs(cas - n / 2 * (n / 2 + 1)) < 1e-10 * max(1, n * n)
        assert np.linalg.norm(mean_spin(t)) <= n / 2 + 1e-10
    back = rotate(rotate(s, axis, angle), axis, -angle)
    assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-12)


def test_twist_phase_convention():
    n, chi_t = 6, 0.3
    s = one_axis_twist(coherent_state_x(n), chi_t)
    m = np.arange(n + 1) - n / 2
    assert np.allclose(s.amplitudes, coherent_state_x(n).amplitudes * np.exp(-1j * chi_t * m**2))


def test_coherent_xi2_is_one():
    rep = xi2_numeric(coherent_state_x(20))
    assert abs(rep.xi2 - 1) < 1e-12 and rep.squeezing_angle == 0.0


def test_reference_operating_point():
    assert abs(10 * np.log10(xi2_closed_form(500, 0.0058)) + 10.0) < 0.1
    assert abs(xi2_closed_form(500, 0.0058) - 0.1) < 0.002
    assert abs(chi_t_for_db(500, -10) - 0.0058) < 1e-4


def test_xi2_matches_grid_scan():
    # brute-force oracle: scan directions orthogonal to the mean spin on a 1e-3 grid
    s = squeezed_state(10, 0.05)
    rep = xi2_numeric(s)
    mean = mean_spin(s)
    e1 = mean / np.linalg.norm(mean)
    e2 = np.cross(e1, [0, 0, 1.0])
    e2 /= np.linalg.norm(e2)
    e3 = np.cross(e1, e2)
    second = np.array([[collective_moment(s, a + b).real for b in "xyz"] for a in "xyz"])
    second = 0.5 * (second + second.T)
    vals = []
    for t in np.arange(0, np.pi, 1e-3):
        d = np.cos(t) * e2 + np.sin(t) * e3
        vals.append(d @ second @ d - (d @ mean) ** 2)
    oracle = 10 * min(vals) / (mean @ mean)
    assert abs(rep.xi2 - oracle) < 1e-6


def test_squeezed_frame_puts_squeezing_on_z():
    s = squeezed_frame_state(40, 0.02)
    mean = mean_spin(s)
    assert mean[0] > 0 and abs(mean[1]) < 1e-9 and abs(mean[2]) < 1e-9
    var_z = collective_moment(s, "zz").real
    assert abs(40 * var_z / mean[0] ** 2 - xi2_numeric(s).xi2) < 1e-9


def test_degenerate_mean_spin():
    dicke0 = np.zeros(3)
    dicke0[1] = 1.0
    with pytest.raises(DegenerateState):
        xi2_numeric(SymmetricState(2, dicke0))


def test_csv_serialization():
    text = coherent_state_x(2).to_csv()
    assert text.splitlines()[0] == "index,re,im" and len(text.splitlines()) == 4
