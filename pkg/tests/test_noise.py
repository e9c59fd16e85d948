import math

import numpy as np
import pytest

from splitwit import fock4
from splitwit.dicke import chi_t_for_db, coherent_state_x, squeezed_frame_state, squeezed_state
from splitwit.errors import InvalidArgument
from splitwit.monomials import all_monomials, parse
from splitwit.noise import (NoiseConfig, coarse_grain_moments, estimator_monomials,
                            estimator_variance, evaluate_witness, noisy_moments, required_runs,
                            resolve_backend, runs_for_gap, s_threshold, setting_samples,
                            white_noise_second_moment, witness_under_noise)
from splitwit.specs import SUMMARY_MONOMIALS, s_spec


def test_noise_config_validation():
    with pytest.raises(InvalidArgument):
        NoiseConfig(p=1.2)
    with pytest.raises(InvalidArgument):
        NoiseConfig(sigma_c=-1)
    assert resolve_backend("auto", 20) == "oracle"
    assert resolve_backend("auto", 21) == "moment-map"
    with pytest.raises(InvalidArgument):
        resolve_backend("oracle", 31)
    with pytest.raises(InvalidArgument):
        resolve_backend("gpu", 5)


@pytest.mark.parametrize("n", [2, 9, 20])
def test_white_noise_coefficient_brute_force(n):
    brute = fock4.white_noise_part(n, [parse("AxAx"), parse("AyAy"), parse("BzBz")])
    for v in brute.values():
        assert abs(v - white_noise_second_moment(n)) < 1e-10
    assert abs(white_noise_second_moment(n) - n * (n + 5) / 48) < 1e-10


@pytest.mark.parametrize("n,seed", [(4, 0), (12, 1), (20, 2)])
def test_backends_agree_under_all_noise(n, seed):
    rng = np.random.default_rng(seed)
    noise = NoiseConfig(rng.uniform(0.5, 1), rng.uniform(0, 0.3), rng.uniform(0, 2))
    state = squeezed_frame_state(n, rng.uniform(0, 0.2))
    monos = set(SUMMARY_MONOMIALS) | estimator_monomials("S") | estimator_monomials("D")
    a = noisy_moments(state, monos, noise, "oracle")
    b = noisy_moments(state, monos, noise, "moment-map")
    for m in a.table:
        assert abs(a[m] - b[m]) < 1e-9


def test_phase_and_white_commute():
    # the local white-noise part is invariant under local z-rotations
    n, p, sig = 8, 0.7, 0.25
    split = fock4.split_state(squeezed_state(n, 0.3))
    monos = list(all_monomials(2))
    phase_then_white = fock4.white_noise_moments(n, p, fock4.phase_noise_moments(split, sig, monos))
    white_then_phase = fock4.phase_noise_moments(split, sig, monos)
    noise = fock4.white_noise_part(n, monos)
    for m in monos:
        direct = p * white_then_phase[m] + (1 - p) * noise[m]
        assert abs(phase_then_white[m] - direct) < 1e-12


def test_coarse_graining_channel():
    n = 10
    base = noisy_moments(squeezed_state(n, 0.2), all_monomials(2), backend="oracle")
    cg = coarse_grain_moments(base, 1.5)
    assert abs(cg["AzAz"] - base["AzAz"] - 1.5**2 / 2) < 1e-12
    for m in ["Ax", "By", "AxBy", "AzBz"]:
        assert abs(cg[m] - base[m]) < 1e-12
    assert coarse_grain_moments(base, 0.0).table == base.table
    # additive in sigma_c^2 for second moments
    twice = coarse_grain_moments(coarse_grain_moments(base, 0.8), 1.1)
    once = coarse_grain_moments(base, math.hypot(0.8, 1.1))
    for m in all_monomials(2):
        assert abs(twice[m] - once[m]) < 1e-12


def test_s_invariant_under_counting_noise():
    state = squeezed_frame_state(60, 0.01)
    ref = witness_under_noise("S", state).value
    for sc in (0.5, 3.0, 10.0):
        assert abs(witness_under_noise("S", state, NoiseConfig(sigma_c=sc)).value - ref) < 1e-9 * ref
    d0 = witness_under_noise("D", state).value
    assert abs(witness_under_noise("D", state, NoiseConfig(sigma_c=2.0)).value - d0 - 2 * 2.0**2) < 1e-9


@pytest.mark.parametrize("n", [4, 30, 200])
def test_coherent_state_saturates(n):
    for name, thr in (("S", s_threshold(n)), ("D", 0.0)):
        ev = witness_under_noise(name, coherent_state_x(n))
        assert abs(ev.value - thr) < 1e-8 * max(1, n * n) and not ev.violated


def test_custom_spec_threshold_is_binomial_bound():
    state = squeezed_frame_state(12, 0.05)
    ev = witness_under_noise(s_spec(), state)
    assert abs(ev.threshold - s_threshold(12)) < 1e-8
    assert abs(ev.value - witness_under_noise("S", state).value) < 1e-12


def test_runs_formula():
    assert runs_for_gap(2.0, 4.0, 3.0) == 9
    for gap, var in [(0.37, 11.0), (5.0, 1234.5), (1e-2, 3.3)]:
        runs = runs_for_gap(gap, var)
        assert 3 * math.sqrt(var / runs) <= gap * (1 + 1e-12)
        if runs > 1:
            assert 3 * math.sqrt(var / (runs - 1)) > gap
        quarter = runs_for_gap(2 * gap, var)
        assert abs(quarter - runs / 4) <= 1
    with pytest.raises(InvalidArgument):
        runs_for_gap(0.0, 1.0)


def test_no_violation_means_no_runs():
    rep = required_runs("S", coherent_state_x(50))
    assert rep.required_runs is None and all(v >= 0 for v in rep.variances.values())


def test_eigenstate_has_zero_variance():
    # N = 1 with the atom in state 1: Jz readings are deterministic
    from splitwit.dicke import SymmetricState
    state = SymmetricState(1, [0, 1])
    mom = noisy_moments(state, estimator_monomials("S"))
    assert estimator_variance("S", mom)["Z"] < 1e-14


def test_counting_noise_raises_d_variance():
    state = squeezed_frame_state(40, 0.02)
    prev = -1.0
    for sc in (0.0, 0.5, 1.0, 2.0, 4.0):
        rep = required_runs("D", state, NoiseConfig(sigma_c=sc), variance_model="readings")
        assert rep.variances["Z"] > prev
        prev = rep.variances["Z"]
    # the default model keeps the noise out of the variances
    quiet = required_runs("D", state, NoiseConfig(sigma_c=4.0)).variances
    assert quiet == required_runs("D", state).variances


@pytest.mark.parametrize("name", ["S", "D"])
def test_variances_against_monte_carlo(name):
    n = 10
    state = squeezed_frame_state(n, chi_t_for_db(n, -3))
    split = fock4.split_state(state)
    for sigma_c, model in ((0.0, "state"), (0.7, "readings")):
        rep = required_runs(name, state, NoiseConfig(sigma_c=sigma_c), "oracle", variance_model=model)
        for i, setting in enumerate("XYZ"):
            x = setting_samples(name, setting, split, 1_000_000, seed=10 * i + 1, sigma_c=sigma_c)
            c = x - x.mean()
            se = math.sqrt(((c**2 - (c**2).mean()) ** 2).mean() / len(x))
            assert abs((c**2).mean() - rep.variances[setting]) < 5 * se + 1e-12


def test_required_runs_against_repeated_experiments():
    # analytic N_m versus the spread of the S estimate over repeated experiments
    n, experiments = 10, 4000
    state = squeezed_frame_state(n, chi_t_for_db(n, -3))
    split = fock4.split_state(state)
    rep = required_runs("S", state, backend="oracle")
    runs = rep.required_runs
    est = np.zeros(experiments)
    for i, setting in enumerate("XYZ"):
        x = setting_samples("S", setting, split, runs * experiments, seed=100 + i)
        est += x.reshape(experiments, runs).mean(axis=1)
    gap = rep.witness_value - rep.separable_threshold
    assert abs(est.mean() - rep.witness_value) < 5 * est.std() / math.sqrt(experiments)
    # empirical runs for a 3-sigma separation, from the observed single-run spread
    empirical = 9 * runs * est.var() / gap**2
    rel = 5 * math.sqrt(2 / experiments)
    assert abs(empirical / runs - 1) < rel + 1 / runs
    assert np.mean(est - 3 * est.std() > rep.separable_threshold) > 0.4
