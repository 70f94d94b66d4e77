import math
import random
from fractions import Fraction

import pytest

from adl import closed_form as cf
from adl import oracle
from adl.diffusion import simulate
from adl.estimators import three_obs_intersection, uniform_mle_cases
from adl.experiments import derive_seed
from adl.protocol import (
    constant_protocol,
    hop_distribution,
    perfect_protocol,
    uniform_protocol,
)

UNI3 = uniform_protocol(3)


def test_enumerate_first_step_is_uniform():
    outs = oracle.enumerate_single(UNI3, 2)
    assert len(outs) == 3
    assert all(o.prob == Fraction(1, 3) for o in outs)
    assert {o.vs_now for o in outs} == {(0,), (1,), (2,)}


def test_enumerate_always_move_t4():
    outs = oracle.enumerate_single(constant_protocol(3, 0), 4)
    assert len(outs) == 6
    assert all(o.prob == Fraction(1, 6) for o in outs)
    assert all(len(o.vs_now) == 2 and o.vs_prev == o.vs_now for o in outs)


def test_enumerate_mass_is_one():
    for proto in (UNI3, perfect_protocol(3), uniform_protocol(4)):
        for t in (1, 2, 5, 6, 9):
            assert oracle.total_mass(oracle.enumerate_single(proto, t)) == 1


def test_enumerate_marginal_reproduces_hop_distribution():
    hop = hop_distribution(UNI3, 6)
    outs = oracle.enumerate_single(UNI3, 6)
    marg = {}
    for o in outs:
        marg[len(o.vs_now)] = marg.get(len(o.vs_now), 0) + o.prob
    assert marg == {h: hop.p_exact(6, h) for h in (1, 2, 3)}
    assert marg == {1: Fraction(1, 3), 2: Fraction(1, 3), 3: Fraction(1, 3)}


def test_enumerate_odd_time_split():
    # odd outcomes split into stayed (ball) and moved (edge) configurations
    outs = oracle.enumerate_single(UNI3, 5)
    ball = [o for o in outs if o.vs_prev == o.vs_now]
    edge = [o for o in outs if o.vs_prev != o.vs_now]
    assert oracle.total_mass(ball) == Fraction(1, 2)  # uniform stay probability
    assert oracle.total_mass(edge) == Fraction(1, 2)
    assert all(o.vs_now[:-1] == o.vs_prev for o in edge)


def test_enumerate_budget():
    with pytest.raises(ValueError):
        oracle.enumerate_single(UNI3, 12, budget=10)


def test_exact_success_even_even_is_41_over_72():
    assert oracle.exact_success("uniform_mle_cases", UNI3, (4, 4)) == Fraction(41, 72)


def test_exact_success_even_even_matches_closed_form_more():
    for d, t1, t2 in ((3, 4, 6), (3, 6, 6), (4, 4, 4), (4, 4, 6), (5, 4, 4)):
        got = oracle.exact_success("uniform_mle_cases", uniform_protocol(d), (t1, t2))
        assert got == cf.even_even_mle_exact(d, t1, t2).exact_value


def test_exact_success_even_odd_matches_closed_form():
    for d, te, to in ((3, 4, 5), (3, 6, 5), (3, 4, 7), (4, 4, 5)):
        got = oracle.exact_success("uniform_mle_cases", uniform_protocol(d), (te, to))
        assert got == cf.even_odd_mle_exact(d, te, to).exact_value
        swapped = oracle.exact_success("uniform_mle_cases", uniform_protocol(d), (to, te))
        assert swapped == got


def test_exact_success_odd_odd_below_upper_bound():
    for d, t1, t2 in ((3, 5, 5), (3, 5, 7), (4, 5, 5)):
        got = oracle.exact_success("uniform_mle_cases", uniform_protocol(d), (t1, t2))
        assert 0 < got <= cf.odd_odd_mle_upper(d, t1, t2).exact_value


def test_exact_success_generic_equals_cases():
    for times in ((4, 4), (4, 5), (5, 5)):
        a = oracle.exact_success("generic_mle", UNI3, times)
        b = oracle.exact_success("uniform_mle_cases", UNI3, times)
        assert a == b


def test_exact_success_three_obs_t2_is_split_probability():
    # with three radius-1 balls the estimator wins exactly when all first
    # steps differ: 3!/27 = 2/9, the same as the general lower bound
    assert oracle.exact_success("three_obs_intersection", UNI3, (2, 2, 2)) == Fraction(2, 9)
    assert oracle.exact_success(
        "three_obs_intersection", uniform_protocol(4), (2, 2, 2)
    ) == Fraction(6, 16)


def test_exact_success_three_obs_floor_is_tight_at_any_times():
    # the path medians only meet at the origin when the first steps split,
    # so the (d-1)(d-2)/d^2 floor is attained exactly, whatever the times
    for times in ((4, 4, 4), (4, 6, 8), (5, 6, 7)):
        assert oracle.exact_success("three_obs_intersection", UNI3, times) == Fraction(2, 9)
    assert oracle.exact_success(
        "three_obs_intersection", uniform_protocol(4), (4, 5, 6)
    ) == Fraction(6, 16)


def test_exact_success_single_mle_perfect_is_uniform_guess():
    per = perfect_protocol(3)
    for t in (2, 4, 6):
        n_t = 3 * (2 ** (t // 2) - 1) + 1
        got = oracle.exact_success("single_mle", per, (t,))
        assert got == Fraction(1, n_t - 1)


def test_exact_success_single_mle_uniform():
    # argmax sits at hop 1: success = (2/t) / d
    for t in (4, 6, 10):
        got = oracle.exact_success("single_mle", UNI3, (t,))
        assert got == Fraction(2, 3 * t)


def test_exact_success_two_obs_lower_bound_holds():
    for times in ((4, 4), (4, 5), (6, 6)):
        got = oracle.exact_success("two_obs_path", UNI3, times)
        floor = Fraction(2, 3) * Fraction(2, min(times))
        assert got >= floor


def test_exact_success_two_obs_at_acceptance_times():
    # the exact values behind the t = (12, 12) acceptance jobs
    got = oracle.exact_success("two_obs_path", UNI3, (12, 12))
    assert got >= Fraction(1, 9)
    # at even-even times the path estimator's fallback coincides with the
    # closed-form MLE cases, so the success probabilities agree exactly
    assert got == cf.even_even_mle_exact(3, 12, 12).exact_value
    per = oracle.exact_success("two_obs_path", perfect_protocol(3), (12, 12))
    assert per >= Fraction(1, 9)


def test_exact_success_respects_budget_and_arity():
    with pytest.raises(ValueError):
        oracle.exact_success("uniform_mle_cases", UNI3, (4, 4), budget=10)
    with pytest.raises(ValueError):
        oracle.exact_success("three_obs_intersection", UNI3, (2, 2))
    with pytest.raises(ValueError):
        oracle.exact_success("uniform_mle_cases", perfect_protocol(3), (4, 4))
    with pytest.raises(ValueError):
        oracle.exact_success("made_up", UNI3, (4, 4))


def test_exact_success_matches_monte_carlo_three_sigma():
    # oracle value vs sampled frequency for two estimator/protocol pairs
    n = 4000
    exact = oracle.exact_success("uniform_mle_cases", UNI3, (4, 5))
    hits = 0
    for trial in range(n):
        s1 = simulate(UNI3, 4, seed=derive_seed(50, trial, 0)).snapshot_at(4)
        s2 = simulate(UNI3, 5, seed=derive_seed(50, trial, 1)).snapshot_at(5)
        rng = random.Random(derive_seed(50, trial, 2))
        hits += uniform_mle_cases(s1, s2, rng).chosen == ()
    sigma = math.sqrt(float(exact) * (1 - float(exact)) / n)
    assert abs(hits / n - float(exact)) <= 3 * sigma

    exact = oracle.exact_success("three_obs_intersection", UNI3, (5, 6, 7))
    hits = 0
    for trial in range(n):
        snaps = [
            simulate(UNI3, t, seed=derive_seed(51, trial, i)).snapshot_at(t)
            for i, t in enumerate((5, 6, 7))
        ]
        rng = random.Random(derive_seed(51, trial, 3))
        hits += three_obs_intersection(*snaps, rng).chosen == ()
    sigma = math.sqrt(float(exact) * (1 - float(exact)) / n)
    assert abs(hits / n - float(exact)) <= 3 * sigma


def test_outcomes_csv_dump():
    text = oracle.outcomes_to_csv(oracle.enumerate_single(UNI3, 2))
    lines = text.strip().splitlines()
    assert lines[0] == "vs_prev,vs_now,prob"
    assert "/0,/0,1/3" in lines[1]
