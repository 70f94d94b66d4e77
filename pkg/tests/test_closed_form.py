import math
from fractions import Fraction

import pytest

from adl import closed_form as cf


def test_two_obs_detection_lower_values():
    assert cf.two_obs_detection_lower(3, 12, 12).exact_value == Fraction(1, 9)
    assert cf.two_obs_detection_lower(3, 2, 2).exact_value == Fraction(2, 3)
    assert cf.two_obs_detection_lower(4, 8, 20).value == pytest.approx(0.1875)
    assert cf.two_obs_detection_lower(3, 12, 12).kind == "lower_bound"
    with pytest.raises(ValueError):
        cf.two_obs_detection_lower(3, 1, 4)


def test_two_obs_obfuscation_upper_values():
    assert cf.two_obs_obfuscation_upper(3, 12, 12).exact_value == Fraction(7, 18)
    capped = cf.two_obs_obfuscation_upper(3, 4, 4)
    assert capped.value == 1.0 and capped.vacuous  # 7/6 clipped
    assert cf.two_obs_obfuscation_upper(5, 10, 30).value == pytest.approx(0.56)


def test_even_even_mle_exact_values():
    assert cf.even_even_mle_exact(3, 4, 4).exact_value == Fraction(41, 72)
    assert cf.even_even_mle_exact(3, 12, 12).value == pytest.approx(0.211420, abs=5e-7)
    assert cf.even_even_mle_exact(4, 4, 4).value == pytest.approx(0.598958, abs=5e-7)
    with pytest.raises(ValueError):
        cf.even_even_mle_exact(3, 4, 5)
    with pytest.raises(ValueError):
        cf.even_even_mle_exact(3, 2, 4)


def test_even_even_parts_recombine():
    for d, t1, t2 in ((3, 4, 4), (3, 12, 12), (4, 6, 10), (5, 8, 8)):
        total = Fraction(d - 1, d) * cf.even_even_mle_split_part(d, t1, t2) + Fraction(
            1, d
        ) * cf.even_even_mle_coincide_part(d, t1, t2)
        assert total == cf.even_even_mle_exact(d, t1, t2).exact_value
    assert cf.even_even_mle_split_part(3, 4, 4) == Fraction(12, 16)
    assert cf.even_even_mle_coincide_part(3, 4, 4) == Fraction(4, 16) * Fraction(5, 6)


def test_even_odd_mle_exact_values():
    v45 = cf.even_odd_mle_exact(3, 4, 5)
    assert v45.exact_value == Fraction(139, 216)  # certified by the oracle
    v65 = cf.even_odd_mle_exact(3, 6, 5)
    assert v65.kind == "exact"
    for d, te, to in ((3, 4, 5), (3, 6, 5), (4, 8, 9), (3, 12, 13)):
        got = cf.even_odd_mle_exact(d, te, to).exact_value
        cap = Fraction(d - 1, d) * Fraction(6, min(te, to))
        assert got <= cap
    with pytest.raises(ValueError):
        cf.even_odd_mle_exact(3, 5, 4)


def test_odd_odd_mle_upper_values():
    assert cf.odd_odd_mle_upper(3, 5, 5).value == pytest.approx(0.7407, abs=5e-5)
    assert cf.odd_odd_mle_upper(3, 9, 9).value == pytest.approx(0.4444, abs=5e-5)
    assert cf.odd_odd_mle_upper(4, 7, 11).value == pytest.approx(0.625)
    with pytest.raises(ValueError):
        cf.odd_odd_mle_upper(3, 5, 6)


def test_three_obs_lower_values():
    assert cf.three_obs_lower(3).exact_value == Fraction(2, 9)
    assert cf.three_obs_lower(4).exact_value == Fraction(6, 16)
    assert cf.three_obs_lower(10).exact_value == Fraction(72, 100)


def test_multi_obs_lower_values():
    assert cf.multi_obs_lower(4, 50).value == pytest.approx(1 - 4 * math.exp(-6.25))
    assert cf.multi_obs_lower(4, 50).value == pytest.approx(0.99228, abs=5e-6)
    vac = cf.multi_obs_lower(3, 1)
    assert vac.value == 0.0 and vac.vacuous  # bound below zero carries no info
    assert cf.multi_obs_lower(5, 100).value == pytest.approx(1 - 5 * math.exp(-18))


def test_radius_upper_from_obfuscation_values():
    t = cf.radius_upper_from_obfuscation(3, 20, 0.5, 2.0)
    assert t.value == pytest.approx(5 + math.log(40) / math.log(2) + 2)
    assert not t.is_probability
    t2 = cf.radius_upper_from_obfuscation(4, 40, 0.25, 8.0)
    assert t2.value == pytest.approx(0.75 * 20 + math.log(320) / math.log(3) + 2)
    with pytest.raises(ValueError):
        cf.radius_upper_from_obfuscation(3, 7, 0.5, 2.0)


def test_local_protocol_targets():
    radius, mle = cf.local_protocol_targets(3, 12, 0.5)
    assert radius.kind == "lower_bound" and radius.exact_value == 3
    n12 = 3 * (2 ** 6 - 1) + 1
    assert mle.value == pytest.approx(4 / math.sqrt(n12))
    early_r, _ = cf.local_protocol_targets(3, 4, 0.5)
    assert early_r.kind == "exact" and early_r.value == 1.0  # t/2 - 1 regime
    r2, m2 = cf.local_protocol_targets(3, 10, 0.25)
    assert r2.exact_value == Fraction(3, 4) * 5
    assert m2.kind == "upper_bound"


def test_path_fraction_sum_identity():
    for s in range(1, 31):
        for t in range(s, 31):
            assert cf.path_fraction_sum(s, t) == s + t - 1
    with pytest.raises(ValueError):
        cf.path_fraction_sum(4, 3)


def test_probability_targets_stay_in_unit_interval():
    with pytest.raises(ValueError):
        cf.Target(kind="exact", value=1.5, provenance="x")
    with pytest.raises(ValueError):
        cf.Target(kind="sideways", value=0.5, provenance="x")
