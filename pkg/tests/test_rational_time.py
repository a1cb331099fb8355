import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from subproduct.errors import InvalidSpecError, RefinementError
from subproduct.rational_time import (
    EXPONENTIAL,
    ROOT_CHOICES,
    build_tower,
    equivalent_exponent,
    eta_for_spec,
    eta_from_tower,
    factorial_level,
    farthest_root_choices,
    grid_spec,
    refine_spec,
    tower_compatibility,
    tower_from_json,
    tower_to_json,
    y_norm_law,
)
from subproduct.systems import SystemSpec, SystemType, restricted_spec


@pytest.mark.parametrize(
    "spec, choices",
    [
        (SystemSpec.e1(0.5), None),
        (SystemSpec.e3(1.0), None),
        (SystemSpec.e3(4.0), [0]),
        (SystemSpec.e3(4.0), [1]),
        (SystemSpec.e3(4.0), [1, 2]),
        (SystemSpec.e4(), None),
        (SystemSpec.e5(), None),
    ],
)
def test_factorial_towers_are_compatible(spec, choices):
    tower = build_tower(spec, 3, choices)
    assert [level.denominator for level in tower.levels] == [1, 2, 6]
    assert tower_compatibility(tower) <= 1e-11


def test_e2_cannot_be_refined():
    with pytest.raises(RefinementError):
        build_tower(SystemSpec.e2(0.4), 2)
    with pytest.raises(RefinementError):
        refine_spec(SystemSpec.e2(0.4), 2)
    assert refine_spec(SystemSpec.e2(0.4), 1) == SystemSpec.e2(0.4)
    assert build_tower(SystemSpec.e2(0.4), 1).depth == 1


def test_refine_spec_picks_the_root():
    refined = refine_spec(SystemSpec.e3(4.0), 2, root_choice=1)
    assert abs(refined.lam - (-2.0)) <= 1e-12
    assert abs(restricted_spec(refined, 2).lam - 4.0) <= 1e-12
    assert refine_spec(SystemSpec.e1(0.25), 2).a == pytest.approx(0.5)
    assert refine_spec(SystemSpec.e5(), 3) == SystemSpec.e5()
    with pytest.raises(InvalidSpecError):
        refine_spec(SystemSpec.e3(4.0), 2, root_choice=2)


@pytest.mark.parametrize("denominator, level", [(1, 1), (4, 4), (5, 5), (6, 3), (12, 4)])
def test_factorial_level(denominator, level):
    assert factorial_level(denominator) == level


def test_grid_spec_uses_unit_time_parameters():
    step_spec = grid_spec(SystemSpec.e3_rational(2.0, 1.0), 4)
    assert abs(step_spec.lam - 2.0 ** 0.25 * cmath.exp(0.25j)) <= 1e-12
    discrete = SystemSpec.e3(2.0)
    assert grid_spec(discrete, 4) is discrete


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 1.0 + 1e-6, 1.0 - 1e-6])
def test_y_norm_law_endpoints(c):
    assert y_norm_law(c, 1) == pytest.approx(1.0, abs=1e-12)
    assert y_norm_law(c, Fraction(0)) == pytest.approx(0.0, abs=1e-15)


def test_y_norm_law_values():
    assert y_norm_law(2.0, Fraction(1, 2)) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert y_norm_law(1.0, Fraction(2, 3)) == pytest.approx(2.0 / 3.0, abs=1e-15)
    with pytest.raises(InvalidSpecError):
        y_norm_law(0.0, 1)


@pytest.mark.parametrize("c", [1.0 + 1e-6, 1.0 - 1e-6])
@pytest.mark.parametrize("t", [Fraction(1, 7), Fraction(1, 2), Fraction(5, 6), Fraction(3, 2)])
def test_y_norm_law_guarded_branch(c, t):
    u = math.log(c)
    exact = math.expm1(2.0 * float(t) * u) / math.expm1(2.0 * u)
    assert abs(y_norm_law(c, t) - exact) <= 1e-10


def test_tower_norm_law_on_every_level():
    tower = build_tower(SystemSpec.e3_rational(2.0, 0.5), 3, cover_unit=True)
    for level in tower.levels:
        for k, (_, y) in level.basis.vectors.items():
            law = y_norm_law(2.0, Fraction(k, level.denominator))
            assert abs(np.linalg.norm(y) ** 2 - law) <= 1e-12 * max(1.0, law)


def test_exponential_eta():
    eta = eta_for_spec(SystemSpec.e3_rational(1.0, 0.5), 3)
    assert eta.descriptor == EXPONENTIAL
    assert eta.is_exponential
    assert eta.b == 0.5
    assert eta.step == Fraction(1, 6)
    assert abs(eta.at(Fraction(1)) - cmath.exp(0.5j)) <= 1e-12
    assert eta.multiplicativity_residual() <= 1e-12


def test_root_choices_eta_matches_equivalent_exponent():
    eta = eta_for_spec(SystemSpec.e3_rational(1.0, 0.5, [1]), 3)
    assert eta.descriptor == ROOT_CHOICES
    assert not eta.is_exponential
    b = equivalent_exponent(0.5, [1])
    assert b == pytest.approx(0.5 + 2.0 * math.pi)
    for k, value in eta.values.items():
        assert abs(value - cmath.exp(1j * b * k / 6)) <= 1e-12
    with pytest.raises(InvalidSpecError):
        eta.at(Fraction(1, 12))


def test_eta_families_compare_on_the_shared_grid():
    twisted = eta_for_spec(SystemSpec.e3_rational(1.0, 0.5, [1]), 3)
    b = equivalent_exponent(0.5, [1])
    plain = eta_for_spec(SystemSpec.e3_rational(1.0, b), 3)
    assert twisted.descriptor != plain.descriptor
    assert twisted.distance(plain) <= 1e-12
    coarse = eta_for_spec(SystemSpec.e3_rational(1.0, 0.5), 2)
    assert coarse.distance(eta_for_spec(SystemSpec.e3_rational(1.0, 0.5), 3)) <= 1e-12
    assert twisted.distance(coarse) > 1.0


def test_eta_from_tower():
    tower = build_tower(SystemSpec.e3(4.0), 2, [1])
    eta = eta_from_tower(tower)
    assert eta.descriptor == ROOT_CHOICES
    assert abs(eta.at(Fraction(1, 2)) - (-1.0)) <= 1e-12
    with pytest.raises(InvalidSpecError):
        eta_from_tower(build_tower(SystemSpec.e4(), 2))


def test_farthest_root_choices():
    assert farthest_root_choices(0.0, 3) == [1, 1]
    assert farthest_root_choices(0.0, 1) == []


def test_tower_json_round_trip():
    tower = build_tower(SystemSpec.e3(4.0), 3, [1, 2])
    back = tower_from_json(tower_to_json(tower))
    assert back.root_spec == tower.root_spec
    assert back.root_choices == (1, 2)
    assert back.depth == 3
    assert back.root_spec.type_tag is SystemType.E3
    assert tower_compatibility(back) <= 1e-11
    assert eta_from_tower(back).values == pytest.approx(eta_from_tower(tower).values)
