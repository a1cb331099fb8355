from fractions import Fraction

import numpy as np
import pytest

from conftest import CANONICAL_SPECS, spec_id
from subproduct.errors import CompletenessError, HorizonError, InvalidSpecError, SchemaError
from subproduct.systems import (
    FiniteGridSystem,
    SystemSpec,
    SystemType,
    apply_isomorphism,
    basis_residual,
    check_associativity,
    check_isometries,
    generate_canonical,
    intertwining_residual,
    restrict,
    restricted_spec,
    scramble,
)


@pytest.mark.parametrize("spec", CANONICAL_SPECS, ids=spec_id)
def test_canonical_systems_are_valid(spec, canonical_systems):
    sys, basis = canonical_systems[spec_id(spec)]
    iso, _ = check_isometries(sys)
    assert iso <= 1e-12
    assert check_associativity(sys) <= 1e-12
    residual, _ = basis_residual(sys, spec, basis)
    assert residual <= 1e-12


@pytest.mark.parametrize(
    "kwargs",
    [
        {"type_tag": SystemType.E1, "a": 1.0},
        {"type_tag": SystemType.E1},
        {"type_tag": SystemType.E4, "a": 0.3},
        {"type_tag": SystemType.E3, "lam": 2.0, "c": 2.0},
        {"type_tag": SystemType.E3, "lam": 0j},
        {"type_tag": SystemType.E3, "c": 2.0, "b": 0.0, "eta_choices": (2,)},
        {"type_tag": SystemType.E3, "c": -1.0, "b": 0.0},
    ],
)
def test_invalid_specs_are_rejected(kwargs):
    with pytest.raises(InvalidSpecError):
        SystemSpec(**kwargs)


def test_spec_json():
    spec = SystemSpec.e3_rational(2.0, 1.0, [1, 0])
    assert spec.to_json() == {"type": "e3", "c": 2.0, "b": 1.0, "eta_choices": [1, 0]}
    assert SystemSpec.from_json(spec.to_json()) == spec
    assert SystemSpec.from_json({"type": "E3", "lambda": [0.0, 1.0]}).lam == 1j
    with pytest.raises(SchemaError):
        SystemSpec.from_json({"type": "e7"})


def test_grid_system_requires_every_pair():
    maps = {(1, 1): np.eye(4, 2), (1, 2): np.eye(4, 2)}
    with pytest.raises(CompletenessError):
        FiniteGridSystem(Fraction(1), 3, maps)
    with pytest.raises(SchemaError):
        FiniteGridSystem(Fraction(1), 2, {(1, 1): np.eye(4, 3)})
    with pytest.raises(HorizonError):
        FiniteGridSystem(Fraction(1), 1, {})


def test_grid_index_of():
    sys, _ = generate_canonical(SystemSpec.e4(), 4, 6)
    assert sys.index_of(Fraction(3, 4)) == 3
    assert sys.index_of(Fraction(1, 8)) is None
    assert sys.index_of(Fraction(2)) is None


def test_canonical_rejects_bad_grid():
    with pytest.raises(HorizonError):
        generate_canonical(SystemSpec.e4(), 1, 1)
    with pytest.raises(InvalidSpecError):
        generate_canonical(SystemSpec.e4(), 0, 4)


def test_scramble_is_seeded_isomorphic_copy(canonical_systems):
    sys, _ = canonical_systems[spec_id(SystemSpec.e3(2.0))]
    first, thetas = scramble(sys, 7)
    second, _ = scramble(sys, 7)
    for pair in sys.pairs:
        np.testing.assert_array_equal(first.beta(*pair), second.beta(*pair))
    assert check_isometries(first)[0] <= 1e-12
    assert intertwining_residual(sys, first, thetas) <= 1e-12


@pytest.mark.parametrize("m", [2, 3])
@pytest.mark.parametrize("spec", CANONICAL_SPECS, ids=spec_id)
def test_restrict_commutes_with_scramble(spec, m, canonical_systems):
    sys, _ = canonical_systems[spec_id(spec)]
    scrambled, thetas = scramble(sys, 31)
    sublattice = {j: thetas[m * j] for j in range(1, sys.horizon // m + 1)}
    left = restrict(scrambled, m)
    right = apply_isomorphism(restrict(sys, m), sublattice)
    assert left.step == right.step
    for pair in left.pairs:
        assert float(np.max(np.abs(left.beta(*pair) - right.beta(*pair)))) <= 1e-13


def test_restrict_subsamples_pairs(canonical_systems):
    sys, _ = canonical_systems[spec_id(SystemSpec.e2(0.4))]
    small = restrict(sys, 2)
    assert small.step == 2
    assert small.horizon == 4
    np.testing.assert_array_equal(small.beta(1, 1), sys.beta(2, 2))
    np.testing.assert_array_equal(small.beta(1, 3), sys.beta(2, 6))
    assert restrict(sys, 1) is sys
    with pytest.raises(HorizonError):
        restrict(sys, 5)


@pytest.mark.parametrize(
    "spec, m, expected",
    [
        (SystemSpec.e1(0.3), 2, SystemSpec.e1(0.09)),
        (SystemSpec.e2(0.4), 2, SystemSpec.e1(0.16)),
        (SystemSpec.e2(0.4), 3, SystemSpec.e2(0.064)),
        (SystemSpec.e2(0.0), 2, SystemSpec.e1(0.0)),
        (SystemSpec.e3(1j), 2, SystemSpec.e3(-1.0)),
        (SystemSpec.e3(2.0), 3, SystemSpec.e3(8.0)),
        (SystemSpec.e4(), 3, SystemSpec.e4()),
        (SystemSpec.e5(), 2, SystemSpec.e5()),
    ],
)
def test_restriction_table(spec, m, expected):
    got = restricted_spec(spec, m)
    assert got.type_tag is expected.type_tag
    if expected.a is not None:
        assert got.a == pytest.approx(expected.a, abs=1e-12)
    if expected.lam is not None:
        assert abs(got.lam - expected.lam) <= 1e-12
