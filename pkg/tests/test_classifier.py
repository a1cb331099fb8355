from fractions import Fraction

import numpy as np
import pytest

from conftest import CANONICAL_SPECS, spec_id
from subproduct.classifier import (
    ProductVariant,
    _align_pair,
    classify,
    decide_isomorphic,
    double_root_lambda,
    product_directions,
    y_norms_squared,
)
from subproduct.errors import ClassificationError, InvalidSpecError, IsometryError
from subproduct.numcore import (
    DEFAULT_TOLERANCE,
    inner,
    kron,
    orthogonal_complement,
    product_factors,
)
from subproduct.rational_time import y_norm_law
from subproduct.systems import (
    FiniteGridSystem,
    SystemSpec,
    SystemType,
    generate_canonical,
    intertwining_residual,
    restrict,
    scramble,
)

SCRAMBLES = 100


def assert_same_spec(got: SystemSpec, expected: SystemSpec, tol: float = 1e-9) -> None:
    assert got.type_tag is expected.type_tag
    if expected.a is not None:
        assert abs(got.a - expected.a) <= tol
    if expected.lam is not None:
        assert abs(got.lam - expected.lam) <= tol


@pytest.mark.parametrize("spec", CANONICAL_SPECS, ids=spec_id)
def test_classifier_recovers_scrambled_type(spec):
    sys, _ = generate_canonical(spec, 1, 5)
    for seed in range(SCRAMBLES):
        scrambled, _ = scramble(sys, seed)
        assert_same_spec(classify(scrambled).spec, spec)


@pytest.mark.parametrize(
    "spec, variant",
    [
        (SystemSpec.e1(0.3), ProductVariant.GENERIC_PAIR),
        (SystemSpec.e2(0.4), ProductVariant.GENERIC_PAIR),
        (SystemSpec.e3(2.0), ProductVariant.DOUBLE_ROOT),
        (SystemSpec.e4(), ProductVariant.SECOND_FACTOR_FIXED),
        (SystemSpec.e5(), ProductVariant.FIRST_FACTOR_FIXED),
    ],
)
def test_product_structure_of_beta11(spec, variant, canonical_systems):
    sys, _ = canonical_systems[spec_id(spec)]
    assert product_directions(sys.beta(1, 1)).variant is variant


def test_second_factor_of_e4_is_x(canonical_systems):
    sys, _ = canonical_systems[spec_id(SystemSpec.e4())]
    structure = product_directions(sys.beta(1, 1))
    np.testing.assert_allclose(structure.fixed_factor, [1.0, 0.0], atol=1e-12)


def test_align_pair_makes_a_complex_overlap_real():
    x = np.array([1.0, 0.0], dtype=complex)
    y = np.exp(0.7j) * np.array([0.3, 0.4j])
    x1, y1, a = _align_pair(x, y, DEFAULT_TOLERANCE)
    assert a == pytest.approx(0.6, abs=1e-14)
    assert abs(inner(x1, y1) - 0.6) <= 1e-14
    assert np.linalg.norm(y1) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_double_root_direction_is_x_tensor_x(seed):
    sys, _ = generate_canonical(SystemSpec.e3(2.0), 1, 4)
    scrambled, thetas = scramble(sys, seed)
    structure = product_directions(scrambled.beta(1, 1))
    assert structure.variant is ProductVariant.DOUBLE_ROOT
    x1 = thetas[1] @ np.array([1.0, 0.0], dtype=complex)
    expected = kron(x1, x1)
    direction = structure.directions[0]
    assert np.linalg.norm(direction - inner(expected, direction) * expected) <= 1e-12


def test_lambda_ignores_the_phases_of_x_and_y(rng):
    sys, _ = generate_canonical(SystemSpec.e3(-0.5 + 0.1j), 1, 4)
    beta = scramble(sys, 3)[0].beta(1, 1)
    _, x1, _ = product_factors(product_directions(beta).directions[0])
    y1 = orthogonal_complement(x1)
    reference = double_root_lambda(beta, x1, y1)
    assert abs(reference - (-0.5 + 0.1j)) <= 1e-9
    for phi, psi in rng.uniform(0.0, 2.0 * np.pi, size=(100, 2)):
        lam = double_root_lambda(beta, np.exp(1j * phi) * x1, np.exp(1j * psi) * y1)
        assert abs(lam - reference) <= 1e-12


def test_orthogonal_symmetric_pair_is_e1_zero():
    beta = np.zeros((4, 2), dtype=complex)
    beta[0, 0] = beta[3, 1] = 1.0
    classification = classify(FiniteGridSystem(Fraction(1), 2, {(1, 1): beta}))
    assert classification.type_tag is SystemType.E1
    assert classification.spec.a == 0.0


@pytest.mark.parametrize(
    "spec", [SystemSpec.e3(2.0), SystemSpec.e2(0.4)], ids=spec_id
)
def test_short_scrambled_systems_classify(spec):
    sys, _ = generate_canonical(spec, 1, 4)
    assert_same_spec(classify(scramble(sys, 2024)[0]).spec, spec)


def test_product_directions_requires_isometry():
    with pytest.raises(IsometryError):
        product_directions(2.0 * np.eye(4, 2))


def test_report_fields(canonical_systems):
    sys, _ = canonical_systems[spec_id(SystemSpec.e1(0.3))]
    report = classify(sys).to_report()
    assert report["type"] == "e1"
    assert report["parameters"]["a"] == pytest.approx(0.3, abs=1e-9)
    assert report["step"] == {"num": 1, "den": 1}
    assert report["horizon"] == 8
    assert len(report["basis"]) == 8
    assert report["residual"] <= 1e-9


def test_inconsistent_data_is_rejected(canonical_systems):
    good, _ = canonical_systems[spec_id(SystemSpec.e1(0.3))]
    other, _ = generate_canonical(SystemSpec.e1(0.5), 1, 8)
    maps = good.maps
    maps[(1, 2)] = other.beta(1, 2)
    with pytest.raises(ClassificationError) as excinfo:
        classify(FiniteGridSystem(good.step, good.horizon, maps))
    assert "relation" in excinfo.value.details


def test_isomorphism_decisions(canonical_systems):
    e1, _ = canonical_systems[spec_id(SystemSpec.e1(0.3))]
    near, _ = generate_canonical(SystemSpec.e1(0.31), 1, 8)
    assert decide_isomorphic(e1, near) is None

    e4, _ = canonical_systems[spec_id(SystemSpec.e4())]
    e5, _ = canonical_systems[spec_id(SystemSpec.e5())]
    assert decide_isomorphic(e4, e5) is None

    scrambled, _ = scramble(e1, 99)
    thetas = decide_isomorphic(e1, scrambled)
    assert thetas is not None
    assert intertwining_residual(e1, scrambled, thetas) <= 1e-10


def test_isomorphism_needs_a_common_grid(canonical_systems):
    e1, _ = canonical_systems[spec_id(SystemSpec.e1(0.3))]
    with pytest.raises(InvalidSpecError):
        decide_isomorphic(e1, restrict(e1, 2))


@pytest.mark.parametrize(
    "spec, m, expected",
    [
        (SystemSpec.e1(0.3), 2, SystemSpec.e1(0.09)),
        (SystemSpec.e1(0.3), 3, SystemSpec.e1(0.027)),
        (SystemSpec.e2(0.4), 2, SystemSpec.e1(0.16)),
        (SystemSpec.e2(0.4), 3, SystemSpec.e2(0.064)),
        (SystemSpec.e2(0.0), 2, SystemSpec.e1(0.0)),
        (SystemSpec.e3(1j), 2, SystemSpec.e3(-1.0)),
        (SystemSpec.e3(2.0), 3, SystemSpec.e3(8.0)),
        (SystemSpec.e3(-0.5 + 0.1j), 2, SystemSpec.e3((-0.5 + 0.1j) ** 2)),
        (SystemSpec.e4(), 2, SystemSpec.e4()),
        (SystemSpec.e5(), 3, SystemSpec.e5()),
    ],
)
def test_classify_restricted_system(spec, m, expected, canonical_systems):
    sys, _ = canonical_systems[spec_id(spec)]
    assert_same_spec(classify(restrict(sys, m)).spec, expected)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("denominator", [2, 6, 12])
def test_norm_law_on_rational_grids(c, denominator):
    spec = SystemSpec.e3_rational(c, 0.3)
    sys, _ = generate_canonical(spec, denominator, denominator)
    classification = classify(sys)
    assert classification.type_tag is SystemType.E3
    assert classification.c == pytest.approx(c, abs=1e-9)
    for k, value in y_norms_squared(classification).items():
        assert abs(value - y_norm_law(c, Fraction(k, denominator))) <= 1e-12


def test_rational_grid_reports_eta():
    sys, _ = generate_canonical(SystemSpec.e3_rational(2.0, 1.0), 4, 4)
    classification = classify(sys)
    for k, value in classification.eta.items():
        assert abs(value - np.exp(1j * k / 4)) <= 1e-12
    assert len(classification.to_report()["parameters"]["eta"]) == 4
