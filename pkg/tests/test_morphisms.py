import numpy as np
import pytest

from conftest import CANONICAL_SPECS, spec_id
from subproduct.classifier import Classification, classify
from subproduct.errors import AutomorphismError, InadmissibleGeneratorError, LiftError
from subproduct.morphisms import (
    ExtraFamily,
    GeneratorWord,
    apply_to_basis,
    check_Rm_surjectivity,
    commutator_residual,
    compose,
    decompose_automorphism,
    extra_family,
    family_distance,
    lift_automorphism,
    make_automorphism,
    random_word,
    restrict_automorphism_Sm,
    restrict_basis_Rm,
    restrict_classification,
    same_automorphism,
    verify_automorphism,
)
from subproduct.numcore import phase_distance
from subproduct.systems import SystemSpec, generate_canonical, random_unitaries

WORDS = 50


@pytest.fixture(scope="module")
def classifications():
    return {
        spec_id(spec): classify(generate_canonical(spec, 1, 6)[0]) for spec in CANONICAL_SPECS
    }


@pytest.mark.parametrize(
    "spec, family",
    [
        (SystemSpec.e1(0.0), ExtraFamily.ZERO_E1),
        (SystemSpec.e1(0.3), ExtraFamily.NONE),
        (SystemSpec.e2(0.0), ExtraFamily.ZERO_E2),
        (SystemSpec.e2(0.4), ExtraFamily.NONE),
        (SystemSpec.e3(1j), ExtraFamily.PHASE_Y),
        (SystemSpec.e4(), ExtraFamily.PHASE_Y),
        (SystemSpec.e5(), ExtraFamily.PHASE_Y),
    ],
)
def test_extra_family_per_type(spec, family, classifications):
    assert extra_family(classifications[spec_id(spec)]) is family


@pytest.mark.parametrize("spec", CANONICAL_SPECS, ids=spec_id)
def test_decompose_inverts_make(spec, classifications, rng):
    classification = classifications[spec_id(spec)]
    for _ in range(WORDS):
        word = random_word(classification, rng)
        auto = make_automorphism(classification, word)
        assert auto.residual <= 1e-12
        found = decompose_automorphism(classification, auto.thetas)
        rebuilt = make_automorphism(classification, found)
        assert family_distance(rebuilt.thetas, auto.thetas) <= 1e-9
        assert found.swap == word.swap
        if extra_family(classification) is not ExtraFamily.ZERO_E2:
            assert phase_distance(found.c, word.c) <= 1e-9
            if word.b is not None:
                assert phase_distance(found.b, word.b) <= 1e-9


@pytest.mark.parametrize("spec", CANONICAL_SPECS, ids=spec_id)
def test_restriction_is_equivariant(spec, classifications, rng):
    classification = classifications[spec_id(spec)]
    m = 2
    auto = make_automorphism(classification, random_word(classification, rng))
    moved = Classification(
        classification.spec,
        apply_to_basis(auto.thetas, classification.basis),
        classification.residual,
        classification.system,
        classification.structure,
    )
    left = restrict_basis_Rm(moved, m)
    right = apply_to_basis(
        restrict_automorphism_Sm(auto.thetas, m), restrict_basis_Rm(classification, m)
    )
    for j in left.vectors:
        assert float(np.max(np.abs(left.matrix(j) - right.matrix(j)))) <= 1e-12


@pytest.mark.parametrize("spec", CANONICAL_SPECS, ids=spec_id)
@pytest.mark.parametrize("m", [2, 3])
def test_lift_round_trip(spec, m, classifications, rng):
    classification = classifications[spec_id(spec)]
    auto = make_automorphism(classification, random_word(classification, rng))
    restricted = restrict_automorphism_Sm(auto.thetas, m)
    lifted = lift_automorphism(classification, m, restricted)
    assert verify_automorphism(classification.system, lifted.thetas) <= 1e-10
    assert family_distance(restrict_automorphism_Sm(lifted.thetas, m), restricted) <= 1e-10


def test_e2_zero_extra_phase_has_no_preimage_at_even_m(classifications):
    classification = classifications[spec_id(SystemSpec.e2(0.0))]
    small = restrict_classification(classification, 2)
    extra = make_automorphism(small, GeneratorWord(0.0, False, 1.0))
    with pytest.raises(LiftError):
        lift_automorphism(classification, 2, extra.thetas)
    target = apply_to_basis(extra.thetas, small.basis)
    with pytest.raises(LiftError):
        check_Rm_surjectivity(classification, 2, target)


def test_restricted_bases_lift(classifications):
    classification = classifications[spec_id(SystemSpec.e1(0.3))]
    small = restrict_classification(classification, 2)
    swapped = make_automorphism(small, GeneratorWord(0.7, True))
    target = apply_to_basis(swapped.thetas, small.basis)
    lifted = check_Rm_surjectivity(classification, 2, target)
    moved = Classification(
        classification.spec,
        lifted,
        classification.residual,
        classification.system,
        classification.structure,
    )
    reduced = restrict_basis_Rm(moved, 2)
    for j in target.vectors:
        np.testing.assert_allclose(reduced.matrix(j), target.matrix(j), atol=1e-10)


def test_inadmissible_generators(classifications):
    with pytest.raises(InadmissibleGeneratorError):
        make_automorphism(classifications[spec_id(SystemSpec.e3(2.0))], GeneratorWord(swap=True))
    with pytest.raises(InadmissibleGeneratorError):
        make_automorphism(
            classifications[spec_id(SystemSpec.e1(0.3))], GeneratorWord(0.0, False, 0.5)
        )


def test_random_unitaries_are_not_automorphisms(classifications):
    classification = classifications[spec_id(SystemSpec.e1(0.3))]
    with pytest.raises(AutomorphismError):
        decompose_automorphism(classification, random_unitaries(5, 6))


def test_phase_automorphisms_compose_and_commute(classifications):
    classification = classifications[spec_id(SystemSpec.e3(-0.5 + 0.1j))]
    first = make_automorphism(classification, GeneratorWord(0.4, False, 1.1))
    second = make_automorphism(classification, GeneratorWord(1.3, False, 2.0))
    both = compose(first.thetas, second.thetas)
    assert verify_automorphism(classification.system, both) <= 1e-12
    assert commutator_residual(first.thetas, second.thetas) <= 1e-12
    assert same_automorphism(both, compose(second.thetas, first.thetas))
    word = decompose_automorphism(classification, both)
    assert phase_distance(word.c, 1.7) <= 1e-9
    assert phase_distance(word.b, 3.1) <= 1e-9


def test_decomposed_swap_is_a_plain_bool(classifications):
    classification = classifications[spec_id(SystemSpec.e1(0.3))]
    swapped = make_automorphism(classification, GeneratorWord(0.2, True))
    word = decompose_automorphism(classification, swapped.thetas)
    assert type(word.swap) is bool
    assert word.to_json()["swap"] is True
    assert type(GeneratorWord(swap=np.bool_(False)).swap) is bool


@pytest.mark.parametrize("spec", CANONICAL_SPECS, ids=spec_id)
def test_restriction_maps_compose(spec, canonical_systems, rng):
    classification = classify(canonical_systems[spec_id(spec)][0])
    direct = restrict_basis_Rm(classification, 4)
    stepwise = restrict_basis_Rm(restrict_classification(classification, 2), 2)
    assert direct.step == stepwise.step
    for j in direct.vectors:
        assert float(np.max(np.abs(direct.matrix(j) - stepwise.matrix(j)))) <= 1e-12

    thetas = make_automorphism(classification, random_word(classification, rng)).thetas
    once = restrict_automorphism_Sm(thetas, 4)
    twice = restrict_automorphism_Sm(restrict_automorphism_Sm(thetas, 2), 2)
    assert family_distance(once, twice) == 0.0


@pytest.mark.parametrize(
    "spec",
    [SystemSpec.e1(0.3), SystemSpec.e3(2.0), SystemSpec.e5()],
    ids=spec_id,
)
def test_restricted_canonical_basis_lifts_to_itself(spec, classifications):
    classification = classifications[spec_id(spec)]
    target = restrict_basis_Rm(classification, 2)
    lifted = check_Rm_surjectivity(classification, 2, target)
    for k in classification.basis.vectors:
        np.testing.assert_allclose(
            lifted.matrix(k), classification.basis.matrix(k), atol=1e-10
        )


def test_swapped_target_lifts_to_the_swapped_basis():
    classification = classify(generate_canonical(SystemSpec.e1(0.5), 1, 6)[0])
    small = restrict_classification(classification, 2)
    assert small.spec.a == pytest.approx(0.25, abs=1e-12)
    target = apply_to_basis(make_automorphism(small, GeneratorWord(swap=True)).thetas, small.basis)
    lifted = check_Rm_surjectivity(classification, 2, target)
    expected = apply_to_basis(
        make_automorphism(classification, GeneratorWord(swap=True)).thetas,
        classification.basis,
    )
    for k in expected.vectors:
        np.testing.assert_allclose(lifted.matrix(k), expected.matrix(k), atol=1e-10)


def test_extra_phase_target_lifts_on_e5(classifications):
    classification = classifications[spec_id(SystemSpec.e5())]
    small = restrict_classification(classification, 2)
    extra = make_automorphism(small, GeneratorWord(0.0, False, 0.9))
    target = apply_to_basis(extra.thetas, small.basis)
    lifted = check_Rm_surjectivity(classification, 2, target)
    moved = Classification(
        classification.spec,
        lifted,
        classification.residual,
        classification.system,
        classification.structure,
    )
    reduced = restrict_basis_Rm(moved, 2)
    for j in target.vectors:
        np.testing.assert_allclose(reduced.matrix(j), target.matrix(j), atol=1e-10)
