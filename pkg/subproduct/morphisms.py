"""
Automorphisms of classified systems and their behaviour under restriction.

An automorphism is described by a generator word (c, swap, b) and realized
in basis coordinates as

    T_k = e^{ick} · S^{swap} · X_k(b)

where S exchanges x and y and X_k is the extra phase family of the type:

    E1(0)          diag(1, e^{ibk})
    E2(0)          diag(e^{ib}, e^{-ib}) at odd k, identity at even k
    E3, E4, E5     diag(1, e^{ib})

In the system's own coordinates θ_k = P_k T_k P_k^{-1}, with P_k the matrix
whose columns are the canonical basis vectors x_k, y_k.
"""

import cmath
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from .classifier import Classification, product_directions
from .errors import (
    AutomorphismError,
    ClassificationError,
    DecompositionError,
    HorizonError,
    InadmissibleGeneratorError,
    LiftError,
)
from .numcore import (
    DEFAULT_TOLERANCE,
    TWO_PI,
    Tolerance,
    norm,
    phase_distance,
    wrap_phase,
)
from .systems import (
    CanonicalBasis,
    FiniteGridSystem,
    SystemType,
    basis_residual,
    intertwining_residual,
    restrict,
    restricted_spec,
)

logger = logging.getLogger(__name__)

Family = Dict[int, np.ndarray]

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
DECOMPOSITION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GeneratorWord:
    """trivial(c) ∘ swap? ∘ extra(b); phases are reduced to [0, 2π)."""

    c: float = 0.0
    swap: bool = False
    b: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", wrap_phase(float(self.c)))
        object.__setattr__(self, "swap", bool(self.swap))
        if self.b is not None:
            object.__setattr__(self, "b", wrap_phase(float(self.b)))

    def to_json(self) -> Dict[str, object]:
        return {"c": self.c, "swap": self.swap, "b": self.b}


@dataclass(frozen=True)
class Automorphism:
    word: GeneratorWord
    thetas: Family
    residual: float


class ExtraFamily(str, Enum):
    NONE = "none"
    ZERO_E1 = "e1_zero"
    ZERO_E2 = "e2_zero"
    PHASE_Y = "phase_y"


def extra_family(
    classification: Classification, tol: Tolerance = DEFAULT_TOLERANCE
) -> ExtraFamily:
    """Which extra phase family the classified type admits."""
    spec = classification.spec
    tag = spec.type_tag
    if tag in (SystemType.E3, SystemType.E4, SystemType.E5):
        return ExtraFamily.PHASE_Y
    if (spec.a or 0.0) > tol.eps_structural:
        return ExtraFamily.NONE
    return ExtraFamily.ZERO_E1 if tag is SystemType.E1 else ExtraFamily.ZERO_E2


def _extra_matrix(family: ExtraFamily, b: float, k: int) -> np.ndarray:
    if family == ExtraFamily.ZERO_E1:
        return np.diag([1.0, cmath.exp(1j * b * k)])
    if family == ExtraFamily.ZERO_E2:
        if k % 2 == 0:
            return np.eye(2, dtype=complex)
        return np.diag([cmath.exp(1j * b), cmath.exp(-1j * b)])
    return np.diag([1.0, cmath.exp(1j * b)])


def word_matrix(word: GeneratorWord, k: int, family: ExtraFamily) -> np.ndarray:
    """T_k of the word in canonical-basis coordinates."""
    t = cmath.exp(1j * word.c * k) * np.eye(2, dtype=complex)
    if word.swap:
        t = t @ SWAP
    if word.b is not None and family != ExtraFamily.NONE:
        t = t @ _extra_matrix(family, word.b, k)
    return t


def make_automorphism(
    classification: Classification,
    word: GeneratorWord,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> Automorphism:
    """Realize a generator word as a unitary family on the classified system.

    Raises:
        InadmissibleGeneratorError: swap outside E1/E2, or an extra phase the
            type does not admit
    """
    tag = classification.type_tag
    family = extra_family(classification, tol)
    if word.swap and tag not in (SystemType.E1, SystemType.E2):
        raise InadmissibleGeneratorError(
            f"swap is not an automorphism of {tag.label}", type=tag.value, generator="swap"
        )
    extra = word.b is not None and phase_distance(word.b, 0.0) > DECOMPOSITION_TOLERANCE
    if extra and family == ExtraFamily.NONE:
        raise InadmissibleGeneratorError(
            f"{classification.spec.describe()} admits no extra phase",
            type=tag.value,
            generator="extra",
        )
    basis = classification.basis
    thetas: Family = {}
    for k in range(1, classification.system.horizon + 1):
        p = basis.matrix(k)
        thetas[k] = p @ word_matrix(word, k, family) @ np.linalg.inv(p)
    residual = intertwining_residual(classification.system, classification.system, thetas)
    logger.debug(f"Realized {word} with diagram residual {residual:.2e}")
    return Automorphism(word, thetas, residual)


def verify_automorphism(sys: FiniteGridSystem, thetas: Family) -> float:
    """Diagram residual of θ as a self-map of ``sys``."""
    return intertwining_residual(sys, sys, thetas)


def family_distance(left: Family, right: Family) -> float:
    """Max over shared grid indices of the entrywise distance."""
    keys = sorted(set(left) & set(right))
    return max(float(np.max(np.abs(left[k] - right[k]))) for k in keys)


def same_automorphism(left: Family, right: Family, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    return family_distance(left, right) <= tol.eps_structural


def compose(left: Family, right: Family) -> Family:
    """(θ ∘ φ)_k = θ_k φ_k."""
    return {k: left[k] @ right[k] for k in left if k in right}


def commutator_residual(left: Family, right: Family) -> float:
    return max(
        float(np.max(np.abs(left[k] @ right[k] - right[k] @ left[k])))
        for k in left
        if k in right
    )


def apply_to_basis(thetas: Family, basis: CanonicalBasis) -> CanonicalBasis:
    return CanonicalBasis(
        basis.step,
        {k: (thetas[k] @ x, thetas[k] @ y) for k, (x, y) in basis.vectors.items()},
    )


def _candidate_words(
    classification: Classification, thetas: Family, family: ExtraFamily
) -> List[GeneratorWord]:
    basis = classification.basis
    t1 = np.linalg.inv(basis.matrix(1)) @ thetas[1] @ basis.matrix(1)
    swap = bool(abs(t1[0, 1]) + abs(t1[1, 0]) > abs(t1[0, 0]) + abs(t1[1, 1]))
    m = SWAP @ t1 if swap else t1
    if family == ExtraFamily.ZERO_E2:
        # T_2 = e^{2ic} S^{swap}; (c, b) and (c + π, b + π) realize the same family
        t2 = np.linalg.inv(basis.matrix(2)) @ thetas[2] @ basis.matrix(2)
        m2 = SWAP @ t2 if swap else t2
        c0 = cmath.phase(m2[0, 0]) / 2.0
        return [GeneratorWord(c0, swap, cmath.phase(m[0, 0]) - c0)]
    c = cmath.phase(m[0, 0])
    b = cmath.phase(m[1, 1]) - c
    if family == ExtraFamily.NONE:
        if phase_distance(b, 0.0) > DECOMPOSITION_TOLERANCE**0.5:
            raise DecompositionError(
                f"{classification.spec.describe()} automorphism carries an extra phase",
                phase=wrap_phase(b),
            )
        return [GeneratorWord(c, swap, None)]
    return [GeneratorWord(c, swap, b)]


def decompose_automorphism(
    classification: Classification,
    thetas: Family,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> GeneratorWord:
    """Write an automorphism as trivial(c) ∘ swap? ∘ extra(b).

    Raises:
        AutomorphismError: if thetas is not an automorphism within tolerance
        DecompositionError: if no generator word reproduces thetas
    """
    residual = verify_automorphism(classification.system, thetas)
    if residual > tol.eps_structural:
        raise AutomorphismError(
            "family does not intertwine the system with itself", residual=residual
        )
    family = extra_family(classification, tol)
    best: Optional[GeneratorWord] = None
    best_distance = float("inf")
    for word in _candidate_words(classification, thetas, family):
        distance = family_distance(make_automorphism(classification, word, tol).thetas, thetas)
        if distance < best_distance:
            best, best_distance = word, distance
    if best is None or best_distance > max(DECOMPOSITION_TOLERANCE, tol.eps_structural):
        raise DecompositionError(
            "automorphism is not a product of the known generators",
            type=classification.type_tag.value,
            distance=best_distance,
        )
    logger.debug(f"Decomposed automorphism as {best} (distance {best_distance:.2e})")
    return best


def _check_restrictable(classification: Classification, m: int) -> None:
    horizon = classification.system.horizon
    if m < 1 or horizon < 2 * m:
        raise HorizonError(
            f"horizon {horizon} too small to restrict by {m}", horizon=horizon, m=m
        )


def restrict_basis_Rm(classification: Classification, m: int) -> CanonicalBasis:
    """Subsample the basis at multiples of m; for E3 divide y by ‖y_m‖."""
    _check_restrictable(classification, m)
    basis = classification.basis
    scale = 1.0
    if classification.type_tag is SystemType.E3:
        scale = 1.0 / norm(basis.y(m))
    horizon = classification.system.horizon // m
    return CanonicalBasis(
        basis.step * m,
        {j: (basis.x(m * j), basis.y(m * j) * scale) for j in range(1, horizon + 1)},
    )


def restrict_classification(
    classification: Classification, m: int, tol: Tolerance = DEFAULT_TOLERANCE
) -> Classification:
    """Classification of the restricted system carried over by R_m."""
    if m == 1:
        return classification
    _check_restrictable(classification, m)
    sys = restrict(classification.system, m)
    spec = restricted_spec(classification.spec, m)
    basis = restrict_basis_Rm(classification, m)
    residual, relation = basis_residual(sys, spec, basis, threshold=tol.eps_structural)
    if residual > tol.eps_structural:
        raise ClassificationError(
            f"restricted basis violates {relation}", relation=relation, residual=residual
        )
    c: Optional[float] = None
    eta: Dict[int, complex] = {}
    if spec.lam is not None and sys.step != 1:
        c = abs(spec.lam) ** float(1 / sys.step)
        eta = {j: (spec.lam / abs(spec.lam)) ** j for j in range(1, sys.horizon + 1)}
    structure = product_directions(sys.beta(1, 1), tol)
    return Classification(spec, basis, residual, sys, structure, c=c, eta=eta)


def restrict_automorphism_Sm(thetas: Family, m: int) -> Family:
    """S_m: keep θ at multiples of m, re-indexed."""
    horizon = max(thetas) // m
    return {j: thetas[m * j] for j in range(1, horizon + 1)}


def _signed(phase: float) -> float:
    """Representative of a phase in (-π, π]."""
    return phase - TWO_PI if phase > cmath.pi else phase


def _lift_word(
    classification: Classification, word: GeneratorWord, m: int, tol: Tolerance
) -> GeneratorWord:
    family = extra_family(classification, tol)
    b: Optional[float] = None
    if word.b is not None and phase_distance(word.b, 0.0) > DECOMPOSITION_TOLERANCE:
        if family == ExtraFamily.PHASE_Y:
            b = word.b
        elif family == ExtraFamily.ZERO_E1:
            b = _signed(word.b) / m
        elif family == ExtraFamily.ZERO_E2 and m % 2 == 1:
            b = word.b
        else:
            raise LiftError(
                f"extra phase on the restriction of {classification.spec.describe()} "
                f"by {m} has no preimage",
                m=m,
                phase=word.b,
            )
    elif family != ExtraFamily.NONE:
        b = 0.0
    # smallest-phase preimage: the identity lifts to the identity
    return GeneratorWord(_signed(word.c) / m, word.swap, b)


def lift_automorphism(
    classification: Classification,
    m: int,
    restricted: Family,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> Automorphism:
    """Find θ on the full system with S_m(θ) equal to ``restricted``.

    Raises:
        AutomorphismError: if ``restricted`` is not an automorphism of the
            restricted system
        LiftError: if the restricted word has no preimage
    """
    small = restrict_classification(classification, m, tol)
    word = decompose_automorphism(small, restricted, tol)
    lifted = make_automorphism(classification, _lift_word(classification, word, m, tol), tol)
    mismatch = family_distance(restrict_automorphism_Sm(lifted.thetas, m), restricted)
    if mismatch > max(DECOMPOSITION_TOLERANCE, tol.eps_structural):
        raise LiftError("lift does not restrict to the input", m=m, mismatch=mismatch)
    logger.info(f"Lifted {word} through S_{m} to {lifted.word}")
    return lifted


def check_Rm_surjectivity(
    classification: Classification,
    m: int,
    target: CanonicalBasis,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> CanonicalBasis:
    """Return a basis b of the full system with R_m(b) = target.

    Raises:
        ClassificationError: if target is not a basis of the restricted type
        LiftError: if the automorphism carrying R_m(canonical) to target
            does not lift
    """
    small = restrict_classification(classification, m, tol)
    residual, relation = basis_residual(
        small.system, small.spec, target, threshold=tol.eps_structural
    )
    if residual > tol.eps_structural:
        raise ClassificationError(
            f"target basis violates {relation}", relation=relation, residual=residual
        )
    carrier = {
        j: target.matrix(j) @ np.linalg.inv(small.basis.matrix(j))
        for j in range(1, small.system.horizon + 1)
    }
    lifted = lift_automorphism(classification, m, carrier, tol)
    result = apply_to_basis(lifted.thetas, classification.basis)
    reduced = restrict_basis_Rm(
        Classification(
            classification.spec,
            result,
            classification.residual,
            classification.system,
            classification.structure,
        ),
        m,
    )
    mismatch = max(
        float(np.max(np.abs(reduced.matrix(j) - target.matrix(j))))
        for j in target.vectors
    )
    if mismatch > max(DECOMPOSITION_TOLERANCE, tol.eps_structural):
        raise LiftError("lifted basis does not restrict to the target", m=m, mismatch=mismatch)
    return result


def random_word(
    classification: Classification, rng: np.random.Generator, tol: Tolerance = DEFAULT_TOLERANCE
) -> GeneratorWord:
    """Uniformly drawn admissible word, used by the test oracles."""
    tag = classification.type_tag
    family = extra_family(classification, tol)
    swap = bool(rng.integers(2)) if tag in (SystemType.E1, SystemType.E2) else False
    b = float(rng.uniform(0.0, TWO_PI)) if family != ExtraFamily.NONE else None
    return GeneratorWord(float(rng.uniform(0.0, TWO_PI)), swap, b)
