"""
Classification of concrete two-dimensional subproduct systems.

The decision is read off the product vectors in the range of β_{1,1}:

- every range vector is a product with a fixed first factor  -> E5
- every range vector is a product with a fixed second factor -> E4
- exactly one projective product direction (double root)     -> E3(λ)
- two product directions with collinear tensor factors       -> E1(a)
- two product directions with non-collinear tensor factors   -> E2(a)

The level-one basis found this way is propagated through β_{1,k}* to every
grid index and checked against the declared condition on all pairs.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import ClassificationError, InvalidSpecError, IsometryError
from .numcore import (
    DEFAULT_TOLERANCE,
    Tolerance,
    check_isometry,
    complex_to_json,
    inner,
    kron,
    norm,
    orthogonal_complement,
    phase_fix,
    product_factors,
    reshape_det,
    time_to_json,
    unit,
)
from .systems import (
    CanonicalBasis,
    FiniteGridSystem,
    SystemSpec,
    SystemType,
    basis_residual,
    intertwining_residual,
)

logger = logging.getLogger(__name__)

ISOMORPHISM_TOLERANCE = 1e-10


class ProductVariant(str, Enum):
    GENERIC_PAIR = "generic_pair"
    DOUBLE_ROOT = "double_root"
    FIRST_FACTOR_FIXED = "first_factor_fixed"
    SECOND_FACTOR_FIXED = "second_factor_fixed"


@dataclass(frozen=True)
class ProductStructure:
    """Product vectors in the range of β_{1,1}.

    ``directions`` holds unit product vectors of E_1 ⊗ E_1 (two for a generic
    pair, one for a double root); ``fixed_factor`` is the shared factor when
    the whole range consists of product vectors. ``margin`` is the relative
    discriminant |D|/scale² of the quadratic form.
    """

    variant: ProductVariant
    directions: Tuple[np.ndarray, ...] = ()
    fixed_factor: Optional[np.ndarray] = None
    margin: float = 0.0


def _quadratic_coefficients(u: np.ndarray, v: np.ndarray) -> Tuple[complex, complex, complex]:
    """det(c₁u + c₂v) = A c₁² + B c₁c₂ + C c₂²."""
    a = reshape_det(u)
    c = reshape_det(v)
    b = complex(u[0] * v[3] + v[0] * u[3] - u[1] * v[2] - v[1] * u[2])
    return a, b, c


def _fixed_factor(u: np.ndarray, v: np.ndarray) -> Tuple[ProductVariant, np.ndarray]:
    """Decide which tensor factor is shared by every vector of span{u, v}."""
    mu, mv = u.reshape(2, 2), v.reshape(2, 2)
    # shared first factor: columns of both coefficient matrices are parallel
    u_cols, s_cols, _ = np.linalg.svd(np.hstack([mu, mv]))
    # shared second factor: rows are parallel
    _, s_rows, vh_rows = np.linalg.svd(np.vstack([mu, mv]))
    if s_cols[1] <= s_rows[1]:
        return ProductVariant.FIRST_FACTOR_FIXED, phase_fix(u_cols[:, 0])
    return ProductVariant.SECOND_FACTOR_FIXED, phase_fix(vh_rows[0, :])


def product_directions(
    beta11: np.ndarray, tol: Tolerance = DEFAULT_TOLERANCE
) -> ProductStructure:
    """Find the product vectors in the range of an isometry E_1 → E_1 ⊗ E_1.

    Args:
        beta11: 4×2 isometry
        tol: structural threshold for the vanishing and coincidence tests

    Returns:
        ProductStructure describing the product vectors found

    Raises:
        IsometryError: if beta11 is not isometric within tolerance
    """
    beta11 = np.asarray(beta11, dtype=complex)
    residual = check_isometry(beta11)
    if residual > tol.eps_structural:
        raise IsometryError("beta_(1,1) is not an isometry", s=1, t=1, residual=residual)
    u, v = beta11[:, 0], beta11[:, 1]
    a, b, c = _quadratic_coefficients(u, v)
    scale = max(abs(a), abs(b), abs(c))

    if scale <= tol.eps_structural:
        variant, factor = _fixed_factor(u, v)
        logger.debug(f"Quadratic form vanishes (scale {scale:.3e}): {variant.value}")
        return ProductStructure(variant, fixed_factor=factor, margin=0.0)

    disc = b * b - 4.0 * a * c
    margin = abs(disc) / scale**2
    root = cmath.sqrt(disc)
    sign = 1.0 if (b.conjugate() * root).real >= 0.0 else -1.0
    q = -(b + sign * root) / 2.0
    first = q * u + a * v
    second = c * u + q * v
    if abs(a) < abs(c):
        first, second = second, first
    logger.debug(f"Discriminant margin {margin:.3e}")

    if margin <= tol.eps_structural or norm(second) <= tol.eps_structural * norm(first):
        # the square root of a rounding-level discriminant is of order sqrt(eps);
        # the double root itself is -b/2a
        direction = -b / 2.0 * u + a * v if abs(a) >= abs(c) else c * u - b / 2.0 * v
        return ProductStructure(
            ProductVariant.DOUBLE_ROOT, directions=(unit(direction),), margin=margin
        )
    pair = sorted((unit(first), unit(second)), key=lambda w: -abs(w[0]))
    return ProductStructure(
        ProductVariant.GENERIC_PAIR, directions=tuple(pair), margin=margin
    )


@dataclass
class Classification:
    """Result of classifying a concrete system.

    ``spec`` carries the per-step parameters (a, or λ for one grid step).
    On grids with step ≠ 1 an E3 result also carries the unit-time growth
    ``c`` = |λ|^{1/step} and the character values ``eta`` on the grid.
    """

    spec: SystemSpec
    basis: CanonicalBasis
    residual: float
    system: FiniteGridSystem
    structure: ProductStructure
    c: Optional[float] = None
    eta: Dict[int, complex] = field(default_factory=dict)

    @property
    def type_tag(self) -> SystemType:
        return self.spec.type_tag

    @property
    def margin(self) -> float:
        return self.structure.margin

    def rational_basis(self) -> CanonicalBasis:
        """E3 basis rescaled so that ‖y_t‖² follows the unit-time norm law."""
        if self.c is None:
            return self.basis
        from .rational_time import y_norm_law

        return self.basis.scaled_y(math.sqrt(y_norm_law(self.c, self.system.step)))

    def to_report(self) -> Dict[str, Any]:
        params: Dict[str, Any] = {}
        if self.spec.a is not None:
            params["a"] = self.spec.a
        if self.spec.lam is not None:
            params["lambda"] = complex_to_json(self.spec.lam)
        if self.c is not None:
            params["c"] = self.c
            params["eta"] = [complex_to_json(self.eta[k]) for k in sorted(self.eta)]
        return {
            "type": self.spec.type_tag.value,
            "parameters": params,
            "residual": self.residual,
            "discriminant_margin": self.margin,
            "variant": self.structure.variant.value,
            "step": time_to_json(self.system.step),
            "horizon": self.system.horizon,
            "basis": self.basis.to_json(),
        }


def y_norms_squared(classification: Classification) -> Dict[int, float]:
    """‖y_k‖² of the (rationally normalized) recovered basis."""
    basis = classification.rational_basis()
    return {k: norm(y) ** 2 for k, (_, y) in basis.vectors.items()}


def _propagate(
    sys: FiniteGridSystem,
    x1: np.ndarray,
    y1: np.ndarray,
    spec: SystemSpec,
) -> CanonicalBasis:
    """Extend a level-one basis to every grid index through β_{1,k}*."""
    vectors = {1: (x1, y1)}
    tag = spec.type_tag
    for k in range(1, sys.horizon):
        xk, yk = vectors[k]
        adjoint = sys.beta(1, k).conj().T
        if tag is SystemType.E2:
            x_img, y_img = kron(x1, yk), kron(y1, xk)
        elif tag is SystemType.E3:
            x_img = kron(x1, xk)
            y_img = kron(y1, xk) + spec.lam * kron(x1, yk)  # type: ignore[operator]
        elif tag is SystemType.E4:
            x_img, y_img = kron(x1, xk), kron(y1, xk)
        elif tag is SystemType.E5:
            x_img, y_img = kron(x1, xk), kron(x1, yk)
        else:
            x_img, y_img = kron(x1, xk), kron(y1, yk)
        vectors[k + 1] = (adjoint @ x_img, adjoint @ y_img)
    return CanonicalBasis(sys.step, vectors)


def _align_pair(
    x1: np.ndarray, y1: np.ndarray, tol: Tolerance
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Phase-fix x1 and rotate y1 so that ⟨x1, y1⟩ is real and non-negative."""
    x1 = phase_fix(unit(x1))
    y1 = unit(y1)
    overlap = inner(x1, y1)
    if abs(overlap) <= tol.eps_structural:
        return x1, phase_fix(y1), 0.0
    # inner is conjugate-linear in x1, so the rotation of y1 scales it directly
    y1 = y1 * (abs(overlap) / overlap)
    return x1, y1, abs(overlap)


def double_root_lambda(
    beta11: np.ndarray, x1: np.ndarray, y1: np.ndarray, tol: Tolerance = DEFAULT_TOLERANCE
) -> complex:
    """λ from the x₁⊗y₁ and y₁⊗x₁ components of a range vector w ⊥ x₁⊗x₁.

    The ratio does not depend on the phases of x₁ and y₁.

    Raises:
        ClassificationError: if w has no y₁⊗x₁ component
    """
    x2 = beta11.conj().T @ kron(x1, x1)
    w = beta11 @ orthogonal_complement(unit(x2))
    denominator = inner(kron(y1, x1), w)
    if abs(denominator) <= tol.eps_structural:
        raise ClassificationError(
            "double root without a y-component: beta_(1,1)(y_2) has no y1⊗x1 part",
            relation="beta_1,1(y_2)",
        )
    return inner(kron(x1, y1), w) / denominator


def classify(sys: FiniteGridSystem, tol: Tolerance = DEFAULT_TOLERANCE) -> Classification:
    """Decide which canonical system ``sys`` is isomorphic to.

    Args:
        sys: validated grid system
        tol: thresholds for the decisions and the final residual check

    Returns:
        Classification with per-step spec, canonical basis and residual

    Raises:
        ClassificationError: if the recovered basis violates a relation of the
            declared condition by more than ``tol.eps_structural``
    """
    structure = product_directions(sys.beta(1, 1), tol)
    c: Optional[float] = None
    eta: Dict[int, complex] = {}

    if structure.variant is ProductVariant.FIRST_FACTOR_FIXED:
        x1 = structure.fixed_factor
        spec = SystemSpec.e5()
        y1 = orthogonal_complement(x1)
    elif structure.variant is ProductVariant.SECOND_FACTOR_FIXED:
        x1 = structure.fixed_factor
        spec = SystemSpec.e4()
        y1 = orthogonal_complement(x1)
    elif structure.variant is ProductVariant.DOUBLE_ROOT:
        _, p, _ = product_factors(structure.directions[0])
        x1 = phase_fix(p)
        y1 = orthogonal_complement(x1)
        lam = double_root_lambda(sys.beta(1, 1), x1, y1, tol)
        spec = SystemSpec.e3(lam)
        if sys.step != 1:
            c = abs(lam) ** float(1 / sys.step)
            phase = lam / abs(lam)
            eta = {k: phase**k for k in range(1, sys.horizon + 1)}
    else:
        factors = [product_factors(d) for d in structure.directions]
        collinear = all(
            1.0 - abs(inner(p, q)) <= tol.eps_structural for _, p, q in factors
        )
        if collinear:
            x1, y1, a = _align_pair(factors[0][1], factors[1][1], tol)
            spec = SystemSpec.e1(a)
        else:
            x1, y1, a = _align_pair(factors[0][1], factors[0][2], tol)
            spec = SystemSpec.e2(a)

    assert x1 is not None
    basis = _propagate(sys, x1, y1, spec)
    residual, relation = basis_residual(sys, spec, basis, threshold=tol.eps_structural)
    if residual > tol.eps_structural:
        raise ClassificationError(
            f"data inconsistent with {spec.describe()}: relation {relation} violated",
            relation=relation,
            residual=residual,
            candidate=spec.to_json(),
        )
    logger.info(
        f"Classified {sys!r} as {spec.describe()} (residual {residual:.2e}, "
        f"margin {structure.margin:.2e})"
    )
    return Classification(spec, basis, residual, sys, structure, c=c, eta=eta)


def specs_agree(left: SystemSpec, right: SystemSpec, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """Same type and parameters within the structural tolerance."""
    if left.type_tag is not right.type_tag:
        return False
    if left.a is not None and right.a is not None:
        return abs(left.a - right.a) <= tol.eps_structural
    if left.lam is not None and right.lam is not None:
        return abs(left.lam - right.lam) <= tol.eps_structural
    return True


def decide_isomorphic(
    a: FiniteGridSystem,
    b: FiniteGridSystem,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> Optional[Dict[int, np.ndarray]]:
    """Return unitaries θ_k: A → B intertwining the β maps, or None.

    Raises:
        InvalidSpecError: if the two systems live on different grids
    """
    if a.step != b.step or a.horizon != b.horizon:
        raise InvalidSpecError(
            "systems must share step and horizon",
            step_a=time_to_json(a.step),
            step_b=time_to_json(b.step),
            horizon_a=a.horizon,
            horizon_b=b.horizon,
        )
    ca, cb = classify(a, tol), classify(b, tol)
    if not specs_agree(ca.spec, cb.spec, tol):
        logger.info(f"Not isomorphic: {ca.spec.describe()} vs {cb.spec.describe()}")
        return None
    thetas = {
        k: cb.basis.matrix(k) @ np.linalg.inv(ca.basis.matrix(k))
        for k in range(1, a.horizon + 1)
    }
    residual = intertwining_residual(a, b, thetas)
    if residual > max(ISOMORPHISM_TOLERANCE, tol.eps_structural):
        raise ClassificationError(
            "recovered isomorphism fails the intertwining diagram",
            relation="intertwining",
            residual=residual,
        )
    logger.info(f"Isomorphic as {ca.spec.describe()} (diagram residual {residual:.2e})")
    return thetas
