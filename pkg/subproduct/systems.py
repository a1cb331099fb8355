"""
Concrete subproduct systems on a finite rational grid.

A system stores one 4×2 isometry β_{j,k}: E_{j+k} → E_j ⊗ E_k for every pair
of grid indices with j + k ≤ K. Grid index k stands for time k·step.

Features:
- Canonical construction of the five families E1(a), E2(a), E3(λ), E4, E5
- Associativity and isometry residuals
- Seeded scrambling by unitary basis changes (isomorphic copies)
- Restriction to the sublattice of multiples of m, and the matching
  restriction table for specs
- Residual of a candidate basis against the condition of a declared type
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy.stats import unitary_group

from .errors import (
    AssociativityError,
    CompletenessError,
    HorizonError,
    InvalidSpecError,
    IsometryError,
    SchemaError,
)
from .numcore import (
    DEFAULT_TOLERANCE,
    Time,
    Tolerance,
    check_isometry,
    complex_from_json,
    complex_to_json,
    inner,
    kron,
    kron_matrix,
    make_time,
    norm,
)

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


class SystemType(str, Enum):
    E1 = "e1"
    E2 = "e2"
    E3 = "e3"
    E4 = "e4"
    E5 = "e5"

    @property
    def label(self) -> str:
        return self.value.upper()


@dataclass(frozen=True)
class SystemSpec:
    """Symbolic type tag with the parameters relevant to it.

    E1/E2 carry ``a``; discrete E3 carries ``lam``; rational E3 carries
    ``c``, ``b`` and optional ``eta_choices``; E4/E5 carry nothing.
    """

    type_tag: SystemType
    a: Optional[float] = None
    lam: Optional[complex] = None
    c: Optional[float] = None
    b: Optional[float] = None
    eta_choices: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        present = {
            name
            for name in ("a", "lam", "c", "b", "eta_choices")
            if getattr(self, name) is not None
        }
        tag = self.type_tag
        if tag in (SystemType.E1, SystemType.E2):
            allowed, required = {"a"}, {"a"}
        elif tag is SystemType.E3 and "lam" in present:
            allowed, required = {"lam"}, {"lam"}
        elif tag is SystemType.E3:
            allowed, required = {"c", "b", "eta_choices"}, {"c", "b"}
        else:
            allowed, required = set(), set()
        if not required <= present or not present <= allowed:
            raise InvalidSpecError(
                f"{tag.label} takes exactly the fields {sorted(required)}"
                + (f" (optional {sorted(allowed - required)})" if allowed - required else ""),
                type=tag.value,
                fields=sorted(present),
            )
        if self.a is not None and not (0.0 <= self.a < 1.0):
            raise InvalidSpecError("parameter a must lie in [0, 1)", a=self.a)
        if self.lam is not None and (self.lam == 0 or not np.isfinite(self.lam)):
            raise InvalidSpecError("parameter lambda must be finite and nonzero")
        if self.c is not None and not (self.c > 0.0 and math.isfinite(self.c)):
            raise InvalidSpecError("parameter c must be positive", c=self.c)
        if self.b is not None and not math.isfinite(self.b):
            raise InvalidSpecError("parameter b must be finite", b=self.b)
        if self.eta_choices is not None:
            for level, r in enumerate(self.eta_choices, start=2):
                if not isinstance(r, int) or not (0 <= r < level):
                    raise InvalidSpecError(
                        f"root choice at level {level} must be an integer in [0, {level})",
                        level=level,
                        choice=r,
                    )

    @classmethod
    def e1(cls, a: float) -> "SystemSpec":
        return cls(SystemType.E1, a=float(a))

    @classmethod
    def e2(cls, a: float) -> "SystemSpec":
        return cls(SystemType.E2, a=float(a))

    @classmethod
    def e3(cls, lam: complex) -> "SystemSpec":
        return cls(SystemType.E3, lam=complex(lam))

    @classmethod
    def e3_rational(
        cls, c: float, b: float = 0.0, eta_choices: Optional[List[int]] = None
    ) -> "SystemSpec":
        choices = tuple(int(r) for r in eta_choices) if eta_choices else None
        return cls(SystemType.E3, c=float(c), b=float(b), eta_choices=choices)

    @classmethod
    def e4(cls) -> "SystemSpec":
        return cls(SystemType.E4)

    @classmethod
    def e5(cls) -> "SystemSpec":
        return cls(SystemType.E5)

    @property
    def is_rational(self) -> bool:
        """True for E3 given by (c, b, η) rather than a per-step λ."""
        return self.type_tag is SystemType.E3 and self.c is not None

    def describe(self) -> str:
        tag = self.type_tag.label
        if self.a is not None:
            return f"{tag}(a={self.a:.12g})"
        if self.lam is not None:
            return f"{tag}(lambda={self.lam.real:.12g}{self.lam.imag:+.12g}i)"
        if self.c is not None:
            extra = f", eta_choices={list(self.eta_choices)}" if self.eta_choices else ""
            return f"{tag}(c={self.c:.12g}, b={self.b:.12g}{extra})"
        return tag

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"type": self.type_tag.value}
        if self.a is not None:
            data["a"] = self.a
        if self.lam is not None:
            data["lambda"] = complex_to_json(self.lam)
        if self.c is not None:
            data["c"] = self.c
            data["b"] = self.b
            if self.eta_choices:
                data["eta_choices"] = list(self.eta_choices)
        return data

    @classmethod
    def from_json(cls, data: Any) -> "SystemSpec":
        if not isinstance(data, dict) or "type" not in data:
            raise SchemaError("spec must be an object with a 'type' field")
        try:
            tag = SystemType(str(data["type"]).lower())
        except ValueError:
            raise SchemaError("unknown system type", type=data["type"])
        lam = complex_from_json(data["lambda"]) if "lambda" in data else None
        choices = data.get("eta_choices")
        return cls(
            tag,
            a=float(data["a"]) if "a" in data else None,
            lam=lam,
            c=float(data["c"]) if "c" in data else None,
            b=float(data["b"]) if "b" in data else (0.0 if "c" in data else None),
            eta_choices=tuple(int(r) for r in choices) if choices else None,
        )


def grid_pairs(horizon: int) -> Iterator[Pair]:
    """All (j, k) with j, k ≥ 1 and j + k ≤ horizon, in a fixed order."""
    for total in range(2, horizon + 1):
        for j in range(1, total):
            yield j, total - j


class FiniteGridSystem:
    """Subproduct system restricted to the grid times step, 2·step, …, K·step."""

    def __init__(self, step: Time, horizon: int, maps: Dict[Pair, np.ndarray]):
        if horizon < 2:
            raise HorizonError("horizon must be at least 2", horizon=horizon)
        if step <= 0:
            raise InvalidSpecError("grid step must be positive", step=str(step))
        frozen: Dict[Pair, np.ndarray] = {}
        for pair in grid_pairs(horizon):
            if pair not in maps:
                raise CompletenessError(
                    f"missing map beta_{pair}", s=pair[0], t=pair[1], horizon=horizon
                )
            m = np.array(maps[pair], dtype=complex)
            if m.shape != (4, 2):
                raise SchemaError(
                    f"beta_{pair} must be a 4x2 matrix", s=pair[0], t=pair[1]
                )
            m.setflags(write=False)
            frozen[pair] = m
        self.step = Fraction(step)
        self.horizon = horizon
        self._maps = frozen

    @property
    def denominator(self) -> int:
        return self.step.denominator

    @property
    def pairs(self) -> List[Pair]:
        return list(grid_pairs(self.horizon))

    def time(self, k: int) -> Time:
        return k * self.step

    def index_of(self, t: Time) -> Optional[int]:
        """Grid index of time t, or None when t is off the grid."""
        q = Fraction(t) / self.step
        if q.denominator != 1 or not (1 <= q.numerator <= self.horizon):
            return None
        return q.numerator

    def beta(self, j: int, k: int) -> np.ndarray:
        return self._maps[(j, k)]

    @property
    def maps(self) -> Dict[Pair, np.ndarray]:
        return dict(self._maps)

    def __repr__(self) -> str:
        return f"FiniteGridSystem(step={self.step}, horizon={self.horizon})"


@dataclass(frozen=True)
class CanonicalBasis:
    """Vectors (x_k, y_k) for every grid index k, in the system's coordinates."""

    step: Time
    vectors: Dict[int, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def x(self, k: int) -> np.ndarray:
        return self.vectors[k][0]

    def y(self, k: int) -> np.ndarray:
        return self.vectors[k][1]

    def matrix(self, k: int) -> np.ndarray:
        """2×2 matrix whose columns are x_k and y_k."""
        return np.column_stack(self.vectors[k])

    @property
    def horizon(self) -> int:
        return max(self.vectors)

    def scaled_y(self, factor: float) -> "CanonicalBasis":
        return CanonicalBasis(
            self.step, {k: (x, y * factor) for k, (x, y) in self.vectors.items()}
        )

    def to_json(self) -> List[Dict[str, Any]]:
        from .numcore import time_to_json

        return [
            {
                "t": time_to_json(k * self.step),
                "x": [complex_to_json(z) for z in x],
                "y": [complex_to_json(z) for z in y],
            }
            for k, (x, y) in sorted(self.vectors.items())
        ]


def expected_images(
    spec: SystemSpec, basis: CanonicalBasis, s: int, t: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Images of x_{s+t} and y_{s+t} under β_{s,t} demanded by the type."""
    xs, ys = basis.vectors[s]
    xt, yt = basis.vectors[t]
    tag = spec.type_tag
    if tag is SystemType.E1 or (tag is SystemType.E2 and s % 2 == 0):
        return kron(xs, xt), kron(ys, yt)
    if tag is SystemType.E2:
        return kron(xs, yt), kron(ys, xt)
    if tag is SystemType.E3:
        lam = step_lambda(spec)
        return kron(xs, xt), kron(ys, xt) + lam**s * kron(xs, yt)
    if tag is SystemType.E4:
        return kron(xs, xt), kron(ys, xt)
    return kron(xs, xt), kron(xs, yt)


def step_lambda(spec: SystemSpec) -> complex:
    if spec.lam is None:
        raise InvalidSpecError("a per-step lambda is required here", spec=spec.describe())
    return spec.lam


def discrete_y_norm_sq(lam: complex, k: int) -> float:
    """1 + |λ|² + … + |λ|^{2k−2}."""
    r = abs(lam) ** 2
    return float(sum(r**i for i in range(k)))


def basis_residual(
    sys: FiniteGridSystem,
    spec: SystemSpec,
    basis: CanonicalBasis,
    threshold: Optional[float] = None,
    y_scale: float = 1.0,
) -> Tuple[float, str]:
    """Deviation of ``basis`` from the condition of the discrete ``spec``.

    Returns the maximal deviation and the name of a relation: the first one
    exceeding ``threshold`` when given, otherwise the worst one. ``y_scale``
    multiplies the E3 norm law (rational-grid normalization).
    """
    worst = 0.0
    worst_name = "none"
    first_violation: Optional[str] = None

    def record(value: float, name: str) -> None:
        nonlocal worst, worst_name, first_violation
        if value > worst:
            worst, worst_name = value, name
        if threshold is not None and first_violation is None and value > threshold:
            first_violation = name

    tag = spec.type_tag
    for k in range(1, sys.horizon + 1):
        x, y = basis.vectors[k]
        record(abs(norm(x) - 1.0), f"|x_{k}| = 1")
        if tag is SystemType.E3:
            law = y_scale**2 * discrete_y_norm_sq(step_lambda(spec), k)
            record(abs(norm(y) ** 2 - law) / law, f"|y_{k}|^2 norm law")
            record(abs(inner(x, y)), f"<x_{k}, y_{k}> = 0")
        else:
            record(abs(norm(y) - 1.0), f"|y_{k}| = 1")
            target = (spec.a or 0.0) ** k if tag in (SystemType.E1, SystemType.E2) else 0.0
            record(abs(inner(x, y) - target), f"<x_{k}, y_{k}> = {target:.6g}")
    for s, t in sys.pairs:
        beta = sys.beta(s, t)
        x_img, y_img = expected_images(spec, basis, s, t)
        x_full, y_full = basis.vectors[s + t]
        record(norm(beta @ x_full - x_img), f"beta_{s},{t}(x_{s + t})")
        scale = max(1.0, norm(y_img))
        record(norm(beta @ y_full - y_img) / scale, f"beta_{s},{t}(y_{s + t})")
    return worst, first_violation or worst_name


def _canonical_vectors(
    spec: SystemSpec, denominator: int, horizon: int
) -> Tuple[SystemSpec, Dict[int, Tuple[np.ndarray, np.ndarray]]]:
    """Per-step spec and canonical-frame basis vectors for every grid index."""
    e1 = np.array([1.0, 0.0], dtype=complex)
    vectors: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
    tag = spec.type_tag
    step_spec = spec
    if tag in (SystemType.E1, SystemType.E2):
        a = spec.a or 0.0
        for k in range(1, horizon + 1):
            g = a**k
            vectors[k] = (e1.copy(), np.array([g, math.sqrt(1.0 - g * g)], dtype=complex))
    elif tag is SystemType.E3:
        from .rational_time import grid_spec, y_norm_law

        if spec.is_rational:
            step_spec = grid_spec(spec, denominator)
            c = float(spec.c)  # type: ignore[arg-type]
            norms = {
                k: math.sqrt(y_norm_law(c, Fraction(k, denominator)))
                for k in range(1, horizon + 1)
            }
        else:
            lam = step_lambda(spec)
            norms = {
                k: math.sqrt(discrete_y_norm_sq(lam, k)) for k in range(1, horizon + 1)
            }
        for k in range(1, horizon + 1):
            vectors[k] = (e1.copy(), np.array([0.0, norms[k]], dtype=complex))
    else:
        for k in range(1, horizon + 1):
            vectors[k] = (e1.copy(), np.array([0.0, 1.0], dtype=complex))
    return step_spec, vectors


def generate_canonical(
    spec: SystemSpec,
    denominator: int,
    horizon: int,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> Tuple[FiniteGridSystem, CanonicalBasis]:
    """Build the canonical system of ``spec`` on the grid 1/N, …, K/N.

    The frame is x_k = (1, 0) with y_k in the upper half-plane convention
    (second coordinate real positive). Each β_{j,k} is the unique linear map
    sending x_{j+k}, y_{j+k} to the images the type prescribes.
    """
    if denominator < 1:
        raise InvalidSpecError("denominator must be positive", denominator=denominator)
    if horizon < 2:
        raise HorizonError("horizon must be at least 2", horizon=horizon)
    step = make_time(1, denominator)
    step_spec, vectors = _canonical_vectors(spec, denominator, horizon)
    basis = CanonicalBasis(step, vectors)
    maps: Dict[Pair, np.ndarray] = {}
    for s, t in grid_pairs(horizon):
        x_img, y_img = expected_images(step_spec, basis, s, t)
        images = np.column_stack([x_img, y_img])
        maps[(s, t)] = images @ np.linalg.inv(basis.matrix(s + t))
    sys = FiniteGridSystem(step, horizon, maps)

    iso, pair = check_isometries(sys)
    if iso > tol.eps_verify:
        raise IsometryError(
            "canonical construction lost isometry", s=pair[0], t=pair[1], residual=iso
        )
    assoc = check_associativity(sys)
    if assoc > tol.eps_verify:
        raise AssociativityError(
            "canonical construction is not associative", residual=assoc
        )
    logger.info(
        f"Generated {spec.describe()} on step {step}, horizon {horizon} "
        f"(isometry {iso:.2e}, associativity {assoc:.2e})"
    )
    return sys, basis


def check_isometries(sys: FiniteGridSystem) -> Tuple[float, Pair]:
    """Worst isometry residual over all stored maps, and where it occurs."""
    worst, where = 0.0, (1, 1)
    for pair in sys.pairs:
        r = check_isometry(sys.beta(*pair))
        if r > worst:
            worst, where = r, pair
    return worst, where


def check_associativity(sys: FiniteGridSystem) -> float:
    """Max over (i, j, k) of ‖(β_{i,j}⊗1)β_{i+j,k}u − (1⊗β_{j,k})β_{i,j+k}u‖."""
    eye = np.eye(2, dtype=complex)
    worst = 0.0
    for i in range(1, sys.horizon + 1):
        for j in range(1, sys.horizon + 1 - i):
            for k in range(1, sys.horizon + 1 - i - j):
                left = kron_matrix(sys.beta(i, j), eye) @ sys.beta(i + j, k)
                right = kron_matrix(eye, sys.beta(j, k)) @ sys.beta(i, j + k)
                r = float(np.max(np.linalg.norm(left - right, axis=0)))
                if r > worst:
                    worst = r
                    logger.debug(f"associativity residual {r:.3e} at ({i},{j},{k})")
    return worst


def apply_isomorphism(
    sys: FiniteGridSystem, thetas: Dict[int, np.ndarray]
) -> FiniteGridSystem:
    """Transport the system along unitaries θ_k: β' = (θ_s⊗θ_t)·β·θ_{s+t}*."""
    maps = {
        (s, t): kron_matrix(thetas[s], thetas[t]) @ sys.beta(s, t) @ thetas[s + t].conj().T
        for s, t in sys.pairs
    }
    return FiniteGridSystem(sys.step, sys.horizon, maps)


def intertwining_residual(
    source: FiniteGridSystem,
    target: FiniteGridSystem,
    thetas: Dict[int, np.ndarray],
) -> float:
    """Max over pairs and basis vectors of ‖β'_{s,t}θ_{s+t}u − (θ_s⊗θ_t)β_{s,t}u‖.

    Also folds in the unitarity defect of every θ_k, so a non-unitary family
    never verifies.
    """
    worst = max(check_isometry(thetas[k]) for k in range(1, source.horizon + 1))
    for s, t in source.pairs:
        left = target.beta(s, t) @ thetas[s + t]
        right = kron_matrix(thetas[s], thetas[t]) @ source.beta(s, t)
        worst = max(worst, float(np.max(np.linalg.norm(left - right, axis=0))))
    return worst


def random_unitaries(seed: int, horizon: int) -> Dict[int, np.ndarray]:
    """Haar unitaries θ_1, …, θ_K drawn in order from a seeded generator."""
    rng = np.random.default_rng(seed)
    return {
        k: np.asarray(unitary_group.rvs(2, random_state=rng), dtype=complex)
        for k in range(1, horizon + 1)
    }


def scramble(
    sys: FiniteGridSystem, seed: int
) -> Tuple[FiniteGridSystem, Dict[int, np.ndarray]]:
    """Return an isomorphic copy in random coordinates, with the unitaries used."""
    thetas = random_unitaries(seed, sys.horizon)
    logger.debug(f"Scrambling {sys!r} with seed {seed}")
    return apply_isomorphism(sys, thetas), thetas


def restrict(sys: FiniteGridSystem, m: int) -> FiniteGridSystem:
    """Restrict to the times m·step, 2m·step, …: (j, k) ↦ old (mj, mk)."""
    if m < 1:
        raise InvalidSpecError("restriction factor must be positive", m=m)
    if m == 1:
        return sys
    if sys.horizon < 2 * m:
        raise HorizonError(
            f"horizon {sys.horizon} too small to restrict by {m}",
            horizon=sys.horizon,
            m=m,
        )
    horizon = sys.horizon // m
    maps = {(j, k): sys.beta(m * j, m * k) for j, k in grid_pairs(horizon)}
    return FiniteGridSystem(sys.step * m, horizon, maps)


def restricted_spec(spec: SystemSpec, m: int) -> SystemSpec:
    """Type of the restriction to multiples of m (the restriction table)."""
    if m < 1:
        raise InvalidSpecError("restriction factor must be positive", m=m)
    tag = spec.type_tag
    if tag is SystemType.E1:
        return SystemSpec.e1((spec.a or 0.0) ** m)
    if tag is SystemType.E2:
        a = (spec.a or 0.0) ** m
        return SystemSpec.e1(a) if m % 2 == 0 else SystemSpec.e2(a)
    if tag is SystemType.E3:
        return SystemSpec.e3(step_lambda(spec) ** m)
    return spec
