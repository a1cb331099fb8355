"""
Rational-time systems as towers of grid systems at denominators n!.

Level n of a tower is the grid system at step 1/n!; restricting level n by
n gives back level n − 1. For E3 every refinement takes an n-th root of the
per-step λ, and the integer picking the root is recorded as a root choice:

    φ_1 = b (or Arg λ),   φ_n = (φ_{n-1} + 2π r_n) / n,
    λ_{1/n!} = c^{1/n!} e^{iφ_n}

The unit-modulus parts η_{k/n!} = e^{ikφ_n} form the η-character of the
rational-time system. E2 has no refinement at all.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidSpecError, RefinementError, SchemaError
from .numcore import (
    DEFAULT_TOLERANCE,
    TWO_PI,
    Time,
    Tolerance,
    complex_to_json,
    phase_distance,
    time_to_json,
)
from .serialization import basis_from_json, system_from_json, system_to_json
from .systems import (
    CanonicalBasis,
    FiniteGridSystem,
    SystemSpec,
    SystemType,
    generate_canonical,
    restrict,
)

logger = logging.getLogger(__name__)

NEAR_ONE_EXACT = 1e-12
NEAR_ONE_SERIES = 1e-6

EXPONENTIAL = "exponential"
ROOT_CHOICES = "root_choices"


def y_norm_law(c: float, t: Union[Time, float]) -> float:
    """‖y_t‖² of a unit-time E3 system with growth c, normalized by ‖y_1‖ = 1.

    (c^{2t} − 1)/(c² − 1), and t itself at c = 1. Close to c = 1 a short
    expansion in u = ln c replaces the quotient.
    """
    if c <= 0.0:
        raise InvalidSpecError("growth c must be positive", c=c)
    t = float(t)
    d = abs(c - 1.0)
    if d <= NEAR_ONE_EXACT:
        return t
    u = math.log(c)
    if d < NEAR_ONE_SERIES:
        return t * (1.0 + (t - 1.0) * u + (2.0 * t - 1.0) * (t - 1.0) * u * u / 3.0)
    return math.expm1(2.0 * t * u) / math.expm1(2.0 * u)


def factorial_level(denominator: int) -> int:
    """Smallest n with denominator | n!."""
    if denominator < 1:
        raise InvalidSpecError("denominator must be positive", denominator=denominator)
    n, fact = 1, 1
    while fact % denominator:
        n += 1
        fact *= n
    return n


def phase_at_level(phi1: float, choices: Optional[Sequence[int]], n: int) -> float:
    """φ_n of the root-choice recursion; choices[i] belongs to level i + 2."""
    phi = phi1
    for level in range(2, n + 1):
        r = choices[level - 2] if choices and level - 2 < len(choices) else 0
        if not 0 <= r < level:
            raise InvalidSpecError(
                f"root choice at level {level} must lie in [0, {level})",
                level=level,
                choice=r,
            )
        phi = (phi + TWO_PI * r) / level
    return phi


def grid_spec(spec: SystemSpec, denominator: int) -> SystemSpec:
    """Per-step spec of a rational E3 system on the grid of step 1/N.

    Non-factorial N are served from the first factorial level they divide.
    Discrete specs are already per-step and come back unchanged.
    """
    if not spec.is_rational:
        return spec
    n = factorial_level(denominator)
    c, phi1 = growth_and_phase(spec)
    phi = phase_at_level(phi1, spec.eta_choices, n)
    eta = cmath.exp(1j * phi * (math.factorial(n) // denominator))
    return SystemSpec.e3(c ** (1.0 / denominator) * eta)


def refine_spec(spec: SystemSpec, m: int, root_choice: int = 0) -> SystemSpec:
    """Spec whose restriction by m is ``spec``.

    E1(a) → E1(a^{1/m}); E3(λ) → E3(|λ|^{1/m} e^{i(Arg λ + 2πr)/m});
    E4 and E5 are fixed points.

    Raises:
        RefinementError: for E2 with m ≥ 2
        InvalidSpecError: for a root choice outside [0, m)
    """
    if m < 1:
        raise InvalidSpecError("refinement factor must be positive", m=m)
    tag = spec.type_tag
    if m == 1:
        return spec
    if tag is SystemType.E2:
        raise RefinementError(
            "E2 has no refinement: no type restricts to E2 by an even factor",
            type=tag.value,
            m=m,
        )
    if tag is SystemType.E1:
        return SystemSpec.e1((spec.a or 0.0) ** (1.0 / m))
    if tag is SystemType.E3:
        if spec.is_rational:
            raise InvalidSpecError("rational specs are refined through build_tower")
        if not 0 <= root_choice < m:
            raise InvalidSpecError(
                f"root choice must lie in [0, {m})", m=m, choice=root_choice
            )
        lam = spec.lam or 1.0
        phi = (cmath.phase(lam) + TWO_PI * root_choice) / m
        return SystemSpec.e3(abs(lam) ** (1.0 / m) * cmath.exp(1j * phi))
    return spec


@dataclass
class TowerLevel:
    n: int
    denominator: int
    spec: SystemSpec
    system: FiniteGridSystem
    basis: CanonicalBasis
    phase: Optional[float] = None


@dataclass
class RefinementTower:
    """Compatible grid systems at denominators 1!, 2!, …, depth!."""

    root_spec: SystemSpec
    levels: List[TowerLevel]
    root_choices: Tuple[int, ...] = ()
    c: Optional[float] = None
    phi1: Optional[float] = None

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def finest(self) -> TowerLevel:
        return self.levels[-1]


def growth_and_phase(spec: SystemSpec) -> Tuple[float, float]:
    """(c, φ_1) of an E3 spec: (c, b) if rational, (|λ|, Arg λ) if discrete."""
    if spec.is_rational:
        return float(spec.c or 1.0), float(spec.b or 0.0)
    lam = spec.lam or 1.0
    return abs(lam), cmath.phase(lam)


def _level_horizon(horizon: int, n: int, cover_unit: bool) -> int:
    return max(horizon, math.factorial(n)) if cover_unit else horizon


def build_tower(
    spec: SystemSpec,
    depth: int,
    root_choices: Optional[Sequence[int]] = None,
    horizon: int = 6,
    cover_unit: bool = False,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> RefinementTower:
    """Build a factorial refinement tower.

    Args:
        spec: level-one spec; discrete (per unit step) or rational E3
        depth: number of levels; level n has denominator n!
        root_choices: root choice for levels 2..depth (E3 only); defaults to
            ``spec.eta_choices``, then to the principal branch
        horizon: grid horizon at every level
        cover_unit: raise the horizon at level n to at least n! so that the
            grid reaches t = 1
        tol: tolerances for the canonical construction

    Raises:
        RefinementError: for E2 with depth ≥ 2
    """
    if depth < 1:
        raise InvalidSpecError("depth must be at least 1", depth=depth)
    tag = spec.type_tag
    if tag is SystemType.E2 and depth > 1:
        raise RefinementError(
            "E2 cannot be refined past level 1", type=tag.value, depth=depth
        )
    if root_choices is None:
        root_choices = list(spec.eta_choices or ())
    choices = tuple(int(r) for r in root_choices)
    if choices and tag is not SystemType.E3:
        raise InvalidSpecError("root choices only apply to E3", type=tag.value)
    if len(choices) > max(depth - 1, 0):
        choices = choices[: depth - 1]

    c, phi1 = growth_and_phase(spec) if tag is SystemType.E3 else (1.0, 0.0)
    levels: List[TowerLevel] = []
    current = spec
    for n in range(1, depth + 1):
        denominator = math.factorial(n)
        phase: Optional[float] = None
        if tag is SystemType.E3:
            phase = phase_at_level(phi1, choices, n)
            current = SystemSpec.e3(c ** (1.0 / denominator) * cmath.exp(1j * phase))
        elif n > 1:
            current = refine_spec(current, n)
        k = _level_horizon(horizon, n, cover_unit)
        sys, basis = generate_canonical(current, denominator, k, tol)
        if tag is SystemType.E3:
            basis = basis.scaled_y(math.sqrt(y_norm_law(c, Fraction(1, denominator))))
        levels.append(TowerLevel(n, denominator, current, sys, basis, phase))
        logger.info(
            f"Tower level {n}: {current.describe()} on 1/{denominator}, horizon {k}"
        )
    if tag is not SystemType.E3:
        return RefinementTower(spec, levels, choices)
    return RefinementTower(spec, levels, choices, c=c, phi1=phi1)


def tower_compatibility(tower: RefinementTower) -> float:
    """Max deviation between restrict(level n, n) and level n − 1.

    Compares β maps on the pairs both levels hold, and the bases at the
    times both levels hold.
    """
    worst = 0.0
    for lower, upper in zip(tower.levels, tower.levels[1:]):
        n = upper.n
        if upper.system.horizon < 2 * n:
            continue
        reduced = restrict(upper.system, n)
        horizon = min(reduced.horizon, lower.system.horizon)
        for s in range(1, horizon):
            for t in range(1, horizon - s + 1):
                diff = reduced.beta(s, t) - lower.system.beta(s, t)
                worst = max(worst, float(np.max(np.abs(diff))))
        for j in range(1, horizon + 1):
            diff = upper.basis.matrix(n * j) - lower.basis.matrix(j)
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst


@dataclass
class EtaFamily:
    """Unit-modulus character values η_{k·step} on one grid."""

    step: Time
    values: Dict[int, complex]
    descriptor: str
    b: Optional[float] = None
    root_choices: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def is_exponential(self) -> bool:
        return self.descriptor == EXPONENTIAL

    def at(self, t: Time) -> complex:
        q = Fraction(t) / self.step
        if q.denominator != 1 or q.numerator not in self.values:
            raise InvalidSpecError("time not on the character grid", t=time_to_json(Fraction(t)))
        return self.values[q.numerator]

    def distance(self, other: "EtaFamily") -> float:
        """max |η_t − η'_t| over the grid times both families realize.

        Descriptors are ignored: two root-choice histories that produce the
        same values on the shared grid are at distance zero.
        """
        mine = {k * self.step for k in self.values}
        shared = sorted(mine & {k * other.step for k in other.values})
        if not shared:
            raise InvalidSpecError("eta families share no grid time")
        return max(abs(self.at(t) - other.at(t)) for t in shared)

    def multiplicativity_residual(self) -> float:
        """max |η_{s+t} − η_s η_t| and max ||η_t| − 1| over the grid."""
        worst = max(abs(abs(v) - 1.0) for v in self.values.values())
        keys = sorted(self.values)
        for s in keys:
            for t in keys:
                if s + t in self.values:
                    worst = max(worst, abs(self.values[s + t] - self.values[s] * self.values[t]))
        return worst

    def to_json(self) -> Dict[str, Any]:
        return {
            "step": time_to_json(self.step),
            "descriptor": self.descriptor,
            "b": self.b,
            "root_choices": list(self.root_choices),
            "values": [complex_to_json(self.values[k]) for k in sorted(self.values)],
        }


def _eta_family(
    phi1: float, choices: Tuple[int, ...], n: int, horizon: int
) -> EtaFamily:
    phase = phase_at_level(phi1, choices, n)
    values = {k: cmath.exp(1j * phase * k) for k in range(1, horizon + 1)}
    if any(choices):
        return EtaFamily(Fraction(1, math.factorial(n)), values, ROOT_CHOICES, None, choices)
    return EtaFamily(Fraction(1, math.factorial(n)), values, EXPONENTIAL, phi1, choices)


def eta_from_tower(tower: RefinementTower) -> EtaFamily:
    """η-character on the finest level of an E3 tower.

    The descriptor is Exponential(b) when every root choice is the principal
    one, and RootChoices otherwise.
    """
    if tower.root_spec.type_tag is not SystemType.E3 or tower.phi1 is None:
        raise InvalidSpecError(
            "only E3 towers carry an eta-character",
            type=tower.root_spec.type_tag.value,
        )
    finest = tower.finest
    return _eta_family(tower.phi1, tower.root_choices, finest.n, finest.system.horizon)


def eta_for_spec(spec: SystemSpec, depth: int) -> EtaFamily:
    """η-character of a rational E3 spec on the grid 1/depth!, up to t = 1."""
    if not spec.is_rational:
        raise InvalidSpecError("eta_for_spec needs a rational E3 spec", spec=spec.describe())
    choices = tuple(spec.eta_choices or ())[: max(depth - 1, 0)]
    return _eta_family(float(spec.b or 0.0), choices, depth, math.factorial(depth))


def equivalent_exponent(phi1: float, choices: Sequence[int]) -> float:
    """b' with η_{k/n!} = e^{ib'k/n!} on every realized level.

    Finite towers always admit one: b' = φ_1 + 2π Σ r_i (i − 1)!.
    """
    return phi1 + TWO_PI * sum(r * math.factorial(i + 1) for i, r in enumerate(choices))


def farthest_root_choices(b: float, depth: int) -> List[int]:
    """Root choices keeping η_{1/n!} as far from 1 as possible at every level."""
    choices: List[int] = []
    phi = b
    for n in range(2, depth + 1):
        best = max(range(n), key=lambda r: phase_distance((phi + TWO_PI * r) / n, 0.0))
        choices.append(best)
        phi = (phi + TWO_PI * best) / n
    return choices


def tower_to_json(tower: RefinementTower) -> Dict[str, Any]:
    return {
        "root_spec": tower.root_spec.to_json(),
        "root_choices": list(tower.root_choices),
        "levels": [
            {
                "n": level.n,
                "denominator": level.denominator,
                "spec": level.spec.to_json(),
                "system": system_to_json(level.system),
                "basis": level.basis.to_json(),
            }
            for level in tower.levels
        ],
    }


def tower_from_json(data: Any, tol: Tolerance = DEFAULT_TOLERANCE) -> RefinementTower:
    """Rebuild a tower from its JSON form, re-validating every level."""
    if not isinstance(data, dict) or "levels" not in data or "root_spec" not in data:
        raise SchemaError("tower must carry 'root_spec' and 'levels'")
    root_spec = SystemSpec.from_json(data["root_spec"])
    choices = tuple(int(r) for r in data.get("root_choices", []))
    levels: List[TowerLevel] = []
    for entry in data["levels"]:
        sys = system_from_json(entry["system"], tol)
        basis = basis_from_json(entry["basis"], sys.step)
        levels.append(
            TowerLevel(
                int(entry["n"]),
                int(entry["denominator"]),
                SystemSpec.from_json(entry["spec"]),
                sys,
                basis,
            )
        )
    if not levels:
        raise SchemaError("tower has no levels")
    if root_spec.type_tag is not SystemType.E3:
        return RefinementTower(root_spec, levels, choices)
    c, phi1 = growth_and_phase(root_spec)
    for level in levels:
        level.phase = phase_at_level(phi1, choices, level.n)
    return RefinementTower(root_spec, levels, choices, c=c, phi1=phi1)
