"""
Embeddability of rational-time systems into type I₁ product systems.

Three tools:

- the continuity probe F(t) = ⟨ξ β_{1−t,t} h, β_{t,1−t} h⟩ on a grid that
  reaches 1, whose jumps obstruct any embedding;
- the verdict per type (E1 with a > 0 and E3 with an exponential character
  embed; E1(0), E4, E5 and E3 with a declared non-exponential character
  do not);
- explicit representations in closed form: vacuum plus one-particle vectors
  for E3, normalized exponential vectors for E1.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import GridError, InvalidSpecError, NotEmbeddableError
from .fock import (
    ExpSegment,
    ExpVectorCombo,
    FockElement,
    FockVector01,
    TensorCombo,
    UnitWord,
    gram_discrepancy,
)
from .numcore import (
    DEFAULT_TOLERANCE,
    Time,
    Tolerance,
    exchange,
    inner,
    norm,
    time_to_json,
)
from .rational_time import (
    EtaFamily,
    RefinementTower,
    growth_and_phase,
    y_norm_law,
)
from .systems import FiniteGridSystem, SystemSpec, SystemType, generate_canonical

logger = logging.getLogger(__name__)

CROSS_CHECK_TOLERANCE = 1e-12


@dataclass
class ProbeTable:
    """Sampled continuity function on the grid of ``step`` over [0, 1].

    ``values`` holds interior grid points k·step; ``endpoint`` is the value
    at t = 0 and t = 1. ``omega`` maps a window δ to the largest jump of F
    between grid points at most δ apart.
    """

    step: Time
    values: Dict[int, complex]
    endpoint: float
    omega: Dict[Time, float] = field(default_factory=dict)
    cross_check: Optional[float] = None

    def points(self) -> List[Tuple[Time, complex]]:
        """All sampled (t, F(t)), endpoints included when they lie on the table."""
        out: List[Tuple[Time, complex]] = [(Fraction(0), complex(self.endpoint))]
        out.extend((k * self.step, self.values[k]) for k in sorted(self.values))
        if (max(self.values, default=0) + 1) * self.step == 1:
            out.append((Fraction(1), complex(self.endpoint)))
        return out

    def cauchy_schwarz_excess(self) -> float:
        """max(|F(t)| − ‖h‖², 0); stays zero for isometric data."""
        return max((abs(v) - self.endpoint for v in self.values.values()), default=0.0)

    def max_jump(self) -> float:
        """max |F(t) − ‖h‖²| over the interior."""
        return max((abs(v - self.endpoint) for v in self.values.values()), default=0.0)

    def to_csv_rows(self) -> List[Tuple[int, int, float, float]]:
        return [
            (t.numerator, t.denominator, float(z.real), float(z.imag))
            for t, z in self.points()
        ]


def _modulus(points: Sequence[Tuple[Time, complex]], step: Time) -> Dict[Time, float]:
    """ω(δ) for every δ = d·step with d dividing the number of steps."""
    n = int(1 / step)
    omega: Dict[Time, float] = {}
    for d in range(1, n + 1):
        if n % d:
            continue
        delta = d * step
        worst = 0.0
        for i, (ti, fi) in enumerate(points):
            for tj, fj in points[i + 1 :]:
                if tj - ti > delta:
                    break
                worst = max(worst, abs(fi - fj))
        omega[delta] = worst
    return omega


def liebscher_probe(sys: FiniteGridSystem, h: np.ndarray) -> ProbeTable:
    """F(t) = ⟨ξ β_{1−t,t} h, β_{t,1−t} h⟩ at the interior grid points.

    Args:
        sys: grid system of step 1/N whose horizon reaches t = 1
        h: vector of E_1 in the system's coordinates

    Raises:
        GridError: if the grid step is not 1/N or the horizon stops before 1
        InvalidSpecError: if h is zero
    """
    if sys.step.numerator != 1 or sys.horizon < sys.step.denominator:
        raise GridError(
            "probe needs a grid of step 1/N reaching t = 1",
            step=time_to_json(sys.step),
            horizon=sys.horizon,
        )
    h = np.asarray(h, dtype=complex)
    endpoint = norm(h) ** 2
    if endpoint == 0.0:
        raise InvalidSpecError("probe vector must be nonzero")
    n = sys.step.denominator
    values = {
        k: inner(exchange(sys.beta(n - k, k) @ h), sys.beta(k, n - k) @ h)
        for k in range(1, n)
    }
    table = ProbeTable(sys.step, values, endpoint)
    table.omega = _modulus(table.points(), sys.step)
    logger.info(
        f"Probe on step {sys.step}: max jump {table.max_jump():.3e}, "
        f"omega(step) {table.omega[sys.step]:.3e}"
    )
    return table


def probe_tower(
    tower: RefinementTower, h: np.ndarray
) -> Tuple[List[ProbeTable], Dict[int, float]]:
    """Probe every level of a unit-covering tower; ω(one step) per level."""
    tables: List[ProbeTable] = []
    profile: Dict[int, float] = {}
    for level in tower.levels:
        if level.n == 1:
            continue
        table = liebscher_probe(level.system, h)
        tables.append(table)
        profile[level.n] = table.omega[level.system.step]
    return tables, profile


def probe_closed_form_type3(c: float, eta: EtaFamily, t: Time) -> complex:
    """η_t (c^t ‖y_{1−t}‖² + c^{1−t} conj(η_1) ‖y_t‖²) at a point of η's grid."""
    t = Fraction(t)
    if not 0 <= t <= 1:
        raise GridError("probe time must lie in [0, 1]", t=str(t))
    eta_t = 1.0 + 0j if t == 0 else eta.at(t)
    eta_1 = eta.at(Fraction(1))
    tf = float(t)
    return eta_t * (
        c**tf * y_norm_law(c, 1.0 - tf)
        + c ** (1.0 - tf) * eta_1.conjugate() * y_norm_law(c, tf)
    )


def extended_probe_type1(
    a: float, denominator: int, cross_check: bool = False
) -> ProbeTable:
    """⟨U_t h̃, h̃⟩ for the two-unit word h̃ = u on (0, 1/2), v on (1/2, 1).

    U_t rotates the word by t; the value is read off the word kernel at grid
    points of (0, 1/2). With ``cross_check`` and a > 0 the same numbers are
    recomputed from the exponential-vector realization.
    """
    if not 0.0 <= a < 1.0:
        raise InvalidSpecError("a must lie in [0, 1)", a=a)
    if denominator < 2:
        raise InvalidSpecError("denominator must be at least 2", denominator=denominator)
    step = Fraction(1, denominator)
    word = UnitWord.halves()
    values: Dict[int, complex] = {}
    worst: Optional[float] = None
    for k in range(1, denominator):
        t = k * step
        if t >= Fraction(1, 2):
            break
        rotated = word.rotated(t)
        values[k] = complex(rotated.overlap(word, a))
        if cross_check and a > 0.0:
            via_kernel = rotated.to_exp_combo(a).inner(word.to_exp_combo(a))
            gap = abs(via_kernel - values[k])
            worst = gap if worst is None else max(worst, gap)
    if worst is not None and worst > CROSS_CHECK_TOLERANCE:
        logger.warning(f"Word kernel and exponential vectors disagree by {worst:.3e}")
    table = ProbeTable(step, values, 1.0, cross_check=worst)
    table.omega = _modulus(table.points(), step)
    return table


TYPE4 = "type4"
TYPE5 = "type5"
TYPE1_A_ZERO = "type1_a_zero"
TYPE3_NON_EXPONENTIAL = "type3_non_exponential_eta"

TWO_UNIT = "two_unit"
FOCK = "fock"


@dataclass(frozen=True)
class Verdict:
    spec: SystemSpec
    embeddable: bool
    reason: Optional[str] = None
    construction: Optional[str] = None
    b: Optional[float] = None

    def to_json(self) -> Dict[str, object]:
        return {
            "spec": self.spec.to_json(),
            "embeddable": self.embeddable,
            "reason": self.reason,
            "construction": self.construction,
        }


def decide_embeddable(
    spec: SystemSpec,
    eta: Optional[EtaFamily] = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> Verdict:
    """Decide whether the rational-time system of ``spec`` embeds into type I₁.

    Raises:
        InvalidSpecError: for E2, which has no rational-time version
    """
    tag = spec.type_tag
    if tag is SystemType.E2:
        raise InvalidSpecError("E2 is not a rational-time type", type=tag.value)
    if tag is SystemType.E4:
        return Verdict(spec, False, TYPE4)
    if tag is SystemType.E5:
        return Verdict(spec, False, TYPE5)
    if tag is SystemType.E1:
        if (spec.a or 0.0) <= tol.eps_structural:
            return Verdict(spec, False, TYPE1_A_ZERO)
        return Verdict(spec, True, construction=TWO_UNIT)
    if eta is not None:
        exponential = eta.is_exponential
    else:
        exponential = not any(spec.eta_choices or ())
    if not exponential:
        return Verdict(spec, False, TYPE3_NON_EXPONENTIAL)
    _, b = growth_and_phase(spec)
    if eta is not None and eta.b is not None:
        b = eta.b
    logger.debug(f"{spec.describe()} embeds through the Fock construction, b = {b:.6g}")
    return Verdict(spec, True, construction=FOCK, b=b)


Element = Union[FockVector01, ExpVectorCombo]


@dataclass
class Representation:
    """Isometric maps α_t: E_t → F(L²(0, t)) on the grid of ``system``.

    Type 3: α_t(x_t) = Ω, α_t(y_t) = (0, f_t) with f_t(s) = A c^s e^{ibs}.
    Type 1: α_t(x_t) = e(0), α_t(y_t) = e^{−κt/2} e(√κ on (0, t)),
    κ = 2 ln(1/a).
    """

    kind: str
    spec: SystemSpec
    system: FiniteGridSystem
    c: float = 1.0
    b: float = 0.0
    a: float = 0.0
    amplitude: float = 1.0

    @property
    def step(self) -> Time:
        return self.system.step

    def time(self, k: int) -> Time:
        return k * self.system.step

    def particle(self, k: int) -> FockVector01:
        """(0, f_t) with f_t(s) = A c^s e^{ibs}."""
        segment = ExpSegment.single(self.time(k), self.amplitude, self.c, self.b)
        return FockVector01(0j, segment)

    def exponential_unit(self, k: int) -> ExpVectorCombo:
        """e^{−κt/2} e(√κ on (0, t))."""
        t = self.time(k)
        kappa = 2.0 * math.log(1.0 / self.a)
        g = ExpSegment.constant(t, math.sqrt(kappa))
        return ExpVectorCombo.exponential(g, math.exp(-kappa * float(t) / 2.0))

    def image_of_y(self, k: int) -> Element:
        return self.particle(k) if self.kind == FOCK else self.exponential_unit(k)

    def alpha(self, k: int, v: np.ndarray) -> Element:
        """α_t of a coordinate vector v of E_t, t = k·step."""
        t = self.time(k)
        v0, v1 = complex(v[0]), complex(v[1])
        if self.kind == FOCK:
            n_t = math.sqrt(y_norm_law(self.c, t))
            vacuum = FockVector01.vacuum_vector(t)
            return vacuum.combine(v0, self.particle(k), v1 / n_t)
        g_t = self.a ** float(t)
        r_t = math.sqrt(1.0 - g_t * g_t)
        unit = ExpVectorCombo.vacuum_vector(t)
        return unit.combine(v0 - v1 * g_t / r_t, self.exponential_unit(k), v1 / r_t)

    def fock_norm_residual(self) -> float:
        """max_t |⟨f_t, f_t⟩ − ‖y_t‖²| for type 3."""
        if self.kind != FOCK:
            return 0.0
        return max(
            abs(self.image_of_y(k).norm_sq() - y_norm_law(self.c, self.time(k)))
            for k in range(1, self.system.horizon + 1)
        )


def fock_amplitude(c: float) -> float:
    """A with ∫_0^t A² c^{2s} ds = (c^{2t} − 1)/(c² − 1)."""
    if abs(c - 1.0) <= 1e-12:
        return 1.0
    u = math.log(c)
    return math.sqrt(2.0 * u / math.expm1(2.0 * u))


def build_representation(
    spec: SystemSpec,
    denominator: int,
    horizon: Optional[int] = None,
    eta: Optional[EtaFamily] = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> Representation:
    """Build α_t on the grid 1/N, …, K/N for an embeddable spec.

    E1(a) is read per unit time. A discrete E3(λ) is read as the rational
    system with c = |λ| and b = Arg λ.

    Raises:
        NotEmbeddableError: if the verdict is negative
    """
    verdict = decide_embeddable(spec, eta, tol)
    if not verdict.embeddable:
        raise NotEmbeddableError(
            f"{spec.describe()} admits no type I1 embedding", reason=verdict.reason
        )
    k = horizon or denominator
    if spec.type_tag is SystemType.E1:
        a = float(spec.a or 0.0)
        sys, _ = generate_canonical(SystemSpec.e1(a ** (1.0 / denominator)), denominator, k, tol)
        return Representation(TWO_UNIT, spec, sys, a=a)
    c, b = growth_and_phase(spec)
    if verdict.b is not None:
        b = verdict.b
    rational = SystemSpec.e3_rational(c, b)
    sys, _ = generate_canonical(rational, denominator, k, tol)
    logger.info(f"Fock representation of {rational.describe()} on 1/{denominator}")
    return Representation(FOCK, rational, sys, c=c, b=b, amplitude=fock_amplitude(c))


def representation_isometry_residual(
    rep: Representation, k: int, vectors: Optional[Sequence[np.ndarray]] = None
) -> float:
    """max |‖α_t(v)‖² − ‖v‖²| over the given vectors (default: the basis)."""
    if vectors is None:
        vectors = [np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex)]
    return max(abs(rep.alpha(k, v).norm_sq() - norm(v) ** 2) for v in vectors)


def verify_representation(rep: Representation, s: Time, t: Time) -> float:
    """Discrepancy between α_{s+t} split at s and (α_s ⊗ α_t) β_{s,t}.

    Raises:
        GridError: if s, t or s + t is off the representation's grid
    """
    sys = rep.system
    j, k = sys.index_of(Fraction(s)), sys.index_of(Fraction(t))
    if j is None or k is None or j + k > sys.horizon:
        raise GridError(
            "s, t and s + t must lie on the grid",
            s=str(s),
            t=str(t),
            step=time_to_json(sys.step),
        )
    beta = sys.beta(j, k)
    basis = np.eye(2, dtype=complex)
    left_images = [rep.alpha(j, basis[:, i]) for i in range(2)]
    right_images = [rep.alpha(k, basis[:, i]) for i in range(2)]
    split: List[TensorCombo] = []
    factored: List[TensorCombo] = []
    for col in range(2):
        split.append(rep.alpha(j + k, basis[:, col]).split(Fraction(s)))
        w = beta[:, col].reshape(2, 2)
        terms: List[Tuple[complex, FockElement, FockElement]] = [
            (complex(w[p, q]), left_images[p], right_images[q])
            for p in range(2)
            for q in range(2)
        ]
        factored.append(TensorCombo(terms))
    residual = gram_discrepancy(split, factored)
    logger.debug(f"Representation residual at ({s}, {t}): {residual:.3e}")
    return residual
