"""
Closed-form function algebra on L²(0, t) and the Fock-space vectors built on it.

Functions are finite sums of exponentials s ↦ A c^s e^{ibs}, piecewise on
rational subintervals. Every inner product is an elementary antiderivative,
so no quadrature happens anywhere. On top of that:

- FockVector01: vacuum amplitude plus a one-particle function
- ExpVectorCombo: linear combination of exponential vectors e(g), with
  ⟨e(f), e(g)⟩ = exp⟨f, g⟩
- TensorCombo: finite sums of elementary tensors of the above
- UnitWord: two-unit words for the type-1 shift kernel
"""

import cmath
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

from .errors import InvalidSpecError
from .numcore import Time

logger = logging.getLogger(__name__)

SERIES_THRESHOLD = 1e-8
PSD_TOLERANCE = 1e-10


def _cexpm1(z: complex) -> complex:
    """e^z − 1 without cancellation for small |z|."""
    x, y = z.real, z.imag
    half = math.sin(y / 2.0)
    return math.expm1(x) * cmath.exp(1j * y) + complex(-2.0 * half * half, math.sin(y))


def exp_integral(kappa: complex, lo: float, length: float) -> complex:
    """∫_lo^{lo+length} e^{κs} ds."""
    z = kappa * length
    if abs(z) < SERIES_THRESHOLD:
        value = length * (1.0 + z / 2.0 + z * z / 6.0)
    else:
        value = _cexpm1(z) / kappa
    return cmath.exp(kappa * lo) * value


@dataclass(frozen=True)
class ExpTerm:
    """s ↦ amplitude · growth^s · e^{i·frequency·s}."""

    amplitude: complex
    growth: float = 1.0
    frequency: float = 0.0

    def __post_init__(self) -> None:
        if not self.growth > 0.0:
            raise InvalidSpecError("growth must be positive", growth=self.growth)

    @property
    def rate(self) -> complex:
        return complex(math.log(self.growth), self.frequency)

    def value(self, s: float) -> complex:
        return self.amplitude * cmath.exp(self.rate * s)

    def moved(self, delta: float) -> "ExpTerm":
        """The same function read at s + delta."""
        return ExpTerm(self.value(delta), self.growth, self.frequency)

    def scaled(self, z: complex) -> "ExpTerm":
        return ExpTerm(self.amplitude * z, self.growth, self.frequency)


@dataclass(frozen=True)
class ExpPiece:
    start: Time
    end: Time
    terms: Tuple[ExpTerm, ...] = ()


@dataclass(frozen=True)
class ExpSegment:
    """Piecewise exponential function on (0, length); pieces tile the domain."""

    length: Time
    pieces: Tuple[ExpPiece, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        edge = Fraction(0)
        for piece in self.pieces:
            if piece.start != edge or piece.end <= piece.start:
                raise InvalidSpecError(
                    "pieces must tile the domain in order",
                    start=str(piece.start),
                    end=str(piece.end),
                )
            edge = piece.end
        if self.pieces and edge != self.length:
            raise InvalidSpecError("pieces must cover the whole domain", length=str(self.length))

    @classmethod
    def zero(cls, length: Time) -> "ExpSegment":
        return cls(Fraction(length), (ExpPiece(Fraction(0), Fraction(length)),))

    @classmethod
    def single(
        cls, length: Time, amplitude: complex, growth: float = 1.0, frequency: float = 0.0
    ) -> "ExpSegment":
        term = ExpTerm(amplitude, growth, frequency)
        return cls(Fraction(length), (ExpPiece(Fraction(0), Fraction(length), (term,)),))

    @classmethod
    def constant(cls, length: Time, value: complex) -> "ExpSegment":
        return cls.single(length, value)

    def scaled(self, z: complex) -> "ExpSegment":
        return ExpSegment(
            self.length,
            tuple(
                ExpPiece(p.start, p.end, tuple(t.scaled(z) for t in p.terms))
                for p in self.pieces
            ),
        )

    def restrict(self, lo: Time, hi: Time) -> "ExpSegment":
        """Restriction to (lo, hi), moved back to start at 0."""
        lo, hi = Fraction(lo), Fraction(hi)
        if not (0 <= lo < hi <= self.length):
            raise InvalidSpecError("restriction window outside the domain", lo=str(lo), hi=str(hi))
        pieces = []
        for p in self.pieces:
            a, b = max(p.start, lo), min(p.end, hi)
            if b > a:
                terms = tuple(t.moved(float(lo)) for t in p.terms)
                pieces.append(ExpPiece(a - lo, b - lo, terms))
        return ExpSegment(hi - lo, tuple(pieces))

    def shifted(self, delta: Time) -> "ExpSegment":
        """The function placed at offset delta inside (0, length + delta)."""
        delta = Fraction(delta)
        pieces = [ExpPiece(Fraction(0), delta)] if delta > 0 else []
        for p in self.pieces:
            terms = tuple(t.moved(-float(delta)) for t in p.terms)
            pieces.append(ExpPiece(p.start + delta, p.end + delta, terms))
        return ExpSegment(self.length + delta, tuple(pieces))

    def join(self, other: "ExpSegment") -> "ExpSegment":
        """Concatenation: self on (0, s), other moved to (s, s + t)."""
        moved = other.shifted(self.length)
        return ExpSegment(self.length + other.length, self.pieces + moved.pieces[1:])

    def inner(self, other: "ExpSegment") -> complex:
        """∫ conj(f) g over the common domain, in closed form."""
        if self.length != other.length:
            raise InvalidSpecError(
                "segments live on different intervals",
                left=str(self.length),
                right=str(other.length),
            )
        total = 0j
        for p in self.pieces:
            for q in other.pieces:
                lo, hi = max(p.start, q.start), min(p.end, q.end)
                if hi <= lo:
                    continue
                for ta in p.terms:
                    for tb in q.terms:
                        kappa = ta.rate.conjugate() + tb.rate
                        total += (
                            ta.amplitude.conjugate()
                            * tb.amplitude
                            * exp_integral(kappa, float(lo), float(hi - lo))
                        )
        return total

    def norm_sq(self) -> float:
        return self.inner(self).real


class FockElement(ABC):
    """Vector of the symmetric Fock space over L²(0, length)."""

    length: Time

    @abstractmethod
    def inner(self, other: "FockElement") -> complex:
        """Inner product, conjugate-linear in self."""

    @abstractmethod
    def split(self, s: Time) -> "TensorCombo":
        """Image under F(L²(0, s + t)) ≅ F(L²(0, s)) ⊗ F(L²(0, t))."""

    def norm_sq(self) -> float:
        return self.inner(self).real


@dataclass(frozen=True)
class FockVector01(FockElement):
    """vacuum · Ω ⊕ one-particle function."""

    vacuum: complex
    particle: ExpSegment

    @property
    def length(self) -> Time:  # type: ignore[override]
        return self.particle.length

    @classmethod
    def vacuum_vector(cls, length: Time) -> "FockVector01":
        return cls(1.0 + 0j, ExpSegment.zero(length))

    def inner(self, other: FockElement) -> complex:
        if not isinstance(other, FockVector01):
            raise InvalidSpecError("cannot pair a 0-1 particle vector with another kind")
        return self.vacuum.conjugate() * other.vacuum + self.particle.inner(other.particle)

    def combine(self, z: complex, other: "FockVector01", w: complex) -> "FockVector01":
        """z·self + w·other, keeping the pieces of both particle parts."""
        left, right = self.particle.scaled(z), other.particle.scaled(w)
        edges = sorted({p.start for p in left.pieces} | {p.start for p in right.pieces})
        edges.append(self.length)
        pieces = []
        for lo, hi in zip(edges, edges[1:]):
            terms: List[ExpTerm] = []
            for seg in (left, right):
                for p in seg.pieces:
                    if p.start <= lo and hi <= p.end:
                        terms.extend(p.terms)
            pieces.append(ExpPiece(lo, hi, tuple(terms)))
        return FockVector01(
            z * self.vacuum + w * other.vacuum, ExpSegment(self.length, tuple(pieces))
        )

    def split(self, s: Time) -> "TensorCombo":
        s = Fraction(s)
        t = self.length - s
        left_vac, right_vac = FockVector01.vacuum_vector(s), FockVector01.vacuum_vector(t)
        head = FockVector01(0j, self.particle.restrict(0, s))
        tail = FockVector01(0j, self.particle.restrict(s, self.length))
        return TensorCombo(
            [
                (self.vacuum, left_vac, right_vac),
                (1.0 + 0j, head, right_vac),
                (1.0 + 0j, left_vac, tail),
            ]
        )


@dataclass(frozen=True)
class ExpVectorCombo(FockElement):
    """Σ coef_i · e(g_i) with every g_i on (0, length)."""

    length: Time  # type: ignore[misc]
    terms: Tuple[Tuple[complex, ExpSegment], ...]

    @classmethod
    def vacuum_vector(cls, length: Time) -> "ExpVectorCombo":
        return cls(Fraction(length), ((1.0 + 0j, ExpSegment.zero(length)),))

    @classmethod
    def exponential(cls, g: ExpSegment, coef: complex = 1.0) -> "ExpVectorCombo":
        return cls(g.length, ((complex(coef), g),))

    def combine(self, z: complex, other: "ExpVectorCombo", w: complex) -> "ExpVectorCombo":
        terms = tuple((z * a, g) for a, g in self.terms) + tuple(
            (w * b, h) for b, h in other.terms
        )
        return ExpVectorCombo(self.length, terms)

    def inner(self, other: FockElement) -> complex:
        if not isinstance(other, ExpVectorCombo):
            raise InvalidSpecError("cannot pair an exponential combination with another kind")
        return sum(
            (
                a.conjugate() * b * cmath.exp(g.inner(h))
                for a, g in self.terms
                for b, h in other.terms
            ),
            0j,
        )

    def gram(self) -> np.ndarray:
        """Kernel matrix exp⟨g_i, g_j⟩ of the exponential vectors involved."""
        n = len(self.terms)
        out = np.empty((n, n), dtype=complex)
        for i, (_, g) in enumerate(self.terms):
            for j, (_, h) in enumerate(self.terms):
                out[i, j] = cmath.exp(g.inner(h))
        return out

    def check_psd(self, tolerance: float = PSD_TOLERANCE) -> float:
        """Smallest Gram eigenvalue; raises if clearly negative."""
        gram = self.gram()
        smallest = float(np.min(np.linalg.eigvalsh((gram + gram.conj().T) / 2.0)))
        if smallest < -tolerance * max(1.0, float(np.max(np.abs(gram)))):
            raise InvalidSpecError(
                "exponential-vector Gram matrix is not positive", eigenvalue=smallest
            )
        return smallest

    def split(self, s: Time) -> "TensorCombo":
        s = Fraction(s)
        return TensorCombo(
            [
                (
                    a,
                    ExpVectorCombo.exponential(g.restrict(0, s)),
                    ExpVectorCombo.exponential(g.restrict(s, self.length)),
                )
                for a, g in self.terms
            ]
        )


@dataclass
class TensorCombo:
    """Σ coef · left ⊗ right."""

    terms: List[Tuple[complex, FockElement, FockElement]]

    def inner(self, other: "TensorCombo") -> complex:
        return sum(
            (
                a.conjugate() * b * la.inner(lb) * ra.inner(rb)
                for a, la, ra in self.terms
                for b, lb, rb in other.terms
            ),
            0j,
        )

    def norm_sq(self) -> float:
        return self.inner(self).real


@dataclass(frozen=True)
class UnitWord:
    """Word in the two units u, v on (0, length): symbols on consecutive intervals.

    Normalized units have ⟨u_t, u_t⟩ = ⟨v_t, v_t⟩ = 1 and ⟨u_t, v_t⟩ = a^t, so
    two words overlap in a^{length where their symbols differ}.
    """

    length: Time
    letters: Tuple[Tuple[Time, Time, str], ...]

    @classmethod
    def halves(cls, first: str = "u", second: str = "v") -> "UnitWord":
        half = Fraction(1, 2)
        return cls(Fraction(1), ((Fraction(0), half, first), (half, Fraction(1), second)))

    def symbol_at(self, point: Fraction) -> str:
        for start, end, symbol in self.letters:
            if start <= point < end:
                return symbol
        raise InvalidSpecError("point outside the word", point=str(point))

    def rotated(self, t: Time) -> "UnitWord":
        """Cyclic shift by t: the letter at position p moves to p + t mod length."""
        t = Fraction(t) % self.length
        cuts = {Fraction(0)}
        for start, _, _ in self.letters:
            cuts.add((start + t) % self.length)
        edges = sorted(cuts) + [self.length]
        letters = []
        for lo, hi in zip(edges, edges[1:]):
            mid = (lo + hi) / 2
            letters.append((lo, hi, self.symbol_at((mid - t) % self.length)))
        return UnitWord(self.length, tuple(letters))

    def differing_length(self, other: "UnitWord") -> Fraction:
        edges = sorted(
            {s for s, _, _ in self.letters}
            | {s for s, _, _ in other.letters}
            | {self.length}
        )
        total = Fraction(0)
        for lo, hi in zip(edges, edges[1:]):
            mid = (lo + hi) / 2
            if self.symbol_at(mid) != other.symbol_at(mid):
                total += hi - lo
        return total

    def overlap(self, other: "UnitWord", a: float) -> float:
        """Word kernel: product over the common refinement of unit overlaps."""
        return a ** float(self.differing_length(other))

    def to_exp_combo(self, a: float) -> ExpVectorCombo:
        """The word as a normalized exponential vector (needs a > 0).

        u is the vacuum unit and v_t = e^{−κt/2} e(√κ·1_(0,t)), κ = 2 ln(1/a).
        """
        if not 0.0 < a < 1.0:
            raise InvalidSpecError("exponential realization needs 0 < a < 1", a=a)
        kappa = 2.0 * math.log(1.0 / a)
        root = math.sqrt(kappa)
        pieces = []
        v_length = Fraction(0)
        for start, end, symbol in self.letters:
            if symbol == "v":
                v_length += end - start
                pieces.append(ExpPiece(start, end, (ExpTerm(root),)))
            else:
                pieces.append(ExpPiece(start, end))
        g = ExpSegment(self.length, tuple(pieces))
        return ExpVectorCombo.exponential(g, math.exp(-kappa * float(v_length) / 2.0))


def gram_discrepancy(left: Sequence[TensorCombo], right: Sequence[TensorCombo]) -> float:
    """max over i of |⟨X_i, X_i⟩ − ⟨X_i, Y_i⟩| and |⟨Y_i, Y_i⟩ − ⟨X_i, Y_i⟩|.

    Zero exactly when X_i = Y_i; reads the residual off inner products
    instead of a difference of norms.
    """
    worst = 0.0
    for x, y in zip(left, right):
        xy = x.inner(y)
        worst = max(worst, abs(x.inner(x) - xy), abs(y.inner(y) - xy))
    return worst
