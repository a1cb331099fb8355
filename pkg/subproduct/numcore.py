"""
Exact time arithmetic and small dense complex linear algebra.

Vectors of a fiber E_t are numpy arrays of shape (2,) in a fixed orthonormal
frame of that fiber. Vectors of E_s ⊗ E_t are arrays of shape (4,) ordered
(e1⊗e1, e1⊗e2, e2⊗e1, e2⊗e2): the first factor is the slow index.
Times are ``fractions.Fraction``; no floating point ever touches the grid.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Tuple

import numpy as np

from .errors import InvalidSpecError, SchemaError

logger = logging.getLogger(__name__)

Time = Fraction
CVec2 = np.ndarray
CVec4 = np.ndarray
Isometry42 = np.ndarray

TWO_PI = 2.0 * math.pi
IDENTITY2 = np.eye(2, dtype=complex)
IDENTITY2.setflags(write=False)


@dataclass(frozen=True)
class Tolerance:
    """Two-tier tolerance.

    ``eps_structural`` drives accept/reject decisions on ingested data;
    ``eps_verify`` bounds residuals of exactly constructed objects.
    """

    eps_structural: float = 1e-9
    eps_verify: float = 1e-12

    def __post_init__(self) -> None:
        if not (0.0 < self.eps_verify <= self.eps_structural < 1.0):
            raise InvalidSpecError(
                "tolerances must satisfy 0 < eps_verify <= eps_structural < 1",
                eps_structural=self.eps_structural,
                eps_verify=self.eps_verify,
            )

    def with_structural(self, eps: float) -> "Tolerance":
        """Return a copy with a new structural threshold (the CLI ``--tol``)."""
        return Tolerance(eps_structural=eps, eps_verify=min(self.eps_verify, eps))


DEFAULT_TOLERANCE = Tolerance()


def make_time(numerator: int, denominator: int = 1) -> Time:
    """Build a positive grid time in lowest terms."""
    if numerator < 1 or denominator < 1:
        raise InvalidSpecError(
            "time must be positive", numerator=numerator, denominator=denominator
        )
    return Fraction(numerator, denominator)


def kron(u: CVec2, v: CVec2) -> CVec4:
    """Tensor product of two fiber vectors in the fixed basis order."""
    return np.kron(np.asarray(u, dtype=complex), np.asarray(v, dtype=complex))


def kron_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product of two operators, first factor slow."""
    return np.kron(a, b)


def exchange(w: CVec4) -> CVec4:
    """Flip the tensor factors: f⊗g ↦ g⊗f."""
    w = np.asarray(w, dtype=complex)
    return w[[0, 2, 1, 3]]


def reshape_det(w: CVec4) -> complex:
    """Determinant of the 2×2 coefficient matrix; zero iff w is a product vector."""
    w = np.asarray(w, dtype=complex)
    return complex(w[0] * w[3] - w[1] * w[2])


def check_isometry(m: Isometry42, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Return the max-norm of m*·m − I₂. The caller compares it against tol."""
    m = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(m.conj().T @ m - IDENTITY2)))


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """Inner product, conjugate-linear in the first argument."""
    return complex(np.vdot(u, v))


def norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def unit(v: np.ndarray) -> np.ndarray:
    n = norm(v)
    if n == 0.0:
        raise InvalidSpecError("cannot normalize the zero vector")
    return np.asarray(v, dtype=complex) / n


def phase_fix(v: np.ndarray) -> np.ndarray:
    """Rotate v so that its largest-modulus coordinate is real positive."""
    v = np.asarray(v, dtype=complex)
    idx = int(np.argmax(np.abs(v)))
    if abs(v[idx]) == 0.0:
        return v
    return v * (abs(v[idx]) / v[idx])


def orthogonal_complement(x: CVec2) -> CVec2:
    """Unit vector orthogonal to the unit vector x, phase-fixed."""
    y = np.array([-np.conj(x[1]), np.conj(x[0])], dtype=complex)
    return phase_fix(unit(y))


def product_factors(w: CVec4) -> Tuple[complex, CVec2, CVec2]:
    """Split a (near) product vector as w ≈ s · p⊗q with unit p, q.

    Uses the leading singular triple of the coefficient matrix M[i][j] = w_ij,
    for which M = s · p qᵀ.
    """
    m = np.asarray(w, dtype=complex).reshape(2, 2)
    u, s, vh = np.linalg.svd(m)
    return complex(s[0]), u[:, 0].copy(), vh[0, :].copy()


def wrap_phase(x: float) -> float:
    """Reduce an angle to [0, 2π)."""
    r = math.fmod(x, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI:
        r = 0.0
    return r


def phase_distance(x: float, y: float) -> float:
    """Distance between two angles on the circle."""
    return abs(cmath.exp(1j * x) - cmath.exp(1j * y))


def complex_to_json(z: complex) -> List[float]:
    return [float(z.real), float(z.imag)]


def complex_from_json(value: Any) -> complex:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(p, (int, float)) for p in value)
    ):
        raise SchemaError("complex numbers must be [re, im] pairs", value=value)
    z = complex(float(value[0]), float(value[1]))
    if not cmath.isfinite(z):
        raise SchemaError("complex numbers must be finite", value=value)
    return z


def time_to_json(t: Time) -> Dict[str, int]:
    return {"num": t.numerator, "den": t.denominator}


def time_from_json(value: Any) -> Time:
    if not isinstance(value, dict) or "num" not in value or "den" not in value:
        raise SchemaError("time must be {'num': k, 'den': N}", value=value)
    try:
        return make_time(int(value["num"]), int(value["den"]))
    except InvalidSpecError as e:
        raise SchemaError(e.message, value=value)


def matrix_to_json(m: np.ndarray) -> List[List[float]]:
    """Serialize a matrix column-major as a list of [re, im] pairs."""
    return [complex_to_json(z) for z in np.asarray(m).flatten(order="F")]


def matrix_from_json(value: Any, shape: Tuple[int, int]) -> np.ndarray:
    size = shape[0] * shape[1]
    if not isinstance(value, list) or len(value) != size:
        raise SchemaError(f"matrix must list {size} complex entries", shape=shape)
    entries = [complex_from_json(z) for z in value]
    return np.array(entries, dtype=complex).reshape(shape, order="F")
