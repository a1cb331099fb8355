"""
JSON persistence for systems, specs and unitary families.

System files follow

    {"denominator": N, "horizon": K, "step": {"num": m, "den": N}?,
     "maps": [{"s": j, "t": k, "matrix": [[re, im] × 8, column-major 4×2]}]}

``step`` is written only when the grid step is not 1/N (restricted systems).
Floats go through ``json`` with repr precision, so a save/load round trip is
bit-identical.
"""

import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from .errors import GridError, IsometryError, SchemaError
from .numcore import (
    DEFAULT_TOLERANCE,
    Tolerance,
    check_isometry,
    complex_from_json,
    matrix_from_json,
    matrix_to_json,
    time_from_json,
    time_to_json,
)
from .systems import CanonicalBasis, FiniteGridSystem, SystemSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_json(path: PathLike) -> Any:
    """Read a JSON document, mapping parse failures to SchemaError."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e.msg})", line=e.lineno)


def write_json(data: Any, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def system_to_json(sys: FiniteGridSystem) -> Dict[str, Any]:
    data: Dict[str, Any] = {"denominator": sys.denominator, "horizon": sys.horizon}
    if sys.step.numerator != 1:
        data["step"] = time_to_json(sys.step)
    data["maps"] = [
        {"s": s, "t": t, "matrix": matrix_to_json(sys.beta(s, t))} for s, t in sys.pairs
    ]
    return data


def system_from_json(
    data: Any, tol: Tolerance = DEFAULT_TOLERANCE
) -> FiniteGridSystem:
    """Validate and build a system from its JSON form.

    Rejects schema violations, matrices that are not isometric within
    ``tol.eps_structural`` and tables with missing pairs.
    """
    if not isinstance(data, dict):
        raise SchemaError("system must be a JSON object")
    for key in ("denominator", "horizon", "maps"):
        if key not in data:
            raise SchemaError(f"missing field '{key}'")
    try:
        denominator = int(data["denominator"])
        horizon = int(data["horizon"])
    except (TypeError, ValueError):
        raise SchemaError("denominator and horizon must be integers")
    if denominator < 1:
        raise SchemaError("denominator must be positive", denominator=denominator)
    step = time_from_json(data["step"]) if "step" in data else Fraction(1, denominator)
    if step.denominator != denominator:
        raise SchemaError(
            "step denominator disagrees with denominator",
            step=time_to_json(step),
            denominator=denominator,
        )
    if not isinstance(data["maps"], list):
        raise SchemaError("'maps' must be a list")

    maps: Dict[Any, np.ndarray] = {}
    for entry in data["maps"]:
        if not isinstance(entry, dict) or not {"s", "t", "matrix"} <= set(entry):
            raise SchemaError("each map needs 's', 't' and 'matrix'")
        s, t = int(entry["s"]), int(entry["t"])
        if s < 1 or t < 1 or s + t > horizon:
            raise SchemaError(f"pair ({s}, {t}) outside the horizon", s=s, t=t)
        if (s, t) in maps:
            raise SchemaError(f"duplicate map for ({s}, {t})", s=s, t=t)
        matrix = matrix_from_json(entry["matrix"], (4, 2))
        residual = check_isometry(matrix)
        if residual > tol.eps_structural:
            raise IsometryError(
                f"beta_({s},{t}) is not an isometry",
                s=s,
                t=t,
                residual=residual,
            )
        maps[(s, t)] = matrix
    return FiniteGridSystem(step, horizon, maps)


def load_system(path: PathLike, tol: Tolerance = DEFAULT_TOLERANCE) -> FiniteGridSystem:
    sys = system_from_json(read_json(path), tol)
    logger.info(f"Loaded {sys!r} from {path}")
    return sys


def save_system(sys: FiniteGridSystem, path: PathLike) -> None:
    write_json(system_to_json(sys), path)
    logger.info(f"Saved {sys!r} to {path}")


def load_spec(path: PathLike) -> SystemSpec:
    return SystemSpec.from_json(read_json(path))


def save_spec(spec: SystemSpec, path: PathLike) -> None:
    write_json(spec.to_json(), path)


def thetas_to_json(step: Fraction, thetas: Dict[int, np.ndarray]) -> Dict[str, Any]:
    """Unitary family keyed by grid time; matrices column-major 2×2."""
    return {
        "thetas": [
            {"t": time_to_json(k * step), "matrix": matrix_to_json(thetas[k])}
            for k in sorted(thetas)
        ]
    }


def thetas_from_json(data: Any, step: Fraction) -> Dict[int, np.ndarray]:
    """Read a unitary family and re-index it on the grid of ``step``."""
    entries = data.get("thetas") if isinstance(data, dict) else data
    if not isinstance(entries, list):
        raise SchemaError("thetas must be a list of {'t', 'matrix'} entries")
    thetas: Dict[int, np.ndarray] = {}
    for entry in entries:
        if not isinstance(entry, dict) or not {"t", "matrix"} <= set(entry):
            raise SchemaError("each theta needs 't' and 'matrix'")
        t = time_from_json(entry["t"])
        k = t / step
        if k.denominator != 1:
            raise GridError(
                "theta time is not on the grid", t=time_to_json(t), step=time_to_json(step)
            )
        thetas[k.numerator] = matrix_from_json(entry["matrix"], (2, 2))
    return thetas


def basis_from_json(data: Any, step: Fraction) -> CanonicalBasis:
    """Inverse of ``CanonicalBasis.to_json`` on the grid of ``step``."""
    if not isinstance(data, list):
        raise SchemaError("basis must be a list of {'t', 'x', 'y'} entries")
    vectors: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
    for entry in data:
        if not isinstance(entry, dict) or not {"t", "x", "y"} <= set(entry):
            raise SchemaError("each basis entry needs 't', 'x' and 'y'")
        k = time_from_json(entry["t"]) / step
        if k.denominator != 1:
            raise GridError("basis time is not on the grid", t=entry["t"])
        x = np.array([complex_from_json(z) for z in entry["x"]], dtype=complex)
        y = np.array([complex_from_json(z) for z in entry["y"]], dtype=complex)
        vectors[k.numerator] = (x, y)
    return CanonicalBasis(step, vectors)
