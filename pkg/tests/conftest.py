import json
import math
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np
import pytest

from subproduct.systems import CanonicalBasis, FiniteGridSystem, SystemSpec, generate_canonical

SEED = 4774

FIXTURES = Path(__file__).parent / "fixtures"

CANONICAL_SPECS = [
    SystemSpec.e1(0.0),
    SystemSpec.e1(0.3),
    SystemSpec.e1(0.9),
    SystemSpec.e2(0.0),
    SystemSpec.e2(0.4),
    SystemSpec.e3(2.0),
    SystemSpec.e3(1j),
    SystemSpec.e3(-0.5 + 0.1j),
    SystemSpec.e4(),
    SystemSpec.e5(),
]


def spec_id(spec: SystemSpec) -> str:
    return spec.describe()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


@pytest.fixture(scope="package")
def canonical_systems() -> Dict[str, Tuple[FiniteGridSystem, CanonicalBasis]]:
    """Canonical systems of every listed spec at N = 1, K = 8."""
    return {spec_id(spec): generate_canonical(spec, 1, 8) for spec in CANONICAL_SPECS}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def _close(actual: Any, expected: Any, tol: float, path: str) -> None:
    if isinstance(expected, dict):
        assert isinstance(actual, dict), f"{path}: expected an object"
        for key, value in expected.items():
            assert key in actual, f"{path}: missing key {key!r}"
            _close(actual[key], value, tol, f"{path}.{key}")
    elif isinstance(expected, list):
        assert isinstance(actual, list), f"{path}: expected a list"
        assert len(actual) == len(expected), f"{path}: length {len(actual)}"
        for i, (a, e) in enumerate(zip(actual, expected)):
            _close(a, e, tol, f"{path}[{i}]")
    elif isinstance(expected, bool) or expected is None or isinstance(expected, str):
        assert actual == expected, f"{path}: {actual!r} != {expected!r}"
    elif isinstance(expected, (int, float)):
        assert math.isclose(float(actual), float(expected), abs_tol=tol), (
            f"{path}: {actual!r} != {expected!r}"
        )
    else:
        raise TypeError(f"{path}: unsupported golden value {expected!r}")


@pytest.fixture
def json_close():
    """Compare a parsed artifact against a golden subset with float tolerance."""

    def check(actual: Any, expected: Any, tol: float = 1e-9) -> None:
        _close(actual, expected, tol, "$")

    return check


@pytest.fixture
def golden(fixtures_dir: Path):
    def load(name: str) -> Any:
        with open(fixtures_dir / name, "r", encoding="utf-8") as f:
            return json.load(f)

    return load
