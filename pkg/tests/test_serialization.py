import json
from fractions import Fraction

import numpy as np
import pytest

from subproduct.errors import CompletenessError, GridError, IsometryError, SchemaError
from subproduct.serialization import (
    load_spec,
    load_system,
    read_json,
    save_spec,
    save_system,
    system_from_json,
    system_to_json,
    thetas_from_json,
    thetas_to_json,
)
from subproduct.systems import SystemSpec, generate_canonical, random_unitaries, restrict


def test_save_load_is_bit_identical(tmp_path):
    sys, _ = generate_canonical(SystemSpec.e3(-0.5 + 0.1j), 3, 5)
    path = tmp_path / "sys.json"
    save_system(sys, path)
    loaded = load_system(path)
    assert loaded.step == Fraction(1, 3)
    assert loaded.horizon == 5
    for pair in sys.pairs:
        np.testing.assert_array_equal(loaded.beta(*pair), sys.beta(*pair))


def test_restricted_step_is_kept():
    sys, _ = generate_canonical(SystemSpec.e1(0.3), 2, 6)
    data = system_to_json(restrict(sys, 3))
    assert data["step"] == {"num": 3, "den": 2}
    assert system_from_json(data).step == Fraction(3, 2)


def test_non_isometric_matrix_names_the_pair():
    sys, _ = generate_canonical(SystemSpec.e4(), 1, 3)
    data = system_to_json(sys)
    data["maps"][1]["matrix"][0] = [2.0, 0.0]
    with pytest.raises(IsometryError) as excinfo:
        system_from_json(data)
    pair = (data["maps"][1]["s"], data["maps"][1]["t"])
    assert (excinfo.value.details["s"], excinfo.value.details["t"]) == pair
    assert excinfo.value.to_diagnostic()["code"] == "isometry"


def test_missing_pair_is_incomplete():
    sys, _ = generate_canonical(SystemSpec.e4(), 1, 3)
    data = system_to_json(sys)
    data["maps"].pop()
    with pytest.raises(CompletenessError):
        system_from_json(data)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("horizon"),
        lambda d: d.update(denominator="two"),
        lambda d: d.update(maps={}),
        lambda d: d["maps"].append(dict(d["maps"][0])),
        lambda d: d["maps"][0].update(s=5),
        lambda d: d.update(step={"num": 1, "den": 3}),
    ],
)
def test_schema_violations(mutate):
    sys, _ = generate_canonical(SystemSpec.e1(0.3), 1, 3)
    data = system_to_json(sys)
    mutate(data)
    with pytest.raises(SchemaError):
        system_from_json(data)


def test_read_json_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_json(path)


def test_spec_file_round_trip(tmp_path):
    path = tmp_path / "spec.json"
    spec = SystemSpec.e3(2.0 + 0.5j)
    save_spec(spec, path)
    assert json.loads(path.read_text())["lambda"] == [2.0, 0.5]
    assert load_spec(path) == spec


def test_thetas_are_keyed_by_grid_time():
    thetas = random_unitaries(3, 4)
    step = Fraction(1, 2)
    data = thetas_to_json(step, thetas)
    assert data["thetas"][1]["t"] == {"num": 1, "den": 1}
    back = thetas_from_json(data, step)
    for k in thetas:
        np.testing.assert_array_equal(back[k], thetas[k])
    with pytest.raises(GridError):
        thetas_from_json(data, Fraction(2, 3))
