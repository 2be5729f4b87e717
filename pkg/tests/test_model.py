import json

import pytest

from dirac_workbench.brackets import OffSurfaceError
from dirac_workbench.model import BUNDLED_MODELS, ModelError, load_model, model_from_dict, resolve_model_path


def circle_data():
    with open(resolve_model_path("circle.json")) as fh:
        return json.load(fh)


def test_bundled_models_load():
    for name in BUNDLED_MODELS:
        m = load_model(name)
        assert m.name == name and m.sample_points


def test_circle_model():
    m = load_model("circle.json")
    assert m.multipliers == ["lam"]
    assert m.table.kinds["plam"] == "multiplier-momentum"
    assert m.parameters == {"r0": 1}
    assert len(m.declared_rules) == 2
    assert len(m.sample_points) >= 10
    assert all(p["r0"] == 1 for p in m.sample_points)


def test_free_model_has_no_rules():
    m = load_model("free")
    assert m.multipliers == [] and m.declared_rules is None


def test_off_surface_sample_point_named():
    data = circle_data()
    data["sample_points"].append({"x": "1", "y": "1", "px": "0", "py": "0", "lam": "0", "plam": "0"})
    with pytest.raises(OffSurfaceError) as info:
        model_from_dict(data)
    assert "x=1, y=1" in str(info.value) and "x^2 + y^2 - r0^2" in str(info.value)


def test_schema_violations():
    data = circle_data()
    del data["lagrangian"]
    with pytest.raises(ModelError):
        model_from_dict(data)
    data = circle_data()
    data["sample_points"] = []
    with pytest.raises(ModelError):
        model_from_dict(data)
    data = circle_data()
    data["symbols"][0]["kind"] = "spinor"
    with pytest.raises(ModelError):
        model_from_dict(data)


def test_parameter_errors():
    data = circle_data()
    data["parameters"] = {}
    with pytest.raises(ModelError):
        model_from_dict(data)
    data = circle_data()
    data["parameters"]["m"] = "1"
    with pytest.raises(ModelError):
        model_from_dict(data)


def test_lagrangian_may_not_use_momenta():
    data = circle_data()
    data["lagrangian"] = "px*x_dot"
    with pytest.raises(ModelError):
        model_from_dict(data)


def test_rule_orientation_validated():
    data = circle_data()
    data["rewrite_rules"] = [{"target": "r0^2", "replacement": "x^2 + y^2"}]
    with pytest.raises(Exception):
        model_from_dict(data)


def test_unknown_sample_symbol():
    data = circle_data()
    data["sample_points"][0]["z"] = "0"
    with pytest.raises(ModelError):
        model_from_dict(data)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "nope.json")


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ModelError):
        load_model(p)
