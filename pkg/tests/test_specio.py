import json

import numpy as np
import pytest

from lctdelay.lct import transform
from lctdelay.logistic import LogisticParams, logistic_rhs, canonical_order
from lctdelay.specio import SpecFormatError, load_spec, parse_spec, spec_to_dict

LOGISTIC = {
    "D": 1,
    "d": 1,
    "c": [0, 1],
    "kernels": [
        {"order": 1, "sigma": 1.0, "a": 1.0, "oscillations": [{"eps": 0, "mu": 0, "omega": 0.8}]},
        {"order": 2, "sigma": 1.0, "a": 1.0, "oscillations": [{"eps": 0.5, "mu": 0, "omega": 0.8}]},
    ],
    "rhs": "builtin:logistic",
    "params": {"r": 2, "K": 1},
    "history": "constant:[1.0]",
    "r": 7,
}


def test_logistic_file_reproduces_builtin(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(LOGISTIC))
    system = transform(load_spec(path))
    p = LogisticParams(2.0, 1.0, 1.0, 0.8, 0.5)
    X = np.linspace(0.3, 1.2, 7)
    order = canonical_order(system)
    Xg = np.empty(7)
    Xg[order] = X
    assert np.allclose(system.rhs(Xg)[order], logistic_rhs(p, X), rtol=1e-14)


def test_round_trip():
    spec = parse_spec(LOGISTIC)
    again = parse_spec(json.loads(json.dumps(spec_to_dict(spec))))
    assert spec_to_dict(again) == spec_to_dict(spec)


def test_linear_rhs():
    data = dict(LOGISTIC, D=2, d=1, rhs='linear:{"A": [[-1, 0], [0, -2]], "B": [[0.5, 0], [0, 0]]}',
                params={}, history="constant:[1, 2]")
    data.pop("r")
    spec = parse_spec(data)
    assert spec.dimension == 2 + 1 * (2 + 2 * 2)
    out = spec.rhs(np.array([1.0, 1.0]), np.array([2.0, 0.0]))
    assert np.allclose(out, [0.0, -2.0])
    assert spec_to_dict(spec)["rhs"] == data["rhs"]


@pytest.mark.parametrize(
    "change, field",
    [
        ({"D": 0}, "D"),
        ({"d": 3}, "d"),
        ({"c": [1]}, "c"),
        ({"r": 9}, "r"),
        ({"history": "constant:[1, 2]"}, "history"),
        ({"history": "sine:[1]"}, "history"),
        ({"rhs": "builtin:nope"}, "rhs"),
        ({"rhs": "python:x"}, "rhs"),
        ({"params": {"r": 2}}, "params"),
        ({"extra": 1}, "extra"),
        ({"D": "one"}, "D"),
    ],
)
def test_field_errors(change, field):
    with pytest.raises(SpecFormatError) as info:
        parse_spec(dict(LOGISTIC, **change))
    assert info.value.field == field
    assert str(info.value).startswith(f"field '{field}'")


def test_kernel_field_errors():
    bad = json.loads(json.dumps(LOGISTIC))
    bad["kernels"][1]["order"] = 3
    with pytest.raises(SpecFormatError, match=r"kernels\[1\]\.order"):
        parse_spec(bad)
    bad = json.loads(json.dumps(LOGISTIC))
    bad["kernels"][1]["sigma"] = 2.0
    with pytest.raises(SpecFormatError, match=r"kernels\[1\]\.sigma"):
        parse_spec(bad)
    bad = json.loads(json.dumps(LOGISTIC))
    bad["kernels"][1]["oscillations"][0]["omega"] = 0.5
    with pytest.raises(SpecFormatError, match="'kernels'"):
        parse_spec(bad)
    bad = json.loads(json.dumps(LOGISTIC))
    del bad["kernels"][0]["oscillations"][0]["omega"]
    with pytest.raises(SpecFormatError, match=r"oscillations\[0\]\.omega"):
        parse_spec(bad)


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SpecFormatError, match="malformed JSON"):
        load_spec(path)
