import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdfproj.config import ConfigError, fmt, model_from_dict, model_to_dict, read_data, write_csv_atomic
from pdfproj.errors import ModelValidationError

ABS = {
    "input_dim": 2,
    "input_domain": "reals",
    "prior": "std_gaussian",
    "layers": [{"type": "abs"}],
    "terminal": {"type": "std_gaussian"},
}


def test_round_trip_model_dict():
    doc = {
        "input_dim": 4,
        "input_domain": "reals",
        "prior": "std_gaussian",
        "layers": [{"type": "diag_scale", "scales": [1, 2, 3, 4]}, {"type": "abs"}, {"type": "slice", "keep": 2}],
        "terminal": {"type": "diag_gaussian", "mean": [0.5, 1.0], "var": [1.0, 2.0]},
    }
    m = model_from_dict(doc)
    assert model_to_dict(model_from_dict(model_to_dict(m))) == model_to_dict(m)
    assert model_to_dict(model_from_dict(ABS))["terminal"] == {"type": "std_gaussian", "dim": 2}


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        model_from_dict({**ABS, "extra": 1})
    with pytest.raises(ConfigError):
        model_from_dict({**ABS, "layers": [{"type": "abs", "n": 3}]})
    with pytest.raises(ConfigError):
        model_from_dict({**ABS, "layers": [{"type": "rotate"}]})


def test_invalid_chain_rejected():
    with pytest.raises(ModelValidationError):
        model_from_dict({**ABS, "layers": [{"type": "slice", "keep": 3}]})


def test_read_data(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\n1,2\n\n3,4\n")
    assert read_data(p, 2, header=True).tolist() == [[1, 2], [3, 4]]
    p.write_text("1,2\n3\n")
    with pytest.raises(ConfigError, match="row 1"):
        read_data(p, 2)
    p.write_text("1,x\n")
    with pytest.raises(ConfigError, match="row 0"):
        read_data(p, 2)
    p.write_text("")
    assert read_data(p, 3).shape == (0, 3)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=20))
def test_fmt_round_trips(values):
    assert [float(fmt(v)) for v in values] == values


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "out.csv"
    write_csv_atomic(p, ["a"], [[0.1], [1 / 3]])
    assert p.read_text() == "a\n0.10000000000000001\n0.33333333333333331\n"
    assert [f.name for f in tmp_path.iterdir()] == ["out.csv"]
