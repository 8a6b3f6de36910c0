import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from admweights.dataset import Dataset, builtin, parse_csv, to_csv, validate
from admweights.errors import DatasetError

HEADER = "dmu,input:Doctors,input:Nurses,output:Outpatients,output:Inpatients\n"


def test_parse_hospital_header(hospital):
    d = parse_csv(to_csv(hospital))
    assert (d.n, d.m, d.s) == (14, 2, 2)
    a = d.index("A")
    assert d.inputs[a].tolist() == [3008, 20980]
    assert d.outputs[a].tolist() == [97775, 101225]
    assert d.input_labels == ("Doctors", "Nurses")
    assert d.output_labels == ("Outpatients", "Inpatients")


def test_parse_single_row():
    d = parse_csv("dmu,input:x,output:y\nX,1,1\n")
    assert (d.n, d.m, d.s) == (1, 1, 1)


def test_non_numeric_cell_names_row_and_column():
    with pytest.raises(DatasetError) as err:
        parse_csv(HEADER + "A,3008,abc,97775,101225\n")
    assert "row 2, column 3" in str(err.value)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("name,input:x,output:y\nA,1,1\n", "first header must be 'dmu'"),
        ("dmu,x,output:y\nA,1,1\n", "must be 'input:<label>'"),
        ("dmu,input:x,output:y\nA,1,1\nA,2,2\n", "duplicate name 'A'"),
        ("dmu,input:x,output:y\nA,0,1\n", "input must be > 0"),
        ("dmu,input:x,output:y\nA,-1,1\n", "input must be > 0"),
        ("dmu,input:x,output:y\nA,1,-1\n", "output must be >= 0"),
        ("dmu,input:x,output:y\nA,1,0\n", "no positive output"),
        ("dmu,input:x\nA,1\n", "output column is required"),
    ],
)
def test_parse_rejections(text, fragment):
    with pytest.raises(DatasetError) as err:
        parse_csv(text)
    assert fragment in str(err.value)


def test_parse_reports_every_problem():
    with pytest.raises(DatasetError) as err:
        parse_csv("dmu,input:x,output:y\nA,0,1\nB,q,1\n")
    assert len(err.value.problems) == 2


def test_validate_hospital_clean(hospital):
    report = validate(hospital)
    assert report.errors == [] and report.warnings == []


def test_validate_zero_input_is_fatal():
    d = Dataset(["a", "b"], [[1.0], [0.0]], [[1.0], [1.0]])
    assert validate(d).errors


def test_validate_discrimination_warning():
    d = Dataset(["a", "b", "c"], np.ones((3, 2)), np.ones((3, 2)))
    report = validate(d)
    assert not report.errors
    assert any("discrimination" in w for w in report.warnings)


def test_builtin_rows():
    h = builtin("hospital14")
    n = h.index("N")
    assert h.inputs[n].tolist() == [21808, 78302]
    assert h.outputs[n].tolist() == [322990, 487539]
    b = builtin("bowlin15")
    h1 = b.index("H1")
    assert b.outputs[h1].tolist() == [50, 3000, 2000]
    assert b.inputs[h1].tolist() == [775.5]
    assert b.input_labels == ("Cost",) and b.output_labels == ("TU", "RP", "SP")


def test_builtin_unknown():
    with pytest.raises(DatasetError, match="unknown built-in"):
        builtin("nosuch")


@pytest.mark.parametrize("name", ["hospital14", "bowlin15"])
def test_builtins_validate(name):
    assert validate(builtin(name)).errors == []


def test_dataset_is_immutable(hospital):
    with pytest.raises(ValueError):
        hospital.inputs[0, 0] = 1.0


@pytest.mark.parametrize("name", ["hospital14", "bowlin15"])
def test_round_trip_builtins(name):
    d = builtin(name)
    assert parse_csv(to_csv(d)) == d


positive = st.floats(min_value=1e-6, max_value=1e9, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_round_trip_is_bit_exact(data):
    n = data.draw(st.integers(1, 6))
    m = data.draw(st.integers(1, 3))
    s = data.draw(st.integers(1, 3))
    x = data.draw(st.lists(st.lists(positive, min_size=m, max_size=m), min_size=n, max_size=n))
    y = data.draw(st.lists(st.lists(positive, min_size=s, max_size=s), min_size=n, max_size=n))
    d = Dataset([f"e{i}" for i in range(n)], x, y)
    back = parse_csv(to_csv(d))
    assert back == d
    assert back.inputs.tobytes() == d.inputs.tobytes()
