import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from admweights import (
    FitOptions,
    ccr_scores,
    compare,
    emit,
    fit_constrained,
    fit_ols,
    rank,
    render,
    rescale_fit,
)
from admweights.dataset import Dataset, parse_csv
from admweights.report import formula_from_block, write_dataset

DEA_RANKS = {"A": 9, "B": 1, "C": 1, "D": 14, "E": 12, "F": 1, "G": 11, "H": 1, "I": 6, "J": 1, "K": 10, "L": 8, "M": 13, "N": 7}
QUICK = FitOptions(n_starts=8)


@pytest.fixture(scope="module")
def table(hospital, hospital_dea):
    ols = fit_ols(hospital, hospital_dea.scores, QUICK, hospital_dea)
    con = fit_constrained(hospital, hospital_dea.scores, QUICK, hospital_dea)
    return compare(hospital_dea, [ols, con], rescale_fit(ols), name="hospital14")


def test_rank_hospital_dea(hospital_dea):
    r = rank(hospital_dea.scores)
    assert dict(zip(hospital_dea.names, r.tolist())) == DEA_RANKS


def test_rank_examples():
    assert rank([0.7, 0.7, 0.7]).tolist() == [1, 1, 1]
    assert rank([0.5, 0.5, 0.4], tie_tol=1e-6).tolist() == [1, 1, 3]
    assert rank([0.5, 0.5 - 1e-7, 0.4]).tolist() == [1, 1, 3]
    with pytest.raises(ValueError):
        rank([])


def test_rank_ties_do_not_chain():
    assert rank([1.0, 1.0 - 0.6e-6, 1.0 - 1.2e-6]).tolist() == [1, 1, 3]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=25), st.floats(0.1, 10.0))
def test_rank_scale_invariance(scores, c):
    scores = np.round(np.array(scores), 3)  # keep gaps far above the tie tolerance
    assert rank(scores).tolist() == rank(c * scores).tolist()


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=25))
def test_rank_invariants(scores):
    r = rank(scores).tolist()
    assert r[int(np.argmax(scores))] == 1
    counts = {k: r.count(k) for k in set(r)}
    for k, c in counts.items():
        nxt = k + c
        assert nxt > max(r) or nxt in counts


def test_rescaled_ols_ranks_equal_raw(table):
    assert rank(table.columns["ols_rescaled"]).tolist() == table.ranks["ols"].tolist()


def test_compare_columns(table):
    assert table.methods == ["ols", "ols_rescaled", "constrained"]
    assert list(table.ranks) == ["dea", "ols", "constrained"]
    assert set(table.stats) == {"ols", "ols_rescaled", "constrained"}


def test_compare_single_entity():
    d = Dataset(["a"], [[1.0]], [[1.0]])
    dea = ccr_scores(d)
    t = compare(dea, [fit_ols(d, dea.scores, FitOptions(n_starts=1))])
    assert t.ranks["dea"].tolist() == [1] and t.ranks["ols"].tolist() == [1]


def test_compare_dea_only(hospital_dea):
    t = compare(hospital_dea, [])
    assert t.methods == [] and list(t.ranks) == ["dea"]
    assert render(t, "csv").splitlines()[0] == "dmu,dea_score,dea_rank"


def test_compare_length_mismatch(hospital_dea, bowlin, bowlin_dea):
    other = fit_ols(bowlin, bowlin_dea.scores, QUICK)
    with pytest.raises(ValueError):
        compare(hospital_dea, [other])


def test_csv_header(table):
    header = render(table, "csv").splitlines()[0]
    assert header == "dmu,dea_score,ols_score,ols_rescaled,constrained_score,dea_rank,ols_rank,constrained_rank"


def test_csv_reparse_matches_table(table):
    rows = list(csv.DictReader(io.StringIO(render(table, "csv"))))
    assert len(rows) == 14
    for i, row in enumerate(rows):
        assert float(row["dea_score"]) == pytest.approx(table.dea_scores[i], rel=1e-5)
        assert float(row["constrained_score"]) == pytest.approx(table.columns["constrained"][i], rel=1e-5)
        assert int(row["ols_rank"]) == table.ranks["ols"][i]


def test_json_schema(table):
    doc = json.loads(render(table, "json"))
    assert list(doc) == ["dataset", "methods", "entities", "formulas", "formula", "stats"]
    assert doc["dataset"] == "hospital14"
    assert len(doc["entities"]) == 14 and doc["entities"][0]["dmu"] == "A"
    assert doc["formula"]["outputs"]["Outpatients"] == 1.0
    assert set(doc["formula"]["inputs"]) == {"Doctors", "Nurses"}
    assert doc["formula"]["intercept"] is None


def test_full_precision_flag(table):
    short = json.loads(render(table, "json"))
    full = json.loads(render(table, "json", full_precision=True))
    assert full["entities"][0]["constrained_score"] == float(table.columns["constrained"][0])
    assert short["entities"][0]["constrained_score"] == float(f"{table.columns['constrained'][0]:.6g}")


def test_formula_block_round_trip(table):
    doc = json.loads(render(table, "json", full_precision=True))
    f, outs, ins = formula_from_block(doc)
    assert outs == ("Outpatients", "Inpatients") and ins == ("Doctors", "Nurses")
    np.testing.assert_array_equal(f.output_weights, table.formulas["constrained"].output_weights)


def test_emit_dea_and_fit(hospital, hospital_dea, table, tmp_path):
    path = tmp_path / "dea.json"
    emit(hospital_dea, "json", path)
    doc = json.loads(path.read_text())
    assert doc["efficient"] == 5
    assert sum(doc["zero_weight_counts"].values()) > 0
    buf = io.StringIO()
    fit = fit_ols(hospital, hospital_dea.scores, QUICK)
    emit(fit, "csv", buf)
    assert buf.getvalue().splitlines()[0] == "dmu,target,predicted,residual"
    doc = json.loads(render(fit, "json"))
    assert doc["optimizer"]["seed"] == QUICK.seed and "formula" in doc


def test_emit_is_stable(table):
    assert render(table, "json") == render(table, "json")


def test_emit_unwritable(table, tmp_path):
    bad = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit(table, "csv", bad)


def test_dataset_writer_round_trip(hospital):
    buf = io.StringIO()
    write_dataset(hospital, buf)
    assert parse_csv(buf.getvalue()) == hospital
