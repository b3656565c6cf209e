import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dssl.core import (
    EstimatorSpec,
    Fallback,
    LabeledSet,
    ParseError,
    ProblemClass,
    SchemaError,
    UnlabeledSet,
    ValidationError,
    load_dataset,
    save_dataset,
)


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_load_labeled_two_rows(tmp_path):
    p = _write(tmp_path / "a.csv", "x1,x2,y\n0.1,0.2,1.0\n0.3,0.4,-1.0\n")
    ds = load_dataset(p, "labeled")
    assert isinstance(ds, LabeledSet)
    assert (ds.n, ds.d) == (2, 2)
    np.testing.assert_array_equal(ds.labels, [1.0, -1.0])


def test_load_unlabeled_one_dimensional(tmp_path):
    p = _write(tmp_path / "u.csv", "x1\n0.5\n0.6\n")
    ds = load_dataset(p, "unlabeled")
    assert isinstance(ds, UnlabeledSet)
    assert (ds.m, ds.d) == (2, 1)


def test_nan_is_validation_error(tmp_path):
    p = _write(tmp_path / "a.csv", "x1,x2,y\n0.1,NaN,1.0\n")
    with pytest.raises(ValidationError):
        load_dataset(p, "labeled")


def test_malformed_row_names_line(tmp_path):
    p = _write(tmp_path / "a.csv", "x1,x2,y\n0.1,0.2,1.0\n0.1,abc,1.0\n")
    with pytest.raises(ParseError, match="line 3"):
        load_dataset(p, "labeled")
    p = _write(tmp_path / "b.csv", "x1,x2,y\n0.1,0.2\n")
    with pytest.raises(ParseError, match="line 2"):
        load_dataset(p, "labeled")


def test_missing_y_is_schema_error(tmp_path):
    p = _write(tmp_path / "a.csv", "x1,x2\n0.1,0.2\n")
    with pytest.raises(SchemaError):
        load_dataset(p, "labeled")
    p = _write(tmp_path / "b.csv", "x1,y\n0.1,0.2\n")
    with pytest.raises(SchemaError):
        load_dataset(p, "unlabeled")
    p = _write(tmp_path / "c.csv", "a,b\n0.1,0.2\n")
    with pytest.raises(SchemaError):
        load_dataset(p, "unlabeled")


def test_no_rows_rejected(tmp_path):
    p = _write(tmp_path / "a.csv", "x1\n")
    with pytest.raises(ValidationError):
        load_dataset(p, "unlabeled")


def test_roundtrip_labeled(tmp_path):
    ds = LabeledSet([[0.1, 0.2], [1 / 3, -2e-300]], [1.0, np.pi])
    p = tmp_path / "l.csv"
    save_dataset(ds, p)
    assert load_dataset(p, "labeled") == ds


def test_empty_unlabeled_rejected():
    with pytest.raises(ValidationError):
        UnlabeledSet(np.zeros((0, 2)))


def test_save_to_missing_dir_is_write_error(tmp_path):
    with pytest.raises(OSError):
        save_dataset(UnlabeledSet([[0.0]]), tmp_path / "missing" / "u.csv")


def test_inconsistent_dimensions_rejected():
    with pytest.raises(ValidationError):
        LabeledSet(np.zeros((3, 2)), np.zeros(2))
    with pytest.raises(ValidationError):
        LabeledSet([[0.0, np.inf]], [1.0])
    with pytest.raises(ValidationError):
        LabeledSet([[0.0]], [np.nan])


def test_sets_are_read_only():
    ds = LabeledSet([[0.0, 1.0]], [2.0])
    with pytest.raises(ValueError):
        ds.points[0, 0] = 5.0


def test_problem_class_invariants():
    ok = dict(d=2, lambda0=0.5, Lambda0=1.0, M=1.0, sigma=0.0, K=1, tau0=0.1,
              beta=1.0, C1=1.0, eta=1.0, C2=0.0)
    ProblemClass(**ok)
    for key, bad in [("lambda0", 0.0), ("Lambda0", 0.4), ("M", 0.0), ("sigma", -1.0),
                     ("K", 0), ("tau0", 0.0), ("beta", 0.0), ("eta", 0.0), ("d", 0)]:
        with pytest.raises(ValueError):
            ProblemClass(**dict(ok, **{key: bad}))


def test_estimator_spec():
    s = EstimatorSpec(0.0, 0.5, "undefined")
    assert s.fallback is Fallback.UNDEFINED
    with pytest.raises(ValueError):
        EstimatorSpec(-1.0, 0.5)
    with pytest.raises(ValueError):
        EstimatorSpec(1.0, 0.0)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(
    pts=arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)), elements=finite),
    data=st.data(),
)
def test_roundtrip_is_bit_exact(tmp_path_factory, pts, data):
    labels = data.draw(arrays(np.float64, pts.shape[0], elements=finite))
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    lab = LabeledSet(pts, labels)
    save_dataset(lab, p)
    back = load_dataset(p, "labeled")
    assert back.points.tobytes() == lab.points.tobytes()
    assert back.labels.tobytes() == lab.labels.tobytes()
    unl = UnlabeledSet(pts)
    save_dataset(unl, p)
    assert load_dataset(p, "unlabeled").points.tobytes() == unl.points.tobytes()
