import csv
import json

import numpy as np
import pytest

from dssl.cli import EXIT_DATA, EXIT_RUNTIME, EXIT_USAGE, SWEEP_COLUMNS, main

BOX = json.dumps({"boxes": [[[0, 0], [1, 1]]], "labels": [0.5], "sigma": 0.1})
TWO = json.dumps({"boxes": [[[0, 0], [0.4, 1]], [[0.6, 0], [1, 1]]], "labels": [1, -1], "sigma": 0.1})


def _gen(tmp_path, name="data", params=BOX, n=30, m=3000, seed=0, generator="uniform_components"):
    out = tmp_path / name
    code = main(["gen", "--generator", generator, "--params", params, "--n", str(n),
                 "--m", str(m), "--seed", str(seed), "--output-dir", str(out)])
    assert code == 0
    return out


def _rows(path):
    return path.read_text().strip().splitlines()[1:]


def test_gen_row_counts(tmp_path):
    out = _gen(tmp_path, n=10, m=100)
    assert len(_rows(out / "labeled.csv")) == 10
    assert len(_rows(out / "unlabeled.csv")) == 100
    meta = json.loads((out / "instance.json").read_text())
    assert meta["generator"] == "uniform_components" and meta["schema_version"] == 1


def test_gen_is_byte_identical(tmp_path):
    a = _gen(tmp_path, "a", generator="smooth", params='{"resolution": 30}', n=10, m=50, seed=4)
    b = _gen(tmp_path, "b", generator="smooth", params='{"resolution": 30}', n=10, m=50, seed=4)
    for f in ("labeled.csv", "unlabeled.csv", "instance.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_unknown_generator(tmp_path):
    assert main(["gen", "--generator", "nope", "--output-dir", str(tmp_path)]) == EXIT_USAGE


def test_bad_generator_params(tmp_path):
    assert main(["gen", "--generator", "comb", "--params", '{"spikes": 3}',
                 "--output-dir", str(tmp_path)]) == EXIT_USAGE


def _fit_args(data, *extra):
    return ["fit", "--labeled", str(data / "labeled.csv"), "--unlabeled", str(data / "unlabeled.csv"),
            "--resolution", "40", "--c2", "0.3", *extra]


def test_fit_large_bandwidth_gives_label_mean(tmp_path):
    data = _gen(tmp_path)
    out = tmp_path / "pred.json"
    code = main(_fit_args(data, "--alpha", "0", "--h", "100", "--snap", "interior", "--out", str(out)))
    assert code == 0
    rows = json.loads(out.read_text())
    y = np.loadtxt(data / "labeled.csv", delimiter=",", skiprows=1)[:, -1]
    assert len(rows) == 30
    assert all(r["covered"] for r in rows)
    np.testing.assert_allclose([r["yhat"] for r in rows], y.mean(), rtol=1e-12)


def test_fit_empty_queries(tmp_path):
    data = _gen(tmp_path)
    q = tmp_path / "q.csv"
    q.write_text("x1,x2\n")
    out = tmp_path / "pred.json"
    assert main(_fit_args(data, "--alpha", "1", "--h", "0.3", "--queries", str(q), "--out", str(out))) == 0
    assert json.loads(out.read_text()) == []


def test_fit_negative_alpha_is_usage_error(tmp_path):
    data = _gen(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(_fit_args(data, "--alpha", "-1", "--h", "0.3"))
    assert exc.value.code == EXIT_USAGE


def test_fit_bad_data_exit_code(tmp_path):
    data = _gen(tmp_path)
    (data / "labeled.csv").write_text("x1,x2,y\n0.1,oops,1\n")
    assert main(_fit_args(data, "--alpha", "0", "--h", "0.3")) == EXIT_DATA
    assert main(_fit_args(tmp_path / "missing", "--alpha", "0", "--h", "0.3")) == EXIT_DATA


def test_uncovered_under_undefined_exit_code(tmp_path):
    data = _gen(tmp_path)
    q = tmp_path / "q.csv"
    q.write_text("x1,x2\n5.0,5.0\n")
    code = main(_fit_args(data, "--alpha", "0", "--h", "0.01", "--fallback", "undefined",
                          "--queries", str(q)))
    assert code == EXIT_RUNTIME


def test_fit_side_files(tmp_path):
    data = _gen(tmp_path)
    grid, edges = tmp_path / "grid.json", tmp_path / "edges.txt"
    code = main(_fit_args(data, "--alpha", "1", "--h", "0.3", "--out", str(tmp_path / "p.json"),
                          "--emit-grid", str(grid), "--dump-graph", str(edges)))
    assert code == 0
    assert "phat" in json.loads(grid.read_text())
    first = edges.read_text().splitlines()[0].split()
    assert len(first) == 3


def test_cv_json(tmp_path):
    data = _gen(tmp_path, params=TWO, m=20000)
    out = tmp_path / "cv.json"
    code = main(["cv", "--labeled", str(data / "labeled.csv"), "--unlabeled", str(data / "unlabeled.csv"),
                 "--resolution", "60", "--c2", "0.3", "--snap", "interior",
                 "--alphas", "0,1,2", "--bandwidths", "0.1,0.3,1", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert len(rep["table"]) == 9 and rep["n_train"] == rep["n_val"] == 15
    best = min(rep["table"], key=lambda r: (r["risk"], r["alpha"], r["h"]))
    assert rep["chosen"] == {"alpha": best["alpha"], "h": best["h"]}


def test_cv_alphas_without_zero(tmp_path):
    data = _gen(tmp_path)
    code = main(["cv", "--labeled", str(data / "labeled.csv"), "--unlabeled", str(data / "unlabeled.csv"),
                 "--alphas", "1,2"])
    assert code == EXIT_RUNTIME


def test_dist_matrix(tmp_path):
    data = _gen(tmp_path, params=TWO, m=20000)
    pts = tmp_path / "pts.csv"
    pts.write_text("x1,x2\n0.2,0.5\n0.25,0.5\n0.8,0.5\n")
    out = tmp_path / "d.json"
    code = main(["dist", "--unlabeled", str(data / "unlabeled.csv"), "--points", str(pts),
                 "--alpha", "1", "--resolution", "60", "--c2", "0.3", "--snap", "interior",
                 "--out", str(out)])
    assert code == 0
    d = json.loads(out.read_text())["distances"]
    assert d[0][0] == 0.0 and d[0][1] > 0
    # the two blocks are separate components
    assert d[0][2] is None and d[2][0] is None


def _sweep(tmp_path, out, *extra):
    return main(["sweep", "--generator", "uniform_components", "--params", TWO,
                 "--n", "20", "--m", "20000", "--seeds", "0,1", "--resolution", "60", "--c2", "0.3",
                 "--snap", "interior", "--alpha", "1", "--h", "0.3", "--alphas", "0,1",
                 "--n-mc", "300", "--out", str(out), *extra])


def test_sweep_rows_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _sweep(tmp_path, a) == 0
    assert _sweep(tmp_path, b, "--threads", "2") == 0
    ra = list(csv.DictReader(a.open()))
    rb = list(csv.DictReader(b.open()))
    assert len(ra) == 6
    assert tuple(ra[0]) == SWEEP_COLUMNS
    assert {r["method"] for r in ra} == {"ss_cv", "ss_fixed", "euclidean_cv"}
    assert all(r["status"] == "ok" for r in ra)
    for x, y in zip(ra, rb):
        x.pop("wall_ms"), y.pop("wall_ms")
        assert x == y


def test_sweep_records_failures(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--generator", "uniform_components", "--params", TWO, "--n", "20",
                 "--m", "20000", "--seeds", "0", "--methods", "ss_fixed,euclidean_cv",
                 "--resolution", "60", "--n-mc", "100", "--out", str(out)])
    assert code == 0
    rows = {r["method"]: r for r in csv.DictReader(out.open())}
    # ss_fixed without alpha and h fails, the other method still runs
    assert rows["ss_fixed"]["status"].startswith("error")
    assert rows["euclidean_cv"]["status"] == "ok"


def test_config_precedence_and_env(tmp_path, monkeypatch):
    data = _gen(tmp_path)
    cfg = tmp_path / "run.ini"
    cfg.write_text("[fit]\nalpha = 0\nh = 100\nsnap = interior\nresolution = 40\nc2 = 0.3\n")
    monkeypatch.setenv("DSSL_OUTPUT_DIR", str(tmp_path / "env"))
    base = ["fit", "--config", str(cfg), "--labeled", str(data / "labeled.csv"),
            "--unlabeled", str(data / "unlabeled.csv")]
    # values from the file: one neighborhood holding every label
    assert main(base + ["--out", str(tmp_path / "a.json")]) == 0
    a = [r["yhat"] for r in json.loads((tmp_path / "a.json").read_text())]
    assert len(set(a)) == 1
    # the command line bandwidth overrides the file value
    assert main(base + ["--h", "1e-9", "--out", str(tmp_path / "b.json")]) == 0
    b = [r["yhat"] for r in json.loads((tmp_path / "b.json").read_text())]
    assert len(set(b)) > 1
    # gen without --output-dir falls back to the environment variable
    assert main(["gen", "--generator", "uniform_components", "--params", BOX, "--n", "5", "--m", "5"]) == 0
    assert (tmp_path / "env" / "labeled.csv").exists()


def test_fit_requires_alpha_and_h(tmp_path):
    data = _gen(tmp_path)
    assert main(_fit_args(data, "--alpha", "0")) == EXIT_USAGE


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[x]\nnonsense = 1\n")
    assert main(["gen", "--config", str(cfg), "--output-dir", str(tmp_path)]) == EXIT_USAGE
