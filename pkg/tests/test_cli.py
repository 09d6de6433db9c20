import numpy as np
import pytest

import autosc.cli as cli
from autosc.cli import (BENCH_HEADER, RunReport, main, read_labels, read_matrix, read_pgm,
                        write_matrix)
from autosc.cluster import auto_sc
from autosc.core import DataMatrix, Params, generate_synthetic
from autosc.errors import NoTriplets
from autosc.metrics import nmi, triplet_error_rate


@pytest.fixture
def dataset(tmp_path):
    data, truth = generate_synthetic(3, 4, 20, 30, 0.0, seed=11)
    write_matrix(tmp_path / "X.csv", data.values)
    (tmp_path / "gt.csv").write_text("".join(f"{v}\n" for v in truth.labels))
    return tmp_path, data, truth


def report_of(path):
    return RunReport.parse(path.read_text())


# -- cluster ------------------------------------------------------------------

def test_cluster_report(dataset):
    d, data, _ = dataset
    out = d / "report.txt"
    assert main(["cluster", "--input", str(d / "X.csv"), "--solver", "lsr", "--m", "8",
                 "--out", str(out)]) == 0
    rep = report_of(out)
    assert int(rep["k_hat"]) == 3
    assert len(rep["labels"].split(",")) == data.n_samples
    assert "nmi" not in rep and "triplet_error" not in rep
    assert all(float(v) >= 0 for k, v in rep.items() if k.startswith("time_"))


def test_cluster_report_with_labels(dataset):
    d, data, truth = dataset
    out = d / "report.txt"
    assert main(["cluster", "--input", str(d / "X.csv"), "--labels", str(d / "gt.csv"),
                 "--out", str(out)]) == 0
    rep = report_of(out)
    result = auto_sc(data, Params())
    assert float(rep["nmi"]) == pytest.approx(nmi(result.labels, truth.labels), abs=1e-6)
    assert float(rep["triplet_error"]) == pytest.approx(
        triplet_error_rate(result.triplets, truth), abs=1e-6)
    assert rep["labels"] == ",".join(str(v) for v in result.labels)


def test_cluster_to_stdout(dataset, capsys):
    d, _, _ = dataset
    assert main(["cluster", "--input", str(d / "X.csv"), "--solver", "greedy-n"]) == 0
    assert capsys.readouterr().out.splitlines()[-1].startswith("labels: ")


def test_cluster_unreadable_input(tmp_path, capsys):
    out = tmp_path / "report.txt"
    code = main(["cluster", "--input", str(tmp_path / "missing.csv"), "--out", str(out)])
    assert code == 2
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []
    assert "cannot read" in capsys.readouterr().err


def test_cluster_malformed_cell(tmp_path, capsys):
    (tmp_path / "X.csv").write_text("1,2,3,4\n5,6,oops,8\n")
    assert main(["cluster", "--input", str(tmp_path / "X.csv")]) == 2
    err = capsys.readouterr().err
    assert "row 2" in err and "column 3" in err


def test_cluster_ragged_rows(tmp_path, capsys):
    (tmp_path / "X.csv").write_text("1,2,3,4\n5,6\n")
    assert main(["cluster", "--input", str(tmp_path / "X.csv")]) == 2
    assert "row 2" in capsys.readouterr().err


def test_cluster_label_count_mismatch(dataset):
    d, _, _ = dataset
    (d / "short.csv").write_text("0\n1\n")
    assert main(["cluster", "--input", str(d / "X.csv"), "--labels", str(d / "short.csv")]) == 2


def test_cluster_fallback_exit_code(dataset, monkeypatch):
    d, data, _ = dataset

    def no_triplets(*args, **kwargs):
        raise NoTriplets("none")

    monkeypatch.setattr(cli, "auto_sc", no_triplets)
    out = d / "report.txt"
    assert main(["cluster", "--input", str(d / "X.csv"), "--out", str(out)]) == 3
    rep = report_of(out)
    assert rep["fallback"] == "true"
    assert int(rep["k_hat"]) == 1
    assert set(rep["labels"].split(",")) == {"0"}


# -- synth --------------------------------------------------------------------

SYNTH = ["synth", "--k", "5", "--dim", "4", "--per", "50", "--ambient", "30",
         "--sigma", "0.01", "--seed", "7"]


def test_synth_shapes(tmp_path):
    assert main(SYNTH + ["--out-dir", str(tmp_path)]) == 0
    assert read_matrix(tmp_path / "X.csv").shape == (30, 250)
    assert read_labels(tmp_path / "gt.csv").size == 250


def test_synth_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(SYNTH + ["--out-dir", str(a)])
    main(SYNTH + ["--out-dir", str(b)])
    for name in ("X.csv", "gt.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_synth_rejects_per_below_dim(tmp_path):
    assert main(["synth", "--per", "2", "--dim", "4", "--out-dir", str(tmp_path)]) == 2


def test_synth_round_trip_is_exact(tmp_path):
    main(SYNTH + ["--out-dir", str(tmp_path)])
    data, truth = generate_synthetic(5, 4, 50, 30, 0.01, seed=7)
    assert np.array_equal(read_matrix(tmp_path / "X.csv"), data.values)
    assert np.array_equal(read_labels(tmp_path / "gt.csv"), truth.labels)
    out = tmp_path / "report.txt"
    main(["cluster", "--input", str(tmp_path / "X.csv"), "--out", str(out)])
    labels = [int(v) for v in report_of(out)["labels"].split(",")]
    assert labels == auto_sc(data, Params()).labels.tolist()


# -- bench --------------------------------------------------------------------

def test_bench_header_and_rows(capsys):
    assert main(["bench", "--k", "3", "--m", "6-8", "--trials", "1", "--per", "20"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == BENCH_HEADER
    assert [line.split(",")[1] for line in lines[1:]] == ["6", "7", "8"]


def test_bench_single_trial_equals_single_run(capsys):
    assert main(["bench", "--k", "3", "--m", "8", "--trials", "1", "--per", "20",
                 "--seed", "4"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    data, truth = generate_synthetic(3, 4, 20, 30, 0.01, seed=4)
    result = auto_sc(data, Params())
    assert float(row[3]) == pytest.approx(abs(result.k_hat - 3), abs=1e-4)
    assert float(row[4]) == pytest.approx(nmi(result.labels, truth.labels), abs=1e-4)
    assert float(row[5]) == pytest.approx(triplet_error_rate(result.triplets, truth), abs=1e-4)


def test_bench_parallel_matches_serial(capsys):
    args = ["bench", "--k", "3", "--m", "7,8", "--trials", "2", "--per", "20"]
    main(args)
    serial = capsys.readouterr().out.splitlines()
    main(args + ["--jobs", "2"])
    parallel = capsys.readouterr().out.splitlines()
    strip = lambda rows: [r.rsplit(",", 1)[0] for r in rows]
    assert strip(serial) == strip(parallel)


@pytest.mark.parametrize("bad", [["--m", "2"], ["--trials", "0"], ["--k", "x"], ["--m", ""]])
def test_bench_invalid_sweep(bad):
    assert main(["bench", "--k", "3", "--per", "20"] + bad) == 2


# -- render -------------------------------------------------------------------

def test_render_uniform_matrix(tmp_path):
    c = np.full((6, 6), 0.3)
    np.fill_diagonal(c, 0.0)
    write_matrix(tmp_path / "C.csv", c)
    assert main(["render", "--input", str(tmp_path / "C.csv"), "--out", str(tmp_path / "c.pgm")]) == 0
    img = read_pgm(tmp_path / "c.pgm")
    assert img.shape == (6, 6)
    assert np.all(np.diagonal(img) == 0)
    off = img[~np.eye(6, dtype=bool)]
    assert np.all(off == off[0]) and off[0] == 255


def test_render_scaling_rule(tmp_path):
    c = np.array([[0.0, -2.0, 1.0], [0.5, 0.0, 0.25], [1.5, 0.1, 0.0]])
    write_matrix(tmp_path / "C.csv", c)
    main(["render", "--input", str(tmp_path / "C.csv"), "--out", str(tmp_path / "c.pgm")])
    img = read_pgm(tmp_path / "c.pgm")
    assert img.max() == 255 and img[0, 1] == 255
    assert np.array_equal(img, np.rint(255 * np.abs(c) / 2.0).astype(np.uint8))
    assert (tmp_path / "c.pgm").read_bytes().startswith(b"P5\n3 3\n255\n")


@pytest.mark.parametrize("solver", ["lsr", "omp", "greedy-n"])
def test_render_block_structure(dataset, solver):
    d, data, truth = dataset
    out = d / "c.pgm"
    assert main(["render", "--input", str(d / "X.csv"), "--out", str(out), "--solver", solver]) == 0
    img = read_pgm(out).astype(float)
    assert img.shape == (data.n_samples, data.n_samples)
    same = truth.labels[:, None] == truth.labels[None, :]
    np.fill_diagonal(same, False)
    other = truth.labels[:, None] != truth.labels[None, :]
    assert img[same].mean() > img[other].mean()


def test_render_unwritable_output(dataset):
    d, _, _ = dataset
    assert main(["render", "--input", str(d / "X.csv"), "--out", str(d / "no" / "c.pgm")]) == 2
