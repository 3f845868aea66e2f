import json
import os

import numpy as np
import pytest

from themis.cli import main
from themis.dataset_io import (
    LabelSeries,
    TimeSeries,
    plan_windows,
    save_labels,
    save_series,
)
from themis.embedding_store import read_embeddings


@pytest.fixture
def data(tmp_path):
    rng = np.random.default_rng(0)
    values = rng.normal(size=400)
    values[200:240] += 8.0
    labels = np.zeros(400, dtype=np.int64)
    labels[200:240] = 1
    series_path = tmp_path / "series.csv"
    labels_path = tmp_path / "labels.csv"
    save_series(TimeSeries(values=values), series_path)
    save_labels(LabelSeries(labels=labels), labels_path)
    return {"series": str(series_path), "labels": str(labels_path),
            "tmp": tmp_path}


SMALL = ["--adapter", "mean", "--window", "100", "--batch-windows", "2",
         "--context", "8", "--embed-dim", "16"]


def run_score(data, out, extra=()):
    return main(["score", "--series", data["series"], "--out", str(out),
                 *SMALL, *extra])


class TestScore:
    def test_writes_scores_and_manifest(self, data):
        out = data["tmp"] / "out"
        assert run_score(data, out) == 0
        lines = (out / "scores.csv").read_text().splitlines()
        assert lines[0] == "timestep,score"
        assert len(lines) == 401
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "score"
        assert manifest["config"]["adapter"] == "mean"
        assert manifest["config"]["window"] == 100
        assert "themis" in manifest["versions"]

    def test_two_runs_byte_identical(self, data):
        out_a = data["tmp"] / "a"
        out_b = data["tmp"] / "b"
        assert run_score(data, out_a) == 0
        assert run_score(data, out_b) == 0
        assert (out_a / "scores.csv").read_bytes() == \
            (out_b / "scores.csv").read_bytes()

    def test_dump_wasm_writes_square_them_file(self, data):
        out = data["tmp"] / "out"
        assert run_score(data, out, extra=["--dump-wasm", "0"]) == 0
        seq = read_embeddings(out / "wasm_batch_0.them")
        assert seq.n == 200 * 200
        assert seq.dim == 1
        assert seq.source_tag == "wasm-batch-0"

    def test_dump_wasm_out_of_range_is_input_error(self, data):
        out = data["tmp"] / "out"
        assert run_score(data, out, extra=["--dump-wasm", "9"]) == 1

    def test_missing_series_flag_is_input_error(self, data, capsys):
        assert main(["score", "--out", str(data["tmp"] / "out")]) == 1
        assert "required" in capsys.readouterr().err

    def test_missing_series_file_is_input_error(self, data):
        assert main(["score", "--series", str(data["tmp"] / "nope.csv"),
                     "--out", str(data["tmp"] / "out")]) == 1


class TestConfigResolution:
    def test_config_file_applies_and_flags_win(self, data):
        cfg_path = data["tmp"] / "run.cfg"
        cfg_path.write_text("adapter = mean\nwindow = 100\n"
                            "batch-windows = 2\ncontext = 8\n"
                            "embed-dim = 16\n# comment\n")
        out = data["tmp"] / "out"
        assert main(["score", "--series", data["series"], "--out", str(out),
                     "--config", str(cfg_path), "--window", "200"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["adapter"] == "mean"   # from file
        assert manifest["config"]["window"] == 200        # flag wins

    def test_unknown_config_key_is_input_error(self, data):
        cfg_path = data["tmp"] / "bad.cfg"
        cfg_path.write_text("wndow = 100\n")
        assert main(["score", "--series", data["series"],
                     "--out", str(data["tmp"] / "out"),
                     "--config", str(cfg_path)]) == 1

    def test_out_dir_falls_back_to_environment(self, data, monkeypatch):
        out = data["tmp"] / "env-out"
        monkeypatch.setenv("THEMIS_OUT_DIR", str(out))
        assert main(["score", "--series", data["series"], *SMALL]) == 0
        assert (out / "scores.csv").is_file()


class TestDetect:
    def run(self, data, out, extra=()):
        return main(["detect", "--series", data["series"],
                     "--labels", data["labels"], "--out", str(out),
                     *SMALL, *extra])

    def test_writes_predictions_threshold_and_report(self, data):
        out = data["tmp"] / "out"
        assert self.run(data, out) == 0
        lines = (out / "predictions.csv").read_text().splitlines()
        assert lines[0] == "timestep,prediction"
        assert len(lines) == 401
        assert set(line.split(",")[1] for line in lines[1:]) <= {"0", "1"}
        threshold = json.loads((out / "threshold.json").read_text())
        assert set(threshold) == {"delta", "q", "init_level", "gamma",
                                  "sigma", "n", "peak_count"}
        report = json.loads((out / "report.json").read_text())
        assert {"precision", "recall", "f1", "threshold"} <= set(report)

    def test_empty_truth_is_flagged_not_fatal(self, data):
        empty = data["tmp"] / "empty.csv"
        save_labels(LabelSeries(labels=np.zeros(400, dtype=np.int64)), empty)
        out = data["tmp"] / "out"
        assert main(["detect", "--series", data["series"], "--labels",
                     str(empty), "--out", str(out), *SMALL]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["empty_truth"] is True
        assert "f1" not in report

    def test_label_length_mismatch_is_input_error(self, data):
        short = data["tmp"] / "short.csv"
        save_labels(LabelSeries(labels=np.zeros(10, dtype=np.int64)), short)
        assert main(["detect", "--series", data["series"], "--labels",
                     str(short), "--out", str(data["tmp"] / "out"),
                     *SMALL]) == 1

    def test_calibration_file_drives_threshold(self, data):
        out_a = data["tmp"] / "a"
        assert self.run(data, out_a) == 0
        # calibrate a second run on the first run's scores: same input
        # distribution, so the delta must agree with the self-calibrated one
        out_b = data["tmp"] / "b"
        assert self.run(data, out_b, extra=[
            "--calibration-file", str(out_a / "scores.csv")]) == 0
        d_a = json.loads((out_a / "threshold.json").read_text())["delta"]
        d_b = json.loads((out_b / "threshold.json").read_text())["delta"]
        assert d_b == pytest.approx(d_a, abs=1e-12)


class TestSweep:
    def test_grid_rows_and_fields(self, data):
        out = data["tmp"] / "out"
        assert main(["sweep", "--series", data["series"],
                     "--labels", data["labels"], "--out", str(out),
                     "--adapter", "spectral", "--window", "100",
                     "--context", "8", "--embed-dim", "16",
                     "--k", "2,4", "--batch-windows", "1,2"]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "batch_windows,k,delta,precision,recall,f1,error"
        assert len(lines) == 5  # header + 2x2 grid
        for line in lines[1:]:
            assert line.split(",")[-1] == ""  # no per-point errors

    def test_parallel_jobs_match_serial(self, data):
        args = ["sweep", "--series", data["series"], "--labels",
                data["labels"], "--adapter", "spectral", "--window", "100",
                "--context", "8", "--embed-dim", "16", "--k", "2,4,6",
                "--batch-windows", "2"]
        out_1 = data["tmp"] / "serial"
        out_n = data["tmp"] / "parallel"
        assert main([*args, "--out", str(out_1), "--jobs", "1"]) == 0
        assert main([*args, "--out", str(out_n), "--jobs", "3"]) == 0
        assert (out_1 / "sweep.csv").read_bytes() == \
            (out_n / "sweep.csv").read_bytes()

    def test_point_failures_are_recorded_not_fatal(self, data):
        out = data["tmp"] / "out"
        # knn=300 exceeds the 200 active rows per batch: LOF fails there
        assert main(["sweep", "--series", data["series"], "--out", str(out),
                     "--adapter", "lof", "--window", "100",
                     "--context", "8", "--embed-dim", "16",
                     "--batch-windows", "2", "--knn", "3,300"]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 3
        errors = [line.split(",")[-1] for line in lines[1:]]
        assert errors[0] == "" and "TooFewPoints" in errors[1]

    def test_no_axes_is_input_error(self, data):
        # --batch-windows counts as a grid axis, so leave it out here
        assert main(["sweep", "--series", data["series"],
                     "--out", str(data["tmp"] / "out"),
                     "--adapter", "mean", "--window", "100"]) == 1


class TestPlotData:
    def test_requires_prior_scores(self, data):
        assert main(["plot-data", "--out", str(data["tmp"] / "fresh")]) == 1

    def test_emits_plot_bundles(self, data):
        out = data["tmp"] / "out"
        assert main(["detect", "--series", data["series"], "--labels",
                     data["labels"], "--out", str(out), *SMALL,
                     ]) == 0
        assert main(["score", "--series", data["series"], "--out", str(out),
                     *SMALL, "--dump-wasm", "1"]) == 0
        assert main(["plot-data", "--series", data["series"], "--labels",
                     data["labels"], "--out", str(out)]) == 0
        swt = (out / "scores_with_threshold.csv").read_text().splitlines()
        assert swt[0] == "timestep,score,threshold"
        assert len(swt) == 401
        delta = json.loads((out / "threshold.json").read_text())["delta"]
        assert float(swt[1].split(",")[2]) == delta
        swl = (out / "series_with_labels.csv").read_text().splitlines()
        assert swl[0] == "timestep,value,label"
        assert len(swl) == 401
        wasm = (out / "wasm_batch_1.csv").read_text().splitlines()
        assert wasm[0] == "row,col,value"
        assert len(wasm) == 1 + 200 * 200


class TestEmbedRef:
    def test_writes_readable_them_file(self, data):
        out = data["tmp"] / "out"
        assert main(["embed-ref", "--series", data["series"],
                     "--out", str(out), "--window", "100",
                     "--context", "8", "--embed-dim", "16"]) == 0
        seq = read_embeddings(out / "embeddings.them")
        plan = plan_windows(400, 100)
        assert seq.n == plan.total_rows
        assert seq.dim == 16
        assert seq.source_tag.startswith("reference-rp:")

    def test_score_accepts_precomputed_embeddings(self, data):
        out = data["tmp"] / "out"
        assert main(["embed-ref", "--series", data["series"],
                     "--out", str(out), "--window", "100",
                     "--context", "8", "--embed-dim", "16"]) == 0
        direct = data["tmp"] / "direct"
        reused = data["tmp"] / "reused"
        assert run_score(data, direct) == 0
        assert main(["score", "--series", data["series"], "--out",
                     str(reused), *SMALL, "--embeddings",
                     str(out / "embeddings.them")]) == 0
        a = (direct / "scores.csv").read_text()
        b = (reused / "scores.csv").read_text()
        # reference embeddings round-trip through float32 THEM storage,
        # so scores agree to float32 precision rather than bitwise
        for la, lb in zip(a.splitlines()[1:], b.splitlines()[1:]):
            assert float(la.split(",")[1]) == pytest.approx(
                float(lb.split(",")[1]), abs=1e-6)
