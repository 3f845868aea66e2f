import json
import math
import os
import struct

import numpy as np
import pytest

from themis_extract import cli
from themis_extract.errors import InputError, ModelLoadFailure, SeriesTooShort
from themis_extract.extractor import ExtractorConfig, extract, load_series, plan_windows

# the primary package is the reference consumer of THEM files; it is
# used here only through its public read API
from themis import read_embeddings


def tiny_config(model_dir, window=64, **kw):
    return ExtractorConfig(model=model_dir, window=window, **kw)


class TestLoadSeries:
    def test_reads_channel(self, series_csv):
        path = series_csv([1.0, 2.5, -3.0])
        np.testing.assert_array_equal(load_series(path), [1.0, 2.5, -3.0])

    def test_channel_out_of_range(self, series_csv):
        with pytest.raises(InputError, match="channel"):
            load_series(series_csv([1.0]), channel=3)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            load_series(tmp_path / "nope.csv")

    def test_header_only_file_is_too_short(self, series_csv):
        with pytest.raises(SeriesTooShort):
            load_series(series_csv([]))


class TestPlanWindows:
    def test_exact_fit(self):
        assert plan_windows(1024, 512) == (2, 0)

    def test_tail_padding(self):
        assert plan_windows(1000, 512) == (2, 24)

    def test_empty_series_rejected(self):
        with pytest.raises(SeriesTooShort):
            plan_windows(0, 512)


class TestExtract:
    def test_output_shape_and_format_compliance(self, tiny_model_dir,
                                                series_csv, tmp_path):
        rng = np.random.default_rng(0)
        T = 100
        path = series_csv(rng.normal(size=T))
        out = tmp_path / "emb.them"
        manifest = extract(path, out, tiny_config(tiny_model_dir))
        # format compliance: loads via the primary's reader, n = ceil(T/L)*L
        seq = read_embeddings(out)
        L = 64
        assert seq.n == math.ceil(T / L) * L == 128
        assert seq.dim == 16
        assert manifest["output"] == {"n": 128, "d": 16, "dtype": "float32"}
        assert manifest["window"]["pad_rows"] == 28
        assert seq.source_tag.startswith(tiny_model_dir)
        assert "encoder-final-hidden-state" in seq.source_tag
        assert "torch=" in seq.source_tag

    def test_manifest_sidecar_written(self, tiny_model_dir, series_csv,
                                      tmp_path):
        out = tmp_path / "emb.them"
        extract(series_csv(np.arange(70.0)), out,
                tiny_config(tiny_model_dir))
        sidecar = json.loads((tmp_path / "emb.them.manifest.json").read_text())
        assert sidecar["extraction_point"] == "encoder-final-hidden-state"
        assert "EOS" in sidecar["token_mapping"]
        assert sidecar["window"] == {
            "length": 64, "stride": 64, "count": 2,
            "pad_policy": "repeat-last", "pad_rows": 58,
            "pad_row_start": 70}
        assert set(sidecar["versions"]) == {"torch", "transformers"}

    def test_reruns_byte_identical(self, tiny_model_dir, series_csv,
                                   tmp_path):
        path = series_csv(np.sin(np.arange(130.0)))
        out_a = tmp_path / "a.them"
        out_b = tmp_path / "b.them"
        extract(path, out_a, tiny_config(tiny_model_dir))
        extract(path, out_b, tiny_config(tiny_model_dir))
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_batch_size_does_not_change_payload(self, tiny_model_dir,
                                                series_csv, tmp_path):
        path = series_csv(np.sin(np.arange(400.0)))
        out_a = tmp_path / "a.them"
        out_b = tmp_path / "b.them"
        extract(path, out_a, tiny_config(tiny_model_dir, batch_size=1))
        extract(path, out_b, tiny_config(tiny_model_dir, batch_size=8))
        a = read_embeddings(out_a)
        b = read_embeddings(out_b)
        np.testing.assert_allclose(a.vectors, b.vectors, atol=1e-5)

    def test_padding_equals_manual_repeat_last(self, tiny_model_dir,
                                               series_csv, tmp_path):
        # the padded tail must behave exactly as if the series had been
        # extended by repeating its final value
        values = np.sin(np.arange(74.0))
        extended = np.concatenate([values, np.full(54, values[-1])])
        out_a = tmp_path / "short.them"
        out_b = tmp_path / "extended.them"
        extract(series_csv(values, name="short.csv"), out_a,
                tiny_config(tiny_model_dir))
        extract(series_csv(extended, name="extended.csv"), out_b,
                tiny_config(tiny_model_dir))
        a = read_embeddings(out_a)
        b = read_embeddings(out_b)
        np.testing.assert_array_equal(a.vectors, b.vectors)

    def test_header_is_version_1_float32(self, tiny_model_dir, series_csv,
                                         tmp_path):
        out = tmp_path / "emb.them"
        extract(series_csv(np.arange(70.0)), out,
                tiny_config(tiny_model_dir))
        with open(out, "rb") as fh:
            magic, version, n, d, dtype, _ = struct.unpack(
                "<4sIQIB3s", fh.read(24))
        assert (magic, version, n, d, dtype) == (b"THEM", 1, 128, 16, 1)

    def test_no_temp_files_left_behind(self, tiny_model_dir, series_csv,
                                       tmp_path):
        out = tmp_path / "emb.them"
        extract(series_csv(np.arange(70.0)), out,
                tiny_config(tiny_model_dir))
        leftovers = [f for f in os.listdir(tmp_path) if f.endswith(".tmp")]
        assert leftovers == []

    def test_bad_model_is_load_failure(self, series_csv, tmp_path):
        with pytest.raises(ModelLoadFailure):
            extract(series_csv(np.arange(70.0)), tmp_path / "emb.them",
                    ExtractorConfig(model=str(tmp_path / "no-model"),
                                    window=64))


class TestCli:
    def test_extract_and_exit_codes(self, tiny_model_dir, series_csv,
                                    tmp_path, capsys):
        path = series_csv(np.arange(100.0))
        out = tmp_path / "emb.them"
        code = cli.main(["--series", path, "--model", tiny_model_dir,
                         "--out", str(out), "--window", "64"])
        assert code == 0
        assert "n=128 d=16" in capsys.readouterr().out
        assert out.is_file()
        assert (tmp_path / "emb.them.manifest.json").is_file()

    def test_missing_series_is_exit_1(self, tiny_model_dir, tmp_path):
        assert cli.main(["--series", str(tmp_path / "nope.csv"),
                         "--model", tiny_model_dir,
                         "--out", str(tmp_path / "o.them")]) == 1

    def test_bad_model_is_exit_2(self, series_csv, tmp_path):
        path = series_csv(np.arange(100.0))
        assert cli.main(["--series", path, "--model",
                         str(tmp_path / "no-model"),
                         "--out", str(tmp_path / "o.them"),
                         "--window", "64"]) == 2
